"""
A channel of your own
=====================

Channels are JSON files holding the state prior, the kernel W[x, s, y, z] and
the distortion matrix. This one has three waveforms. Waveform 2 is a
dedicated radar pulse that carries little data but sees the target well.
"""

# %%
from pathlib import Path

import numpy as np

from isac_fbl import load_channel
from isac_fbl.estimator import d_min, d_trivial, distortion_per_input, estimator_table
from isac_fbl.tradeoff import default_d_grid, sweep

here = Path(__file__).resolve().parent
dmc = load_channel(here / "channels" / "ternary_radar.json")
print("per-input distortion:", np.round(distortion_per_input(dmc), 4))
print("d_min", d_min(dmc)[0], "d_trivial", d_trivial(dmc))
print("estimates s_hat[x, z]:\n", estimator_table(dmc).best)

# %%
# Three inputs need a search over the simplex. A coarse grid seeds SLSQP,
# which keeps the distortion constraint while it climbs.
pts = sweep(dmc, 1000, 0.05, default_d_grid(dmc, 12))
for p in pts:
    px = p.best_input_ach.probs if p.best_input_ach is not None else None
    print(f"D {p.distortion_budget:.4f}  ach {p.rate_ach:.4f}  conv {p.rate_conv:.4f}  input {np.round(px, 3)}")
