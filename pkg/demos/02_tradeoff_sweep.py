"""
Rate against distortion budget
==============================

Each point fixes a budget D and maximizes each bound over inputs whose expected
distortion stays within D. For the binary channel the feasible inputs are
alpha >= 1 - D / min(q, 1 - q).
"""

# %%
import numpy as np

from isac_fbl import binary_channel
from isac_fbl.tradeoff import sweep

ch = binary_channel(0.4)
grid = np.linspace(0.0, 0.4, 17)

# %%
curves = {n: sweep(ch, n, 0.05, grid) for n in (700, 3000, 10**4)}
print(f"{'D':>6} | " + " | ".join(f"n={n:<6} ach   conv" for n in curves))
for i, D in enumerate(grid):
    cells = [f"{curves[n][i].rate_ach:.4f} {curves[n][i].rate_conv:.4f}" for n in curves]
    print(f"{D:6.3f} | " + " | ".join(f"{c:>18}" for c in cells))

# %%
# Past D of about 0.2 the budget stops binding and the curves go flat.
# Near D = 0 the only inputs left probe almost every symbol. Their third
# moment is large relative to V, so the achievability bound is void, or
# negative at alpha = 1, and gets clamped to 0. The
# converse stays small but positive there and does not fall monotonically
# with n.
p = curves[700][1]
print("D =", p.distortion_budget, "ach feasible:", p.ach_feasible, "conv:", round(p.rate_conv, 5))
