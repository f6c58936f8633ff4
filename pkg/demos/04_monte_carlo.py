"""
Simulating the random-coding scheme
===================================

Draw a codebook i.i.d. from the input law, send a random message, decode by
largest information density and estimate the state symbol by symbol from
(X, Z). The bound promises error at most eps at its rate; a rate slightly
below it should do at least that well.
"""

# %%
import math

from isac_fbl import binary_channel
from isac_fbl.estimator import expected_distortion
from isac_fbl.simulate import CodeParams, run_experiment, threshold_for
from isac_fbl.tradeoff import max_rate

ch = binary_channel(0.4)
n, eps, D = 300, 0.05, 0.1
best = max_rate(ch, n, eps, D, "ach")
msgs = math.floor(2 ** (n * (best.rate - 0.01)))
print(f"bound {best.rate:.4f} bits/use at alpha {best.input_dist.probs[1]:.3f}; using M = {msgs}")

# %%
# The "types" engine samples the same ensemble without storing an M x n codebook.
params = CodeParams(n, msgs, best.input_dist, seed=1)
r = run_experiment(ch, params, trials=300, engine="types")
print(f"eps_hat {r.eps_hat:.4f}, 95% upper {r.eps_ci[1]:.4f}")
print(f"distortion {r.distortion_hat:.4f} +- {r.distortion_se:.4f}, exact {expected_distortion(ch, best.input_dist):.4f}")

# %%
# Small codebooks can be decoded explicitly. Threshold decoding at
# log2 M + K log2 n never beats maximum information density on the same draws.
small = CodeParams(100, 2**8, best.input_dist, threshold_gamma=threshold_for(2**8, 100, 1.0), seed=3)
for dec in ("maxinfo", "threshold"):
    r = run_experiment(ch, small, trials=1000, decoder=dec)
    print(f"{dec:>9}: {r.errors} errors, {r.erasures} erasures in {r.trials}")
