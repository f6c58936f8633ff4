"""
Bounds for one input on the binary sensing channel
==================================================

The state S is Bernoulli(q), the receiver sees Y = S X and the transmitter gets
Z = Y back. Sending X = 1 probes the state; X = 0 is silent. Here the input is
fixed and we look at how the achievability bound, the converse and the normal
approximation move with the blocklength.
"""

# %%
import numpy as np

from isac_fbl import InputDist, binary_channel, moments_for
from isac_fbl.bounds import berry_esseen_term, optimize_delta, optimize_k, second_order_rate
from isac_fbl.tradeoff import BinaryChannelSpec, binary_closed_forms

q = 0.4
ch = binary_channel(q)
cf = binary_closed_forms(BinaryChannelSpec(q))
print(f"capacity {cf.capacity:.6f} bits at alpha* = {cf.alpha_star:.6f}, distortion there {cf.d_comm:.4f}")

# %%
# Take alpha = 0.5. I, V and T are in bits.
m = moments_for(ch, InputDist.binary(0.5))
print(f"I = {m.mutual_info:.5f}  V = {m.var:.5f}  T = {m.third_abs:.5f}")

# %%
# The Berry-Esseen term decays like 1/sqrt(n). While it exceeds eps the
# achievability bound says nothing at all.
eps = 0.05
print(f"{'n':>8} {'BE':>8} {'ach':>8} {'normal':>8} {'conv':>8}")
for n in [50, 100, 200, 400, 700, 3000, 10**4, 10**5, 10**6]:
    a = optimize_k(m, n, eps)
    c = optimize_delta(m, n, eps)
    print(f"{n:>8} {berry_esseen_term(m, n):8.4f} {a.rate:8.4f} {second_order_rate(m, n, eps):8.4f} {c.rate:8.4f}")

# %%
# At alpha* itself the third-moment ratio is larger, and n = 700 is already too
# short for the achievability bound.
m_star = moments_for(ch, InputDist.binary(cf.alpha_star))
print("BE at alpha*, n = 700:", round(berry_esseen_term(m_star, 700), 4), "vs eps", eps)
alphas = np.linspace(0.3, 0.7, 9)
best = [optimize_k(moments_for(ch, InputDist.binary(a)), 700, eps).rate for a in alphas]
for a, r in zip(alphas, best):
    print(f"alpha {a:.2f}: {r:.4f}")
