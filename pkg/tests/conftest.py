import itertools
import math

import numpy as np
import pytest

from isac_fbl.channel import StateDMC, binary_channel


def random_channel(rng, x=2, s=2, y=2, z=2, sparse=0.0):
    """Random state-dependent DMC; ``sparse`` zeroes that fraction of kernel cells."""
    prior = rng.dirichlet(np.ones(s))
    kernel = rng.random((x, s, y, z))
    if sparse:
        kernel[rng.random(kernel.shape) < sparse] = 0.0
        # keep every (x, s) row a valid pmf
        for i, j in itertools.product(range(x), range(s)):
            if kernel[i, j].sum() == 0:
                kernel[i, j, rng.integers(y), rng.integers(z)] = 1.0
    kernel /= kernel.sum(axis=(2, 3), keepdims=True)
    dist = rng.random((s, s)) * 2.0
    return StateDMC(prior, kernel, dist)


# ---- brute-force oracles, written as plain loops on purpose


def brute_marginal(dmc):
    out = np.zeros((dmc.y_size, dmc.x_size))
    for x, s, y, z in itertools.product(
        range(dmc.x_size), range(dmc.s_size), range(dmc.y_size), range(dmc.z_size)
    ):
        out[y, x] += dmc.state_prior[s] * dmc.kernel[x, s, y, z]
    return out


def brute_moments(px, pyx):
    """(I, V via E[i^2] - I^2, T) by enumeration over the joint support."""
    xs, ys = range(pyx.shape[1]), range(pyx.shape[0])
    py = [sum(px[x] * pyx[y, x] for x in xs) for y in ys]
    pts = [
        (px[x] * pyx[y, x], math.log2(pyx[y, x] / py[y]))
        for x in xs
        for y in ys
        if px[x] * pyx[y, x] > 0
    ]
    mi = sum(w * d for w, d in pts)
    second = sum(w * d * d for w, d in pts)
    central2 = sum(w * (d - mi) ** 2 for w, d in pts)
    third = sum(w * abs(d - mi) ** 3 for w, d in pts)
    return mi, second - mi * mi, central2, third


def brute_posterior(dmc, x, z):
    num = np.zeros(dmc.s_size)
    for s, y in itertools.product(range(dmc.s_size), range(dmc.y_size)):
        num[s] += dmc.state_prior[s] * dmc.kernel[x, s, y, z]
    return num / num.sum() if num.sum() > 0 else None


def brute_distortion(dmc, px):
    """Expected distortion of the Bayes estimator, computed from scratch."""
    total = 0.0
    for x in range(dmc.x_size):
        for z in range(dmc.z_size):
            post = brute_posterior(dmc, x, z)
            if post is None:
                continue
            risks = [sum(post[s] * dmc.distortion[s, t] for s in range(dmc.s_size)) for t in range(dmc.s_size)]
            t_best = min(range(dmc.s_size), key=lambda t: risks[t])
            for s, y in itertools.product(range(dmc.s_size), range(dmc.y_size)):
                total += px[x] * dmc.state_prior[s] * dmc.kernel[x, s, y, z] * dmc.distortion[s, t_best]
    return total


def tail_prob(x):
    """Gaussian upper tail by numerical quadrature."""
    from scipy.integrate import quad

    val, _ = quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), x, math.inf, epsabs=1e-14, epsrel=1e-13)
    return val


def bisect_q_inv(p, lo=-10.0, hi=10.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tail_prob(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def z_channel():
    return binary_channel(0.4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


DEMO_CHANNEL = __import__("pathlib").Path(__file__).parents[1] / "demos" / "channels" / "ternary_radar.json"


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
