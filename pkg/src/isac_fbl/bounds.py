"""Finite-blocklength achievability and converse rate bounds for a fixed input pmf.

Every rate is in bits per channel use and every logarithm is base 2, including
the ``log n`` and ``log delta`` penalty terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import special

from .channel import InfoMoments

# Berry-Esseen constant for sums of independent, non-identical terms.
BERRY_ESSEEN = 0.7975

K_RANGE = (0.01, 20.0)
LOG_DELTA_RANGE = (-40.0, 5.0)
SCAN_POINTS = 40
ZOOM_ROUNDS = 5

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def q_func(x):
    """Standard Gaussian upper tail ``Pr[N(0,1) > x]``."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))[()]


def q_inv(p):
    """Inverse of `q_func` on (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1) | np.isnan(p)):
        raise ValueError(f"q_inv is defined on (0, 1), got {p!r}")
    return -special.ndtri(p)[()]


@dataclass(frozen=True)
class BoundParams:
    n: int
    eps: float
    k_coeff: float | None = None
    delta: float | None = None

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"blocklength n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps!r}")
        if self.k_coeff is not None and not self.k_coeff > 0:
            raise ValueError(f"k_coeff must be positive, got {self.k_coeff!r}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")


@dataclass(frozen=True)
class BoundResult:
    """A rate bound at fixed parameters.

    ``rate`` is NaN when ``feasible`` is False, i.e. when the argument of the
    inverse Q-function falls outside (0, 1).
    """

    rate: float
    beta: float
    feasible: bool
    params_used: BoundParams


def berry_esseen_term(m: InfoMoments, n: int) -> float:
    if m.var == 0.0:
        return 0.0
    return BERRY_ESSEEN * m.third_abs / math.sqrt(n * m.var**3)


def _ach(m: InfoMoments, n: int, eps: float, k) -> tuple:
    # vectorized over k; returns (rate, beta) with NaN rate where infeasible
    k = np.asarray(k, dtype=float)
    beta = n ** (-k) + berry_esseen_term(m, n)
    arg = eps - beta
    ok = (arg > 0) & (arg < 1)
    qi = -special.ndtri(np.where(ok, arg, 0.5))
    rate = m.mutual_info - math.sqrt(m.var / n) * qi - k * math.log2(n) / n
    return np.where(ok, rate, np.nan), beta


def _conv(m: InfoMoments, n: int, eps: float, delta) -> tuple:
    delta = np.asarray(delta, dtype=float)
    beta = berry_esseen_term(m, n) + delta / math.sqrt(n)
    arg = eps + beta
    ok = (arg > 0) & (arg < 1)
    qi = -special.ndtri(np.where(ok, arg, 0.5))
    rate = (
        m.mutual_info
        - math.sqrt(m.var / n) * qi
        + math.log2(n) / (2 * n)
        - np.log2(delta) / n
    )
    return np.where(ok, rate, np.nan), beta


def achievability_rate(m: InfoMoments, p: BoundParams) -> BoundResult:
    """Random-coding achievability rate at a fixed ``K``.

    The result may be negative; negative rates are kept as computed.
    """
    if p.k_coeff is None:
        raise ValueError("achievability_rate needs k_coeff")
    rate, beta = _ach(m, p.n, p.eps, p.k_coeff)
    rate = float(rate)
    return BoundResult(rate, float(beta), not math.isnan(rate), p)


def converse_rate(m: InfoMoments, p: BoundParams) -> BoundResult:
    """Converse rate at a fixed ``delta``; no code exceeds it (for this input)."""
    if p.delta is None:
        raise ValueError("converse_rate needs delta")
    rate, beta = _conv(m, p.n, p.eps, p.delta)
    rate = float(rate)
    return BoundResult(rate, float(beta), not math.isnan(rate), p)


def golden_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section search for a maximum of ``f`` on ``[a, b]``.

    NaN values are treated as ``-inf``. Returns ``(argmax, max)``.
    """

    def g(t: float) -> float:
        v = f(t)
        return -math.inf if math.isnan(v) else v

    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = g(c), g(d)
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = g(d)
    return (c, fc) if fc >= fd else (d, fd)


def _scan_then_zoom(
    vec: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, rounds: int = ZOOM_ROUNDS
) -> tuple[float, float] | None:
    """Maximize over ``[lo, hi]`` by a uniform scan, then repeated finer scans
    around the best point. Every scan is one vectorized call; NaN counts as -inf."""
    grid = np.linspace(lo, hi, SCAN_POINTS)
    vals = np.nan_to_num(vec(grid), nan=-np.inf)
    i = int(np.argmax(vals))
    if vals[i] == -np.inf:
        return None
    best_t, best_v = float(grid[i]), float(vals[i])
    for _ in range(rounds):
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, grid.size - 1)]
        grid = np.linspace(a, b, SCAN_POINTS)
        vals = np.nan_to_num(vec(grid), nan=-np.inf)
        i = int(np.argmax(vals))
        if vals[i] >= best_v:
            best_t, best_v = float(grid[i]), float(vals[i])
    return best_t, best_v


def optimize_k(m: InfoMoments, n: int, eps: float) -> BoundResult:
    """Achievability rate maximized over ``K`` in [0.01, 20]."""
    base = BoundParams(n, eps)
    lo, hi = math.log(K_RANGE[0]), math.log(K_RANGE[1])
    best = _scan_then_zoom(lambda u: _ach(m, n, eps, np.exp(u))[0], lo, hi)
    if best is None:
        k = K_RANGE[1]
        return BoundResult(math.nan, float(_ach(m, n, eps, k)[1]), False, replace(base, k_coeff=k))
    return achievability_rate(m, replace(base, k_coeff=math.exp(best[0])))


def optimize_delta(m: InfoMoments, n: int, eps: float) -> BoundResult:
    """Converse rate minimized over ``delta``.

    The converse holds for every ``delta > 0``, so the tightest statement is the
    smallest value. The search runs over ``ln delta`` from -40 up to the
    feasibility edge ``sqrt(n) (1 - eps - BE)``, or up to 5 if that is smaller.
    """
    base = BoundParams(n, eps)
    lo, hi = LOG_DELTA_RANGE
    room = math.sqrt(n) * (1.0 - eps - berry_esseen_term(m, n))
    if room > 0:
        hi = max(hi, math.log(room))
    best = _scan_then_zoom(lambda u: -_conv(m, n, eps, np.exp(u))[0], lo, hi)
    if best is None:
        d = math.exp(lo)
        return BoundResult(math.nan, float(_conv(m, n, eps, d)[1]), False, replace(base, delta=d))
    return converse_rate(m, replace(base, delta=math.exp(best[0])))


def second_order_rate(m: InfoMoments, n: int, eps: float) -> float:
    """Normal approximation ``I - sqrt(V/n) Q^{-1}(eps)`` without the log-order residual."""
    BoundParams(n, eps)
    return m.mutual_info - math.sqrt(m.var / n) * float(q_inv(eps))


def threshold_error_bound(m: InfoMoments, n: int, msg_count: int, k_coeff: float) -> float:
    """Error-probability bound of threshold decoding with ``gamma = log M + K log n``."""
    if m.var == 0.0:
        gap = n * m.mutual_info - math.log2(msg_count) - k_coeff * math.log2(n)
        main = 0.0 if gap > 0 else 1.0
    else:
        main = float(
            q_func((n * m.mutual_info - math.log2(msg_count) - k_coeff * math.log2(n)) / math.sqrt(n * m.var))
        )
    return main + n ** (-k_coeff) + berry_esseen_term(m, n)
