"""Rate-distortion-error tradeoff curves, resource-sharing baselines and
binary-channel closed forms.

A tradeoff point fixes a distortion budget ``D`` and reports, for each of the
achievability bound, the converse bound and the normal approximation, the best
rate over input pmfs whose expected distortion is at most ``D``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import optimize

from . import bounds
from .channel import InfoMoments, InputDist, StateDMC, binary_channel, info_moments, marginal_channel
from .estimator import d_min, d_trivial, distortion_per_input

Side = Literal["ach", "conv", "second_order"]
SIDES: tuple[Side, ...] = ("ach", "conv", "second_order")

FEAS_TOL = 1e-12
ALPHA_GRID = 200
MULTISTARTS = 4
GRID_STARTS = 4
INVALID_PENALTY = 1e3
SIMPLEX_RES = 30
SEARCH_SEED = 20240917


def feasible_inputs(dmc: StateDMC, D: float) -> Callable[[InputDist], bool]:
    """Predicate: does ``px`` meet the distortion budget ``D``?"""
    if D < 0:
        raise ValueError(f"distortion budget must be nonnegative, got {D!r}")
    c = distortion_per_input(dmc)
    return lambda px: float(c @ px.probs) <= D + FEAS_TOL


def binary_alpha_interval(c: np.ndarray, D: float) -> tuple[float, float] | None:
    """Feasible ``alpha = P_X(1)`` for a two-input channel with per-input distortions ``c``.

    The constraint ``(1 - alpha) c0 + alpha c1 <= D`` is linear in alpha, so
    the feasible set is an interval (or empty).
    """
    c0, c1 = float(c[0]), float(c[1])
    lo, hi = 0.0, 1.0
    slope = c1 - c0
    rhs = D - c0
    if slope > 0:
        hi = min(hi, rhs / slope)
    elif slope < 0:
        lo = max(lo, rhs / slope)
    elif rhs < -FEAS_TOL:
        return None
    lo, hi = max(lo, 0.0), min(hi, 1.0)
    if lo > hi:
        return None
    return lo, hi


@dataclass(frozen=True)
class SideResult:
    """Best value of one bound over distortion-feasible inputs.

    ``rate`` is the raw bound (may be negative), NaN when no feasible input
    gives a valid bound. ``param`` is the optimized K (achievability) or
    delta (converse); NaN for the normal approximation.
    """

    side: Side
    rate: float
    feasible: bool
    input_dist: InputDist | None
    param: float


def _side_value(m: InfoMoments, n: int, eps: float, side: Side) -> tuple[float, float]:
    if side == "ach":
        r = bounds.optimize_k(m, n, eps)
        return (r.rate if r.feasible else math.nan), r.params_used.k_coeff
    if side == "conv":
        r = bounds.optimize_delta(m, n, eps)
        return (r.rate if r.feasible else math.nan), r.params_used.delta
    return bounds.second_order_rate(m, n, eps), math.nan


class _Objective:
    """Bound value as a function of the input pmf, with -inf for infeasible inputs."""

    def __init__(self, dmc: StateDMC, n: int, eps: float, side: Side):
        self.pyx = marginal_channel(dmc)
        self.n, self.eps, self.side = n, eps, side

    def detail(self, p: np.ndarray) -> tuple[float, float]:
        p = np.clip(p, 0.0, None)
        m = info_moments(InputDist(p / p.sum()), self.pyx)
        return _side_value(m, self.n, self.eps, self.side)

    def __call__(self, p: np.ndarray) -> float:
        v = self.detail(p)[0]
        return -math.inf if math.isnan(v) else v


def _search_binary(obj: _Objective, lo: float, hi: float) -> tuple[np.ndarray, float]:
    f = lambda a: obj(np.array([1.0 - a, a]))
    if hi - lo <= 1e-15:
        return np.array([1.0 - lo, lo]), f(lo)
    grid = np.linspace(lo, hi, ALPHA_GRID)
    vals = np.array([f(a) for a in grid])
    i = int(np.argmax(vals))
    best_a, best_v = float(grid[i]), float(vals[i])
    if math.isinf(best_v):
        return np.array([1.0 - best_a, best_a]), best_v
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, ALPHA_GRID - 1)]
    t, v = bounds.golden_max(f, float(a), float(b))
    if v > best_v:
        best_a, best_v = t, v
    return np.array([1.0 - best_a, best_a]), best_v


def _simplex_grid(k: int, res: int) -> np.ndarray:
    pts = []

    def rec(prefix: list[int], left: int, slots: int) -> None:
        if slots == 1:
            pts.append(prefix + [left])
            return
        for i in range(left + 1):
            rec(prefix + [i], left - i, slots - 1)

    rec([], res, k)
    return np.array(pts, dtype=float) / res


def _pull_feasible(p: np.ndarray, c: np.ndarray, D: float, anchor: np.ndarray) -> np.ndarray:
    # largest lam in [0, 1] with lam p + (1 - lam) anchor inside the budget
    cp, ca = float(c @ p), float(c @ anchor)
    if cp <= D + FEAS_TOL:
        return p
    lam = max(0.0, (D - ca) / (cp - ca)) if cp > ca else 0.0
    return lam * p + (1.0 - lam) * anchor


def _polish(obj: _Objective, p: np.ndarray, c: np.ndarray, D: float) -> tuple[np.ndarray, float]:
    """Local SLSQP refinement on ``{p in simplex : c.p <= D}``."""
    k = p.size

    def f(q: np.ndarray) -> float:
        v = obj(q)
        # bound invalid here; a flat penalty keeps the solver inside the valid region
        return INVALID_PENALTY if math.isinf(v) else -v

    cons = [
        {"type": "eq", "fun": lambda q: q.sum() - 1.0, "jac": lambda q: np.ones(k)},
        {"type": "ineq", "fun": lambda q: D - c @ q, "jac": lambda q: -c},
    ]
    res = optimize.minimize(
        f, p, method="SLSQP", bounds=[(0.0, 1.0)] * k, constraints=cons,
        options={"ftol": 1e-12, "maxiter": 200},
    )
    q = np.clip(res.x, 0.0, None)
    q /= q.sum()
    if c @ q > D + FEAS_TOL:
        q = _pull_feasible(q, c, D, p)
    v = obj(q)
    return (q, v) if v >= obj(p) else (p, obj(p))


def _search_simplex(obj: _Objective, c: np.ndarray, D: float, anchor: np.ndarray) -> tuple[np.ndarray, float]:
    k = c.size
    grid = _simplex_grid(k, SIMPLEX_RES)
    grid = grid[grid @ c <= D + FEAS_TOL]
    vals = np.array([obj(p) for p in grid]) if len(grid) else np.empty(0)

    rng = np.random.default_rng(SEARCH_SEED)
    starts = [anchor] + [_pull_feasible(rng.dirichlet(np.ones(k)), c, D, anchor) for _ in range(MULTISTARTS)]
    if len(grid):
        starts.extend(grid[np.argsort(-vals, kind="stable")[:GRID_STARTS]])
    best_p, best_v = anchor, obj(anchor)
    if len(grid) and vals.max() > best_v:
        best_p, best_v = grid[int(np.argmax(vals))], float(vals.max())
    for s in starts:
        s = np.array(s, dtype=float)
        if math.isinf(obj(s)):
            continue
        p, v = _polish(obj, s, c, D)
        if v > best_v:
            best_p, best_v = p, v
    return best_p, best_v


def max_rate(dmc: StateDMC, n: int, eps: float, D: float, side: Side) -> SideResult:
    """Best value of one bound over inputs whose expected distortion is at most ``D``."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    bounds.BoundParams(n, eps)
    if D < 0:
        raise ValueError(f"distortion budget must be nonnegative, got {D!r}")
    c = distortion_per_input(dmc)
    infeasible = SideResult(side, math.nan, False, None, math.nan)
    dmin, pmin = d_min(dmc)
    if D + FEAS_TOL < dmin:
        return infeasible
    obj = _Objective(dmc, n, eps, side)
    if dmc.x_size == 1:
        p, v = np.ones(1), obj(np.ones(1))
    elif dmc.x_size == 2:
        lo, hi = binary_alpha_interval(c, D)
        p, v = _search_binary(obj, lo, hi)
    else:
        p, v = _search_simplex(obj, c, D, pmin.probs)
    if math.isinf(v):
        return infeasible
    p = np.clip(p, 0.0, None)
    px = InputDist(p / p.sum())
    rate, param = obj.detail(px.probs)
    return SideResult(side, rate, True, px, param)


@dataclass(frozen=True)
class TradeoffPoint:
    """One distortion budget on the tradeoff curve.

    Rates are clamped to be nonnegative; infeasible sides carry NaN and a
    False flag.
    """

    distortion_budget: float
    n: int
    eps: float
    rate_ach: float
    rate_conv: float
    rate_second_order: float
    ach_feasible: bool
    conv_feasible: bool
    second_order_feasible: bool
    best_input_ach: InputDist | None
    best_input_conv: InputDist | None
    k_coeff: float
    delta: float


def _clamp(r: SideResult) -> float:
    return max(r.rate, 0.0) if r.feasible else math.nan


def tradeoff_point(dmc: StateDMC, n: int, eps: float, D: float) -> TradeoffPoint:
    ach = max_rate(dmc, n, eps, D, "ach")
    conv = max_rate(dmc, n, eps, D, "conv")
    so = max_rate(dmc, n, eps, D, "second_order")
    return TradeoffPoint(
        distortion_budget=float(D),
        n=n,
        eps=eps,
        rate_ach=_clamp(ach),
        rate_conv=_clamp(conv),
        rate_second_order=_clamp(so),
        ach_feasible=ach.feasible,
        conv_feasible=conv.feasible,
        second_order_feasible=so.feasible,
        best_input_ach=ach.input_dist,
        best_input_conv=conv.input_dist,
        k_coeff=ach.param,
        delta=conv.param,
    )


def _point_task(dmc: StateDMC, n: int, eps: float, D: float) -> TradeoffPoint:
    return tradeoff_point(dmc, n, eps, D)


def sweep(
    dmc: StateDMC, n: int, eps: float, D_grid: Sequence[float], workers: int = 1
) -> list[TradeoffPoint]:
    """Tradeoff points for every budget in ``D_grid`` (ascending).

    Points are searched independently, so ``workers > 1`` only changes speed.
    Afterwards each point keeps the better of its own optimum and the previous
    point's, whose input is still feasible under the larger budget.
    """
    D_grid = [float(d) for d in D_grid]
    if any(b < a for a, b in zip(D_grid, D_grid[1:])):
        raise ValueError("D_grid must be sorted ascending")
    task = partial(_point_task, dmc, n, eps)
    if workers > 1 and len(D_grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pts = list(pool.map(task, D_grid))
    else:
        pts = [task(d) for d in D_grid]
    return _carry_forward(pts)


def _better(new: float, old: float) -> bool:
    # NaN marks an infeasible side; any feasible value beats it
    return not math.isnan(old) and (math.isnan(new) or old > new)


def _carry_forward(pts: list[TradeoffPoint]) -> list[TradeoffPoint]:
    out = pts[:1]
    for p in pts[1:]:
        prev = out[-1]
        if _better(p.rate_ach, prev.rate_ach):
            p = replace(p, rate_ach=prev.rate_ach, ach_feasible=True,
                        best_input_ach=prev.best_input_ach, k_coeff=prev.k_coeff)
        if _better(p.rate_conv, prev.rate_conv):
            p = replace(p, rate_conv=prev.rate_conv, conv_feasible=True,
                        best_input_conv=prev.best_input_conv, delta=prev.delta)
        if _better(p.rate_second_order, prev.rate_second_order):
            p = replace(p, rate_second_order=prev.rate_second_order, second_order_feasible=True)
        out.append(p)
    return out


def default_d_grid(dmc: StateDMC, count: int = 60) -> np.ndarray:
    """Budgets from ``d_min`` to ``d_trivial``: log-spaced just above ``d_min``,
    linear beyond ``d_min + 1e-3``."""
    lo, hi = d_min(dmc)[0], d_trivial(dmc)
    if hi - lo <= 1e-3:
        return np.linspace(lo, hi, count)
    n_log = count // 4
    near = lo + np.logspace(-5, -3, n_log, endpoint=False)
    far = np.linspace(lo + 1e-3, hi, count - n_log - 1)
    return np.concatenate([[lo], near, far])


@dataclass(frozen=True)
class BaselinePoint:
    gamma: float
    rate: float
    distortion: float
    variant: Literal["basic", "improved"]


@dataclass(frozen=True)
class ResourceSharing:
    """Endpoints shared by both resource-sharing baselines at a given ``(n, eps)``.

    ``r_max`` is the unconstrained achievability rate and ``d_comm`` the
    distortion of its maximizing input; ``r_sense`` is the achievability rate
    of the distortion-minimizing input. Rates are clamped at zero.
    """

    n: int
    eps: float
    r_max: float
    input_comm: InputDist
    d_comm: float
    r_sense: float
    input_sense: InputDist
    d_min: float
    d_trivial: float


def resource_sharing(dmc: StateDMC, n: int, eps: float) -> ResourceSharing:
    c = distortion_per_input(dmc)
    best = max_rate(dmc, n, eps, float(c.max()), "ach")
    if not best.feasible:
        raise ValueError(f"achievability bound is infeasible for every input at n={n}, eps={eps}")
    dmin, p_sense = d_min(dmc)
    sense = bounds.optimize_k(info_moments(p_sense, marginal_channel(dmc)), n, eps)
    r_sense = max(sense.rate, 0.0) if sense.feasible else 0.0
    return ResourceSharing(
        n=n,
        eps=eps,
        r_max=max(best.rate, 0.0),
        input_comm=best.input_dist,
        d_comm=float(c @ best.input_dist.probs),
        r_sense=r_sense,
        input_sense=p_sense,
        d_min=dmin,
        d_trivial=d_trivial(dmc),
    )


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma!r}")


def basic_resource_sharing(
    dmc: StateDMC, n: int, eps: float, gamma: float, rs: ResourceSharing | None = None
) -> BaselinePoint:
    """Split uses between a communication-only and a sensing-only phase."""
    _check_gamma(gamma)
    rs = rs or resource_sharing(dmc, n, eps)
    return BaselinePoint(
        gamma=gamma,
        rate=(1.0 - gamma) * rs.r_max,
        distortion=gamma * rs.d_min + (1.0 - gamma) * rs.d_trivial,
        variant="basic",
    )


def improved_resource_sharing(
    dmc: StateDMC, n: int, eps: float, gamma: float, rs: ResourceSharing | None = None
) -> BaselinePoint:
    """Like the basic scheme, but each phase also does the other task with its waveform."""
    _check_gamma(gamma)
    rs = rs or resource_sharing(dmc, n, eps)
    return BaselinePoint(
        gamma=gamma,
        rate=gamma * rs.r_sense + (1.0 - gamma) * rs.r_max,
        distortion=gamma * rs.d_min + (1.0 - gamma) * rs.d_comm,
        variant="improved",
    )


def baseline_curves(
    dmc: StateDMC, n: int, eps: float, gammas: Sequence[float]
) -> tuple[ResourceSharing, list[BaselinePoint]]:
    rs = resource_sharing(dmc, n, eps)
    pts = [basic_resource_sharing(dmc, n, eps, g, rs) for g in gammas]
    pts += [improved_resource_sharing(dmc, n, eps, g, rs) for g in gammas]
    return rs, pts


@dataclass(frozen=True)
class BinaryChannelSpec:
    q: float
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    def channel(self) -> StateDMC:
        return binary_channel(self.q)


@dataclass(frozen=True)
class BinaryClosedForms:
    mutual_info: float
    var: float
    third_abs: float
    distortion: float
    capacity: float
    alpha_star: float
    d_comm: float


def hb(p: float) -> float:
    """Binary entropy in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def binary_closed_forms(spec: BinaryChannelSpec) -> BinaryClosedForms:
    """Closed-form quantities of the ``Y = S X`` channel with ``Z = Y``.

    The third moment uses the Z-channel joint pmf ``(aq, a(1-q), 1-a)`` over the
    three support points ``(1,1), (1,0), (0,0)``.
    """
    q, a = spec.q, spec.alpha
    mi = hb(q * a) - a * hb(q)
    # (weight, density) for (x, y) = (1, 1), (1, 0), (0, 0); zero weights dropped
    terms = []
    if a > 0:
        terms.append((a * q, math.log2(1.0 / a)))
        terms.append((a * (1.0 - q), math.log2((1.0 - q) / (1.0 - q * a))))
    if a < 1:
        terms.append((1.0 - a, math.log2(1.0 / (1.0 - q * a))))
    var = sum(w * d * d for w, d in terms) - mi * mi
    third = sum(w * abs(d - mi) ** 3 for w, d in terms)
    if all(abs(d - mi) <= 1e-12 for _, d in terms):
        var, third = 0.0, 0.0
    cap = math.log2(1.0 + q * (1.0 - q) ** ((1.0 - q) / q))
    a_star = 1.0 / (q * (1.0 + 2.0 ** (hb(q) / q)))
    m = min(q, 1.0 - q)
    return BinaryClosedForms(
        mutual_info=mi,
        var=max(var, 0.0),
        third_abs=third,
        distortion=(1.0 - a) * m,
        capacity=cap,
        alpha_star=a_star,
        d_comm=(1.0 - a_star) * m,
    )
