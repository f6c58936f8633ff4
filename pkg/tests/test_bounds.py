import math

import numpy as np
import pytest

from isac_fbl.bounds import (
    BoundParams,
    achievability_rate,
    berry_esseen_term,
    converse_rate,
    golden_max,
    optimize_delta,
    optimize_k,
    q_func,
    q_inv,
    second_order_rate,
    threshold_error_bound,
)
from isac_fbl.channel import InfoMoments, InputDist, binary_channel, marginal_channel, moments_for
from isac_fbl.tradeoff import BinaryChannelSpec, binary_closed_forms

from conftest import bisect_q_inv, tail_prob

# bisect_q_inv(0.05) on the quadrature tail, frozen
Q_INV_005 = 1.6448536269514722


def z_moments(alpha, q=0.4):
    return moments_for(binary_channel(q), InputDist.binary(alpha))


def test_q_inv_oracle_value():
    assert bisect_q_inv(0.05) == pytest.approx(Q_INV_005, abs=1e-10)
    assert q_inv(0.05) == pytest.approx(Q_INV_005, abs=1e-10)


@pytest.mark.parametrize("p", [1e-9, 1e-4, 0.01, 0.2, 0.5, 0.77, 0.999])
def test_q_inv_against_bisection(p):
    assert q_inv(p) == pytest.approx(bisect_q_inv(p), abs=1e-10)


def test_q_func_values():
    assert q_func(0.0) == 0.5
    assert q_inv(0.5) == 0.0
    for x in (-2.5, 0.3, 4.0):
        assert q_func(x) == pytest.approx(tail_prob(x), abs=1e-13)


@pytest.mark.parametrize("x", range(-3, 4))
def test_q_inverse_identity(x):
    assert q_inv(q_func(float(x))) == pytest.approx(x, abs=1e-9)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_q_inv_domain(p):
    with pytest.raises(ValueError):
        q_inv(p)


def test_params_validation():
    with pytest.raises(ValueError):
        BoundParams(0, 0.1)
    with pytest.raises(ValueError):
        BoundParams(10, 1.0)
    with pytest.raises(ValueError):
        BoundParams(10, 0.1, k_coeff=0.0)
    with pytest.raises(ValueError):
        BoundParams(10, 0.1, delta=-1.0)
    with pytest.raises(ValueError):
        achievability_rate(z_moments(0.5), BoundParams(10, 0.1))
    with pytest.raises(ValueError):
        converse_rate(z_moments(0.5), BoundParams(10, 0.1))


def test_achievability_formula():
    m = z_moments(0.45)
    n, eps, k = 2000, 0.1, 0.8
    beta = n**-k + 0.7975 * m.third_abs / math.sqrt(n * m.var**3)
    want = m.mutual_info - math.sqrt(m.var / n) * bisect_q_inv(eps - beta) - k * math.log2(n) / n
    r = achievability_rate(m, BoundParams(n, eps, k_coeff=k))
    assert r.feasible
    assert r.beta == pytest.approx(beta, rel=1e-14)
    assert r.rate == pytest.approx(want, abs=1e-10)


def test_achievability_infeasible():
    r = achievability_rate(z_moments(0.5), BoundParams(10, 0.01, k_coeff=0.1))
    assert not r.feasible and math.isnan(r.rate)
    assert r.beta > 0.01


def test_achievability_can_be_negative():
    r = achievability_rate(InfoMoments(0.0, 0.0, 0.0), BoundParams(700, 0.05, k_coeff=2.0))
    assert r.feasible and r.rate == pytest.approx(-2 * math.log2(700) / 700)


def test_converse_formula_and_unit_delta():
    m = z_moments(0.45)
    n, eps = 2000, 0.1
    be = 0.7975 * m.third_abs / math.sqrt(n * m.var**3)
    r = converse_rate(m, BoundParams(n, eps, delta=1.0))
    want = m.mutual_info - math.sqrt(m.var / n) * bisect_q_inv(eps + be + 1 / math.sqrt(n)) + math.log2(n) / (2 * n)
    assert r.rate == pytest.approx(want, abs=1e-10)
    assert r.beta == pytest.approx(be + 1 / math.sqrt(n))


def test_converse_infeasible():
    r = converse_rate(z_moments(0.5), BoundParams(4, 0.5, delta=5.0))
    assert not r.feasible and math.isnan(r.rate)


def test_optimize_k_at_capacity_input_is_infeasible_at_700():
    # at alpha* the Berry-Esseen term alone exceeds eps = 0.05 when n = 700
    m = z_moments(binary_closed_forms(BinaryChannelSpec(0.4)).alpha_star)
    assert berry_esseen_term(m, 700) > 0.05
    assert not optimize_k(m, 700, 0.05).feasible
    assert all(not achievability_rate(m, BoundParams(700, 0.05, k_coeff=k)).feasible for k in np.geomspace(0.01, 20, 40))


def test_optimize_k_dominates_scan_and_unit_k():
    m = z_moments(0.49)
    n, eps = 700, 0.05
    best = optimize_k(m, n, eps)
    assert best.feasible
    scan = [achievability_rate(m, BoundParams(n, eps, k_coeff=k)) for k in np.geomspace(0.01, 20, 40)]
    assert best.rate >= max(r.rate for r in scan if r.feasible) - 1e-15
    unit = achievability_rate(m, BoundParams(n, eps, k_coeff=1.0))
    assert best.rate >= unit.rate
    # the optimizer is interior: nudging K loses rate
    k = best.params_used.k_coeff
    for f in (0.9, 1.1):
        assert achievability_rate(m, BoundParams(n, eps, k_coeff=k * f)).rate <= best.rate


def test_optimize_k_infeasible_everywhere():
    r = optimize_k(z_moments(0.5), 10, 0.01)
    assert not r.feasible


def test_optimize_delta_minimizes():
    m = z_moments(0.5)
    n, eps = 700, 0.05
    best = optimize_delta(m, n, eps)
    assert best.feasible
    assert best.rate <= converse_rate(m, BoundParams(n, eps, delta=1.0)).rate
    d = best.params_used.delta
    for f in (0.5, 2.0):
        assert converse_rate(m, BoundParams(n, eps, delta=d * f)).rate > best.rate
    # the minimizer balances -log(delta)/n against the Q^{-1} shift: derivative vanishes
    h = 1e-5 * d
    lo = converse_rate(m, BoundParams(n, eps, delta=d - h)).rate
    hi = converse_rate(m, BoundParams(n, eps, delta=d + h)).rate
    assert abs(hi - lo) / (2 * h) < 1e-5


def test_zero_dispersion_bounds():
    m = InfoMoments(0.0, 0.0, 0.0)
    assert berry_esseen_term(m, 700) == 0.0
    assert second_order_rate(m, 700, 0.05) == 0.0
    conv = optimize_delta(m, 700, 0.05)
    # infimum -log2(1 - eps)/n, approached at the feasibility edge
    assert conv.rate == pytest.approx(-math.log2(0.95) / 700, abs=1e-6)


def test_second_order():
    m = z_moments(0.4)
    assert second_order_rate(m, 1000, 0.5) == m.mutual_info
    assert second_order_rate(m, 1000, 0.05) == pytest.approx(m.mutual_info - math.sqrt(m.var / 1000) * Q_INV_005)
    assert second_order_rate(InfoMoments(0.3, 0.0, 0.0), 10, 0.05) == 0.3


def test_second_order_sandwiched():
    m = z_moments(0.4)
    for n in (10**4, 10**5, 10**6):
        a = optimize_k(m, n, 0.05).rate
        c = optimize_delta(m, n, 0.05).rate
        assert a <= second_order_rate(m, n, 0.05) <= c


def test_large_n_close_to_mutual_info():
    # D = 0.05 boundary on the q = 0.4 channel: alpha = 1 - 0.05 / 0.4
    m = z_moments(0.875)
    r = optimize_k(m, 10**6, 0.05)
    assert abs(r.rate - m.mutual_info) < 2e-3


@pytest.mark.parametrize("alpha", [0.3, 0.4, 0.6, 0.875])
def test_log_order_gaps(alpha):
    m = z_moments(alpha)
    for n in (10**4, 10**5, 10**6):
        a = optimize_k(m, n, 0.05).rate
        c = optimize_delta(m, n, 0.05).rate
        normal = second_order_rate(m, n, 0.05)
        assert abs(a - normal) * n / math.log2(n) <= 25
        assert (c - a) * n / math.log2(n) <= 25


def test_rates_increase_with_n_and_eps():
    m = z_moments(0.45)
    ns = [1000, 3000, 10**4, 10**5, 10**6]
    ach = [optimize_k(m, n, 0.05).rate for n in ns]
    conv = [optimize_delta(m, n, 0.05).rate for n in ns]
    assert all(np.diff(ach) > 0) and all(np.diff(conv) > 0)
    assert ach[-1] < m.mutual_info and conv[-1] < m.mutual_info
    epss = [0.01, 0.05, 0.1, 0.2, 0.4]
    for n in (700, 10**4):
        a = [optimize_k(m, n, e).rate for e in epss]
        c = [optimize_delta(m, n, e).rate for e in epss]
        a = [x for x in a if not math.isnan(x)]
        assert len(a) >= 3
        assert all(np.diff(a) >= 0) and all(np.diff(c) >= 0)
        assert all(x <= y for x, y in zip(a[::-1], c[::-1]))


def test_threshold_error_bound_matches_rate_inversion():
    # at the achievability rate itself the error bound equals eps
    m = z_moments(0.45)
    n, eps = 3000, 0.05
    r = optimize_k(m, n, eps)
    k = r.params_used.k_coeff
    log_m = n * r.rate
    main = q_func((n * m.mutual_info - log_m - k * math.log2(n)) / math.sqrt(n * m.var))
    assert main + r.beta == pytest.approx(eps, abs=1e-10)
    assert threshold_error_bound(m, n, 2**600, k) < threshold_error_bound(m, n, 2**700, k)


def test_golden_max():
    t, v = golden_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0)
    assert t == pytest.approx(0.3, abs=1e-6) and v == pytest.approx(0.0, abs=1e-12)
    t, v = golden_max(lambda x: math.nan if x > 0.5 else x, 0.0, 1.0)
    assert t == pytest.approx(0.5, abs=1e-6)
