import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_fbl.channel import (
    ChannelError,
    InputDist,
    StateDMC,
    binary_channel,
    channel_from_dict,
    channel_to_dict,
    density_table,
    info_density,
    info_moments,
    load_channel,
    marginal_channel,
    output_dist,
    save_channel,
)
from isac_fbl.tradeoff import BinaryChannelSpec, binary_closed_forms

from conftest import brute_marginal, brute_moments, random_channel


def identity_channel(k=3):
    kernel = np.zeros((k, 2, k, 1))
    for x in range(k):
        kernel[x, :, x, 0] = 1.0
    return StateDMC(np.array([0.3, 0.7]), kernel, 1 - np.eye(2))


def test_binary_marginal_is_z_channel(z_channel):
    pyx = marginal_channel(z_channel)
    assert pyx[1, 1] == pytest.approx(0.4, abs=1e-15)
    assert pyx[1, 0] == 0.0
    np.testing.assert_allclose(pyx.sum(axis=0), 1.0)


def test_identity_marginal():
    np.testing.assert_array_equal(marginal_channel(identity_channel()), np.eye(3))


def test_random_marginal_matches_enumeration(rng):
    for _ in range(10):
        dmc = random_channel(rng, 2, 2, 2, 2)
        pyx = marginal_channel(dmc)
        np.testing.assert_allclose(pyx, brute_marginal(dmc), atol=1e-15)
        np.testing.assert_allclose(pyx.sum(axis=0), 1.0, atol=1e-12)


def test_output_dist(z_channel):
    pyx = marginal_channel(z_channel)
    assert output_dist(InputDist.binary(0.5), pyx)[1] == pytest.approx(0.2, abs=1e-15)
    pyx3 = marginal_channel(identity_channel())
    np.testing.assert_array_equal(output_dist(InputDist.point_mass(2, 3), pyx3), pyx3[:, 2])
    sym = np.array([[0.7, 0.2, 0.1], [0.1, 0.7, 0.2], [0.2, 0.1, 0.7]])
    np.testing.assert_allclose(output_dist(InputDist.uniform(3), sym), 1 / 3)


def test_info_density_values(z_channel):
    noiseless = np.eye(2)
    assert info_density(0, 0, InputDist.uniform(2), noiseless) == pytest.approx(1.0)
    pyx = marginal_channel(z_channel)
    assert info_density(1, 1, InputDist.binary(0.5), pyx) == pytest.approx(1.0, abs=1e-14)
    # independence: P(y|x) = P_Y(y)
    flat = np.full((2, 2), 0.5)
    assert info_density(1, 0, InputDist.binary(0.3), flat) == 0.0
    assert info_density(0, 1, InputDist.binary(0.5), pyx) == -math.inf


def test_info_density_rejects_impossible_output(z_channel):
    with pytest.raises(ValueError, match="zero probability"):
        info_density(0, 1, InputDist.binary(0.0), marginal_channel(z_channel))


def test_density_table_impossible_pairs(z_channel):
    t = density_table(InputDist.binary(0.0), marginal_channel(z_channel))
    assert t[0, 0] == 0.0
    assert t[0, 1] == -math.inf and t[1, 1] == -math.inf


def test_moments_degenerate_input(z_channel):
    m = info_moments(InputDist.binary(0.0), marginal_channel(z_channel))
    assert (m.mutual_info, m.var, m.third_abs) == (0.0, 0.0, 0.0)
    m = info_moments(InputDist.binary(1.0), marginal_channel(z_channel))
    assert (m.mutual_info, m.var, m.third_abs) == (0.0, 0.0, 0.0)


def test_moments_binary_half(z_channel):
    m = info_moments(InputDist.binary(0.5), marginal_channel(z_channel))
    hb = lambda p: -p * math.log2(p) - (1 - p) * math.log2(1 - p)
    assert m.mutual_info == pytest.approx(hb(0.2) - 0.5 * hb(0.4), abs=1e-12)
    assert m.mutual_info == pytest.approx(0.23645, abs=1e-5)


def test_capacity_at_alpha_star(z_channel):
    a_star = binary_closed_forms(BinaryChannelSpec(0.4)).alpha_star
    m = info_moments(InputDist.binary(a_star), marginal_channel(z_channel))
    assert m.mutual_info == pytest.approx(0.246, abs=5e-4)


def test_noiseless_has_zero_dispersion():
    m = info_moments(InputDist.uniform(3), marginal_channel(identity_channel()))
    assert m.mutual_info == pytest.approx(math.log2(3))
    assert m.var == 0.0 and m.third_abs == 0.0


@pytest.mark.parametrize("shape", [(2, 2, 2, 2), (3, 2, 4, 2), (4, 3, 3, 3), (2, 4, 4, 1)])
def test_moments_match_enumeration(rng, shape):
    for _ in range(20):
        dmc = random_channel(rng, *shape, sparse=0.3)
        pyx = marginal_channel(dmc)
        px = InputDist(rng.dirichlet(np.ones(shape[0])))
        m = info_moments(px, pyx)
        mi, v_raw, v_central, third = brute_moments(px.probs, pyx)
        assert m.mutual_info == pytest.approx(mi, abs=1e-10)
        assert m.var == pytest.approx(v_raw, abs=1e-10)
        assert m.var == pytest.approx(v_central, abs=1e-10)
        assert m.third_abs == pytest.approx(third, abs=1e-10)
        assert m.mutual_info >= -1e-12


def test_closed_forms_grid_matches_generic():
    for q in np.linspace(0.05, 0.95, 10):
        pyx = marginal_channel(binary_channel(q))
        for a in np.linspace(0.02, 0.98, 5):
            cf = binary_closed_forms(BinaryChannelSpec(q, a))
            m = info_moments(InputDist.binary(a), pyx)
            assert abs(cf.mutual_info - m.mutual_info) < 1e-9
            assert abs(cf.var - m.var) < 1e-9
            assert abs(cf.third_abs - m.third_abs) < 1e-9


def printed_third_moment(q, a):
    """Third-moment display as typeset, with the second term missing its factor alpha."""
    mi = binary_closed_forms(BinaryChannelSpec(q, a)).mutual_info
    return (
        a * q * abs(math.log2(1 / a) - mi) ** 3
        + (1 - q) * abs(math.log2((1 - q) / (1 - q * a)) - mi) ** 3
        + (1 - a) * abs(math.log2(1 / (1 - q * a)) - mi) ** 3
    )


def test_typeset_third_moment_differs_from_definition():
    m = info_moments(InputDist.binary(0.5), marginal_channel(binary_channel(0.4)))
    assert abs(printed_third_moment(0.4, 0.5) - m.third_abs) > 1e-3
    # they agree only when alpha = 1, where the missing factor is 1
    assert printed_third_moment(0.4, 1.0) == pytest.approx(
        info_moments(InputDist.binary(1.0), marginal_channel(binary_channel(0.4))).third_abs, abs=1e-12
    )


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    shape=st.tuples(st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), st.integers(1, 3)),
)
def test_moments_invariant_under_relabelling(seed, shape):
    rng = np.random.default_rng(seed)
    dmc = random_channel(rng, *shape, sparse=0.25)
    pyx = marginal_channel(dmc)
    px = rng.dirichlet(np.ones(shape[0]))
    m = info_moments(InputDist(px), pyx)
    px_perm, py_perm = rng.permutation(shape[0]), rng.permutation(shape[2])
    m2 = info_moments(InputDist(px[px_perm]), pyx[np.ix_(py_perm, px_perm)])
    assert m2.mutual_info == pytest.approx(m.mutual_info, abs=1e-10)
    assert m2.var == pytest.approx(m.var, abs=1e-10)
    assert m2.third_abs == pytest.approx(m.third_abs, abs=1e-10)
    # mean of the density over the joint law is the mutual information
    joint = pyx.T * px[:, None]
    dens = density_table(InputDist(px), pyx)
    mask = joint > 0
    assert float(np.sum(joint[mask] * dens[mask])) == pytest.approx(m.mutual_info, abs=1e-10)
    assert m.var >= 0 and m.third_abs >= 0


def test_channel_rejects_bad_prior():
    with pytest.raises(ChannelError, match=r"state_prior sums to"):
        StateDMC(np.array([0.5, 0.6]), np.full((1, 2, 1, 1), 1.0), np.zeros((2, 2)))
    with pytest.raises(ChannelError, match=r"state_prior\[1\]"):
        StateDMC(np.array([1.5, -0.5]), np.full((1, 2, 1, 1), 1.0), np.zeros((2, 2)))


def test_channel_reports_first_bad_kernel_row():
    kernel = np.full((2, 2, 1, 2), 0.5)
    kernel[1, 0, 0, 1] = 0.4
    with pytest.raises(ChannelError, match=r"kernel\[1\]\[0\] sums to"):
        StateDMC(np.array([0.5, 0.5]), kernel, np.zeros((2, 2)))
    kernel[1, 0, 0, 1] = -0.5
    with pytest.raises(ChannelError, match=r"kernel\[1, 0, 0, 1\]"):
        StateDMC(np.array([0.5, 0.5]), kernel, np.zeros((2, 2)))


def test_channel_rejects_bad_distortion():
    d = np.zeros((2, 2))
    d[0, 1] = np.inf
    with pytest.raises(ChannelError, match=r"distortion\[0\]\[1\]"):
        StateDMC(np.array([0.5, 0.5]), np.full((1, 2, 1, 1), 1.0), d)


def test_json_round_trip(tmp_path, rng):
    dmc = random_channel(rng, 3, 2, 2, 3)
    path = tmp_path / "ch.json"
    save_channel(dmc, path)
    back = load_channel(path)
    np.testing.assert_array_equal(back.kernel, dmc.kernel)
    np.testing.assert_array_equal(back.state_prior, dmc.state_prior)
    np.testing.assert_array_equal(back.distortion, dmc.distortion)


def test_loader_checks_declared_sizes(z_channel):
    doc = channel_to_dict(z_channel)
    doc["y_size"] = 3
    with pytest.raises(ChannelError, match="kernel has shape"):
        channel_from_dict(doc)
    doc = channel_to_dict(z_channel)
    del doc["distortion"]
    with pytest.raises(ChannelError, match="missing field 'distortion'"):
        channel_from_dict(doc)


def test_loader_rejects_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ChannelError, match="not valid JSON"):
        load_channel(p)


def test_demo_channel_file_loads():
    import pathlib

    path = pathlib.Path(__file__).parents[1] / "demos" / "channels" / "ternary_radar.json"
    dmc = load_channel(path)
    assert dmc.x_size == 3
    json.loads(path.read_text())


def test_input_dist_validation():
    with pytest.raises(ValueError):
        InputDist(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        InputDist.binary(1.5)
    assert InputDist.binary(0.25).probs.tolist() == [0.75, 0.25]
