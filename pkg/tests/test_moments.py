import numpy as np
import pytest

from stfreq.errors import EmptyLagSet
from stfreq.moments import SpaceTimeLag, matheron_variogram, sample_covariance
from stfreq.panel import Panel, StationSet, build_lag_pairs

from oracles import exhaustive_covariance, exhaustive_variogram


def make_panel(values, coords):
    values = np.asarray(values, dtype=float)
    st = StationSet(
        ids=tuple("s%d" % i for i in range(values.shape[0])),
        coords=np.asarray(coords, dtype=float),
    )
    return Panel(stations=st, values=values)


def toy_panel():
    # Two stations one unit apart, two observations each.
    return make_panel([[1.0, 3.0], [2.0, 5.0]], [[0.0, 0.0], [1.0, 0.0]])


def test_toy_variogram():
    # Expected value 2.5 frozen from the exhaustive-enumeration oracle.
    panel = toy_panel()
    lag = SpaceTimeLag(h=[1.0, 0.0], u=0, delta=0.0)
    value, count = matheron_variogram(panel, lag)
    ref, ref_count = exhaustive_variogram(
        panel.values, panel.stations.coords, [1.0, 0.0], 0.0, 0
    )
    assert ref == pytest.approx(2.5) and ref_count == 2
    assert value == pytest.approx(2.5)
    assert count == 2


def test_toy_covariance():
    # Expected value 1.5 frozen from the exhaustive-enumeration oracle.
    panel = toy_panel()
    lag = SpaceTimeLag(h=[1.0, 0.0], u=0, delta=0.0)
    value, count = sample_covariance(panel, lag)
    ref, _ = exhaustive_covariance(
        panel.values, panel.stations.coords, [1.0, 0.0], 0.0, 0
    )
    assert ref == pytest.approx(1.5)
    assert value == pytest.approx(1.5)
    assert count == 2


def test_constant_field_zero_variogram():
    panel = make_panel(np.full((3, 5), 4.2), [[0, 0], [1, 0], [2, 0]])
    for u in (-2, 0, 3):
        value, _ = matheron_variogram(panel, SpaceTimeLag(h=[1, 0], u=u))
        assert value == 0.0


def test_zero_lag_zero_variogram():
    rng = np.random.default_rng(0)
    panel = make_panel(rng.standard_normal((3, 6)), [[0, 0], [1, 0], [2, 0]])
    value, count = matheron_variogram(panel, SpaceTimeLag(h=[0, 0], u=0))
    assert value == 0.0
    assert count == 3 * 6


def test_matches_exhaustive_enumeration():
    rng = np.random.default_rng(14)
    for rep in range(10):
        m = int(rng.integers(2, 6))
        n = int(rng.integers(2, 11))
        coords = rng.uniform(0, 3, size=(m, 2))
        values = rng.standard_normal((m, n))
        panel = make_panel(values, coords)
        h = rng.uniform(-2, 2, size=2)
        delta = float(rng.uniform(0.5, 2.5))
        u = int(rng.integers(-(n - 1), n))
        lag = SpaceTimeLag(h=h, u=u, delta=delta)
        ref_g, ref_count = exhaustive_variogram(values, coords, h, delta, u)
        if ref_count == 0:
            with pytest.raises(EmptyLagSet):
                matheron_variogram(panel, lag)
            continue
        got_g, got_count = matheron_variogram(panel, lag)
        assert got_count == ref_count
        np.testing.assert_allclose(got_g, ref_g, rtol=1e-12)
        got_c, _ = sample_covariance(panel, lag)
        ref_c, _ = exhaustive_covariance(values, coords, h, delta, u)
        np.testing.assert_allclose(got_c, ref_c, rtol=1e-12)


def test_count_formula():
    rng = np.random.default_rng(1)
    panel = make_panel(
        rng.standard_normal((3, 9)), [[0, 0], [1, 0], [2, 0]]
    )
    pairs = build_lag_pairs(panel.stations, [1.0, 0.0])
    for u in (0, 2, -4):
        _, count = matheron_variogram(panel, SpaceTimeLag(h=[1, 0], u=u))
        assert count == len(pairs) * (9 - abs(u))


def test_reversal_symmetry():
    rng = np.random.default_rng(2)
    panel = make_panel(rng.standard_normal((3, 7)), [[0, 0], [1, 0], [2, 0]])
    for u in (0, 1, 3):
        c_fwd, _ = sample_covariance(panel, SpaceTimeLag(h=[1, 0], u=u))
        c_bwd, _ = sample_covariance(panel, SpaceTimeLag(h=[-1, 0], u=-u))
        assert c_fwd == pytest.approx(c_bwd, rel=1e-12)
        g_fwd, _ = matheron_variogram(panel, SpaceTimeLag(h=[1, 0], u=u))
        g_bwd, _ = matheron_variogram(panel, SpaceTimeLag(h=[-1, 0], u=-u))
        assert g_fwd == pytest.approx(g_bwd, rel=1e-12)


def test_zero_lag_covariance_is_mean_sample_variance():
    rng = np.random.default_rng(3)
    values = rng.standard_normal((4, 12))
    panel = make_panel(values, [[0, 0], [1, 0], [2, 0], [3, 0]])
    c, _ = sample_covariance(panel, SpaceTimeLag(h=[0, 0], u=0))
    want = np.mean([np.var(values[i]) for i in range(4)])
    assert c == pytest.approx(want, rel=1e-12)


def test_empty_lag_set():
    panel = toy_panel()
    with pytest.raises(EmptyLagSet):
        matheron_variogram(panel, SpaceTimeLag(h=[9.0, 9.0], u=0))
    with pytest.raises(EmptyLagSet):
        matheron_variogram(panel, SpaceTimeLag(h=[1.0, 0.0], u=2))
    with pytest.raises(EmptyLagSet):
        sample_covariance(panel, SpaceTimeLag(h=[1.0, 0.0], u=-5))


def test_variogram_covariance_identity():
    # gamma(h, 0) ~ 2 [c(0,0) - c(h,0)] for zero-mean stationary fields;
    # 200 replications at 10% relative tolerance.
    from stfreq.simulate import SpatialCovariance, simulate_separable

    st = StationSet(
        ids=tuple("s%d" % i for i in range(6)),
        coords=np.column_stack([np.arange(6.0), np.zeros(6)]),
    )
    spatial = SpatialCovariance(family="exponential", length_scale=3.0)
    g_acc = 0.0
    c0_acc = 0.0
    ch_acc = 0.0
    for rep in range(200):
        panel = simulate_separable(st, 64, spatial, rho=0.4, seed=900 + rep)
        g, _ = matheron_variogram(panel, SpaceTimeLag(h=[1.0, 0.0], u=0))
        c0, _ = sample_covariance(panel, SpaceTimeLag(h=[0.0, 0.0], u=0))
        ch, _ = sample_covariance(panel, SpaceTimeLag(h=[1.0, 0.0], u=0))
        g_acc += g
        c0_acc += c0
        ch_acc += ch
    lhs = g_acc / 200
    rhs = 2 * (c0_acc - ch_acc) / 200
    assert lhs == pytest.approx(rhs, rel=0.10)
