import numpy as np
import pytest

from stfreq.dft import cross_periodogram, dft_all, increment_dft, periodogram
from stfreq.errors import IndexOutOfRange
from stfreq.panel import Panel, StationSet

from oracles import naive_dft


def make_panel(values):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    m = values.shape[0]
    coords = np.column_stack([np.arange(m, dtype=float), np.zeros(m)])
    st = StationSet(ids=tuple("s%d" % i for i in range(m)), coords=coords)
    return Panel(stations=st, values=values)


def test_matches_naive_dft():
    rng = np.random.default_rng(1)
    for n in (2, 3, 8, 15, 16, 17, 128):
        values = rng.standard_normal((3, n))
        spec = dft_all(make_panel(values))
        ref = naive_dft(values)
        scale = np.max(np.abs(ref))
        assert np.max(np.abs(spec.coeffs - ref)) <= 1e-10 * scale


def test_constant_series():
    c = 1.7
    n = 16
    spec = dft_all(make_panel(np.full((1, n), c)))
    pg = periodogram(spec, 0)
    assert pg[0] == pytest.approx(n * c**2 / (2 * np.pi), rel=1e-12)
    assert np.max(pg[1:]) <= 1e-25


def test_conjugate_symmetry():
    rng = np.random.default_rng(2)
    spec = dft_all(make_panel(rng.standard_normal((1, 21))))
    j = spec.coeffs[0]
    for k in range(1, 21):
        assert j[21 - k] == pytest.approx(np.conj(j[k]), abs=1e-14)


def test_parseval_per_station():
    rng = np.random.default_rng(3)
    values = rng.standard_normal((4, 37))
    spec = dft_all(make_panel(values))
    for i in range(4):
        lhs = np.sum(np.abs(spec.coeffs[i]) ** 2)
        rhs = np.sum(values[i] ** 2) / (2 * np.pi)
        assert abs(lhs - rhs) <= 1e-10 * rhs


def test_frequency_grid():
    spec = dft_all(make_panel(np.zeros((1, 10))))
    np.testing.assert_allclose(spec.freqs, 2 * np.pi * np.arange(10) / 10)


def test_white_noise_periodogram_mean():
    # E I(omega_k) = sigma^2 / (2 pi) at k != 0; 1000 replications, 5%.
    rng = np.random.default_rng(0)
    n, k = 64, 9
    acc = 0.0
    reps = 1000
    for _ in range(reps):
        spec = dft_all(make_panel(rng.standard_normal((1, n))))
        acc += periodogram(spec, 0)[k]
    mean = acc / reps
    assert mean == pytest.approx(1.0 / (2 * np.pi), rel=0.05)


def test_periodogram_symmetry_and_zero():
    spec = dft_all(make_panel(np.zeros((1, 12))))
    assert np.all(periodogram(spec, 0) == 0)
    rng = np.random.default_rng(5)
    spec = dft_all(make_panel(rng.standard_normal((1, 12))))
    pg = periodogram(spec, 0)
    for k in range(1, 12):
        assert pg[12 - k] == pytest.approx(pg[k], rel=1e-12)


def test_cross_periodogram_properties():
    rng = np.random.default_rng(6)
    values = rng.standard_normal((2, 24))
    spec = dft_all(make_panel(values))
    ii = cross_periodogram(spec, 0, 0)
    np.testing.assert_allclose(ii.imag, 0.0, atol=1e-16)
    np.testing.assert_allclose(ii.real, periodogram(spec, 0))
    ij = cross_periodogram(spec, 0, 1)
    ji = cross_periodogram(spec, 1, 0)
    np.testing.assert_allclose(ij, np.conj(ji))

    dup = dft_all(make_panel(np.vstack([values[0], values[0]])))
    np.testing.assert_array_equal(
        cross_periodogram(dup, 0, 1), cross_periodogram(dup, 0, 0)
    )


def test_increment_dft():
    rng = np.random.default_rng(7)
    values = rng.standard_normal((2, 16))
    spec = dft_all(make_panel(values))
    np.testing.assert_allclose(increment_dft(spec, 0, 0), 0.0, atol=1e-16)

    inc = increment_dft(spec, 0, 1)
    direct = naive_dft(values[0] - values[1])
    assert np.max(np.abs(inc - direct)) <= 1e-12 * np.max(np.abs(direct))

    diff_panel = dft_all(make_panel(values[0] - values[1]))
    np.testing.assert_allclose(inc, diff_panel.coeffs[0], atol=1e-12)


def test_index_errors():
    spec = dft_all(make_panel(np.zeros((2, 8))))
    with pytest.raises(IndexOutOfRange):
        periodogram(spec, 2)
    with pytest.raises(IndexOutOfRange):
        cross_periodogram(spec, 0, -3)
    with pytest.raises(IndexOutOfRange):
        increment_dft(spec, 5, 0)


def test_needs_two_points():
    with pytest.raises(ValueError):
        dft_all(make_panel(np.zeros((1, 1))))


def test_sign_convention_invariance():
    # The opposite transform sign conjugates every coefficient of a real
    # series; periodogram-level quantities must not move.
    rng = np.random.default_rng(8)
    values = rng.standard_normal((2, 20))
    spec = dft_all(make_panel(values))
    flipped = np.conj(spec.coeffs)
    np.testing.assert_allclose(
        np.abs(flipped[0]) ** 2, periodogram(spec, 0), rtol=1e-15
    )
    np.testing.assert_allclose(
        np.abs(flipped[0] - flipped[1]) ** 2,
        np.abs(increment_dft(spec, 0, 1)) ** 2,
        rtol=1e-12,
    )
    np.testing.assert_allclose(
        flipped[0] * np.conj(flipped[1]),
        np.conj(cross_periodogram(spec, 0, 1)),
        rtol=1e-12,
    )


def test_periodogram_ordinates_nearly_uncorrelated():
    # Appendix-style property: corr(I(omega_k), I(omega_l)) = O(1/n).
    rng = np.random.default_rng(9)
    n, k, l = 64, 3, 7
    reps = 1000
    a = np.empty(reps)
    b = np.empty(reps)
    for r in range(reps):
        pg = periodogram(dft_all(make_panel(rng.standard_normal((1, n)))), 0)
        a[r], b[r] = pg[k], pg[l]
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.1
