import numpy as np
import pytest

from stfreq.errors import EmptyLagSet, InvalidParams, SingularHessian
from stfreq.panel import Panel, StationSet
from stfreq.simulate import simulate_whittle_periodograms
from stfreq.specmodel import SpectrumParams, temporal_spectrum
from stfreq.whittle import (
    ConstantSpectrumModel,
    FitOptions,
    LagData,
    PolySpectrumModel,
    WhittleProblem,
    default_frequency_subset,
    fit,
    problem_from_panel,
    sandwich_cov,
    whittle_pooled,
    whittle_single,
)

TRUE = SpectrumParams(sigma_eta2=1.0, nu=1.0, d=2, a0=1.0, a1=0.5, c1=0.5)
H_LIST = [np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.array([3.0, 0.0])]


def constant_problem(periodograms, n):
    return WhittleProblem(
        n=n,
        lags=(LagData(h=[1.0, 0.0], periodograms=np.atleast_2d(periodograms)),),
        model=ConstantSpectrumModel(),
    )


def test_default_frequency_subset():
    np.testing.assert_array_equal(default_frequency_subset(8), [1, 2, 3])
    np.testing.assert_array_equal(default_frequency_subset(9), [1, 2, 3, 4])
    subset = default_frequency_subset(512)
    assert subset[0] == 1 and subset[-1] == 255
    with pytest.raises(ValueError):
        default_frequency_subset(3)


def test_fit_constant_model_is_mean_ordinate():
    rng = np.random.default_rng(0)
    n = 128
    pg = rng.exponential(size=n)
    subset = default_frequency_subset(n)
    target = pg[subset].mean()
    res = fit(constant_problem(pg, n), {"level": 1.0})
    assert res.converged
    assert res.psi_hat["level"] == pytest.approx(target, rel=1e-6)


def test_single_value_at_model_truth():
    # I == g0 pointwise gives Q = sum(ln g0 + 1).
    n = 64
    subset = default_frequency_subset(n)
    omegas = 2 * np.pi * subset / n
    g0 = temporal_spectrum(omegas, TRUE, H_LIST[0])
    pg = np.zeros(n)
    pg[subset] = g0
    q = whittle_single(pg, H_LIST[0], TRUE)
    assert q == pytest.approx(float(np.sum(np.log(g0) + 1.0)), rel=1e-12)


def test_single_subset_permutation_invariant():
    rng = np.random.default_rng(1)
    n = 64
    pg = rng.exponential(size=n)
    subset = default_frequency_subset(n)
    q1 = whittle_single(pg, H_LIST[0], TRUE, k_subset=subset)
    q2 = whittle_single(pg, H_LIST[0], TRUE, k_subset=subset[::-1])
    assert q1 == pytest.approx(q2, rel=1e-14)


def test_single_rejects_degenerate_model():
    # Root of the polynomial placed exactly on grid frequency 2*pi*4/16.
    w = 2.0 * np.pi * 4.0 / 16.0
    bad = TRUE.replace(c1=0.0, c2=-1.0 / (w * w), c3=0.0)
    with pytest.raises(InvalidParams):
        whittle_single(np.ones(16), H_LIST[0], bad, k_subset=np.array([4]))


def test_pooled_degenerate_equals_single():
    rng = np.random.default_rng(2)
    n = 64
    pg = rng.exponential(size=(1, n))
    problem = WhittleProblem(
        n=n, lags=(LagData(h=H_LIST[0], periodograms=pg),), model=None
    )
    q_pool = whittle_pooled(problem, TRUE)
    q_single = whittle_single(pg[0], H_LIST[0], TRUE)
    assert q_pool == pytest.approx(q_single, rel=1e-12)


def test_pooled_equals_hand_pooling():
    lags = simulate_whittle_periodograms(TRUE, H_LIST, 4, 64, seed=3)
    problem = WhittleProblem(n=64, lags=tuple(lags), model=None)
    want = 0.0
    for ld in lags:
        per_lag = np.mean(
            [whittle_single(pg, ld.h, TRUE) for pg in ld.periodograms]
        )
        want += per_lag
    want /= len(lags)
    assert whittle_pooled(problem, TRUE) == pytest.approx(want, rel=1e-12)


def test_pooled_duplicated_lags_same_value():
    lags = simulate_whittle_periodograms(TRUE, H_LIST[:1], 4, 64, seed=4)
    once = WhittleProblem(n=64, lags=tuple(lags), model=None)
    twice = WhittleProblem(n=64, lags=tuple(lags) * 2, model=None)
    assert whittle_pooled(once, TRUE) == pytest.approx(
        whittle_pooled(twice, TRUE), rel=1e-12
    )


def test_fit_constant_model_noiseless():
    n = 128
    subset = default_frequency_subset(n)
    pg = np.zeros(n)
    pg[subset] = 0.37
    problem = constant_problem(pg, n)
    res = fit(problem, {"level": 1.0})
    assert res.converged
    assert res.psi_hat["level"] == pytest.approx(0.37, abs=1e-6)
    assert res.grad_norm < 1e-4 * (1 + abs(res.criterion_value))


def test_fit_trace_monotone():
    lags = simulate_whittle_periodograms(TRUE, H_LIST, 8, 128, seed=5)
    problem = WhittleProblem(n=128, lags=tuple(lags), model=PolySpectrumModel(TRUE))
    res = fit(problem, {"a0": 2.0, "a1": 0.1, "c1": 1.0})
    assert res.converged
    assert np.all(np.diff(res.trace) <= 1e-12 * (1 + np.abs(res.trace[:-1])))


def test_fit_recovers_single_seed():
    lags = simulate_whittle_periodograms(TRUE, H_LIST, 20, 512, seed=6)
    problem = WhittleProblem(n=512, lags=tuple(lags), model=PolySpectrumModel(TRUE))
    res = fit(problem, {"a0": 1.5, "a1": 0.2, "c1": 0.8})
    assert res.converged
    for name, true_value in (("a0", 1.0), ("a1", 0.5), ("c1", 0.5)):
        assert abs(res.psi_hat[name] - true_value) < 4 * res.se[name]
    assert res.grad_norm < 1e-4 * (1 + abs(res.criterion_value))
    assert whittle_pooled(problem, res.params) == pytest.approx(
        res.criterion_value, rel=1e-9
    )


def test_fit_methods_agree():
    lags = simulate_whittle_periodograms(TRUE, H_LIST, 10, 128, seed=7)
    problem = WhittleProblem(n=128, lags=tuple(lags), model=PolySpectrumModel(TRUE))
    init = {"a0": 1.4, "a1": 0.3, "c1": 0.6}
    nm = fit(problem, init, FitOptions(method="nelder-mead", covariance=False))
    bf = fit(problem, init, FitOptions(method="bfgs", covariance=False))
    for name in ("a0", "a1", "c1"):
        assert nm.psi_hat[name] == pytest.approx(bf.psi_hat[name], rel=1e-4)


def test_fit_invalid_init():
    lags = simulate_whittle_periodograms(TRUE, H_LIST[:1], 2, 64, seed=8)
    problem = WhittleProblem(n=64, lags=tuple(lags), model=PolySpectrumModel(TRUE))
    with pytest.raises(InvalidParams):
        fit(problem, {"a0": -1.0, "a1": 0.5, "c1": 0.5})


def test_fit_iteration_cap_returns_flag():
    lags = simulate_whittle_periodograms(TRUE, H_LIST, 8, 128, seed=9)
    problem = WhittleProblem(n=128, lags=tuple(lags), model=PolySpectrumModel(TRUE))
    res = fit(
        problem,
        {"a0": 3.0, "a1": 0.0, "c1": 1.5},
        FitOptions(max_iter=3, covariance=False),
    )
    assert not res.converged
    assert res.iterations == 3
    assert np.isfinite(res.criterion_value)


def test_scale_equivariance():
    # Multiplying the data by c (periodograms by c^2) while rescaling
    # sigma_eta2 by c^2 leaves the free-parameter estimates unchanged.
    c2 = 9.0
    lags = simulate_whittle_periodograms(TRUE, H_LIST, 10, 128, seed=10)
    scaled = [
        LagData(h=ld.h, periodograms=c2 * ld.periodograms) for ld in lags
    ]
    init = {"a0": 1.3, "a1": 0.4, "c1": 0.6}
    base_fit = fit(
        WhittleProblem(n=128, lags=tuple(lags), model=PolySpectrumModel(TRUE)),
        init,
        FitOptions(covariance=False),
    )
    scaled_fit = fit(
        WhittleProblem(
            n=128,
            lags=tuple(scaled),
            model=PolySpectrumModel(TRUE.replace(sigma_eta2=c2)),
        ),
        init,
        FitOptions(covariance=False),
    )
    for name in ("a0", "a1", "c1"):
        assert base_fit.psi_hat[name] == pytest.approx(
            scaled_fit.psi_hat[name], abs=1e-6, rel=1e-5
        )


def test_sandwich_constant_model_oracle():
    # Var(theta_hat) = theta_hat^2 / M for the constant model; the mean
    # sandwich estimate over 200 replications must sit within 20%.
    rng = np.random.default_rng(11)
    n = 256
    subset = default_frequency_subset(n)
    m_freq = subset.size
    level = 2.0
    ratio_acc = 0.0
    reps = 200
    for _ in range(reps):
        pg = level * rng.exponential(size=(1, n))
        problem = constant_problem(pg, n)
        res = fit(problem, {"level": 1.0})
        want = res.psi_hat["level"] ** 2 / m_freq
        ratio_acc += res.covariance[0, 0] / want
    assert ratio_acc / reps == pytest.approx(1.0, abs=0.20)


def test_sandwich_symmetric_psd():
    lags = simulate_whittle_periodograms(TRUE, H_LIST, 10, 128, seed=12)
    problem = WhittleProblem(n=128, lags=tuple(lags), model=PolySpectrumModel(TRUE))
    res = fit(problem, {"a0": 1.2, "a1": 0.4, "c1": 0.6})
    cov = res.covariance
    np.testing.assert_allclose(cov, cov.T, atol=1e-12)
    eigs = np.linalg.eigvalsh(cov)
    assert np.min(eigs) > -1e-8


def test_sandwich_halves_with_doubled_n():
    rng = np.random.default_rng(13)
    means = {}
    for n in (256, 512):
        subset = default_frequency_subset(n)
        acc = 0.0
        reps = 100
        for _ in range(reps):
            pg = 1.5 * rng.exponential(size=(1, n))
            res = fit(constant_problem(pg, n), {"level": 1.0})
            acc += res.covariance[0, 0]
        means[n] = acc / reps
    assert 0.4 <= means[512] / means[256] <= 0.6


def test_sandwich_singular_hessian():
    # With a single unit-norm lag, a1 scales c0 by ||h||^(a1) = 1, so the
    # criterion is exactly flat in a1.
    lags = simulate_whittle_periodograms(TRUE, H_LIST[:1], 5, 64, seed=14)
    model = PolySpectrumModel(TRUE, free=("a1",))
    problem = WhittleProblem(n=64, lags=tuple(lags), model=model)
    with pytest.raises(SingularHessian):
        sandwich_cov(problem, {"a1": 0.5})
    with pytest.warns(UserWarning):
        res = fit(problem, {"a1": 0.5})
    assert res.covariance is None and res.se is None


def test_problem_from_panel():
    rng = np.random.default_rng(15)
    st = StationSet(
        ids=("a", "b", "c"),
        coords=np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
    )
    panel = Panel(stations=st, values=rng.standard_normal((3, 32)))
    problem = problem_from_panel(
        panel, [[1.0, 0.0], [2.0, 0.0]], 0.0, ConstantSpectrumModel()
    )
    assert problem.n == 32
    assert problem.n_lags == 2
    assert problem.lags[0].n_pairs == 2
    assert problem.lags[1].n_pairs == 1
    with pytest.raises(EmptyLagSet):
        problem_from_panel(panel, [[9.0, 0.0]], 0.0, ConstantSpectrumModel())


def test_model_free_mask_validation():
    with pytest.raises(InvalidParams):
        PolySpectrumModel(TRUE, free=("bogus",))
    with pytest.raises(InvalidParams):
        PolySpectrumModel(TRUE, free=())
    model = PolySpectrumModel(TRUE, free=("a0", "c1"))
    theta = model.initial_theta({"a0": 2.0, "c1": 0.3})
    realized = model.realize(theta)
    assert realized.a0 == 2.0 and realized.c1 == 0.3 and realized.a1 == TRUE.a1
