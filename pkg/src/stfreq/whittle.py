"""Pooled Whittle-type fitting of the parametric temporal spectrum.

For one station pair at lag h with increment periodogram I, the criterion
is

    Q(psi) = sum_{k in subset} [ ln g0(omega_k; psi) + I(omega_k) / g0(omega_k; psi) ],

where g0 is :func:`stfreq.specmodel.temporal_spectrum`.  Pooling averages
over the pairs of each lag and then over lags:

    Q_pooled(psi) = (1/H) sum_l (1/|N(h_l)|) sum_{i in N(h_l)} Q_{l,i}(psi).

The default frequency subset is k = 1..floor(n/2), excluding k = 0 always
and omega = pi when n is even.

Identifiability note: multiplying sigma_eta2 by t while scaling (a0, c1)
by t^(1 / (4 nu - d)) leaves g0 unchanged, an exact criterion ridge.  The
default free mask therefore fixes sigma_eta2 (and nu) and estimates the
polynomial coefficients; both can be freed explicitly by callers who fix
something else instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dft import dft_all, increment_dft
from .errors import EmptyLagSet, InvalidParams, SingularHessian
from .panel import build_lag_pairs
from .specmodel import SpectrumParams, temporal_spectrum

__all__ = [
    "LagData",
    "WhittleProblem",
    "PolySpectrumModel",
    "ConstantSpectrumModel",
    "FitOptions",
    "FitResult",
    "default_frequency_subset",
    "whittle_single",
    "whittle_pooled",
    "problem_from_panel",
    "fit",
    "sandwich_cov",
]

DEFAULT_FREE = ("a0", "a1", "c1")
_LOG_SCALE = frozenset({"sigma_eta2", "nu", "a0", "c1", "level"})


def default_frequency_subset(n):
    """Fourier indices used in the criterion: 1..floor(n/2), omega = pi
    dropped when n is even."""
    if n < 4:
        raise ValueError("need n >= 4 for a nonempty frequency subset")
    half = n // 2
    return np.arange(1, half) if n % 2 == 0 else np.arange(1, half + 1)


@dataclass(frozen=True)
class LagData:
    """Increment periodograms of every station pair at one spatial lag.

    ``periodograms`` has shape (n_pairs, n), full frequency grid.
    """

    h: np.ndarray
    periodograms: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1).copy()
        h.flags.writeable = False
        object.__setattr__(self, "h", h)
        pg = np.asarray(self.periodograms, dtype=float)
        if pg.ndim != 2 or pg.shape[0] < 1:
            raise ValueError("periodograms must be (n_pairs, n) with n_pairs >= 1")
        pg = pg.copy()
        pg.flags.writeable = False
        object.__setattr__(self, "periodograms", pg)

    @property
    def n_pairs(self):
        return self.periodograms.shape[0]


# ---------------------------------------------------------------------------
# model templates: parameter vector <-> spectrum
# ---------------------------------------------------------------------------


class PolySpectrumModel:
    """Free/fixed mask over :class:`SpectrumParams` for fitting.

    ``free`` names the estimated fields in order; the rest stay at the
    values of ``base``.  Positive-by-construction fields (sigma_eta2, nu,
    a0, c1) are optimized on a log scale.
    """

    def __init__(self, base, free=DEFAULT_FREE):
        if not isinstance(base, SpectrumParams):
            raise InvalidParams("base must be a SpectrumParams")
        free = tuple(free)
        valid = ("sigma_eta2", "nu", "a0", "a1", "c1", "c2", "c3")
        for name in free:
            if name not in valid:
                raise InvalidParams("unknown free parameter %r" % name)
        if len(set(free)) != len(free) or not free:
            raise InvalidParams("free parameter names must be unique, >= 1")
        self.base = base
        self.free = free

    @property
    def param_names(self):
        return self.free

    def initial_theta(self, init):
        """Free-parameter vector from a SpectrumParams, mapping, or sequence."""
        if isinstance(init, SpectrumParams):
            return np.array([getattr(init, name) for name in self.free], float)
        if isinstance(init, dict):
            return np.array([init[name] for name in self.free], float)
        theta = np.asarray(init, dtype=float).reshape(-1)
        if theta.shape[0] != len(self.free):
            raise InvalidParams(
                "init has %d values for %d free parameters"
                % (theta.shape[0], len(self.free))
            )
        return theta

    def realize(self, theta):
        """Full SpectrumParams with the free fields set from theta.

        Raises InvalidParams if the result violates model constraints.
        """
        return self.base.replace(**dict(zip(self.free, np.asarray(theta, float))))

    def validate(self, theta):
        self.realize(theta)

    def g0(self, theta, h, omegas):
        return temporal_spectrum(omegas, self.realize(theta), h)

    def _log_mask(self):
        return np.array([name in _LOG_SCALE for name in self.free])

    def to_opt(self, theta):
        theta = np.asarray(theta, dtype=float)
        mask = self._log_mask()
        if np.any(theta[mask] <= 0):
            raise InvalidParams(
                "positive-scale parameters must be > 0 at the start point"
            )
        z = theta.copy()
        z[mask] = np.log(theta[mask])
        return z

    def from_opt(self, z):
        z = np.asarray(z, dtype=float)
        theta = z.copy()
        mask = self._log_mask()
        theta[mask] = np.exp(z[mask])
        return theta

    def describe(self, theta):
        return dict(zip(self.free, (float(v) for v in theta)))


class ConstantSpectrumModel:
    """Flat spectrum g0 = level; the one-parameter sanity model.

    Its criterion minimizer is the mean included periodogram ordinate and
    the estimator variance has the closed form level^2 / n_freq, which
    anchors the sandwich covariance tests.
    """

    param_names = ("level",)
    free = ("level",)

    def initial_theta(self, init):
        if isinstance(init, dict):
            init = init["level"]
        theta = np.asarray(init, dtype=float).reshape(-1)
        if theta.shape[0] != 1:
            raise InvalidParams("constant model has exactly one parameter")
        return theta

    def realize(self, theta):
        level = float(np.asarray(theta).reshape(-1)[0])
        if not np.isfinite(level) or level <= 0:
            raise InvalidParams("level must be positive, got %g" % level)
        return level

    def validate(self, theta):
        self.realize(theta)

    def g0(self, theta, h, omegas):
        return np.full(np.shape(omegas), self.realize(theta))

    def to_opt(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0):
            raise InvalidParams("level must be > 0 at the start point")
        return np.log(theta)

    def from_opt(self, z):
        return np.exp(np.asarray(z, dtype=float))

    def describe(self, theta):
        return {"level": float(np.asarray(theta).reshape(-1)[0])}


@dataclass(frozen=True)
class WhittleProblem:
    """Spectral data, lag structure, model template, and frequency subset."""

    n: int
    lags: tuple
    model: object
    k_subset: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        lags = tuple(self.lags)
        if not lags:
            raise EmptyLagSet("problem needs at least one lag")
        for ld in lags:
            if ld.periodograms.shape[1] != self.n:
                raise ValueError(
                    "lag %s has %d frequencies, expected n=%d"
                    % (ld.h, ld.periodograms.shape[1], self.n)
                )
        object.__setattr__(self, "lags", lags)
        subset = (
            default_frequency_subset(self.n)
            if self.k_subset is None
            else np.asarray(self.k_subset, dtype=int)
        )
        if subset.size == 0 or np.any(subset < 0) or np.any(subset >= self.n):
            raise ValueError("frequency subset out of range")
        subset = subset.copy()
        subset.flags.writeable = False
        object.__setattr__(self, "k_subset", subset)

    @property
    def omegas(self):
        return 2.0 * np.pi * self.k_subset / self.n

    @property
    def n_lags(self):
        return len(self.lags)

    def mean_periodograms(self):
        """Per-lag pair-averaged periodograms on the frequency subset."""
        return [
            ld.periodograms[:, self.k_subset].mean(axis=0) for ld in self.lags
        ]


def problem_from_panel(panel, h_list, delta, model, k_subset=None):
    """Assemble a :class:`WhittleProblem` from raw panel data.

    Builds lag pair sets (EmptyLagSet if any lag has none) and increment
    periodograms via the spectral panel.
    """
    spec = dft_all(panel)
    lags = []
    for h in h_list:
        pairs = build_lag_pairs(panel.stations, h, delta)
        if len(pairs) == 0:
            raise EmptyLagSet(
                "no station pairs within %g of lag %s" % (delta, np.asarray(h))
            )
        pg = np.stack(
            [np.abs(increment_dft(spec, i, j)) ** 2 for i, j in pairs.pairs]
        )
        lags.append(LagData(h=np.asarray(h, dtype=float), periodograms=pg))
    return WhittleProblem(n=panel.n, lags=tuple(lags), model=model, k_subset=k_subset)


# ---------------------------------------------------------------------------
# criterion
# ---------------------------------------------------------------------------


def whittle_single(periodogram, h, params, k_subset=None):
    """Single-pair criterion at lag h under the parametric spectrum.

    Parameters
    ----------
    periodogram : array_like, shape (n,)
        Increment periodogram on the full frequency grid.
    h : array_like
    params : SpectrumParams
    k_subset : array_like of int, optional
        Defaults to :func:`default_frequency_subset`.

    Returns
    -------
    float
    """
    periodogram = np.asarray(periodogram, dtype=float)
    n = periodogram.shape[0]
    subset = (
        default_frequency_subset(n) if k_subset is None else np.asarray(k_subset)
    )
    omegas = 2.0 * np.pi * subset / n
    g0 = temporal_spectrum(omegas, params, h)
    if np.any(~np.isfinite(g0)) or np.any(g0 <= 0):
        raise InvalidParams("model spectrum must be positive on the subset")
    return float(np.sum(np.log(g0) + periodogram[subset] / g0))


def whittle_pooled(problem, params):
    """Lag- and pair-averaged criterion at a full parameter point."""
    omegas = problem.omegas
    total = 0.0
    for ld, ibar in zip(problem.lags, problem.mean_periodograms()):
        g0 = temporal_spectrum(omegas, params, ld.h)
        if np.any(~np.isfinite(g0)) or np.any(g0 <= 0):
            raise InvalidParams("model spectrum must be positive on the subset")
        total += float(np.sum(np.log(g0) + ibar / g0))
    return total / problem.n_lags


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings.

    ``xtol`` is the relative simplex-diameter convergence threshold.
    ``method`` is ``nelder-mead`` (default) or ``bfgs`` (numeric-gradient
    quasi-Newton via scipy, for cross-checking).
    """

    method: str = "nelder-mead"
    xtol: float = 1e-8
    max_iter: int = 4000
    initial_step: float = 0.1
    covariance: bool = True

    def __post_init__(self):
        if self.method not in ("nelder-mead", "bfgs"):
            raise ValueError("method must be 'nelder-mead' or 'bfgs'")


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit`.

    ``psi_hat`` maps free-parameter names to estimates; ``params`` is the
    realized full model (a SpectrumParams for the polynomial family).
    ``covariance`` and ``se`` follow the sandwich formula and are None when
    the Hessian is singular or covariance was not requested.
    """

    psi_hat: dict
    params: object
    criterion_value: float
    converged: bool
    iterations: int
    grad_norm: float
    trace: np.ndarray
    covariance: np.ndarray | None = None
    se: dict | None = None


def _nelder_mead(fn, z0, xtol, max_iter, initial_step):
    """Simplex search; returns (z_best, f_best, iterations, converged, trace).

    The trace records the best vertex value at the top of every iteration
    and is non-increasing by construction.
    """
    p = z0.shape[0]
    simplex = np.empty((p + 1, p))
    simplex[0] = z0
    for i in range(p):
        step = initial_step * max(abs(z0[i]), 1.0)
        simplex[i + 1] = z0
        simplex[i + 1, i] += step
    fvals = np.array([fn(z) for z in simplex])
    trace = []
    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        trace.append(fvals[0])
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        if diameter <= xtol * (1.0 + np.max(np.abs(simplex[0]))):
            converged = True
            break
        iterations += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = fn(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = fn(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (worst - centroid)
            fc = fn(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:
                for i in range(1, p + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    fvals[i] = fn(simplex[i])
    order = np.argsort(fvals, kind="stable")
    simplex, fvals = simplex[order], fvals[order]
    if not trace or fvals[0] < trace[-1]:
        trace.append(fvals[0])
    return simplex[0], float(fvals[0]), iterations, converged, np.array(trace)


def _objective_factory(problem):
    """Pooled criterion over free parameters, with invalid points -> +inf."""
    ibars = problem.mean_periodograms()
    omegas = problem.omegas
    model = problem.model

    def objective(theta):
        try:
            total = 0.0
            for ld, ibar in zip(problem.lags, ibars):
                g0 = np.asarray(model.g0(theta, ld.h, omegas), dtype=float)
                if np.any(~np.isfinite(g0)) or np.any(g0 <= 0):
                    return np.inf
                total += float(np.sum(np.log(g0) + ibar / g0))
            return total / problem.n_lags
        except InvalidParams:
            return np.inf

    return objective


def _per_freq_contributions(problem, theta):
    """Vector of per-frequency criterion terms q_k, summing to the criterion."""
    ibars = problem.mean_periodograms()
    omegas = problem.omegas
    model = problem.model
    out = np.zeros(omegas.shape[0])
    for ld, ibar in zip(problem.lags, ibars):
        g0 = np.asarray(model.g0(theta, ld.h, omegas), dtype=float)
        out += np.log(g0) + ibar / g0
    return out / problem.n_lags


def _fd_steps(theta, rel=1e-5):
    return rel * np.maximum(np.abs(theta), 1.0)


def _fd_gradient(fn, theta):
    steps = _fd_steps(theta)
    grad = np.empty(theta.shape[0])
    for j in range(theta.shape[0]):
        up, dn = theta.copy(), theta.copy()
        up[j] += steps[j]
        dn[j] -= steps[j]
        grad[j] = (fn(up) - fn(dn)) / (2.0 * steps[j])
    return grad


def fit(problem, init, options=None):
    """Minimize the pooled criterion over the model's free parameters.

    Parameters
    ----------
    problem : WhittleProblem
    init : SpectrumParams, mapping, or sequence
        Start values for the free parameters; must satisfy the model
        constraints (InvalidParams otherwise).
    options : FitOptions, optional

    Returns
    -------
    FitResult
        ``converged`` is False when the iteration cap was reached; the
        best point found so far is still returned.
    """
    options = options if options is not None else FitOptions()
    model = problem.model
    theta0 = model.initial_theta(init)
    model.validate(theta0)
    objective = _objective_factory(problem)
    z0 = model.to_opt(theta0)

    def z_objective(z):
        return objective(model.from_opt(z))

    if options.method == "bfgs":
        from scipy.optimize import minimize

        trace = [float(z_objective(z0))]
        res = minimize(
            z_objective,
            z0,
            method="BFGS",
            callback=lambda zk: trace.append(float(z_objective(zk))),
            options={"maxiter": options.max_iter},
        )
        z_best, f_best = res.x, float(res.fun)
        iterations, converged = int(res.nit), bool(res.success)
        trace = np.minimum.accumulate(np.array(trace))
    else:
        z_best, f_best, iterations, converged, trace = _nelder_mead(
            z_objective, z0, options.xtol, options.max_iter, options.initial_step
        )
    if np.any(np.diff(trace) > 1e-12 * (1.0 + np.abs(trace[:-1]))):
        raise AssertionError("criterion trace is not non-increasing")

    theta_hat = model.from_opt(z_best)
    grad_norm = float(np.linalg.norm(_fd_gradient(objective, theta_hat)))
    covariance = None
    se = None
    if options.covariance:
        try:
            covariance = sandwich_cov(problem, theta_hat)
            se = dict(
                zip(model.param_names, np.sqrt(np.diag(covariance)).tolist())
            )
        except SingularHessian as err:
            warnings.warn(
                "covariance omitted: %s" % err, stacklevel=2
            )
    return FitResult(
        psi_hat=model.describe(theta_hat),
        params=model.realize(theta_hat),
        criterion_value=f_best,
        converged=converged,
        iterations=iterations,
        grad_norm=grad_norm,
        trace=trace,
        covariance=covariance,
        se=se,
    )


def sandwich_cov(problem, psi_hat):
    """Sandwich covariance of the free-parameter estimates.

    Hessian H of the pooled criterion by central finite differences
    (relative step 1e-5) and score variance V from the empirical covariance
    of per-frequency criterion contributions (independent across distinct
    Fourier frequencies, jointly over pairs within a frequency):

        Cov(psi_hat) = H^{-1} V H^{-1}.

    Parameters
    ----------
    problem : WhittleProblem
    psi_hat : mapping, sequence, or SpectrumParams
        Interior parameter point, usually the fitted values.

    Returns
    -------
    ndarray, shape (p, p)
        Symmetric positive semidefinite (to rounding).

    Raises
    ------
    SingularHessian
        If H cannot be inverted reliably.
    """
    model = problem.model
    theta = model.initial_theta(psi_hat)
    model.validate(theta)
    objective = _objective_factory(problem)
    p = theta.shape[0]
    steps = _fd_steps(theta)

    hess = np.empty((p, p))
    f0 = objective(theta)
    for i in range(p):
        up, dn = theta.copy(), theta.copy()
        up[i] += steps[i]
        dn[i] -= steps[i]
        hess[i, i] = (objective(up) - 2.0 * f0 + objective(dn)) / steps[i] ** 2
    for i in range(p):
        for j in range(i + 1, p):
            pp, pm, mp, mm = (theta.copy() for _ in range(4))
            pp[i] += steps[i]
            pp[j] += steps[j]
            pm[i] += steps[i]
            pm[j] -= steps[j]
            mp[i] -= steps[i]
            mp[j] += steps[j]
            mm[i] -= steps[i]
            mm[j] -= steps[j]
            hess[i, j] = hess[j, i] = (
                objective(pp) - objective(pm) - objective(mp) + objective(mm)
            ) / (4.0 * steps[i] * steps[j])

    scores = np.empty((problem.k_subset.shape[0], p))
    for j in range(p):
        up, dn = theta.copy(), theta.copy()
        up[j] += steps[j]
        dn[j] -= steps[j]
        scores[:, j] = (
            _per_freq_contributions(problem, up)
            - _per_freq_contributions(problem, dn)
        ) / (2.0 * steps[j])
    centered = scores - scores.mean(axis=0)
    v = centered.T @ centered

    if not np.all(np.isfinite(hess)):
        raise SingularHessian("Hessian contains non-finite entries")
    try:
        hinv = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        raise SingularHessian("criterion Hessian is singular") from None
    if np.linalg.cond(hess) > 1e12:
        raise SingularHessian(
            "criterion Hessian is numerically singular (cond > 1e12)"
        )
    cov = hinv @ v @ hinv.T
    return 0.5 * (cov + cov.T)
