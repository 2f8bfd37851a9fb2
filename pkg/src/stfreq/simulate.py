"""Reference simulators used as test oracles and demo-data generators.

Reproducibility contract: a counter-based 64-bit generator (Philox) is
keyed per (seed, station) for field simulators and per (seed, lag, pair)
for periodogram draws, so the same seed always yields bit-identical output
no matter how the work is scheduled or how many workers run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSigma, NotPositiveDefinite
from .panel import Panel, StationSet
from .specmodel import SpectrumParams, bessel_k, temporal_spectrum
from .whittle import LagData

__all__ = [
    "SpatialCovariance",
    "SimSpec",
    "ar1_spectrum",
    "separable_fv_theory",
    "simulate_white",
    "simulate_separable",
    "simulate_whittle_periodograms",
    "simulate_from_spec",
]

_FAMILIES = ("exponential", "gaussian", "matern")


@dataclass(frozen=True)
class SpatialCovariance:
    """Isotropic unit-sill spatial covariance C_S(h) = C(||h||)."""

    family: str = "exponential"
    length_scale: float = 1.0
    nu: float = 1.5  # matern only

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(
                "unknown family %r; expected one of %s"
                % (self.family, ", ".join(_FAMILIES))
            )
        if self.length_scale <= 0:
            raise ValueError("length_scale must be > 0")
        if self.family == "matern" and self.nu <= 0:
            raise ValueError("matern smoothness nu must be > 0")

    def __call__(self, dist):
        dist = np.asarray(dist, dtype=float)
        r = dist / self.length_scale
        if self.family == "exponential":
            return np.exp(-r)
        if self.family == "gaussian":
            return np.exp(-(r ** 2))
        scaled = math.sqrt(2.0 * self.nu) * r
        out = np.ones_like(scaled)
        pos = scaled > 0
        s = scaled[pos]
        out[pos] = (
            2.0 ** (1.0 - self.nu)
            / math.gamma(self.nu)
            * s ** self.nu
            * bessel_k(self.nu, s)
        )
        return out


def _station_rng(seed, *key):
    """Philox stream for one logical unit of work."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def ar1_spectrum(omega, rho):
    """Spectral density of a unit-marginal-variance AR(1) process.

    f(omega) = (1 - rho^2) / (2 pi |1 - rho e^{-i omega}|^2); integrates to
    one over (-pi, pi].
    """
    omega = np.asarray(omega, dtype=float)
    denom = 1.0 - 2.0 * rho * np.cos(omega) + rho * rho
    out = (1.0 - rho * rho) / (2.0 * np.pi * denom)
    return float(out) if out.ndim == 0 else out


def separable_fv_theory(spatial, h, rho, omega):
    """Frequency variogram of the separable field at lag h.

    The increment series has variance 2 (1 - C_S(h)) and the AR(1) temporal
    correlation, hence spectrum 2 (1 - C_S(h)) f_AR(omega).
    """
    h_norm = float(np.linalg.norm(np.asarray(h, dtype=float)))
    return 2.0 * (1.0 - float(spatial(h_norm))) * ar1_spectrum(omega, rho)


def simulate_white(stations, n, sigmas, seed):
    """Independent Gaussian white noise per station.

    Parameters
    ----------
    stations : StationSet
    n : int
        Series length, >= 2.
    sigmas : float or array_like
        Standard deviation per station (scalar broadcasts), > 0.
    seed : int

    Returns
    -------
    Panel
    """
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2, got %d" % n)
    try:
        sig = np.broadcast_to(np.asarray(sigmas, dtype=float), (stations.m,))
    except ValueError as err:
        raise InvalidSigma(
            "sigmas must be scalar or one value per station"
        ) from err
    if np.any(sig <= 0) or not np.all(np.isfinite(sig)):
        raise InvalidSigma("station sigmas must be finite and > 0")
    values = np.empty((stations.m, n))
    for i in range(stations.m):
        values[i] = sig[i] * _station_rng(seed, i).standard_normal(n)
    return Panel(stations=stations, values=values)


def simulate_separable(stations, n, spatial, rho, seed):
    """Gaussian field with covariance C_S(h) * rho^|u| and unit variance.

    Built as Y_t = A e_t where A A' = C_S and the e_t(s_i) are independent
    unit-variance AR(1) series, one Philox stream per station.

    Raises
    ------
    NotPositiveDefinite
        If the spatial covariance matrix has no Cholesky factorization.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2, got %d" % n)
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise ValueError("AR(1) coefficient must satisfy |rho| < 1")
    coords = stations.coords
    dist = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)
    cov = spatial(dist)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            "spatial covariance matrix is not positive definite"
        ) from None
    innov_scale = math.sqrt(1.0 - rho * rho)
    drivers = np.empty((stations.m, n))
    for i in range(stations.m):
        z = _station_rng(seed, i).standard_normal(n)
        e = np.empty(n)
        e[0] = z[0]  # stationary start: unit marginal variance
        for t in range(1, n):
            e[t] = rho * e[t - 1] + innov_scale * z[t]
        drivers[i] = e
    return Panel(stations=stations, values=chol @ drivers)


def simulate_whittle_periodograms(params, h_list, pairs_per_lag, n, seed):
    """Draw synthetic increment periodograms straight from a model spectrum.

    For every lag, pair, and frequency the ordinate is an independent
    exponential with mean g0(omega_k); the conjugate symmetry
    I(omega_{n-k}) = I(omega_k) of real-data periodograms is imposed.

    Returns
    -------
    list of LagData
        Ready to assemble into a WhittleProblem.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2, got %d" % n)
    pairs_per_lag = int(pairs_per_lag)
    if pairs_per_lag < 1:
        raise ValueError("pairs_per_lag must be >= 1")
    freqs = 2.0 * np.pi * np.arange(n) / n
    half = n // 2
    out = []
    for li, h in enumerate(h_list):
        h = np.asarray(h, dtype=float)
        g0 = temporal_spectrum(freqs, params, h)
        periodograms = np.empty((pairs_per_lag, n))
        for p in range(pairs_per_lag):
            rng = _station_rng(seed, li, p)
            draws = rng.standard_exponential(half + 1)
            I = np.empty(n)
            I[: half + 1] = g0[: half + 1] * draws
            for k in range(half + 1, n):
                I[k] = I[n - k]
            periodograms[p] = I
        out.append(LagData(h=h, periodograms=periodograms))
    return out


# ---------------------------------------------------------------------------
# declarative interface (JSON-friendly)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimSpec:
    """Declarative simulation request; see :func:`simulate_from_spec`.

    ``kind`` selects the generator: ``white`` (needs ``sigmas``),
    ``separable`` (needs ``spatial`` and ``rho``), or
    ``whittle-periodogram`` (needs ``params``, ``h_list``,
    ``pairs_per_lag``).
    """

    kind: str
    stations: StationSet
    n: int
    seed: int
    sigmas: tuple | float | None = None
    spatial: SpatialCovariance | None = None
    rho: float | None = None
    params: SpectrumParams | None = None
    h_list: tuple | None = None
    pairs_per_lag: int | None = None

    def __post_init__(self):
        if self.kind not in ("white", "separable", "whittle-periodogram"):
            raise ValueError("unknown simulation kind %r" % self.kind)

    @classmethod
    def from_dict(cls, data):
        stations = StationSet(
            ids=tuple(s["id"] for s in data["stations"]),
            coords=np.asarray([s["coords"] for s in data["stations"]], float),
        )
        spatial = None
        if "spatial" in data:
            spatial = SpatialCovariance(**data["spatial"])
        params = None
        if "params" in data:
            params = SpectrumParams.from_dict(data["params"])
        return cls(
            kind=data["kind"],
            stations=stations,
            n=int(data["n"]),
            seed=int(data.get("seed", 0)),
            sigmas=data.get("sigmas"),
            spatial=spatial,
            rho=data.get("rho"),
            params=params,
            h_list=tuple(tuple(h) for h in data.get("h_list", ())) or None,
            pairs_per_lag=data.get("pairs_per_lag"),
        )


def simulate_from_spec(spec):
    """Run the generator described by a :class:`SimSpec`.

    Returns a :class:`Panel` for the field kinds and a list of
    :class:`LagData` for ``whittle-periodogram``.
    """
    if spec.kind == "white":
        if spec.sigmas is None:
            raise InvalidSigma("white simulation needs 'sigmas'")
        return simulate_white(spec.stations, spec.n, spec.sigmas, spec.seed)
    if spec.kind == "separable":
        if spec.spatial is None or spec.rho is None:
            raise ValueError("separable simulation needs 'spatial' and 'rho'")
        return simulate_separable(
            spec.stations, spec.n, spec.spatial, spec.rho, spec.seed
        )
    if spec.params is None or spec.h_list is None or spec.pairs_per_lag is None:
        raise ValueError(
            "whittle-periodogram simulation needs 'params', 'h_list', "
            "'pairs_per_lag'"
        )
    return simulate_whittle_periodograms(
        spec.params, spec.h_list, spec.pairs_per_lag, spec.n, spec.seed
    )
