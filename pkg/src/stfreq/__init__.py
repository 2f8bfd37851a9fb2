"""Frequency-domain analysis of space-time station panels.

The package estimates variograms of stationary space-time processes in
the spectral domain: per-station discrete Fourier transforms, increment
periodograms across station pairs, kernel-smoothed frequency variograms
with pointwise variance tracks, a pooled Whittle-type fit of a parametric
spectrum, a frequency-block independence test, measurement-noise
extrapolation, and simulators for all of it.  The ``stfreq`` console
script exposes the batch workflows.
"""

from .dft import SpectralPanel, cross_periodogram, dft_all, increment_dft, periodogram
from .errors import StfreqError
from .fv import (
    FrequencyVariogram,
    Kernel,
    NuggetScanResult,
    default_kernel,
    estimate_fv,
    fv_variance,
    nugget_scan,
    raw_fv,
    smooth_fv,
)
from .indeptest import (
    IndependenceReport,
    independence_test,
    lambda_moments,
    smoothed_spectral_matrices,
)
from .moments import SpaceTimeLag, matheron_variogram, sample_covariance
from .panel import (
    LagPairSet,
    Panel,
    StationSet,
    build_lag_pairs,
    load_panel,
    load_stations,
    write_panel,
)
from .simulate import (
    SimSpec,
    SpatialCovariance,
    separable_fv_theory,
    simulate_from_spec,
    simulate_separable,
    simulate_white,
    simulate_whittle_periodograms,
)
from .specmodel import (
    CrossSpectrumQuery,
    QuadratureGrid,
    SpectrumParams,
    bessel_k,
    cross_spectrum,
    marginalize_oracle,
    spectrum_st,
    temporal_spectrum,
)
from .whittle import (
    ConstantSpectrumModel,
    FitOptions,
    FitResult,
    LagData,
    PolySpectrumModel,
    WhittleProblem,
    fit,
    problem_from_panel,
    sandwich_cov,
    whittle_pooled,
    whittle_single,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "StfreqError",
    "StationSet",
    "Panel",
    "LagPairSet",
    "build_lag_pairs",
    "load_stations",
    "load_panel",
    "write_panel",
    "SpectralPanel",
    "dft_all",
    "periodogram",
    "cross_periodogram",
    "increment_dft",
    "SpaceTimeLag",
    "matheron_variogram",
    "sample_covariance",
    "Kernel",
    "default_kernel",
    "FrequencyVariogram",
    "raw_fv",
    "smooth_fv",
    "fv_variance",
    "estimate_fv",
    "nugget_scan",
    "NuggetScanResult",
    "SpectrumParams",
    "CrossSpectrumQuery",
    "QuadratureGrid",
    "bessel_k",
    "spectrum_st",
    "cross_spectrum",
    "temporal_spectrum",
    "marginalize_oracle",
    "LagData",
    "WhittleProblem",
    "PolySpectrumModel",
    "ConstantSpectrumModel",
    "FitOptions",
    "FitResult",
    "fit",
    "whittle_single",
    "whittle_pooled",
    "problem_from_panel",
    "sandwich_cov",
    "IndependenceReport",
    "independence_test",
    "lambda_moments",
    "smoothed_spectral_matrices",
    "SimSpec",
    "SpatialCovariance",
    "simulate_white",
    "simulate_separable",
    "simulate_whittle_periodograms",
    "simulate_from_spec",
    "separable_fv_theory",
]
