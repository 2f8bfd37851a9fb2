"""Frequency-domain test of independence between station series.

The positive Fourier frequencies are split into disjoint blocks of
k' = 2k + 1 consecutive ordinates and the outer products J(:, j) J(:, j)^H
are averaged within each block, giving a smoothed spectral matrix F_l per
block.  The per-block statistic

    lambda_l = det(F_l) / prod(diag(F_l))

lies in (0, 1] and equals 1 exactly when the off-diagonal entries vanish.
Under independence across stations each F_l is approximately complex
Wishart with k' degrees of freedom, for which -ln lambda_l has exact
moments

    E  = sum_{j=1}^{m-1} (m - j) / (k' - j),
    V1 = sum_{j=1}^{m-1} (m - j) / (k' - j)^2,

independent across blocks.  The block average Lambda of -ln lambda_l is
standardized by (E, V1 / n_blocks) and referred to the upper normal tail:
dependence inflates Lambda, so the test is one-sided.

Blocks are separated by gaps of comparable length (center spacing 2k + 1
with n_blocks = (n - 1) // (4 (k + 1)) blocks), which keeps them inside
the positive-frequency half and approximately independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dft import dft_all
from .errors import (
    DegenerateTest,
    InvalidSmoother,
    RankDeficientSmoother,
    SingularMatrix,
    TooFewObservations,
)
from .panel import Panel

__all__ = [
    "SpectralMatrixSeries",
    "IndependenceReport",
    "block_layout",
    "smoothed_spectral_matrices",
    "lambda_stats",
    "lambda_moments",
    "independence_test",
]


def block_layout(n, k):
    """Block count and 1-based center indices for an odd series length."""
    n_blocks = (n - 1) // (4 * (k + 1))
    centers = np.arange(n_blocks) * (2 * k + 1) + k + 1
    return n_blocks, centers


@dataclass(frozen=True)
class SpectralMatrixSeries:
    """Block-averaged spectral matrices at the block-center frequencies."""

    freqs: np.ndarray
    matrices: np.ndarray
    half_width: int
    block_centers: np.ndarray

    @property
    def n_blocks(self):
        return self.matrices.shape[0]

    @property
    def m(self):
        return self.matrices.shape[1]


def smoothed_spectral_matrices(spec, k):
    """Average J J^H over disjoint frequency blocks of width 2k + 1.

    Parameters
    ----------
    spec : SpectralPanel
        Must have an odd number of time points.
    k : int
        Smoother half-width, >= 1.

    Returns
    -------
    SpectralMatrixSeries

    Raises
    ------
    InvalidSmoother, RankDeficientSmoother, TooFewObservations
    """
    m, n = spec.coeffs.shape
    if int(k) != k or k < 1:
        raise InvalidSmoother("half-width k must be an integer >= 1, got %r" % (k,))
    k = int(k)
    if n % 2 == 0:
        raise ValueError("series length must be odd; drop one observation first")
    if 2 * k + 1 < m:
        raise RankDeficientSmoother(
            "block width 2k+1 = %d is below the station count %d; "
            "the smoothed matrices cannot have full rank" % (2 * k + 1, m)
        )
    n_blocks, centers = block_layout(n, k)
    if n_blocks < 1:
        raise TooFewObservations(
            "series length %d admits no frequency blocks at k = %d" % (n, k)
        )
    mats = np.empty((n_blocks, m, m), dtype=complex)
    for l, c in enumerate(centers):
        block = spec.coeffs[:, c - k : c + k + 1]
        mats[l] = block @ block.conj().T / (2 * k + 1)
    return SpectralMatrixSeries(
        freqs=2.0 * np.pi * centers / n,
        matrices=mats,
        half_width=k,
        block_centers=centers,
    )


def lambda_stats(series):
    """Per-block det/prod-diag ratios, computed in log space via Cholesky.

    Raises SingularMatrix (carrying the 0-based block index) when a block
    matrix is not positive definite.
    """
    out = np.empty(series.n_blocks)
    for l in range(series.n_blocks):
        f = series.matrices[l]
        diag = np.real(np.diag(f))
        if not np.all(np.isfinite(f)) or np.any(diag <= 0):
            raise SingularMatrix(
                "spectral matrix of block %d is not positive definite" % l,
                block=l,
            )
        try:
            chol = np.linalg.cholesky(f)
        except np.linalg.LinAlgError:
            raise SingularMatrix(
                "spectral matrix of block %d is not positive definite" % l,
                block=l,
            ) from None
        logdet = 2.0 * np.sum(np.log(np.real(np.diag(chol))))
        out[l] = math.exp(logdet - np.sum(np.log(diag)))
    return out


def lambda_moments(m, k, n_blocks):
    """Null mean and variance of the block average of -ln lambda_l."""
    kp = 2 * k + 1
    if kp < m:
        raise RankDeficientSmoother(
            "moments undefined for block width %d below station count %d" % (kp, m)
        )
    j = np.arange(1, m)
    mean = float(np.sum((m - j) / (kp - j)))
    variance = float(np.sum((m - j) / (kp - j) ** 2)) / n_blocks
    return mean, variance


@dataclass(frozen=True)
class IndependenceReport:
    """Everything the test produced, plus the accept/reject call."""

    lambda_ls: np.ndarray
    lambda_bar: float
    mean: float
    variance: float
    statistic: float
    p_value: float
    alpha: float
    reject: bool
    n_used: int
    m: int
    k: int
    n_blocks: int


def independence_test(panel, k, alpha=0.05):
    """Test the null of independence across the panel's stations.

    An even series length is handled by dropping the final observation
    (with a warning).  One-sided: rejects for large standardized block
    averages, i.e. when the off-diagonal spectral mass is too high.

    Parameters
    ----------
    panel : Panel
    k : int
        Smoother half-width; the block width is 2k + 1.
    alpha : float
        Test level in (0, 1).

    Returns
    -------
    IndependenceReport
    """
    if int(k) != k or k < 1:
        raise InvalidSmoother("half-width k must be an integer >= 1, got %r" % (k,))
    k = int(k)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if panel.m < 2:
        raise DegenerateTest("independence needs at least two stations")
    if 2 * k + 1 < panel.m:
        raise RankDeficientSmoother(
            "block width 2k+1 = %d is below the station count %d"
            % (2 * k + 1, panel.m)
        )
    if panel.n % 2 == 0:
        warnings.warn(
            "even series length %d: dropping the last observation" % panel.n,
            stacklevel=2,
        )
        panel = Panel(stations=panel.stations, values=panel.values[:, :-1])
    n_blocks, _ = block_layout(panel.n, k)
    if n_blocks < 1:
        raise TooFewObservations(
            "series length %d admits no frequency blocks at k = %d" % (panel.n, k)
        )
    series = smoothed_spectral_matrices(dft_all(panel), k)
    lam = lambda_stats(series)
    lambda_bar = float(-np.mean(np.log(lam)))
    mean, variance = lambda_moments(panel.m, k, series.n_blocks)
    statistic = (lambda_bar - mean) / math.sqrt(variance)
    p_value = 0.5 * math.erfc(statistic / math.sqrt(2.0))
    return IndependenceReport(
        lambda_ls=lam,
        lambda_bar=lambda_bar,
        mean=mean,
        variance=variance,
        statistic=statistic,
        p_value=p_value,
        alpha=alpha,
        reject=bool(p_value < alpha),
        n_used=panel.n,
        m=panel.m,
        k=k,
        n_blocks=series.n_blocks,
    )
