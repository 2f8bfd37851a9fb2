"""Per-station discrete Fourier transforms and periodograms.

Conventions
-----------
For a station series Y_1, ..., Y_n the transform at Fourier frequency
``omega_k = 2 pi k / n`` is

    J(omega_k) = (2 pi n)^(-1/2) * sum_{t=1..n} Y_t exp(-i t omega_k),

evaluated on the full grid k = 0, ..., n-1.  The negative sign in the
exponent is used everywhere in this package; periodogram-based quantities
do not depend on that choice.  With this normalization

    sum_k |J(omega_k)|^2 = (1 / 2 pi) * sum_t Y_t^2,

so for white noise with variance sigma^2 the periodogram ordinates away
from k = 0 have mean sigma^2 / (2 pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange

__all__ = [
    "SpectralPanel",
    "dft_all",
    "periodogram",
    "cross_periodogram",
    "increment_dft",
]


@dataclass(frozen=True)
class SpectralPanel:
    """DFT coefficients of every station on the full frequency grid.

    ``coeffs[i, k]`` is J_i(omega_k) for k = 0..n-1.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim != 2:
            raise ValueError("coeffs must be 2-d (stations x frequencies)")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def m(self):
        return self.coeffs.shape[0]

    @property
    def n(self):
        return self.coeffs.shape[1]

    @property
    def freqs(self):
        """Fourier frequencies omega_k = 2 pi k / n, k = 0..n-1."""
        return 2.0 * np.pi * np.arange(self.n) / self.n

    def _check_index(self, i):
        if not 0 <= i < self.m:
            raise IndexOutOfRange(
                "station index %d out of range [0, %d)" % (i, self.m)
            )


def dft_all(panel):
    """Transform every station series of a panel.

    Uses the FFT; equals the direct O(n^2) sum to rounding for any n,
    composite or prime.

    Parameters
    ----------
    panel : Panel

    Returns
    -------
    SpectralPanel
    """
    n = panel.n
    if n < 2:
        raise ValueError("need at least 2 time points, got %d" % n)
    # Series are indexed t = 1..n, numpy's FFT assumes 0..n-1; the shift
    # contributes a per-frequency phase exp(-i omega_k).
    phase = np.exp(-2j * np.pi * np.arange(n) / n)
    coeffs = np.fft.fft(panel.values, axis=1) * phase / np.sqrt(2.0 * np.pi * n)
    return SpectralPanel(coeffs=coeffs)


def periodogram(spec, i):
    """Periodogram |J_i(omega_k)|^2 of one station on the full grid."""
    spec._check_index(i)
    return np.abs(spec.coeffs[i]) ** 2


def cross_periodogram(spec, i, j):
    """Cross-periodogram J_i(omega_k) * conj(J_j(omega_k)).

    Hermitian in (i, j): swapping the stations conjugates the result.
    """
    spec._check_index(i)
    spec._check_index(j)
    return spec.coeffs[i] * np.conj(spec.coeffs[j])


def increment_dft(spec, i, j):
    """DFT of the increment series Y_t(s_i) - Y_t(s_j).

    Linearity of the transform makes this the coefficient difference; no
    second FFT pass is needed.
    """
    spec._check_index(i)
    spec._check_index(j)
    return spec.coeffs[i] - spec.coeffs[j]
