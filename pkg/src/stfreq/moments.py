"""Method-of-moments space-time variogram and covariance estimators.

Both estimators average over the pair set

    N(h, u) = {(s_i, t_i), (s_j, t_j) : s_i - s_j = h (within delta),
                                        t_i - t_j = u},

built from all ordered station pairs matching the spatial lag crossed with
every admissible time pair.  Overlapping time windows are kept; nothing is
deduplicated.

The variogram estimator is

    gamma_hat(h, u) = (1 / |N|) * sum [Y_{t_i}(s_i) - Y_{t_j}(s_j)]^2,

and the covariance estimator centers each station at its own temporal mean
(1/n normalization):

    c_hat(h, u) = (1 / |N|) * sum [Y_{t_i}(s_i) - mean_i][Y_{t_j}(s_j) - mean_j].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyLagSet
from .panel import build_lag_pairs

__all__ = ["SpaceTimeLag", "matheron_variogram", "sample_covariance"]


@dataclass(frozen=True)
class SpaceTimeLag:
    """A spatial lag h with tolerance delta and an integer time lag u."""

    h: np.ndarray
    u: int
    delta: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1).copy()
        h.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "u", int(self.u))
        object.__setattr__(self, "delta", float(self.delta))
        if self.delta < 0:
            raise ValueError("tolerance delta must be >= 0")


def _time_slices(n, u):
    """Index slices (for t_i and t_j series) realizing t_i - t_j = u."""
    if u >= 0:
        return slice(u, n), slice(0, n - u)
    return slice(0, n + u), slice(-u, n)


def _resolve_pairs(panel, lag, pairs):
    if pairs is None:
        pairs = build_lag_pairs(panel.stations, lag.h, lag.delta)
    if len(pairs) == 0:
        raise EmptyLagSet(
            "no station pairs within %g of lag %s" % (lag.delta, lag.h)
        )
    if abs(lag.u) >= panel.n:
        raise EmptyLagSet(
            "time lag u=%d admits no pairs for n=%d" % (lag.u, panel.n)
        )
    return pairs


def matheron_variogram(panel, lag, pairs=None):
    """Average squared increment over the space-time pair set.

    Parameters
    ----------
    panel : Panel
    lag : SpaceTimeLag
    pairs : LagPairSet, optional
        Precomputed station pairs; built from ``lag`` when omitted.

    Returns
    -------
    value : float
    count : int
        |N(h, u)|, the number of contributing pairs.
    """
    pairs = _resolve_pairs(panel, lag, pairs)
    si, sj = _time_slices(panel.n, lag.u)
    total = 0.0
    for i, j in pairs.pairs:
        diff = panel.values[i, si] - panel.values[j, sj]
        total += float(np.dot(diff, diff))
    count = len(pairs) * (panel.n - abs(lag.u))
    return total / count, count


def sample_covariance(panel, lag, pairs=None):
    """Station-mean-centered covariance over the space-time pair set.

    Same pair set and return convention as :func:`matheron_variogram`.
    At (h, u) = (0, 0) this is the station average of the 1/n-normalized
    sample variance.
    """
    pairs = _resolve_pairs(panel, lag, pairs)
    means = panel.values.mean(axis=1)
    si, sj = _time_slices(panel.n, lag.u)
    total = 0.0
    for i, j in pairs.pairs:
        total += float(
            np.dot(
                panel.values[i, si] - means[i],
                panel.values[j, sj] - means[j],
            )
        )
    count = len(pairs) * (panel.n - abs(lag.u))
    return total / count, count
