"""Station tables, space-time panels, and spatial lag-pair geometry.

A panel is an (m, n) matrix of observations: m stations observed at n
equally spaced time points.  Stations live at fixed coordinates in R^d.
The CSV formats are deliberately plain:

* station file: header ``station_id,x1,...,xd``, one row per station;
* panel file: header ``t,<id_1>,...,<id_m>``, one row per time point.

Lines starting with ``#`` are ignored in both files.  Values use ``.`` as
the decimal separator.  The time column is a label only; row order defines
the time index 1..n.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    MissingHeader,
    NonNumericValue,
    RaggedRows,
    UnknownStationColumn,
)

__all__ = [
    "StationSet",
    "Panel",
    "LagPairSet",
    "build_lag_pairs",
    "load_panel",
    "write_panel",
]


@dataclass(frozen=True)
class StationSet:
    """An ordered collection of station ids with coordinates in R^d.

    Parameters
    ----------
    ids : tuple of str
        Unique station identifiers; order is the canonical station order.
    coords : ndarray, shape (m, d)
        Station coordinates, one row per id.
    """

    ids: tuple
    coords: np.ndarray

    def __post_init__(self):
        ids = tuple(str(s) for s in self.ids)
        object.__setattr__(self, "ids", ids)
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2:
            raise DimensionMismatch(
                "station coordinates must be a 2-d array, got shape %s"
                % (coords.shape,)
            )
        if coords.shape[0] != len(ids):
            raise DimensionMismatch(
                "%d ids but %d coordinate rows" % (len(ids), coords.shape[0])
            )
        if coords.shape[1] < 1:
            raise DimensionMismatch("coordinate dimension must be >= 1")
        if not np.all(np.isfinite(coords)):
            raise ValueError("station coordinates must be finite")
        if len(set(ids)) != len(ids):
            dupes = sorted({s for s in ids if ids.count(s) > 1})
            raise ValueError("duplicate station ids: %s" % ", ".join(dupes))
        coords = coords.copy()
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)
        # Co-located stations are legal (collocated sensors) but usually
        # surprising, so flag them once at construction.
        _, counts = np.unique(coords, axis=0, return_counts=True)
        if np.any(counts > 1):
            warnings.warn(
                "station set contains duplicate coordinates", stacklevel=2
            )

    @property
    def m(self):
        return len(self.ids)

    @property
    def d(self):
        return self.coords.shape[1]

    def index_of(self, station_id):
        try:
            return self.ids.index(str(station_id))
        except ValueError:
            raise UnknownStationColumn(
                "unknown station id %r" % (station_id,)
            ) from None


@dataclass(frozen=True)
class Panel:
    """Observations of m stations over n equally spaced time points.

    ``values[i, t]`` is the observation of station ``stations.ids[i]`` at
    time index t (0-based internally; file formats count from 1).
    """

    stations: StationSet
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch(
                "panel values must be 2-d (stations x time), got shape %s"
                % (values.shape,)
            )
        if values.shape[0] != self.stations.m:
            raise DimensionMismatch(
                "panel has %d rows but station set has %d stations"
                % (values.shape[0], self.stations.m)
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("panel values must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def d(self):
        return self.stations.d


@dataclass(frozen=True)
class LagPairSet:
    """Ordered station pairs realizing a spatial lag.

    A pair (i, j) means ``coords[i] - coords[j]`` lies within Euclidean
    distance ``delta`` of ``h``.  Pairs are directed: the sets for h and -h
    contain each other's reversals.  For h = 0 every station pairs with
    itself (and, within tolerance, with co-located neighbours).
    """

    h: np.ndarray
    delta: float
    pairs: tuple = field(default=())

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1)
        h = h.copy()
        h.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(
            self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs)
        )
        if self.delta < 0:
            raise ValueError("tolerance delta must be >= 0")

    def __len__(self):
        return len(self.pairs)

    @property
    def h_norm(self):
        return float(np.linalg.norm(self.h))


def build_lag_pairs(stations, h, delta=0.0):
    """Collect all ordered station pairs whose separation matches a lag.

    Parameters
    ----------
    stations : StationSet
    h : array_like, shape (d,)
        Target spatial lag.
    delta : float, optional
        Tolerance: a pair (i, j) qualifies when
        ``||(coords[i] - coords[j]) - h|| <= delta``.

    Returns
    -------
    LagPairSet
        Pairs sorted lexicographically by (i, j); may be empty.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.shape[0] != stations.d:
        raise DimensionMismatch(
            "lag has dimension %d but stations have d=%d"
            % (h.shape[0], stations.d)
        )
    delta = float(delta)
    if delta < 0:
        raise ValueError("tolerance delta must be >= 0")
    coords = stations.coords
    # diff[i, j] = coords[i] - coords[j]
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.linalg.norm(diff - h[None, None, :], axis=-1)
    ii, jj = np.nonzero(dist <= delta + 1e-12)
    order = np.lexsort((jj, ii))
    pairs = tuple(zip(ii[order].tolist(), jj[order].tolist()))
    return LagPairSet(h=h, delta=delta, pairs=pairs)


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------


def _read_rows(path):
    """Read CSV rows, skipping comment lines; returns (header, rows)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        raw = [
            (lineno, row)
            for lineno, row in enumerate(csv.reader(fh), start=1)
            if row and not row[0].lstrip().startswith("#")
        ]
    if not raw:
        raise MissingHeader("%s: file is empty or has no header row" % path)
    (header_line, header), rows = raw[0], raw[1:]
    header = [c.strip() for c in header]
    if header_line and not header:
        raise MissingHeader("%s: header row is empty" % path)
    return header, rows


def _parse_float(cell, path, lineno, what):
    try:
        return float(cell)
    except ValueError:
        raise NonNumericValue(
            "%s:%d: non-numeric %s value %r" % (path, lineno, what, cell)
        ) from None


def load_stations(path):
    """Parse a ``station_id,x1,...,xd`` CSV into a :class:`StationSet`."""
    header, rows = _read_rows(path)
    if len(header) < 2 or header[0] != "station_id":
        raise MissingHeader(
            "%s: expected header 'station_id,x1,...,xd', got %r"
            % (path, ",".join(header))
        )
    d = len(header) - 1
    ids, coords = [], []
    for lineno, row in rows:
        if len(row) != d + 1:
            raise RaggedRows(
                "%s:%d: expected %d fields, got %d"
                % (path, lineno, d + 1, len(row))
            )
        ids.append(row[0].strip())
        coords.append(
            [_parse_float(c, path, lineno, "coordinate") for c in row[1:]]
        )
    if not ids:
        raise MissingHeader("%s: no station rows" % path)
    return StationSet(ids=tuple(ids), coords=np.asarray(coords, dtype=float))


def load_panel(stations_file, panel_file):
    """Load a panel and its station table from two CSV files.

    The panel's columns may appear in any order; rows of the returned
    :class:`Panel` follow the station-file order.  Every panel column must
    name a station and every station must have a column.
    """
    stations = load_stations(stations_file)
    header, rows = _read_rows(panel_file)
    if not header or header[0] != "t":
        raise MissingHeader(
            "%s: expected header 't,<station ids...>', got %r"
            % (panel_file, ",".join(header))
        )
    col_ids = header[1:]
    known = set(stations.ids)
    for cid in col_ids:
        if cid not in known:
            raise UnknownStationColumn(
                "%s: column %r is not in the station table" % (panel_file, cid)
            )
    missing = [s for s in stations.ids if s not in col_ids]
    if missing:
        raise UnknownStationColumn(
            "%s: no column for station(s) %s" % (panel_file, ", ".join(missing))
        )
    if len(set(col_ids)) != len(col_ids):
        raise UnknownStationColumn(
            "%s: duplicated station column in header" % panel_file
        )
    width = len(col_ids) + 1
    data = []
    for lineno, row in rows:
        if len(row) != width:
            raise RaggedRows(
                "%s:%d: expected %d fields, got %d"
                % (panel_file, lineno, width, len(row))
            )
        _parse_float(row[0], panel_file, lineno, "time")
        data.append(
            [_parse_float(c, panel_file, lineno, "observation") for c in row[1:]]
        )
    if not data:
        raise MissingHeader("%s: no observation rows" % panel_file)
    by_col = np.asarray(data, dtype=float).T  # (m, n) in column order
    perm = [col_ids.index(s) for s in stations.ids]
    return Panel(stations=stations, values=by_col[perm])


def write_panel(panel, stations_file, panel_file):
    """Write a panel to the two-file CSV layout read by :func:`load_panel`.

    Floats are written with ``repr`` so a round trip reproduces the values
    exactly.
    """
    with open(stations_file, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["station_id"] + ["x%d" % (k + 1) for k in range(panel.d)]
        )
        for sid, xyz in zip(panel.stations.ids, panel.stations.coords):
            writer.writerow([sid] + [repr(float(v)) for v in xyz])
    with open(panel_file, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + list(panel.stations.ids))
        for t in range(panel.n):
            writer.writerow(
                [t + 1] + [repr(float(v)) for v in panel.values[:, t]]
            )
