"""Design matrices in the unit hypercube and the criteria used to score them.

A design is an ordered set of ``n`` points in ``[0, 1]^d``.  The quality
criteria implemented here are

* the intersite (maxmin) distance, the smallest pairwise Euclidean gap;
* the projected distance, the smallest per-coordinate gap over all pairs;
* the phi_p criterion, a smooth aggregate of inverse squared distances;
* the crowding distance of a candidate, the sum of its squared distances
  to every design point;
* the LHS fraction, the share of the ``n * d`` axis intervals that hold at
  least one coordinate (1 exactly for a Latin hypercube).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .exceptions import (
    DesignParseError,
    OutOfBoundsError,
    PhiPOverflowError,
    UndefinedMetricError,
)

__all__ = [
    "Bounds",
    "DesignMatrix",
    "MetricReport",
    "crowding_distance",
    "format_coordinate",
    "interval_index",
    "intersite_distance",
    "lhs_fraction",
    "metric_report",
    "phi_p",
    "projected_distance",
    "read_design",
    "scale_from_unit",
    "scale_to_unit",
    "voronoi_cell_areas",
    "write_design",
]


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An ordered, immutable set of points in the unit hypercube.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Point coordinates, each in ``[0, 1]``.  Row order is preserved.
    dim : int, optional
        Required when ``points`` is empty.
    """

    points: np.ndarray
    dim: int = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            if self.dim is None:
                if pts.ndim == 2 and pts.shape[1] > 0:
                    dim = pts.shape[1]
                else:
                    raise ValueError("an empty design needs an explicit dim")
            else:
                dim = int(self.dim)
            pts = pts.reshape(0, dim)
        else:
            if pts.ndim == 1:
                pts = pts.reshape(1, -1)
            if pts.ndim != 2:
                raise ValueError(f"points must be 2-D, got shape {pts.shape}")
            dim = pts.shape[1]
            if self.dim is not None and int(self.dim) != dim:
                raise ValueError(f"points have {dim} columns but dim={self.dim}")
        if dim < 1:
            raise ValueError("dim must be positive")
        if not np.all(np.isfinite(pts)):
            raise OutOfBoundsError("design coordinates must be finite")
        bad = np.argwhere((pts < 0.0) | (pts > 1.0))
        if bad.size:
            i, k = bad[0]
            raise OutOfBoundsError(
                f"coordinate {k} of point {i} is {pts[i, k]!r}, outside [0, 1]"
            )
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "dim", dim)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, DesignMatrix):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.dim, self.points.tobytes()))

    @classmethod
    def empty(cls, dim: int) -> "DesignMatrix":
        return cls(np.empty((0, dim)), dim=dim)

    def append(self, point) -> "DesignMatrix":
        """Return a new design with ``point`` (or a block of points) added last."""
        extra = np.asarray(point, dtype=float).reshape(-1, self.dim)
        return DesignMatrix(np.vstack([self.points, extra]), dim=self.dim)


@dataclass(frozen=True)
class Bounds:
    """Box constraints ``lower[k] < upper[k]`` in problem units."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not np.all(lo < hi):
            k = int(np.argmin(lo < hi))
            raise ValueError(f"lower[{k}]={lo[k]} is not below upper[{k}]={hi[k]}")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @classmethod
    def uniform(cls, lower: float, upper: float, dim: int) -> "Bounds":
        return cls(np.full(dim, lower, dtype=float), np.full(dim, upper, dtype=float))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Bounds):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )


@dataclass(frozen=True)
class MetricReport:
    intersite: float
    projected: float
    phi_p: float
    lhs_fraction: float


def _as_array(design) -> np.ndarray:
    if isinstance(design, DesignMatrix):
        return design.points
    return np.atleast_2d(np.asarray(design, dtype=float))


def _require_pairs(x, name):
    if x.shape[0] < 2:
        raise UndefinedMetricError(
            f"{name} needs at least 2 points, design has {x.shape[0]}"
        )


def intersite_distance(design) -> float:
    """Smallest Euclidean distance between any two points of the design."""
    x = _as_array(design)
    _require_pairs(x, "intersite distance")
    return float(pdist(x).min())


def projected_distance(design) -> float:
    """Smallest coordinate-wise gap ``|p_i^k - p_j^k|`` over all pairs and axes."""
    x = _as_array(design)
    _require_pairs(x, "projected distance")
    return float(min(pdist(x[:, [k]], "cityblock").min() for k in range(x.shape[1])))


def phi_p(design, p: int = 50) -> float:
    """Morris-Mitchell phi_p criterion on squared pairwise distances.

    Evaluates ``(sum_{i<j} s_ij^-p)^(1/p)`` with ``s_ij`` the squared
    Euclidean distance.  The sum is rescaled by the smallest ``s_ij`` so that
    large ``p`` does not overflow.

    Raises
    ------
    PhiPOverflowError
        If two points coincide.
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    x = _as_array(design)
    _require_pairs(x, "phi_p")
    s = pdist(x, "sqeuclidean")
    s_min = s.min()
    if s_min == 0.0:
        raise PhiPOverflowError("phi_p diverges: the design has coincident points")
    total = np.sum((s_min / s) ** p)
    return float(total ** (1.0 / p) / s_min)


def crowding_distance(design, candidate) -> float:
    """Sum of squared Euclidean distances from ``candidate`` to every design point."""
    x = _as_array(design)
    c = np.asarray(candidate, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    return float(np.sum((x - c) ** 2))


def interval_index(x, m: int) -> np.ndarray:
    """Index of the interval ``[q/m, (q+1)/m)`` holding each coordinate.

    The last interval is closed, so a coordinate of exactly 1 maps to ``m - 1``.
    Interval edges are the floating-point values ``q / m``.
    """
    x = np.asarray(x, dtype=float)
    q = np.clip(np.floor(x * m).astype(np.int64), 0, m - 1)
    # x * m can round across an edge; settle against the edges themselves
    q -= (q > 0) & (x < q / m)
    q += (q < m - 1) & (x >= (q + 1) / m)
    return q


def lhs_fraction(design, intervals: int | None = None) -> float:
    """Share of occupied axis intervals, ``sum(y_qj) / (n * d)``.

    Each axis is cut into ``intervals`` (default: the design size) equal
    intervals.  The result is 1 exactly when every interval of every axis
    holds one coordinate, i.e. the design is a Latin hypercube.
    """
    x = _as_array(design)
    n, d = x.shape
    if n < 1:
        raise UndefinedMetricError("lhs_fraction needs at least one point")
    m = n if intervals is None else int(intervals)
    idx = interval_index(x, m)
    occupied = sum(np.unique(idx[:, k]).size for k in range(d))
    return occupied / (m * d)


def metric_report(design, p: int = 50) -> MetricReport:
    """All design metrics at once; pairwise metrics need two or more points."""
    x = _as_array(design)
    return MetricReport(
        intersite=intersite_distance(x),
        projected=projected_distance(x),
        phi_p=phi_p(x, p),
        lhs_fraction=lhs_fraction(x),
    )


def _nearest_generator(points, probes, chunk=65536):
    out = np.empty(probes.shape[0], dtype=np.int64)
    # np.argmin returns the first minimum, so ties go to the lowest index
    for start in range(0, probes.shape[0], chunk):
        block = probes[start:start + chunk]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        out[start:start + chunk] = np.argmin(d2, axis=1)
    return out


def voronoi_cell_areas(design, probes: int = 100_000, seed=0) -> np.ndarray:
    """Monte Carlo estimate of each point's Voronoi cell volume in ``[0, 1]^d``.

    ``probes`` uniform points are assigned to their nearest design point
    (ties to the lowest index); the returned fractions sum to one.
    """
    x = _as_array(design)
    n, d = x.shape
    if n < 1:
        raise UndefinedMetricError("voronoi cells need at least one point")
    if probes < 1:
        raise ValueError("probes must be positive")
    rng = np.random.default_rng(seed)
    counts = np.zeros(n, dtype=np.int64)
    chunk = max(1, min(probes, 2_000_000 // max(n, 1)))
    remaining = probes
    while remaining:
        m = min(chunk, remaining)
        owner = _nearest_generator(x, rng.random((m, d)))
        counts += np.bincount(owner, minlength=n)
        remaining -= m
    return counts / probes


def scale_to_unit(points, bounds: Bounds) -> DesignMatrix:
    """Map points in problem units onto the unit hypercube."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] != bounds.dim:
        raise ValueError(f"points have {x.shape[1]} coordinates, bounds have {bounds.dim}")
    bad = np.argwhere((x < bounds.lower) | (x > bounds.upper))
    if bad.size:
        i, k = bad[0]
        raise OutOfBoundsError(
            f"coordinate {k} of point {i} is {x[i, k]!r}, outside "
            f"[{bounds.lower[k]}, {bounds.upper[k]}]"
        )
    u = (x - bounds.lower) / (bounds.upper - bounds.lower)
    return DesignMatrix(np.clip(u, 0.0, 1.0))


def scale_from_unit(design, bounds: Bounds) -> np.ndarray:
    """Map unit-cube points back to problem units."""
    u = _as_array(design)
    if u.shape[1] != bounds.dim:
        raise ValueError(f"points have {u.shape[1]} coordinates, bounds have {bounds.dim}")
    return bounds.lower + u * (bounds.upper - bounds.lower)


# -- CSV design files -------------------------------------------------------

def format_coordinate(value: float) -> str:
    """Shortest round-trip decimal string, never in exponent notation."""
    return np.format_float_positional(float(value), unique=True, trim="-")


def write_design(design, path) -> None:
    """Write one point per line, comma separated, no header, LF endings."""
    x = _as_array(design)
    lines = [",".join(format_coordinate(v) for v in row) for row in x]
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("".join(line + "\n" for line in lines))


def read_design(path) -> DesignMatrix:
    """Parse a design CSV file.

    Raises
    ------
    DesignParseError
        On empty files, malformed numbers, ragged rows, or coordinates
        outside ``[0, 1]``; the message names the offending line.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DesignParseError(str(exc), path=path) from exc
    rows = []
    width = None
    lines = text.split("\n")
    # a single trailing newline leaves one empty element
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            raise DesignParseError("blank line", line=lineno, path=path)
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DesignParseError(
                f"row {lineno} has {len(fields)} columns, expected {width}",
                line=lineno,
                path=path,
            )
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise DesignParseError(f"malformed number in row {lineno}", line=lineno, path=path)
        for k, v in enumerate(vals):
            if not math.isfinite(v) or v < 0.0 or v > 1.0:
                raise DesignParseError(
                    f"coordinate {k} of row {lineno} is {fields[k].strip()!r}, outside [0, 1]",
                    line=lineno,
                    path=path,
                )
        rows.append(vals)
    if not rows:
        raise DesignParseError("design file is empty", path=path)
    return DesignMatrix(np.array(rows, dtype=float))
