"""Sequential exploration samplers adding one point per call.

Four methods are provided:

``mip``
    Monte Carlo intersite-projected: among ``100 n`` uniform candidates keep
    the one maximizing a weighted sum of its Euclidean and projected
    distances to the design.
``mipt``
    Threshold variant: discard candidates whose projected distance falls
    below ``2 alpha / n`` and keep the most isolated survivor.  ``alpha`` is
    tuned per call to half its largest feasible value unless fixed.
``fpplhs``
    Fluttering progressive LHS: doubles the axis grid, fills the free
    intervals with the best of ``10 n_j`` random slices and releases the
    slice one point at a time, most crowded-away first.
``mqplhs``
    Greedy Monte Carlo: keep the candidates that most increase the LHS
    fraction on an ``n + 1`` grid and break ties by intersite distance.

Selection helpers (``*_select``) take an explicit candidate array and return
an index so they can be checked against brute-force scorers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .design import DesignMatrix, interval_index, lhs_fraction
from .exceptions import InconsistentStateError

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "AdaptiveSampler",
    "AdaptiveSpec",
    "FpPlhsState",
    "MiptChoice",
    "auto_alpha",
    "candidate_distances",
    "fpplhs_next",
    "mip_next",
    "mip_scores",
    "mip_select",
    "mipt_next",
    "mipt_select",
    "mqplhs_next",
    "mqplhs_select",
]

METHODS = ("mip", "mipt", "fpplhs", "mqplhs")


def _points(design):
    if isinstance(design, DesignMatrix):
        return design.points
    return np.atleast_2d(np.asarray(design, dtype=float))


def _nearest_1d(sorted_vals, x):
    """Distance from each ``x`` to the nearest entry of an ascending array."""
    j = np.searchsorted(sorted_vals, x)
    left = sorted_vals[np.clip(j - 1, 0, sorted_vals.size - 1)]
    right = sorted_vals[np.clip(j, 0, sorted_vals.size - 1)]
    return np.minimum(np.abs(x - left), np.abs(right - x))


def candidate_distances(design, candidates, chunk_elems=4_000_000):
    """Minimum Euclidean and projected distance of each candidate to the design.

    Returns
    -------
    l2, proj : ndarray, shape (m,)
    """
    p = _points(design)
    c = np.atleast_2d(np.asarray(candidates, dtype=float))
    m, d = c.shape
    n = p.shape[0]
    l2 = np.empty(m)
    step = max(1, chunk_elems // max(1, n))
    for s in range(0, m, step):
        l2[s:s + step] = np.sqrt(cdist(c[s:s + step], p, "sqeuclidean").min(axis=1))
    # the projected distance separates by axis: a 1-D nearest neighbour per coordinate
    proj = np.full(m, np.inf)
    for k in range(d):
        proj = np.minimum(proj, _nearest_1d(np.sort(p[:, k]), c[:, k]))
    return l2, proj


def _draw(rng, count, d):
    return rng.random((count, d))


def _keep_distinct(l2):
    # exact duplicates of design points are never selected
    keep = np.flatnonzero(l2 > 0.0)
    if keep.size == 0:
        raise ValueError("every candidate coincides with an existing design point")
    return keep


# -- MIP ----------------------------------------------------------------------

def mip_scores(design, candidates):
    p = _points(design)
    n, d = p.shape
    l2, proj = candidate_distances(p, candidates)
    return ((n + 1) ** (1.0 / d) - 1.0) / 2.0 * l2 + (n + 1) / 2.0 * proj, l2


def mip_select(design, candidates) -> int:
    """Index of the candidate with the highest intersite-projected score."""
    score, l2 = mip_scores(design, candidates)
    keep = _keep_distinct(l2)
    return int(keep[np.argmax(score[keep])])


def mip_next(design: DesignMatrix, rng, candidates_factor: int = 100) -> np.ndarray:
    rng = np.random.default_rng(rng)
    cand = _draw(rng, candidates_factor * design.size, design.dim)
    return cand[mip_select(design, cand)]


# -- MIPT ---------------------------------------------------------------------

class MiptChoice(NamedTuple):
    index: int
    alpha: float
    d_min: float
    fallback: bool


def auto_alpha(design, candidates) -> float:
    """Half the largest tolerance that still admits one candidate, clamped to [0, 1].

    The largest admissible threshold is the best candidate projected
    distance ``pd_max``; inverting ``d_min = 2 alpha / n`` gives
    ``alpha_max = n pd_max / 2``.
    """
    p = _points(design)
    _, proj = candidate_distances(p, candidates)
    return _auto_alpha_from(p.shape[0], proj)


def _auto_alpha_from(n, proj):
    alpha_max = n * float(np.max(proj)) / 2.0
    return min(max(alpha_max / 2.0, 0.0), 1.0)


def mipt_select(design, candidates, alpha="auto") -> MiptChoice:
    """Threshold selection: filter on projected distance, then maxmin.

    If a fixed ``alpha`` rejects every candidate, the candidate with the
    largest projected distance is returned and ``fallback`` is set.
    """
    p = _points(design)
    n = p.shape[0]
    l2, proj = candidate_distances(p, candidates)
    keep = _keep_distinct(l2)
    if alpha == "auto":
        a = _auto_alpha_from(n, proj[keep])
    else:
        a = float(alpha)
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {a}")
    d_min = 2.0 * a / n
    survivors = keep[proj[keep] >= d_min]
    if survivors.size == 0:
        idx = int(keep[np.argmax(proj[keep])])
        log.warning("mipt: no candidate passed d_min=%.3g (alpha=%.3g); using max-projected fallback", d_min, a)
        return MiptChoice(idx, a, d_min, True)
    return MiptChoice(int(survivors[np.argmax(l2[survivors])]), a, d_min, False)


def mipt_next(design: DesignMatrix, rng, alpha="auto", candidates_factor: int = 100) -> np.ndarray:
    rng = np.random.default_rng(rng)
    cand = _draw(rng, candidates_factor * design.size, design.dim)
    return cand[mipt_select(design, cand, alpha).index]


# -- MqPLHS -------------------------------------------------------------------

def mqplhs_select(design, candidates) -> int:
    """Greedy LHS-fraction maximizer with intersite tie-breaking.

    Each candidate is scored by the LHS fraction of ``design + candidate`` on
    an ``n + 1`` interval grid; among all best-scoring candidates the one
    farthest (Euclidean) from the design wins.
    """
    p = _points(design)
    c = np.atleast_2d(np.asarray(candidates, dtype=float))
    n, d = p.shape
    m = n + 1
    occupied = np.zeros((d, m), dtype=bool)
    pidx = interval_index(p, m)
    for k in range(d):
        occupied[k, pidx[:, k]] = True
    cidx = interval_index(c, m)
    gain = np.zeros(c.shape[0], dtype=np.int64)
    for k in range(d):
        gain += ~occupied[k, cidx[:, k]]
    l2, _ = candidate_distances(p, c)
    keep = _keep_distinct(l2)
    best = keep[gain[keep] == gain[keep].max()]
    return int(best[np.argmax(l2[best])])


def mqplhs_next(design: DesignMatrix, rng, candidates_factor: int = 100) -> np.ndarray:
    rng = np.random.default_rng(rng)
    cand = _draw(rng, candidates_factor * design.size, design.dim)
    return cand[mqplhs_select(design, cand)]


# -- FpPLHS -------------------------------------------------------------------

@dataclass
class FpPlhsState:
    """Progress of a fluttering progressive LHS.

    ``resolution`` is the number of intervals per axis of the current
    refinement (``2 * n_0 * 2**level``); ``pending`` holds slice points not
    yet released.
    """

    base_size: int
    level: int = -1
    resolution: int = 0
    pending: np.ndarray = field(default=None)
    released: int = 0

    @classmethod
    def start(cls, design: DesignMatrix) -> "FpPlhsState":
        if design.size < 1:
            raise ValueError("FpPLHS needs a non-empty base design")
        if lhs_fraction(design) != 1.0:
            raise InconsistentStateError("the FpPLHS base design must be a Latin hypercube")
        return cls(
            base_size=design.size,
            resolution=design.size,
            pending=np.empty((0, design.dim)),
        )

    @property
    def expected_size(self) -> int:
        return self.base_size + self.released


def _slice_scores(p, slices, chunk_elems=4_000_000):
    """Min pairwise distance over pairs touching each slice (cross and internal)."""
    s_count, k, d = slices.shape
    n = p.shape[0]
    iu, ju = np.triu_indices(k, k=1)
    out = np.empty(s_count)
    step = max(1, chunk_elems // max(1, (k * n + iu.size) * d))
    for s in range(0, s_count, step):
        b = slices[s:s + step]
        cross = b[:, :, None, :] - p[None, None, :, :]
        best = np.einsum("skne,skne->skn", cross, cross).reshape(b.shape[0], -1).min(axis=1)
        if iu.size:
            inner = b[:, iu, :] - b[:, ju, :]
            best = np.minimum(best, np.einsum("spe,spe->sp", inner, inner).min(axis=1))
        out[s:s + step] = np.sqrt(best)
    return out


def _refine(state, p, rng, slices_factor):
    n, d = p.shape
    m = 2 * n
    idx = interval_index(p, m)
    free = []
    for k in range(d):
        mask = np.ones(m, dtype=bool)
        mask[idx[:, k]] = False
        f = np.flatnonzero(mask)
        if f.size != n:
            raise InconsistentStateError(
                f"axis {k} has {f.size} free intervals at resolution {m}, expected {n}; "
                "the design is not a Latin hypercube at its current size"
            )
        free.append(f)
    free = np.stack(free)  # (d, n)
    count = max(1, slices_factor * n)
    perms = np.argsort(rng.random((count, d, n)), axis=2)
    cells = np.take_along_axis(np.broadcast_to(free, (count, d, n)), perms, axis=2)
    slices = (cells.transpose(0, 2, 1) + rng.random((count, n, d))) / m
    best = int(np.argmax(_slice_scores(p, slices)))
    state.level += 1
    state.resolution = m
    state.pending = slices[best]


def fpplhs_next(state: FpPlhsState, design: DesignMatrix, rng, slices_factor: int = 10) -> np.ndarray:
    """Release the next FpPLHS point, refining the grid when the slice is spent.

    The most isolated pending point (largest crowding distance to the
    current design) is released first.
    """
    if design.size != state.expected_size:
        raise InconsistentStateError(
            f"design has {design.size} points but the FpPLHS state expects {state.expected_size}"
        )
    p = design.points
    if state.pending is None or state.pending.shape[0] == 0:
        _refine(state, p, np.random.default_rng(rng), slices_factor)
    pend = state.pending
    cdm = ((pend[:, None, :] - p[None, :, :]) ** 2).sum(axis=(1, 2))
    j = int(np.argmax(cdm))
    point = pend[j].copy()
    state.pending = np.delete(pend, j, axis=0)
    state.released += 1
    return point


# -- driver -------------------------------------------------------------------

@dataclass(frozen=True)
class AdaptiveSpec:
    """Parameters of a sequential sampler (100 candidates or 10 slices per existing point)."""

    method: str
    seed: int = 0
    alpha: object = "auto"
    candidates_factor: int = 100
    slices_factor: int = 10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown adaptive method {self.method!r}; expected one of {METHODS}")
        if self.alpha != "auto":
            a = float(self.alpha)
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha must be 'auto' or lie in [0, 1], got {self.alpha!r}")
            object.__setattr__(self, "alpha", a)
        if self.candidates_factor < 1 or self.slices_factor < 1:
            raise ValueError("candidate and slice factors must be positive")


class AdaptiveSampler:
    """Stateful one-point-per-call driver for a given :class:`AdaptiveSpec`.

    Examples
    --------
    >>> from seqdoe.oneshot import sf_lhs
    >>> sampler = AdaptiveSampler(AdaptiveSpec("mipt", seed=3))
    >>> design, trace = sampler.extend(sf_lhs(10, 2, seed=1, pool=50), 12)
    >>> design.size
    12
    """

    def __init__(self, spec: AdaptiveSpec, seed=None):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed if seed is None else seed)
        self.fp_state = None
        self.fallbacks = 0
        self.last_alpha = None

    def next(self, design: DesignMatrix) -> np.ndarray:
        spec = self.spec
        if design.size < 1:
            raise ValueError("adaptive samplers need a non-empty starting design")
        if spec.method == "fpplhs":
            if self.fp_state is None:
                self.fp_state = FpPlhsState.start(design)
            return fpplhs_next(self.fp_state, design, self.rng, spec.slices_factor)
        cand = _draw(self.rng, spec.candidates_factor * design.size, design.dim)
        if spec.method == "mip":
            return cand[mip_select(design, cand)]
        if spec.method == "mqplhs":
            return cand[mqplhs_select(design, cand)]
        choice = mipt_select(design, cand, spec.alpha)
        self.last_alpha = choice.alpha
        if choice.fallback:
            self.fallbacks += 1
        return cand[choice.index]

    def extend(self, design: DesignMatrix, target: int, callback=None):
        """Grow ``design`` to ``target`` points.

        Returns the final design and a list of per-iteration
        ``(n, point)`` tuples; ``callback(design)`` runs after each addition.
        """
        trace = []
        while design.size < target:
            point = self.next(design)
            design = design.append(point)
            trace.append((design.size, point))
            if callback is not None:
                callback(design)
        return design, trace
