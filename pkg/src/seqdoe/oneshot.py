"""One-stage designs: random LHS, best-of-pool maxmin LHS, and design files."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix, lhs_fraction, metric_report, read_design
from .exceptions import UndefinedMetricError

log = logging.getLogger(__name__)

__all__ = [
    "OneShotSpec",
    "generate_oneshot",
    "load_design",
    "random_lhs",
    "sf_lhs",
    "substream",
]


def substream(seed, index: int) -> np.random.SeedSequence:
    """Deterministic child stream ``index`` of a root seed.

    ``seed`` may be an int or a ``SeedSequence``; the child only depends on
    the root and ``index``, never on how many siblings were drawn before.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + (index,))
    return np.random.SeedSequence(int(seed), spawn_key=(index,))


def _lhs_from_rng(rng, n, d):
    # one independent permutation per column, uniform jitter inside each cell
    perms = np.argsort(rng.random((d, n)), axis=1).T
    return (perms + rng.random((n, d))) / n


def random_lhs(n: int, d: int, seed=0) -> DesignMatrix:
    """Random Latin hypercube of ``n`` points in ``d`` dimensions."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(substream(seed, 0))
    return DesignMatrix(_lhs_from_rng(rng, n, d))


def _min_pair_distances(batch):
    """Minimum pairwise distance of each design in a ``(m, n, d)`` batch."""
    m, n, _ = batch.shape
    if n < 2:
        return np.full(m, np.inf)
    iu, ju = np.triu_indices(n, k=1)
    out = np.empty(m)
    step = max(1, 4_000_000 // (iu.size * batch.shape[2]))
    for s in range(0, m, step):
        b = batch[s:s + step]
        diff = b[:, iu, :] - b[:, ju, :]
        out[s:s + step] = np.sqrt(np.min(np.einsum("mpk,mpk->mp", diff, diff), axis=1))
    return out


def sf_lhs(n: int, d: int, seed=0, pool: int | None = None, return_scores: bool = False):
    """Best-of-pool space-filling LHS.

    Draws ``pool`` random Latin hypercubes (default ``1000 * d``) and keeps
    the one with the largest intersite distance.  Candidate ``i`` comes from
    ``substream(seed, i)``, so candidate 0 equals ``random_lhs(n, d, seed)``
    and growing the pool never lowers the result.  Ties go to the lowest
    candidate index.

    Parameters
    ----------
    return_scores : bool
        Also return the intersite distance of every pool member.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if pool is None:
        pool = 1000 * d
    if pool < 1:
        raise ValueError("pool must be at least 1")
    best, best_score = None, -np.inf
    scores = np.empty(pool)
    block = max(1, min(pool, 2_000_000 // (n * d)))
    for start in range(0, pool, block):
        idx = range(start, min(pool, start + block))
        batch = np.stack(
            [_lhs_from_rng(np.random.default_rng(substream(seed, i)), n, d) for i in idx]
        )
        sc = _min_pair_distances(batch)
        scores[start:start + len(idx)] = sc
        j = int(np.argmax(sc))
        if sc[j] > best_score:
            best, best_score = batch[j], sc[j]
    design = DesignMatrix(best)
    if return_scores:
        return design, scores
    return design


def load_design(path) -> DesignMatrix:
    """Read a pre-optimized design from a CSV file and log its metrics."""
    design = read_design(path)
    try:
        rep = metric_report(design)
        log.info(
            "loaded %s: n=%d d=%d intersite=%.6g projected=%.6g lhs_fraction=%.6g",
            path, design.size, design.dim, rep.intersite, rep.projected, rep.lhs_fraction,
        )
    except (UndefinedMetricError, ArithmeticError):
        log.info(
            "loaded %s: n=%d d=%d lhs_fraction=%.6g",
            path, design.size, design.dim, lhs_fraction(design),
        )
    return design


@dataclass(frozen=True)
class OneShotSpec:
    method: str
    n: int
    d: int
    seed: int = 0
    pool: int | None = None
    path: str | None = None

    METHODS = ("random_lhs", "sf_lhs", "preoptimized_file")

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValueError(f"unknown one-shot method {self.method!r}; expected one of {self.METHODS}")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if self.pool is not None and self.pool < 1:
            raise ValueError("pool must be at least 1")
        if self.method == "preoptimized_file" and not self.path:
            raise ValueError("preoptimized_file needs a path")


def generate_oneshot(spec: OneShotSpec) -> DesignMatrix:
    if spec.method == "random_lhs":
        return random_lhs(spec.n, spec.d, spec.seed)
    if spec.method == "sf_lhs":
        return sf_lhs(spec.n, spec.d, spec.seed, spec.pool)
    design = load_design(spec.path)
    if design.size != spec.n or design.dim != spec.d:
        raise ValueError(
            f"{spec.path} holds a {design.size}x{design.dim} design, expected {spec.n}x{spec.d}"
        )
    return design
