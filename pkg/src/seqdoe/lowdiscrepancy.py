"""Halton and Sobol sequences emitted one point at a time.

Both generators are deterministic and resumable: a :class:`SequenceState`
records the index of the next point, and index 0 (the origin) is never
emitted.  Sobol points use Gray-code ordering with the Joe-Kuo direction
numbers stored in :mod:`seqdoe._joe_kuo`; no scrambling is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from ._joe_kuo import JOE_KUO_6
from .design import DesignMatrix
from .exceptions import UnsupportedDimensionError

__all__ = [
    "SOBOL_MAX_DIM",
    "SequenceState",
    "first_primes",
    "halton",
    "halton_next",
    "radical_inverse",
    "sobol",
    "sobol_next",
]

SOBOL_MAX_DIM = len(JOE_KUO_6) + 1
_BITS = 32


@dataclass
class SequenceState:
    """Cursor into a low-discrepancy sequence."""

    method: str
    dim: int
    next_index: int = 1

    def __post_init__(self):
        if self.method not in ("halton", "sobol"):
            raise ValueError(f"unknown sequence {self.method!r}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.next_index < 1:
            # index 0 is the origin and is always skipped
            self.next_index = 1
        if self.method == "sobol" and self.dim > SOBOL_MAX_DIM:
            raise UnsupportedDimensionError(
                f"Sobol direction numbers are embedded for up to {SOBOL_MAX_DIM} dimensions, got {self.dim}"
            )

    def clone(self) -> "SequenceState":
        return replace(self)

    def next(self) -> np.ndarray:
        if self.method == "halton":
            return halton_next(self)
        return sobol_next(self)


@lru_cache(maxsize=None)
def first_primes(count: int) -> tuple:
    primes = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return tuple(primes)


def radical_inverse(index: int, base: int) -> float:
    """Reflect the base-``base`` digits of ``index`` about the radix point."""
    num, den = 0, 1
    while index:
        index, digit = divmod(index, base)
        num = num * base + digit
        den *= base
    return num / den


def halton_next(state: SequenceState) -> np.ndarray:
    """Emit the next Halton point and advance ``state``."""
    i = state.next_index
    point = np.array([radical_inverse(i, b) for b in first_primes(state.dim)])
    state.next_index = i + 1
    return point


@lru_cache(maxsize=None)
def _direction_numbers(dim: int) -> np.ndarray:
    """Integer direction numbers ``v[k, j]`` scaled by ``2**32``."""
    v = np.zeros((dim, _BITS), dtype=np.uint64)
    v[0] = [1 << (_BITS - 1 - j) for j in range(_BITS)]
    for k in range(1, dim):
        _, s, a, m_init = JOE_KUO_6[k - 1]
        m = list(m_init)
        for j in range(s, _BITS):
            new = m[j - s] ^ (m[j - s] << s)
            for r in range(1, s):
                if (a >> (s - 1 - r)) & 1:
                    new ^= m[j - r] << r
            m.append(new)
        v[k] = [m[j] << (_BITS - 1 - j) for j in range(_BITS)]
    return v


def sobol_next(state: SequenceState) -> np.ndarray:
    """Emit the next Sobol point (Gray-code order) and advance ``state``."""
    if state.dim > SOBOL_MAX_DIM:
        raise UnsupportedDimensionError(
            f"Sobol direction numbers are embedded for up to {SOBOL_MAX_DIM} dimensions, got {state.dim}"
        )
    i = state.next_index
    if i >= 1 << _BITS:
        raise OverflowError("Sobol index exhausted the 32-bit direction numbers")
    v = _direction_numbers(state.dim)
    gray = i ^ (i >> 1)
    acc = np.zeros(state.dim, dtype=np.uint64)
    bit = 0
    while gray:
        if gray & 1:
            acc ^= v[:, bit]
        gray >>= 1
        bit += 1
    state.next_index = i + 1
    return acc.astype(float) / float(1 << _BITS)


def _run(method, n, d, start):
    state = SequenceState(method, d, start)
    if n == 0:
        return DesignMatrix.empty(d)
    return DesignMatrix(np.array([state.next() for _ in range(n)]))


def halton(n: int, d: int, start: int = 1) -> DesignMatrix:
    """The ``n`` Halton points with indices ``start .. start + n - 1``."""
    return _run("halton", n, d, start)


def sobol(n: int, d: int, start: int = 1) -> DesignMatrix:
    """The ``n`` Sobol points with indices ``start .. start + n - 1``."""
    return _run("sobol", n, d, start)
