"""Analytic benchmark functions with their standard box domains."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .design import Bounds
from .exceptions import OutOfBoundsError

__all__ = [
    "FUNCTIONS",
    "BenchmarkFunction",
    "ackley",
    "domain_of",
    "evaluate",
    "get_function",
    "michalewicz",
    "rosenbrock",
    "shubert",
    "sphere",
    "zakharov",
]


def shubert(x):
    x = np.atleast_2d(x)
    j = np.arange(1, 6)
    terms = np.cos((j + 1) * x[:, :, None] + j).sum(axis=2)
    return np.prod(terms, axis=1)


def ackley(x):
    x = np.atleast_2d(x)
    d = x.shape[1]
    a = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x ** 2, axis=1) / d))
    b = -np.exp(np.sum(np.cos(2.0 * np.pi * x), axis=1) / d)
    return a + b + 20.0 + np.e


def rosenbrock(x):
    x = np.atleast_2d(x)
    return np.sum(100.0 * (x[:, 1:] - x[:, :-1] ** 2) ** 2 + (x[:, :-1] - 1.0) ** 2, axis=1)


def michalewicz(x, m=20):
    x = np.atleast_2d(x)
    i = np.arange(1, x.shape[1] + 1)
    return -np.sum(np.sin(x) * np.sin(i * x ** 2 / np.pi) ** (2 * m), axis=1)


def sphere(x):
    x = np.atleast_2d(x)
    return np.sum(x ** 2, axis=1)


def zakharov(x):
    x = np.atleast_2d(x)
    i = np.arange(1, x.shape[1] + 1)
    s = np.sum(0.5 * i * x, axis=1)
    return np.sum(x ** 2, axis=1) + s ** 2 + s ** 4


@dataclass(frozen=True)
class _Entry:
    func: Callable
    low: float
    high: float
    fixed_dim: int | None


FUNCTIONS = {
    "shubert2": _Entry(shubert, -2.0, 2.0, 2),
    "ackley": _Entry(ackley, -5.0, 5.0, None),
    "rosenbrock": _Entry(rosenbrock, -2.0, 2.0, None),
    "michalewicz2": _Entry(michalewicz, 0.0, 4.0, 2),
    "sphere": _Entry(sphere, -5.0, 5.0, None),
    "zakharov2": _Entry(zakharov, -10.0, 10.0, 2),
}


@dataclass(frozen=True)
class BenchmarkFunction:
    """A registered test function at a fixed dimension."""

    id: str
    dim: int

    def __post_init__(self):
        if self.id not in FUNCTIONS:
            raise ValueError(
                f"unknown function {self.id!r}; valid ids: {', '.join(sorted(FUNCTIONS))}"
            )
        entry = FUNCTIONS[self.id]
        if entry.fixed_dim is not None and self.dim != entry.fixed_dim:
            raise ValueError(f"{self.id} is defined for dim={entry.fixed_dim} only, got {self.dim}")
        if entry.fixed_dim is None and self.dim < 2:
            raise ValueError(f"{self.id} needs dim >= 2, got {self.dim}")

    @property
    def bounds(self) -> Bounds:
        e = FUNCTIONS[self.id]
        return Bounds.uniform(e.low, e.high, self.dim)

    def __call__(self, x):
        return evaluate(self, x)


def get_function(name: str, dim: int | None = None) -> BenchmarkFunction:
    entry = FUNCTIONS.get(name)
    if dim is None and entry is not None:
        dim = entry.fixed_dim or 2
    return BenchmarkFunction(name, dim)


def domain_of(f: BenchmarkFunction) -> Bounds:
    return f.bounds


def evaluate(f: BenchmarkFunction, x):
    """Evaluate ``f`` at one point (returns float) or a batch of rows (returns array).

    Raises
    ------
    ValueError
        On a dimension mismatch.
    OutOfBoundsError
        If any coordinate leaves the function's domain.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != f.dim:
        raise ValueError(f"{f.id} expects {f.dim} coordinates, got {arr.shape[1]}")
    e = FUNCTIONS[f.id]
    bad = np.argwhere((arr < e.low) | (arr > e.high))
    if bad.size:
        i, k = bad[0]
        raise OutOfBoundsError(
            f"{f.id}: coordinate {k} of point {i} is {arr[i, k]!r}, outside [{e.low}, {e.high}]"
        )
    out = e.func(arr)
    return float(out[0]) if single else out
