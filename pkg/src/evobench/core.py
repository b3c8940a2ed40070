"""Shared data model: population matrices, bounds, budgets, seeded RNG streams.

Everything downstream operates on batches: a population is an ``N x D``
decision matrix paired with an ``N x M`` objective matrix.  Randomness is
counter-based (Philox) and addressed by ``(seed, stream_id)`` so that a draw
sequence never depends on thread scheduling or evaluation order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Bounds",
    "Population",
    "Budget",
    "RngStream",
    "RealClock",
    "VirtualClock",
    "clamp_to_bounds",
    "budget_exhausted",
    "split_stream",
]

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15  # 2**64 / golden ratio, splitmix64 increment


def _mix64(z: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit ints."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True, eq=False)
class Bounds:
    """Box constraints: per-coordinate closed intervals [lower_i, upper_i]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be 1-D vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("every lower bound must be strictly below its upper bound")

    @classmethod
    def cube(cls, lower: float, upper: float, dim: int) -> "Bounds":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform sample of n points inside the box."""
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class Population:
    """Decision matrix x (N x D) with matching objective matrix f (N x M).

    ``nfe_stamp`` records the cumulative evaluation count at the time f was
    computed, so histories can attribute quality to a budget position.
    """

    x: np.ndarray
    f: np.ndarray
    nfe_stamp: int = 0

    def __post_init__(self):
        if self.x.ndim != 2:
            raise ValueError("x must be a 2-D matrix")
        f = np.asarray(self.f, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        self.f = f
        if len(self.x) != len(self.f):
            raise ValueError("x and f must have the same number of rows")
        if len(self.x) < 1:
            raise ValueError("population must hold at least one individual")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return self.f.shape[1]


@dataclass(frozen=True)
class Budget:
    """Stopping criterion along exactly one axis: generations, FEs, or seconds."""

    kind: str  # "generations" | "evaluations" | "walltime"
    limit: float

    _KINDS = ("generations", "evaluations", "walltime")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown budget kind {self.kind!r}")
        # Generations(0) is a legal boundary case (init-only run); the other
        # axes need a strictly positive limit.
        if self.kind == "generations":
            if self.limit < 0:
                raise ValueError("generation budget cannot be negative")
        elif self.limit <= 0:
            raise ValueError("budget limit must be positive")

    @classmethod
    def generations(cls, n: int) -> "Budget":
        return cls("generations", int(n))

    @classmethod
    def evaluations(cls, n: int) -> "Budget":
        return cls("evaluations", int(n))

    @classmethod
    def walltime(cls, seconds: float) -> "Budget":
        return cls("walltime", float(seconds))


def budget_exhausted(b: Budget, gen: int, nfe: int, elapsed_s: float) -> bool:
    """True once the budget's own axis meets or exceeds its limit.

    The other two axes are ignored.  The wall-time boundary is inclusive
    (elapsed == limit stops) so tests with a virtual clock are deterministic.
    """
    if gen < 0 or nfe < 0 or elapsed_s < 0:
        raise ValueError("progress counters must be non-negative")
    if b.kind == "generations":
        return gen >= b.limit
    if b.kind == "evaluations":
        return nfe >= b.limit
    return elapsed_s >= b.limit


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream addressed by (seed, stream_id).

    Identical (seed, stream_id) pairs produce identical draw sequences on any
    host and under any thread count; the Philox key-space keeps distinct
    seeds and distinct stream ids statistically independent.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def split_stream(r: RngStream, n: int) -> list[RngStream]:
    """Derive n reproducible, pairwise-distinct child streams.

    Child ids come from a splitmix64 walk keyed on the parent id; the
    finalizer is bijective, so distinct child indices can never collide
    with each other.
    """
    if n < 1:
        raise ValueError("need at least one child stream")
    return [RngStream(r.seed, _mix64((r.stream_id + (i + 1) * _GOLDEN) & _MASK64))
            for i in range(n)]


def clamp_to_bounds(x: np.ndarray, b: Bounds) -> np.ndarray:
    """Clip every entry into its box interval; in-bounds entries pass through bit-identical."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != b.dim:
        raise ValueError(
            f"matrix has {x.shape[-1] if x.ndim else 0} columns, bounds expect {b.dim}")
    return np.clip(x, b.lower, b.upper)


class RealClock:
    """Monotonic wall clock."""

    def __call__(self) -> float:
        return time.perf_counter()


class VirtualClock:
    """Deterministic clock for tests: advances only when told to (or by a fixed
    tick per reading, which makes repeated timing loops reproducible)."""

    def __init__(self, start: float = 0.0, tick: float = 0.0):
        self._now = float(start)
        self.tick = float(tick)

    def advance(self, dt: float) -> None:
        if dt < 0:
            raise ValueError("clock cannot move backwards")
        self._now += dt

    def __call__(self) -> float:
        now = self._now
        self._now += self.tick
        return now
