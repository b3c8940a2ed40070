"""Execution backends: serial evaluation versus data-parallel evaluation over
a thread pool.

Batch work is split into contiguous row blocks, each block is computed by a
pure function of its inputs, and results are reassembled by row index — so the
output is bit-identical regardless of worker count or chunk size.  Worker
threads suit the numpy-heavy workloads here because the heavy kernels release
the GIL.
"""
from __future__ import annotations

import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Bounds, RngStream, split_stream
from .problems import ProblemInstance, evaluate_batch, make_problem

__all__ = [
    "BackendSpec",
    "EvaluationError",
    "resolve_workers",
    "map_row_blocks",
    "evaluate",
    "profile_backend",
]

_ENV_WORKERS = "EVOBENCH_WORKERS"


class EvaluationError(RuntimeError):
    """Raised when a worker fails; the message names the failing row range."""


@dataclass(frozen=True)
class BackendSpec:
    """Where batch evaluations run.

    kind "serial" computes everything on the calling thread; "parallel"
    fans row blocks out to ``workers`` threads.  ``chunk`` overrides the
    default block size of ceil(N / (4 * workers)).
    """

    kind: str = "serial"
    workers: int = 1
    chunk: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("serial", "parallel"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        if self.chunk is not None and self.chunk < 1:
            raise ValueError("chunk size must be >= 1")

    @classmethod
    def serial(cls) -> "BackendSpec":
        return cls("serial", 1)

    @classmethod
    def parallel(cls, workers: int, chunk: Optional[int] = None) -> "BackendSpec":
        return cls("parallel", workers, chunk)


def resolve_workers(b: BackendSpec) -> int:
    """Effective worker count; EVOBENCH_WORKERS overrides parallel backends."""
    if b.kind == "serial":
        return 1
    env = os.environ.get(_ENV_WORKERS)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"{_ENV_WORKERS} must be an integer, got {env!r}") from exc
        if n < 1:
            raise ValueError(f"{_ENV_WORKERS} must be >= 1")
        return n
    return b.workers


# one pool per worker count, created lazily and reused across generations
_POOLS: dict[int, ThreadPoolExecutor] = {}
_POOLS_LOCK = threading.Lock()


def _pool(workers: int) -> ThreadPoolExecutor:
    with _POOLS_LOCK:
        pool = _POOLS.get(workers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=workers)
            _POOLS[workers] = pool
    return pool


def map_row_blocks(b: BackendSpec, n: int, fn: Callable[[int, int], object]):
    """Apply ``fn(lo, hi)`` over row blocks covering ``range(n)`` and stitch
    the results back together in row order.

    ``fn`` must be a pure function of its row range returning an array (or a
    tuple of arrays) with one row per input row.  Purity is what makes the
    serial and parallel paths bit-identical.
    """
    if n < 0:
        raise ValueError("row count cannot be negative")
    workers = resolve_workers(b)
    if workers == 1 or n <= 1:
        return fn(0, n)
    chunk = b.chunk if b.chunk is not None else math.ceil(n / (4 * workers))
    bounds = list(range(0, n, chunk)) + [n]
    spans = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
    if len(spans) == 1:
        return fn(0, n)

    def task(span):
        lo, hi = span
        try:
            return fn(lo, hi)
        except Exception as exc:
            raise EvaluationError(
                f"evaluation failed for rows {lo}..{hi}: {exc}") from exc

    results = list(_pool(workers).map(task, spans))
    if isinstance(results[0], tuple):
        return tuple(np.concatenate(parts, axis=0) for parts in zip(*results))
    return np.concatenate(results, axis=0)


def evaluate(b: BackendSpec, p: ProblemInstance, x: np.ndarray, r=None) -> np.ndarray:
    """Objective matrix for ``x`` computed on the chosen backend."""
    x = np.asarray(x, dtype=float)
    return map_row_blocks(b, len(x), lambda lo, hi: evaluate_batch(p, x[lo:hi]))


def profile_backend(b: BackendSpec, p: ProblemInstance,
                    sizes: Sequence[tuple[int, int]], reps: int = 3,
                    r: RngStream = RngStream(0),
                    clock: Callable[[], float] | None = None,
                    ) -> list[tuple[int, int, float, float]]:
    """Time batch evaluation at each (N, D) size; returns rows of
    (N, D, mean_s, std_s) over ``reps`` repetitions.

    An injected clock makes the table reproducible in tests; by default
    wall time is measured with a monotonic timer.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if clock is None:
        from .core import RealClock
        clock = RealClock()
    out: list[tuple[int, int, float, float]] = []
    streams = split_stream(r, max(len(sizes), 1))
    for (size, stream) in zip(sizes, streams):
        n, d = size
        prob = p if d == p.dim else make_problem(p.id, dim=d)
        rng = stream.generator()
        x = prob.bounds.sample(int(n), rng)
        times = []
        for _ in range(reps):
            t0 = clock()
            evaluate(b, prob, x)
            times.append(clock() - t0)
        times_arr = np.asarray(times)
        out.append((int(n), int(d), float(times_arr.mean()),
                    float(times_arr.std())))
    return out
