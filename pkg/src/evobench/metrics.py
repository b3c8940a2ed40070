"""Quality and efficiency indicators: best fitness, IGD, exact and Monte
Carlo hypervolume, decision-space diversity, speed-up, throughput."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import Population, RngStream

__all__ = [
    "best_fitness",
    "igd",
    "hypervolume",
    "hypervolume_mc",
    "diversity",
    "speedup",
    "throughput",
    "Throughput",
]

_DIVERSITY_CAP = 2048


def best_fitness(pop: Population) -> float:
    """Minimum first-objective value in the population."""
    return float(np.min(pop.f[:, 0]))


def _cross_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between row sets, |a| x |b|."""
    aa = np.sum(a * a, axis=1)
    bb = np.sum(b * b, axis=1)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def igd(solutions: np.ndarray, reference: np.ndarray) -> float:
    """Mean distance from each reference point to its nearest solution."""
    s = np.atleast_2d(np.asarray(solutions, dtype=float))
    r = np.atleast_2d(np.asarray(reference, dtype=float))
    if s.shape[1] != r.shape[1]:
        raise ValueError("solution and reference objective counts differ")
    if len(s) == 0 or len(r) == 0:
        raise ValueError("igd needs non-empty solution and reference sets")
    d2 = _cross_sq_dists(r, s)
    return float(np.mean(np.sqrt(d2.min(axis=1))))


def _hv_2d(pts: np.ndarray, ref: np.ndarray) -> float:
    """Exact 2-D dominated area by an ascending-f1 sweep."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    total = 0.0
    ceiling = ref[1]
    for f1, f2 in pts[order]:
        if f2 < ceiling:
            total += (ref[0] - f1) * (ceiling - f2)
            ceiling = f2
    return total


def _hv_3d(pts: np.ndarray, ref: np.ndarray) -> float:
    """Exact 3-D dominated volume by slicing into slabs along f3."""
    order = np.argsort(pts[:, 2], kind="stable")
    zs = pts[order, 2]
    total = 0.0
    for i in range(len(zs)):
        z_top = zs[i + 1] if i + 1 < len(zs) else ref[2]
        if z_top > zs[i]:
            area = _hv_2d(pts[order[: i + 1], :2], ref[:2])
            total += area * (z_top - zs[i])
    return total


def hypervolume(points: np.ndarray, ref: np.ndarray) -> float:
    """Exact Lebesgue measure of the region dominated by ``points`` and
    bounded above by ``ref`` (minimization).  Points not strictly below the
    reference contribute nothing.  Implemented for 1-3 objectives."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(ref, dtype=float).ravel()
    if pts.shape[1] != len(ref):
        raise ValueError("points and reference dimensionality differ")
    pts = pts[np.all(pts < ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    m = len(ref)
    if m == 1:
        return float(ref[0] - pts[:, 0].min())
    if m == 2:
        return float(_hv_2d(pts, ref))
    if m == 3:
        return float(_hv_3d(pts, ref))
    raise ValueError("exact hypervolume implemented for up to 3 objectives")


def hypervolume_mc(points: np.ndarray, ref: np.ndarray, samples: int,
                   r: RngStream) -> float:
    """Monte Carlo hypervolume: uniform samples over the ideal-reference box,
    scaled by the fraction dominated by at least one point."""
    if samples <= 0:
        raise ValueError("sample count must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(ref, dtype=float).ravel()
    if pts.shape[1] != len(ref):
        raise ValueError("points and reference dimensionality differ")
    pts = pts[np.all(pts < ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    ideal = pts.min(axis=0)
    box = np.prod(ref - ideal)
    if box == 0.0:
        return 0.0
    rng = r.generator() if isinstance(r, RngStream) else r
    draws = ideal + rng.random((int(samples), len(ref))) * (ref - ideal)
    dominated = np.zeros(len(draws), dtype=bool)
    for p in pts:
        np.logical_or(dominated, np.all(draws >= p, axis=1), out=dominated)
    return float(box * dominated.mean())


def diversity(pop: Population) -> float:
    """Mean pairwise Euclidean distance between decision vectors.

    Exact for populations up to 2048; beyond that a deterministic evenly
    strided subsample of 2048 rows keeps the quadratic cost bounded.
    """
    x = pop.x
    n = len(x)
    if n < 2:
        return 0.0
    if n > _DIVERSITY_CAP:
        idx = np.linspace(0, n - 1, _DIVERSITY_CAP).astype(int)
        x = x[idx]
        n = len(x)
    d2 = _cross_sq_dists(x, x)
    iu = np.triu_indices(n, k=1)
    return float(np.mean(np.sqrt(d2[iu])))


def speedup(t_ref: float, t_test: float) -> float:
    """Reference time divided by test time (>1 means the test run was faster)."""
    if t_ref < 0 or t_test <= 0:
        raise ValueError("times must be positive")
    return t_ref / t_test


class Throughput(NamedTuple):
    per_second: float
    nfe: int


def throughput(nfe: int, window_s: float) -> Throughput:
    """Function evaluations per second over a fixed window, keeping the raw
    count alongside the rate."""
    if nfe < 0 or window_s <= 0:
        raise ValueError("need nfe >= 0 and a positive window")
    return Throughput(nfe / window_s, int(nfe))
