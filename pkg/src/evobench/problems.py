"""Benchmark problems: classic single-objective functions, a rotated/shifted
suite, and the DTLZ/ZDT multi-objective families with analytic front generators.

All functions are minimized, vectorized over the population axis, and pure:
``evaluate_batch`` of a stacked matrix equals the row-concatenation of
separate calls.  NFE accounting lives with the caller.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Bounds

__all__ = [
    "ProblemInstance",
    "make_problem",
    "available_problems",
    "evaluate_batch",
    "pareto_front_reference",
    "load_transform",
    "transform_hash",
]


# ---------------------------------------------------------------------------
# single-objective definitions
# ---------------------------------------------------------------------------

def _sphere(x):
    return np.sum(x * x, axis=1)


def _ackley(x):
    d = x.shape[1]
    rms = np.sqrt(np.sum(x * x, axis=1) / d)
    cos_mean = np.sum(np.cos(2.0 * np.pi * x), axis=1) / d
    return -20.0 * np.exp(-0.2 * rms) - np.exp(cos_mean) + 20.0 + np.e


def _griewank(x):
    d = x.shape[1]
    i = np.arange(1, d + 1, dtype=float)
    return (np.sum(x * x, axis=1) / 4000.0
            - np.prod(np.cos(x / np.sqrt(i)), axis=1) + 1.0)


def _rosenbrock(x):
    a = x[:, :-1]
    b = x[:, 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=1)


def _schwefel(x):
    # 418.9829*D - sum(x*sin(sqrt(|x|))); minimum ~0 at 420.9687...
    d = x.shape[1]
    return 418.9829 * d - np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=1)


def _zakharov(z):
    i = np.arange(1, z.shape[1] + 1, dtype=float)
    s = np.sum(0.5 * i * z, axis=1)
    return np.sum(z * z, axis=1) + s ** 2 + s ** 4


def _rosenbrock_shifted(z):
    # classic Rosenbrock on y = z + 1, so the minimum sits at z = 0
    return _rosenbrock(z + 1.0)


def _expanded_schaffer_f7(z):
    a = z[:, :-1]
    b = z[:, 1:]
    s = np.sqrt(a * a + b * b)
    term = np.sqrt(s) + np.sqrt(s) * np.sin(50.0 * s ** 0.2) ** 2
    return (np.sum(term, axis=1) / (z.shape[1] - 1)) ** 2


def _noncontinuous_rastrigin(z):
    y = np.where(np.abs(z) <= 0.5, z, np.round(2.0 * z) / 2.0)
    return np.sum(y * y - 10.0 * np.cos(2.0 * np.pi * y) + 10.0, axis=1)


def _levy_shifted(z):
    # Levy with w = 1 + z/4 so the minimum sits at z = 0
    w = 1.0 + z / 4.0
    head = np.sin(np.pi * w[:, 0]) ** 2
    wm = w[:, :-1]
    mid = np.sum((wm - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * wm + 1.0) ** 2),
                 axis=1)
    wl = w[:, -1]
    tail = (wl - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * wl) ** 2)
    return head + mid + tail


# ---------------------------------------------------------------------------
# multi-objective definitions
# ---------------------------------------------------------------------------

def _zdt_g(x):
    return 1.0 + 9.0 * np.sum(x[:, 1:], axis=1) / (x.shape[1] - 1)


def _zdt1(x):
    f1 = x[:, 0]
    g = _zdt_g(x)
    return np.column_stack([f1, g * (1.0 - np.sqrt(f1 / g))])


def _zdt2(x):
    f1 = x[:, 0]
    g = _zdt_g(x)
    return np.column_stack([f1, g * (1.0 - (f1 / g) ** 2)])


def _zdt3(x):
    f1 = x[:, 0]
    g = _zdt_g(x)
    h = 1.0 - np.sqrt(f1 / g) - (f1 / g) * np.sin(10.0 * np.pi * f1)
    return np.column_stack([f1, g * h])


def _dtlz_g1(xm):
    k = xm.shape[1]
    return 100.0 * (k + np.sum((xm - 0.5) ** 2
                               - np.cos(20.0 * np.pi * (xm - 0.5)), axis=1))


def _dtlz_g2(xm):
    return np.sum((xm - 0.5) ** 2, axis=1)


def _dtlz1(x, m):
    xm = x[:, m - 1:]
    g = _dtlz_g1(xm)
    y = x[:, : m - 1]
    f = np.empty((len(x), m))
    for i in range(m):
        val = 0.5 * (1.0 + g)
        val = val * np.prod(y[:, : m - 1 - i], axis=1)
        if i > 0:
            val = val * (1.0 - y[:, m - 1 - i])
        f[:, i] = val
    return f


def _dtlz_sphere(x, m, g, alpha=1.0):
    y = (x[:, : m - 1] ** alpha) * (np.pi / 2.0)
    f = np.empty((len(x), m))
    for i in range(m):
        val = 1.0 + g
        val = val * np.prod(np.cos(y[:, : m - 1 - i]), axis=1)
        if i > 0:
            val = val * np.sin(y[:, m - 1 - i])
        f[:, i] = val
    return f


def _dtlz2(x, m):
    return _dtlz_sphere(x, m, _dtlz_g2(x[:, m - 1:]))


def _dtlz3(x, m):
    return _dtlz_sphere(x, m, _dtlz_g1(x[:, m - 1:]))


def _dtlz4(x, m):
    return _dtlz_sphere(x, m, _dtlz_g2(x[:, m - 1:]), alpha=100.0)


def _dtlz56(x, m, g):
    # theta_1 = x_1*pi/2; later angles are squeezed toward pi/4 as g -> 0
    theta = np.empty((len(x), m - 1))
    theta[:, 0] = x[:, 0] * (np.pi / 2.0)
    if m > 2:
        gg = g[:, None]
        theta[:, 1:] = (np.pi / (4.0 * (1.0 + gg))) * (1.0 + 2.0 * gg * x[:, 1: m - 1])
    f = np.empty((len(x), m))
    for i in range(m):
        val = 1.0 + g
        val = val * np.prod(np.cos(theta[:, : m - 1 - i]), axis=1)
        if i > 0:
            val = val * np.sin(theta[:, m - 1 - i])
        f[:, i] = val
    return f


def _dtlz5(x, m):
    return _dtlz56(x, m, _dtlz_g2(x[:, m - 1:]))


def _dtlz6(x, m):
    return _dtlz56(x, m, np.sum(x[:, m - 1:] ** 0.1, axis=1))


def _dtlz7(x, m):
    f_head = x[:, : m - 1]
    g = 1.0 + 9.0 * np.mean(x[:, m - 1:], axis=1)
    ratio = f_head / (1.0 + g[:, None])
    h = m - np.sum(ratio * (1.0 + np.sin(3.0 * np.pi * f_head)), axis=1)
    return np.column_stack([f_head, (1.0 + g) * h])


# ---------------------------------------------------------------------------
# problem registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One benchmark instance: id, dimensions, bounds, and an optional
    shift/rotation transform (applied as z = R @ (x - o) before the base
    function, the usual construction for rotated suites)."""

    id: str
    dim: int
    m: int
    bounds: Bounds
    transform: Optional[tuple[np.ndarray, np.ndarray]] = None

    @property
    def is_multiobjective(self) -> bool:
        return self.m > 1


# name -> (default_dim, bounds_lo, bounds_hi, default_m, kind)
_SPEC = {
    "sphere": (50, -5.12, 5.12, 1, "plain"),
    "ackley": (50, -32.0, 32.0, 1, "plain"),
    "griewank": (50, -600.0, 600.0, 1, "plain"),
    "rosenbrock": (50, -5.0, 10.0, 1, "plain"),
    "schwefel": (50, -500.0, 500.0, 1, "plain"),
    "cec2022_f1": (20, -100.0, 100.0, 1, "cec"),
    "cec2022_f2": (20, -100.0, 100.0, 1, "cec"),
    "cec2022_f3": (20, -100.0, 100.0, 1, "cec"),
    "cec2022_f4": (20, -100.0, 100.0, 1, "cec"),
    "cec2022_f5": (20, -100.0, 100.0, 1, "cec"),
    "zdt1": (50, 0.0, 1.0, 2, "mo"),
    "zdt2": (50, 0.0, 1.0, 2, "mo"),
    "zdt3": (50, 0.0, 1.0, 2, "mo"),
    "dtlz1": (50, 0.0, 1.0, 3, "mo"),
    "dtlz2": (50, 0.0, 1.0, 3, "mo"),
    "dtlz3": (50, 0.0, 1.0, 3, "mo"),
    "dtlz4": (50, 0.0, 1.0, 3, "mo"),
    "dtlz5": (50, 0.0, 1.0, 3, "mo"),
    "dtlz6": (50, 0.0, 1.0, 3, "mo"),
    "dtlz7": (50, 0.0, 1.0, 3, "mo"),
}

_SO_FUNCS = {
    "sphere": _sphere,
    "ackley": _ackley,
    "griewank": _griewank,
    "rosenbrock": _rosenbrock,
    "schwefel": _schwefel,
}

_CEC_BASE = {
    "cec2022_f1": _zakharov,
    "cec2022_f2": _rosenbrock_shifted,
    "cec2022_f3": _expanded_schaffer_f7,
    "cec2022_f4": _noncontinuous_rastrigin,
    "cec2022_f5": _levy_shifted,
}

_MO_FUNCS = {
    "zdt1": _zdt1, "zdt2": _zdt2, "zdt3": _zdt3,
    "dtlz1": _dtlz1, "dtlz2": _dtlz2, "dtlz3": _dtlz3, "dtlz4": _dtlz4,
    "dtlz5": _dtlz5, "dtlz6": _dtlz6, "dtlz7": _dtlz7,
}


def available_problems() -> list[str]:
    return sorted(_SPEC)


def make_problem(name: str, dim: int | None = None, m: int | None = None,
                 transform: Optional[tuple[np.ndarray, np.ndarray]] = None,
                 ) -> ProblemInstance:
    """Build a problem instance with registry defaults filled in.

    ZDT problems are fixed at m=2; DTLZ defaults to m=3 with the standard
    k = D - m + 1 tail.  Transforms only apply to the rotated suite.
    """
    key = name.lower()
    if key not in _SPEC:
        raise KeyError(f"unknown problem {name!r}")
    ddim, lo, hi, dm, kind = _SPEC[key]
    dim = int(dim) if dim is not None else ddim
    if dim < 2:
        raise ValueError("problems need dim >= 2")
    if key.startswith("zdt"):
        m = 2
    elif kind == "mo":
        m = int(m) if m is not None else dm
        if not 2 <= m <= dim:
            raise ValueError("objective count must satisfy 2 <= m <= dim")
    else:
        m = 1
    if transform is not None and kind != "cec":
        raise ValueError("shift/rotation transforms are only defined for the "
                         "cec2022_* problems")
    if transform is not None:
        shift, rot = transform
        shift = np.asarray(shift, dtype=float)
        rot = np.asarray(rot, dtype=float)
        if shift.shape != (dim,) or rot.shape != (dim, dim):
            raise ValueError("transform shapes must be (D,) and (D, D)")
        transform = (shift, rot)
    return ProblemInstance(key, dim, m, Bounds.cube(lo, hi, dim), transform)


def evaluate_batch(p: ProblemInstance, x: np.ndarray, r=None) -> np.ndarray:
    """Objective matrix for a batch of decision vectors (always N x M)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != p.dim:
        raise ValueError(f"expected N x {p.dim} input, got {x.shape}")
    kind = _SPEC[p.id][4]
    if kind == "plain":
        return _SO_FUNCS[p.id](x)[:, None]
    if kind == "cec":
        z = x
        if p.transform is not None:
            shift, rot = p.transform
            z = (x - shift) @ rot.T
        return _CEC_BASE[p.id](z)[:, None]
    if p.id.startswith("zdt"):
        return _MO_FUNCS[p.id](x)
    return _MO_FUNCS[p.id](x, p.m)


# ---------------------------------------------------------------------------
# Pareto front references
# ---------------------------------------------------------------------------

def _simplex_lattice(m: int, h: int) -> np.ndarray:
    """All compositions of h into m parts, scaled to sum to 1."""
    if m == 1:
        return np.array([[1.0]])
    rows = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            rows.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], h, m)
    return np.asarray(rows, dtype=float) / h


def _lattice_h_for(m: int, n_points: int) -> int:
    h = 1
    while math.comb(h + m - 1, m - 1) < n_points:
        h += 1
    return h


def _nd_filter(f: np.ndarray) -> np.ndarray:
    """Indices of mutually non-dominated rows (minimization)."""
    n = len(f)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        le = np.all(f[i] <= f, axis=1)
        lt = np.any(f[i] < f, axis=1)
        keep &= ~(le & lt)
        keep[i] = True
    return np.flatnonzero(keep)


def pareto_front_reference(p: ProblemInstance, n_points: int = 1000) -> np.ndarray:
    """Reference sample of the true Pareto front, mutually non-dominated.

    Two-objective fronts are sampled on 1000 points by default; three-objective
    simplex/sphere fronts use the smallest simplex lattice with at least
    ``n_points`` members.
    """
    if p.m < 2:
        raise ValueError("single-objective problems have no Pareto front")
    m = p.m
    if p.id == "zdt1":
        f1 = np.linspace(0.0, 1.0, n_points)
        return np.column_stack([f1, 1.0 - np.sqrt(f1)])
    if p.id == "zdt2":
        f1 = np.linspace(0.0, 1.0, n_points)
        return np.column_stack([f1, 1.0 - f1 ** 2])
    if p.id == "zdt3":
        f1 = np.linspace(0.0, 1.0, max(20 * n_points, 2000))
        f2 = 1.0 - np.sqrt(f1) - f1 * np.sin(10.0 * np.pi * f1)
        cand = np.column_stack([f1, f2])
        nd = cand[_nd_filter(cand)]
        idx = np.linspace(0, len(nd) - 1, min(n_points, len(nd))).astype(int)
        return nd[idx]
    if p.id == "dtlz1":
        w = _simplex_lattice(m, _lattice_h_for(m, n_points))
        return 0.5 * w
    if p.id in ("dtlz2", "dtlz3", "dtlz4"):
        w = _simplex_lattice(m, _lattice_h_for(m, n_points))
        norm = np.linalg.norm(w, axis=1, keepdims=True)
        return w / norm
    if p.id in ("dtlz5", "dtlz6"):
        if m == 2:
            t = np.linspace(0.0, np.pi / 2.0, n_points)
            return np.column_stack([np.cos(t), np.sin(t)])
        if m != 3:
            raise ValueError("degenerate-curve reference implemented for m in {2, 3}")
        t = np.linspace(0.0, np.pi / 2.0, n_points)
        c = np.cos(np.pi / 4.0)
        return np.column_stack([np.cos(t) * c, np.cos(t) * c, np.sin(t)])
    if p.id == "dtlz7":
        # sample the x-head grid at g = 0 (tail at zero), then keep the
        # non-dominated subset of the analytic image
        side = max(2, int(np.ceil((4 * n_points) ** (1.0 / (m - 1)))))
        axes = [np.linspace(0.0, 1.0, side)] * (m - 1)
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m - 1)
        g = 1.0
        h = m - np.sum(grid / (1.0 + g) * (1.0 + np.sin(3.0 * np.pi * grid)), axis=1)
        cand = np.column_stack([grid, (1.0 + g) * h])
        nd = cand[_nd_filter(cand)]
        if len(nd) > n_points:
            idx = np.linspace(0, len(nd) - 1, n_points).astype(int)
            nd = nd[idx]
        return nd
    raise ValueError(f"no front generator for {p.id!r}")


# ---------------------------------------------------------------------------
# transform files for the rotated suite
# ---------------------------------------------------------------------------

def load_transform(path: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Read a plain-text transform: first D floats are the shift vector, the
    next D*D floats are the rotation matrix in row-major order."""
    with open(path) as fh:
        values = fh.read().split()
    need = dim + dim * dim
    if len(values) != need:
        raise ValueError(
            f"transform file holds {len(values)} numbers, expected {need} "
            f"(D + D*D for D={dim})")
    data = np.asarray(values, dtype=float)
    return data[:dim].copy(), data[dim:].reshape(dim, dim).copy()


def transform_hash(transform: Optional[tuple[np.ndarray, np.ndarray]]) -> str:
    """Stable identity for a (shift, rotation) pair; 'identity' when absent."""
    if transform is None:
        return "identity"
    shift, rot = transform
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(shift, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(rot, dtype="<f8").tobytes())
    return h.hexdigest()[:16]
