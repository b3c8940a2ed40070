"""Multi-objective algorithms and their shared selection machinery.

Same transition-step contract as the single-objective module: each algorithm
is a state dataclass plus ``*_init`` / ``*_step``; inits return
``(state, population)`` because some algorithms resize the working population
to match a reference-vector lattice.  All randomness is drawn centrally, so
results are independent of the evaluation backend.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .backend import BackendSpec, map_row_blocks
from .core import Bounds, Population, RngStream, clamp_to_bounds
from .problems import ProblemInstance, evaluate_batch
from .soea import _rng, _sbx_batch, polynomial_mutation

__all__ = [
    "dominates", "non_dominated_sort", "crowding_distance",
    "das_dennis_vectors", "largest_lattice_h", "ReferenceVectors",
    "pbi_scalarize", "spea2_fitness", "hype_fitness",
    "Nsga2State", "nsga2_init", "nsga2_step",
    "Nsga3State", "nsga3_init", "nsga3_step",
    "Spea2State", "spea2_init", "spea2_step",
    "IbeaState", "ibea_init", "ibea_step",
    "HypeState", "hype_init", "hype_step",
    "MoeadState", "moead_init", "moead_step",
    "RveaState", "rvea_init", "rvea_step",
    "LmocsoState", "lmocso_init", "lmocso_step",
]

_SERIAL = BackendSpec.serial()


def _eval_rows(backend, p, x):
    return map_row_blocks(backend, len(x), lambda lo, hi: evaluate_batch(p, x[lo:hi]))


# ---------------------------------------------------------------------------
# dominance machinery
# ---------------------------------------------------------------------------

def dominates(a, b) -> bool:
    """True when a is no worse than b everywhere and better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(a <= b) and np.any(a < b))


def _nd_mask(f: np.ndarray) -> np.ndarray:
    """Boolean mask of mutually non-dominated rows."""
    n = len(f)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        le = np.all(f[i] <= f, axis=1)
        lt = np.any(f[i] < f, axis=1)
        keep &= ~(le & lt)
        keep[i] = True
    return keep


def _nd_ranks_2d(f: np.ndarray) -> np.ndarray:
    """Front indices for two objectives via a lexicographic sweep.

    ``tails[r]`` holds (f2, f1) of the point most recently added to front r;
    f2 values are non-decreasing across fronts, so the first front that fails
    to dominate a new point is found by bisection.  Exact ties need the f1
    check: an equal-f2 point with smaller f1 dominates, a full duplicate does
    not.
    """
    order = np.lexsort((f[:, 1], f[:, 0]))
    ranks = np.empty(len(f), dtype=np.int64)
    tails_f2: list[float] = []
    tails_f1: list[float] = []
    for idx in order:
        x1, y = f[idx, 0], f[idx, 1]
        pos = bisect.bisect_left(tails_f2, y)
        while pos < len(tails_f2) and tails_f2[pos] == y and tails_f1[pos] != x1:
            pos += 1
        ranks[idx] = pos
        if pos == len(tails_f2):
            tails_f2.append(y)
            tails_f1.append(x1)
        else:
            tails_f2[pos] = y
            tails_f1[pos] = x1
    return ranks


def _nd_ranks_general(f: np.ndarray) -> np.ndarray:
    """Front indices by iterative peeling of the dominance graph."""
    n = len(f)
    dom = np.zeros((n, n), dtype=bool)
    for i in range(n):
        le = np.all(f[i] <= f, axis=1)
        lt = np.any(f[i] < f, axis=1)
        dom[i] = le & lt
    count = dom.sum(axis=0).astype(np.int64)
    ranks = np.full(n, -1, dtype=np.int64)
    remaining = np.ones(n, dtype=bool)
    r = 0
    while remaining.any():
        front = remaining & (count == 0)
        ranks[front] = r
        remaining &= ~front
        count -= dom[front].sum(axis=0)
        r += 1
    return ranks


def non_dominated_sort(f: np.ndarray) -> list[np.ndarray]:
    """Partition rows into fronts; front 0 is the maximal non-dominated set."""
    f = np.atleast_2d(np.asarray(f, dtype=float))
    if len(f) == 0:
        return []
    ranks = _nd_ranks_2d(f) if f.shape[1] == 2 else _nd_ranks_general(f)
    return [np.flatnonzero(ranks == r) for r in range(int(ranks.max()) + 1)]


def _front_ranks(f: np.ndarray) -> np.ndarray:
    return _nd_ranks_2d(f) if f.shape[1] == 2 else _nd_ranks_general(f)


def crowding_distance(f: np.ndarray) -> np.ndarray:
    """Deb's per-front density estimate: boundary points infinite, interior
    points sum normalized neighbor gaps; a flat objective contributes 0."""
    f = np.atleast_2d(np.asarray(f, dtype=float))
    n, m = f.shape
    if n <= 2:
        return np.full(n, np.inf)
    d = np.zeros(n)
    for j in range(m):
        o = np.argsort(f[:, j], kind="stable")
        fj = f[o, j]
        spread = fj[-1] - fj[0]
        d[o[0]] = d[o[-1]] = np.inf
        if spread > 0:
            d[o[1:-1]] += (fj[2:] - fj[:-2]) / spread
    return d


# ---------------------------------------------------------------------------
# reference vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReferenceVectors:
    """Das-Dennis simplex lattice: ``weights`` rows sum to 1 (used for
    scalarization), ``unit`` rows are the same directions at norm 1 (used for
    angle-based association)."""

    weights: np.ndarray
    unit: np.ndarray

    @property
    def k(self) -> int:
        return len(self.weights)

    def neighbor_table(self, t: int) -> np.ndarray:
        """Indices of the t nearest weight rows (Euclidean, self included)."""
        w = self.weights
        k = len(w)
        t = min(t, k)
        sq = np.sum(w * w, axis=1)
        out = np.empty((k, t), dtype=np.int64)
        step = max(1, 2_000_000 // max(k, 1))
        for lo in range(0, k, step):
            hi = min(lo + step, k)
            d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * (w[lo:hi] @ w.T)
            out[lo:hi] = np.argsort(d2, axis=1, kind="stable")[:, :t]
        return out


def _lattice_rows(m: int, h: int) -> np.ndarray:
    rows = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            rows.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], h, m)
    return np.asarray(rows, dtype=float) / h


def das_dennis_vectors(m: int, h: int) -> ReferenceVectors:
    if m < 2 or h < 1:
        raise ValueError("need m >= 2 objectives and h >= 1 divisions")
    w = _lattice_rows(m, h)
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    return ReferenceVectors(w, w / norms)


def largest_lattice_h(m: int, n: int) -> int:
    """Largest h whose lattice has at most n points (minimum 1)."""
    h = 1
    while math.comb(h + m, m - 1) <= n:
        h += 1
    return h


# ---------------------------------------------------------------------------
# scalarizers and fitness assignments
# ---------------------------------------------------------------------------

def pbi_scalarize(fv: np.ndarray, lam: np.ndarray, z_star: np.ndarray,
                  theta: float = 5.0) -> float:
    """Penalty boundary intersection: projection distance along the weight
    ray plus theta times the perpendicular deviation."""
    fv = np.asarray(fv, dtype=float)
    lam = np.asarray(lam, dtype=float)
    z = np.asarray(z_star, dtype=float)
    norm = np.linalg.norm(lam)
    if norm == 0:
        raise ValueError("weight vector must be non-zero")
    diff = fv - z
    d1 = abs(float(diff @ lam)) / norm
    d2 = float(np.linalg.norm(diff - d1 * lam / norm))
    return d1 + theta * d2


def _pbi_batch(diff: np.ndarray, lam: np.ndarray, theta: float) -> np.ndarray:
    """PBI of many translated objective vectors against one weight."""
    norm = np.linalg.norm(lam)
    d1 = np.abs(diff @ lam) / norm
    d2 = np.linalg.norm(diff - d1[:, None] * (lam / norm), axis=1)
    return d1 + theta * d2


def spea2_fitness(f: np.ndarray) -> np.ndarray:
    """Strength-raw-density fitness; non-dominated points score below 1."""
    fit, _, _ = _spea2_assign(np.atleast_2d(np.asarray(f, dtype=float)))
    return fit


def _spea2_assign(f: np.ndarray):
    pool = len(f)
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    dom = le & lt
    strength = dom.sum(axis=1).astype(float)
    raw = dom.T.astype(float) @ strength
    sq = np.sum(f * f, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (f @ f.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    k = max(int(math.isqrt(pool)), 1)
    kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
    sigma = np.sqrt(np.maximum(kth, 0.0))
    density = 1.0 / (sigma + 2.0)
    return raw + density, dom, d2


def _spea2_truncate(nd_idx: np.ndarray, d2_pool: np.ndarray, n_keep: int) -> np.ndarray:
    """Iteratively drop the member with the lexicographically smallest sorted
    distance vector until n_keep remain.  Nearest-neighbor values are cached
    and only re-derived for rows whose nearest neighbor was removed."""
    m = len(nd_idx)
    d2 = d2_pool[np.ix_(nd_idx, nd_idx)].copy()
    np.fill_diagonal(d2, np.inf)
    alive = np.ones(m, dtype=bool)
    nn_val = d2.min(axis=1)
    nn_arg = d2.argmin(axis=1)
    for _ in range(m - n_keep):
        cand_val = np.where(alive, nn_val, np.inf)
        best = cand_val.min()
        cand = np.flatnonzero(cand_val == best)
        if len(cand) > 1:
            alive_cols = np.flatnonzero(alive)
            rows = np.sort(d2[np.ix_(cand, alive_cols)], axis=1)
            w = cand[np.lexsort(rows.T[::-1])[0]]
        else:
            w = cand[0]
        alive[w] = False
        d2[:, w] = np.inf
        stale = np.flatnonzero(alive & (nn_arg == w))
        for i in stale:
            nn_arg[i] = d2[i].argmin()
            nn_val[i] = d2[i, nn_arg[i]]
    return nd_idx[np.flatnonzero(alive)]


def hype_fitness(f: np.ndarray, ref: np.ndarray, samples: int = 10000,
                 r=None, k: Optional[int] = None) -> np.ndarray:
    """Monte Carlo shared-hypervolume fitness.

    Each sample dominated by exactly j points credits each dominator
    alpha_j / j with alpha_j = prod_{l=1..j-1} (k - l)/(n - l), the loss-time
    weighting for removing k of n points; k defaults to n.
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    ref = np.asarray(ref, dtype=float).ravel()
    n = len(f)
    if k is None:
        k = n
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = _rng(r) if r is not None else np.random.default_rng(0)
    inside = np.all(f < ref, axis=1)
    if not inside.any():
        return np.zeros(n)
    ideal = f[inside].min(axis=0)
    box = float(np.prod(ref - ideal))
    draws = ideal + rng.random((int(samples), len(ref))) * (ref - ideal)
    dom = np.zeros((len(draws), n), dtype=bool)
    for i in np.flatnonzero(inside):
        dom[:, i] = np.all(draws >= f[i], axis=1)
    return _hype_share(dom, n, k) * (box / samples)


def _hype_share(dom: np.ndarray, n: int, k: int) -> np.ndarray:
    """Sum of alpha_j / j credits per point for a sample-dominance matrix."""
    j_counts = dom.sum(axis=1)
    alpha = np.zeros(n + 1)
    if n >= 1:
        alpha[1] = 1.0
        for j in range(2, n + 1):
            alpha[j] = alpha[j - 1] * (k - (j - 1)) / (n - (j - 1))
    credit = np.where(j_counts > 0, alpha[j_counts] / np.maximum(j_counts, 1), 0.0)
    return dom.T @ credit


# ---------------------------------------------------------------------------
# shared variation (tournament + SBX + PM)
# ---------------------------------------------------------------------------

def _tournament(rng, key_a, key_b, n_out):
    n = len(key_a)
    i1 = rng.integers(0, n, n_out)
    i2 = rng.integers(0, n, n_out)
    first = (key_a[i1] < key_a[i2]) | ((key_a[i1] == key_a[i2]) & (key_b[i1] <= key_b[i2]))
    return np.where(first, i1, i2)


def _mo_variation(rng, x, key_a, key_b, bounds: Bounds, pm=None):
    """Binary tournament on (key_a, key_b) lexicographically (lower wins),
    SBX pairing, then polynomial mutation; returns len(x) children."""
    n, d = x.shape
    sel = _tournament(rng, key_a, key_b, n)
    half = n // 2
    c1, c2 = _sbx_batch(rng, x[sel[:half]], x[sel[half: 2 * half]], bounds)
    children = np.vstack([c1, c2])
    if n % 2:
        children = np.vstack([children, x[sel[-1]][None, :]])
    return polynomial_mutation(children, 20.0, pm if pm is not None else 1.0 / d,
                               bounds, rng)


def _random_pair_variation(rng, x, bounds: Bounds, pm=None):
    """Shuffled pairing without selection pressure, SBX + PM."""
    n, d = x.shape
    perm = rng.permutation(n)
    half = n // 2
    c1, c2 = _sbx_batch(rng, x[perm[:half]], x[perm[half: 2 * half]], bounds)
    children = np.vstack([c1, c2])
    if n % 2:
        children = np.vstack([children, x[perm[-1]][None, :]])
    return polynomial_mutation(children, 20.0, pm if pm is not None else 1.0 / d,
                               bounds, rng)


# ---------------------------------------------------------------------------
# NSGA-II
# ---------------------------------------------------------------------------

@dataclass
class Nsga2State:
    ranks: np.ndarray
    crowd: np.ndarray


def _rank_and_crowd(f: np.ndarray):
    ranks = _front_ranks(f)
    crowd = np.empty(len(f))
    for r in range(int(ranks.max()) + 1):
        fr = np.flatnonzero(ranks == r)
        crowd[fr] = crowding_distance(f[fr])
    return ranks, crowd


def nsga2_init(pop: Population, p: ProblemInstance, r=None):
    ranks, crowd = _rank_and_crowd(pop.f)
    return Nsga2State(ranks, crowd), pop


def _crowding_truncation(pf: np.ndarray, n: int) -> np.ndarray:
    """Front-by-front fill; the straddling front is cut by crowding."""
    ranks = _front_ranks(pf)
    keep: list[int] = []
    for r in range(int(ranks.max()) + 1):
        fr = np.flatnonzero(ranks == r)
        if len(keep) + len(fr) <= n:
            keep.extend(fr.tolist())
            if len(keep) == n:
                break
        else:
            cd = crowding_distance(pf[fr])
            o = np.argsort(-cd, kind="stable")
            keep.extend(fr[o[: n - len(keep)]].tolist())
            break
    return np.asarray(keep)


def nsga2_step(s: Nsga2State, pop: Population, p: ProblemInstance, r,
               backend: BackendSpec = _SERIAL):
    rng = _rng(r)
    n = pop.n
    children = _mo_variation(rng, pop.x, s.ranks, -s.crowd, p.bounds)
    fch = _eval_rows(backend, p, children)
    px = np.vstack([pop.x, children])
    pf = np.vstack([pop.f, fch])
    keep = _crowding_truncation(pf, n)
    new_pop = Population(px[keep], pf[keep], pop.nfe_stamp + n)
    ranks, crowd = _rank_and_crowd(new_pop.f)
    return Nsga2State(ranks, crowd), new_pop


# ---------------------------------------------------------------------------
# NSGA-III
# ---------------------------------------------------------------------------

@dataclass
class Nsga3State:
    refs: ReferenceVectors
    ranks: np.ndarray


def nsga3_init(pop: Population, p: ProblemInstance, r=None):
    refs = das_dennis_vectors(pop.m, largest_lattice_h(pop.m, pop.n))
    return Nsga3State(refs, _front_ranks(pop.f)), pop


def _asf_extremes(fp: np.ndarray) -> np.ndarray:
    """Extreme point per objective by achievement scalarizing minimization."""
    m = fp.shape[1]
    idx = np.empty(m, dtype=np.int64)
    for j in range(m):
        w = np.full(m, 1e-6)
        w[j] = 1.0
        idx[j] = int(np.argmin(np.max(fp / w, axis=1)))
    return fp[idx]


def _nsga3_normalize(f: np.ndarray) -> np.ndarray:
    z_min = f.min(axis=0)
    fp = f - z_min
    extremes = _asf_extremes(fp)
    intercepts = None
    try:
        u = np.linalg.solve(extremes, np.ones(len(extremes)))
        with np.errstate(divide="ignore", over="ignore"):
            a = 1.0 / u
        if np.all(np.isfinite(a)) and np.all(a > 1e-12):
            intercepts = a
    except np.linalg.LinAlgError:
        intercepts = None
    if intercepts is None:
        intercepts = fp.max(axis=0)
    intercepts = np.where(intercepts > 1e-12, intercepts, 1.0)
    return fp / intercepts


def _associate(fn: np.ndarray, unit: np.ndarray):
    """Closest reference line per point by perpendicular distance."""
    proj = fn @ unit.T
    d2 = np.sum(fn * fn, axis=1)[:, None] - proj ** 2
    np.maximum(d2, 0.0, out=d2)
    which = np.argmin(d2, axis=1)
    dist = np.sqrt(d2[np.arange(len(fn)), which])
    return which, dist


def _nsga3_truncation(pf: np.ndarray, n: int, refs: ReferenceVectors, rng) -> np.ndarray:
    ranks = _front_ranks(pf)
    chosen: list[int] = []
    r = 0
    while len(chosen) + np.count_nonzero(ranks == r) <= n:
        fr = np.flatnonzero(ranks == r)
        chosen.extend(fr.tolist())
        if len(chosen) == n:
            return np.asarray(chosen)
        r += 1
    last = np.flatnonzero(ranks == r)
    fn = _nsga3_normalize(pf)
    assoc, dist = _associate(fn, refs.unit)
    rho = np.bincount(assoc[np.asarray(chosen, dtype=int)] if chosen else
                      np.empty(0, dtype=int), minlength=refs.k)
    members: list[list[int]] = [[] for _ in range(refs.k)]
    for i in last:
        members[assoc[i]].append(int(i))
    active = np.array([len(mem) > 0 for mem in members])
    while len(chosen) < n:
        live = np.flatnonzero(active)
        min_rho = rho[live].min()
        ties = live[rho[live] == min_rho]
        j = int(ties[rng.integers(0, len(ties))]) if len(ties) > 1 else int(ties[0])
        cand = members[j]
        if rho[j] == 0:
            pick = min(range(len(cand)), key=lambda q: dist[cand[q]])
        else:
            pick = int(rng.integers(0, len(cand)))
        chosen.append(cand.pop(pick))
        rho[j] += 1
        if not cand:
            active[j] = False
    return np.asarray(chosen)


def nsga3_step(s: Nsga3State, pop: Population, p: ProblemInstance, r,
               backend: BackendSpec = _SERIAL):
    rng = _rng(r)
    n = pop.n
    children = _mo_variation(rng, pop.x, s.ranks, np.zeros(n), p.bounds)
    fch = _eval_rows(backend, p, children)
    px = np.vstack([pop.x, children])
    pf = np.vstack([pop.f, fch])
    keep = _nsga3_truncation(pf, n, s.refs, rng)
    new_pop = Population(px[keep], pf[keep], pop.nfe_stamp + n)
    return Nsga3State(s.refs, _front_ranks(new_pop.f)), new_pop


# ---------------------------------------------------------------------------
# SPEA2
# ---------------------------------------------------------------------------

@dataclass
class Spea2State:
    archive_x: np.ndarray
    archive_f: np.ndarray
    archive_fit: np.ndarray


def spea2_init(pop: Population, p: ProblemInstance, r=None):
    d, m = pop.x.shape[1], pop.m
    state = Spea2State(np.empty((0, d)), np.empty((0, m)), np.empty(0))
    return state, pop


def spea2_step(s: Spea2State, pop: Population, p: ProblemInstance, r,
               backend: BackendSpec = _SERIAL):
    """Archive-based flow: pool the population with the previous archive,
    assign strength/raw/density fitness, keep the non-dominated set (truncated
    or topped up to N), then breed the next population from the archive."""
    rng = _rng(r)
    n = pop.n
    px = np.vstack([pop.x, s.archive_x])
    pf = np.vstack([pop.f, s.archive_f])
    fit, _, d2 = _spea2_assign(pf)
    nd = np.flatnonzero(fit < 1.0)
    if len(nd) > n:
        keep = _spea2_truncate(nd, d2, n)
    elif len(nd) < n:
        keep = np.argsort(fit, kind="stable")[:n]
    else:
        keep = nd
    ax, af, afit = px[keep], pf[keep], fit[keep]
    children = _mo_variation(rng, ax, afit, np.zeros(len(ax)), p.bounds,
                             pm=1.0 / ax.shape[1])
    fch = _eval_rows(backend, p, children)
    new_pop = Population(children, fch, pop.nfe_stamp + n)
    return Spea2State(ax, af, afit), new_pop


def spea2_report(s: Spea2State, pop: Population) -> np.ndarray:
    return s.archive_f if len(s.archive_f) else pop.f


# ---------------------------------------------------------------------------
# IBEA
# ---------------------------------------------------------------------------

@dataclass
class IbeaState:
    fitness: np.ndarray
    kappa: float = 0.05
    indicator: str = "eps"        # "eps" (additive epsilon) or "hv"


def ibea_init(pop: Population, p: ProblemInstance, r=None,
              kappa: float = 0.05, indicator: str = "eps"):
    if indicator not in ("eps", "hv"):
        raise ValueError(f"unknown indicator {indicator!r}")
    fit = _ibea_fitness(pop.f, kappa, indicator)
    return IbeaState(fit, kappa, indicator), pop


def _eps_indicator_matrix(f: np.ndarray) -> np.ndarray:
    """I[j, i] = additive epsilon by which j must improve to weakly dominate i."""
    return np.max(f[:, None, :] - f[None, :, :], axis=2)


def _hv_indicator_matrix(f: np.ndarray) -> np.ndarray:
    """I[j, i] = HV({i, j}) - HV({j}): the volume i adds beyond j."""
    from .metrics import hypervolume
    nadir = f.max(axis=0)
    ideal = f.min(axis=0)
    ref = nadir + 0.1 * np.maximum(nadir - ideal, 1e-12)
    n = len(f)
    hv_single = np.array([hypervolume(f[i: i + 1], ref) for i in range(n)])
    mat = np.empty((n, n))
    for j in range(n):
        for i in range(n):
            if i == j:
                mat[j, i] = 0.0
            else:
                mat[j, i] = hypervolume(f[[i, j]], ref) - hv_single[j]
    return mat


def _ibea_fitness_naive(f: np.ndarray, kappa: float, indicator: str):
    ind = _eps_indicator_matrix(f) if indicator == "eps" else _hv_indicator_matrix(f)
    c = np.abs(ind).max()
    if c == 0:
        return np.zeros(len(f)), None
    e = -np.exp(-ind / (c * kappa))
    np.fill_diagonal(e, 0.0)
    return e.sum(axis=0), {"exp_terms": -e}


def _ibea_fitness_fast2(f: np.ndarray, kappa: float):
    """Two-objective additive-epsilon fitness in O(n log n).

    With t = f1 - f2, the epsilon between j and i picks the f1 branch exactly
    when t_j >= t_i, so the exponential sums split into prefix/suffix sums
    over t-sorted order.  Values are range-shifted so every exponent is at
    most 1/kappa.
    """
    a, b = f[:, 0], f[:, 1]
    t = a - b
    c = max(a.max() - a.min(), b.max() - b.min())
    if c == 0:
        return np.zeros(len(f)), None
    s = c * kappa
    an = (a - a.min()) / s
    bn = (b - b.min()) / s
    ea_p, ea_n = np.exp(an), np.exp(-an)
    eb_p, eb_n = np.exp(bn), np.exp(-bn)
    order = np.argsort(t, kind="stable")
    ea_n_o = ea_n[order]
    eb_n_o = eb_n[order]
    suffix = np.cumsum(ea_n_o[::-1])[::-1]
    prefix = np.concatenate([[0.0], np.cumsum(eb_n_o)[:-1]])
    tv = t[order]
    change = np.empty(len(tv), dtype=bool)
    change[0] = True
    change[1:] = tv[1:] != tv[:-1]
    starts = np.flatnonzero(change)[np.cumsum(change) - 1]
    fa = ea_p[order] * suffix[starts]          # includes the self term exp(0)
    fb = eb_p[order] * prefix[starts]
    fit = np.empty(len(f))
    fit[order] = -(fa + fb) + 1.0
    aux = {"t": t, "ea_p": ea_p, "ea_n": ea_n, "eb_p": eb_p, "eb_n": eb_n}
    return fit, aux


def _ibea_fitness(f: np.ndarray, kappa: float, indicator: str) -> np.ndarray:
    if indicator == "eps" and f.shape[1] == 2:
        return _ibea_fitness_fast2(f, kappa)[0]
    return _ibea_fitness_naive(f, kappa, indicator)[0]


def _ibea_env_select(f: np.ndarray, n_keep: int, kappa: float, indicator: str):
    """Remove the worst individual repeatedly, updating fitness in place."""
    pool = len(f)
    if indicator == "eps" and f.shape[1] == 2:
        fit, aux = _ibea_fitness_fast2(f, kappa)
        if aux is None:
            return np.arange(n_keep), fit[:n_keep]
        t = aux["t"]
        ea_p, ea_n = aux["ea_p"], aux["ea_n"]
        eb_p, eb_n = aux["eb_p"], aux["eb_n"]
        work = fit.copy()
        alive = np.ones(pool, dtype=bool)
        for _ in range(pool - n_keep):
            w = int(np.argmin(work))
            alive[w] = False
            work += np.where(t <= t[w], ea_p * ea_n[w], eb_p * eb_n[w])
            work[w] = np.inf
        idx = np.flatnonzero(alive)
        return idx, work[idx]
    if pool > 4096:
        raise ValueError("pairwise indicator selection is limited to pools "
                         "of 4096 for three or more objectives")
    fit, aux = _ibea_fitness_naive(f, kappa, indicator)
    if aux is None:
        return np.arange(n_keep), fit[:n_keep]
    exp_terms = aux["exp_terms"]
    work = fit.copy()
    alive = np.ones(pool, dtype=bool)
    for _ in range(pool - n_keep):
        w = int(np.argmin(work))
        alive[w] = False
        work += exp_terms[w]
        work[w] = np.inf
    idx = np.flatnonzero(alive)
    return idx, work[idx]


def ibea_step(s: IbeaState, pop: Population, p: ProblemInstance, r,
              backend: BackendSpec = _SERIAL):
    rng = _rng(r)
    n = pop.n
    children = _mo_variation(rng, pop.x, -s.fitness, np.zeros(n), p.bounds)
    fch = _eval_rows(backend, p, children)
    px = np.vstack([pop.x, children])
    pf = np.vstack([pop.f, fch])
    keep, fit = _ibea_env_select(pf, n, s.kappa, s.indicator)
    new_pop = Population(px[keep], pf[keep], pop.nfe_stamp + n)
    return IbeaState(fit, s.kappa, s.indicator), new_pop


# ---------------------------------------------------------------------------
# HypE
# ---------------------------------------------------------------------------

@dataclass
class HypeState:
    fitness: np.ndarray
    samples: int = 10000


def _nadir_ref(f: np.ndarray) -> np.ndarray:
    nadir = f.max(axis=0)
    ideal = f.min(axis=0)
    return nadir + 0.1 * np.maximum(nadir - ideal, 1e-12)


def hype_init(pop: Population, p: ProblemInstance, r=None, samples: int = 10000):
    fit = hype_fitness(pop.f, _nadir_ref(pop.f), samples,
                       r if r is not None else RngStream(0))
    return HypeState(fit, samples), pop


def _hype_env_select(pf: np.ndarray, n: int, samples: int, rng) -> np.ndarray:
    """Drop the lowest shared-contribution member one at a time against one
    fixed sample set, re-weighting after every removal (the removal count k
    shrinks, so credits must be rebuilt each round)."""
    pool = len(pf)
    if pool > 4096:
        raise ValueError("sampled contribution selection is limited to pools "
                         "of 4096")
    ideal = pf.min(axis=0)
    ref = _nadir_ref(pf)
    draws = ideal + rng.random((samples, pf.shape[1])) * (ref - ideal)
    dom = np.zeros((samples, pool), dtype=np.float32)
    for i in range(pool):
        dom[:, i] = np.all(draws >= pf[i], axis=1)
    alive = np.ones(pool, dtype=bool)
    j_counts = dom.sum(axis=1).astype(np.int64)
    n_live = pool
    while n_live > n:
        k = n_live - n
        alpha = np.zeros(n_live + 1)
        alpha[1] = 1.0
        for j in range(2, n_live + 1):
            alpha[j] = alpha[j - 1] * (k - (j - 1)) / (n_live - (j - 1))
        credit = np.where(j_counts > 0,
                          alpha[j_counts] / np.maximum(j_counts, 1), 0.0)
        share = dom.T @ credit.astype(np.float32)
        share[~alive] = np.inf
        w = int(np.argmin(share))
        alive[w] = False
        j_counts -= dom[:, w].astype(np.int64)
        dom[:, w] = 0.0
        n_live -= 1
    return np.flatnonzero(alive)


def hype_step(s: HypeState, pop: Population, p: ProblemInstance, r,
              backend: BackendSpec = _SERIAL):
    rng = _rng(r)
    n = pop.n
    children = _mo_variation(rng, pop.x, -s.fitness, np.zeros(n), p.bounds)
    fch = _eval_rows(backend, p, children)
    px = np.vstack([pop.x, children])
    pf = np.vstack([pop.f, fch])
    keep = _hype_env_select(pf, n, s.samples, rng)
    new_pop = Population(px[keep], pf[keep], pop.nfe_stamp + n)
    nadir = new_pop.f.max(axis=0)
    ideal = new_pop.f.min(axis=0)
    ref = nadir + 0.1 * np.maximum(nadir - ideal, 1e-12)
    fit = hype_fitness(new_pop.f, ref, s.samples, rng)
    return HypeState(fit, s.samples), new_pop


# ---------------------------------------------------------------------------
# MOEA/D
# ---------------------------------------------------------------------------

@dataclass
class MoeadState:
    refs: ReferenceVectors
    neighbors: np.ndarray
    z: np.ndarray
    theta: float = 5.0
    n_r: int = 2


def moead_init(pop: Population, p: ProblemInstance, r=None,
               theta: float = 5.0, n_r: int = 2, t_size: Optional[int] = None):
    """The working population matches the weight lattice: K = largest
    Das-Dennis size not exceeding N (rows resampled/truncated as needed)."""
    m = pop.m
    refs = das_dennis_vectors(m, largest_lattice_h(m, pop.n))
    k = refs.k
    x, f = pop.x[:k], pop.f[:k]
    if k > pop.n:
        extra = k - pop.n
        rng = _rng(r) if r is not None else np.random.default_rng(0)
        xe = p.bounds.sample(extra, rng)
        fe = evaluate_batch(p, xe)
        x = np.vstack([x, xe])
        f = np.vstack([f, fe])
    t = t_size if t_size is not None else min(20, k)
    state = MoeadState(refs, refs.neighbor_table(t), f.min(axis=0), theta, n_r)
    return state, Population(x, f, pop.nfe_stamp + max(k - pop.n, 0))


def moead_step(s: MoeadState, pop: Population, p: ProblemInstance, r,
               backend: BackendSpec = _SERIAL):
    """Batch-synchronous variant: children for all K subproblems are bred
    from the current generation and evaluated together, then the replacement
    scan walks subproblems in index order, updating the ideal point as it
    goes, replacing at most n_r neighbors per child on strict PBI improvement."""
    rng = _rng(r)
    k, d = pop.x.shape
    picks = rng.integers(0, s.neighbors.shape[1], (k, 2))
    mates = np.take_along_axis(s.neighbors, picks, axis=1)
    c1, c2 = _sbx_batch(rng, pop.x[mates[:, 0]], pop.x[mates[:, 1]], p.bounds)
    use_first = rng.random(k) < 0.5
    children = np.where(use_first[:, None], c1, c2)
    children = polynomial_mutation(children, 20.0, 1.0 / d, p.bounds, rng)
    fch = _eval_rows(backend, p, children)

    new_x = pop.x.copy()
    new_f = pop.f.copy()
    z = s.z.copy()
    w_all = s.refs.weights
    w_norms = np.linalg.norm(w_all, axis=1)
    for i in range(k):
        z = np.minimum(z, fch[i])
        neigh = s.neighbors[i]
        w = w_all[neigh]
        nw = w_norms[neigh]
        diff_c = fch[i] - z
        d1c = np.abs(w @ diff_c) / nw
        d2c = np.linalg.norm(diff_c[None, :] - (d1c / nw)[:, None] * w, axis=1)
        diff_p = new_f[neigh] - z
        d1p = np.abs(np.sum(diff_p * w, axis=1)) / nw
        d2p = np.linalg.norm(diff_p - (d1p / nw)[:, None] * w, axis=1)
        improving = np.flatnonzero(d1c + s.theta * d2c < d1p + s.theta * d2p)
        for j in neigh[improving[: s.n_r]]:
            new_x[j] = children[i]
            new_f[j] = fch[i]
    new_state = MoeadState(s.refs, s.neighbors, z, s.theta, s.n_r)
    return new_state, Population(new_x, new_f, pop.nfe_stamp + k)


# ---------------------------------------------------------------------------
# RVEA
# ---------------------------------------------------------------------------

@dataclass
class RveaState:
    refs: ReferenceVectors
    current_unit: np.ndarray
    gamma: np.ndarray
    z: np.ndarray
    t: int
    t_max: int
    alpha: float = 2.0
    fr: float = 0.1


def _min_vector_angles(unit: np.ndarray) -> np.ndarray:
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(cos, -1.0)
    gamma = np.arccos(cos.max(axis=1))
    return np.maximum(gamma, 1e-12)


def rvea_init(pop: Population, p: ProblemInstance, r=None, t_max: int = 100,
              alpha: float = 2.0, fr: float = 0.1):
    refs = das_dennis_vectors(pop.m, largest_lattice_h(pop.m, pop.n))
    unit = refs.unit.copy()
    state = RveaState(refs, unit, _min_vector_angles(unit), pop.f.min(axis=0),
                      0, max(t_max, 1), alpha, fr)
    return state, pop


def rvea_step(s: RveaState, pop: Population, p: ProblemInstance, r,
              backend: BackendSpec = _SERIAL):
    """Angle-penalized-distance selection: each reference direction keeps its
    best APD member; survivors are resampled up to N when niches are empty."""
    rng = _rng(r)
    n = pop.n
    children = _random_pair_variation(rng, pop.x, p.bounds)
    fch = _eval_rows(backend, p, children)
    px = np.vstack([pop.x, children])
    pf = np.vstack([pop.f, fch])
    z = np.minimum(s.z, pf.min(axis=0))
    fp = pf - z
    norms = np.linalg.norm(fp, axis=1)
    safe = np.where(norms > 1e-12, norms, 1.0)
    cos = np.clip((fp / safe[:, None]) @ s.current_unit.T, -1.0, 1.0)
    assoc = np.argmax(cos, axis=1)
    angle = np.arccos(cos[np.arange(len(fp)), assoc])
    t_ratio = (s.t / s.t_max) ** s.alpha
    apd = (1.0 + pop.m * t_ratio * (angle / s.gamma[assoc])) * norms
    survivors = []
    for j in range(s.refs.k):
        mem = np.flatnonzero(assoc == j)
        if len(mem):
            survivors.append(int(mem[np.argmin(apd[mem])]))
    survivors = np.asarray(survivors)
    if len(survivors) < n:
        extra = survivors[rng.integers(0, len(survivors), n - len(survivors))]
        survivors = np.concatenate([survivors, extra])
    new_pop = Population(px[survivors], pf[survivors], pop.nfe_stamp + n)

    t_next = s.t + 1
    unit, gamma = s.current_unit, s.gamma
    period = max(int(math.ceil(s.fr * s.t_max)), 1)
    if t_next % period == 0:
        span = pf.max(axis=0) - pf.min(axis=0)
        scaled = s.refs.weights * np.where(span > 1e-12, span, 1.0)
        unit = scaled / np.linalg.norm(scaled, axis=1, keepdims=True)
        gamma = _min_vector_angles(unit)
    new_state = RveaState(s.refs, unit, gamma, z, t_next, s.t_max, s.alpha, s.fr)
    return new_state, new_pop


def rvea_set_t_max(s: RveaState, t_max: int) -> RveaState:
    """Budget hook: lets a time-driven harness revise the horizon estimate."""
    return replace(s, t_max=max(int(t_max), s.t + 1))


# ---------------------------------------------------------------------------
# LMOCSO
# ---------------------------------------------------------------------------

@dataclass
class LmocsoState:
    v: np.ndarray
    refs: ReferenceVectors
    z: np.ndarray
    archive_x: np.ndarray
    archive_f: np.ndarray


def lmocso_init(pop: Population, p: ProblemInstance, r=None):
    refs = das_dennis_vectors(pop.m, largest_lattice_h(pop.m, pop.n))
    nd = _nd_mask(pop.f)
    state = LmocsoState(np.zeros_like(pop.x), refs, pop.f.min(axis=0),
                        pop.x[nd].copy(), pop.f[nd].copy())
    return state, pop


def _ref_vector_truncate(f: np.ndarray, score: np.ndarray,
                         refs: ReferenceVectors, z: np.ndarray, n: int):
    """Keep at most one best-scored member per reference direction, then top
    up with the best remaining scores to n."""
    fp = f - z
    norms = np.linalg.norm(fp, axis=1)
    safe = np.where(norms > 1e-12, norms, 1.0)
    cos = np.clip((fp / safe[:, None]) @ refs.unit.T, -1.0, 1.0)
    assoc = np.argmax(cos, axis=1)
    keep = []
    for j in range(refs.k):
        mem = np.flatnonzero(assoc == j)
        if len(mem):
            keep.append(int(mem[np.argmin(score[mem])]))
    keep = list(dict.fromkeys(keep))
    if len(keep) < n:
        rest = [i for i in np.argsort(score, kind="stable") if i not in set(keep)]
        keep.extend(int(i) for i in rest[: n - len(keep)])
    return np.asarray(keep[:n])


def lmocso_step(s: LmocsoState, pop: Population, p: ProblemInstance, r,
                backend: BackendSpec = _SERIAL):
    """Competitive-swarm update on convergence score ||f - z*||: losers chase
    winners with a two-stage velocity move and are re-evaluated; the external
    archive absorbs the moved losers under reference-vector truncation."""
    rng = _rng(r)
    n, d = pop.x.shape
    half = n // 2
    if half == 0:
        return s, pop
    z = np.minimum(s.z, pop.f.min(axis=0))
    score = np.linalg.norm(pop.f - z, axis=1)
    perm = rng.permutation(n)
    a, b = perm[:half], perm[half: 2 * half]
    a_wins = score[a] <= score[b]
    win = np.where(a_wins, a, b)
    lose = np.where(a_wins, b, a)
    r1 = rng.random((half, d))
    r2 = rng.random((half, d))
    v_old = s.v[lose]
    v_new = r1 * v_old + r2 * (pop.x[win] - pop.x[lose])
    x_new = pop.x[lose] + v_new + r1 * (v_new - v_old)
    x_new = clamp_to_bounds(x_new, p.bounds)
    f_new = _eval_rows(backend, p, x_new)

    new_v = s.v.copy()
    new_v[lose] = v_new
    new_x = pop.x.copy()
    new_x[lose] = x_new
    new_f = pop.f.copy()
    new_f[lose] = f_new
    z = np.minimum(z, f_new.min(axis=0))

    pool_x = np.vstack([s.archive_x, x_new])
    pool_f = np.vstack([s.archive_f, f_new])
    nd = _nd_mask(pool_f)
    pool_x, pool_f = pool_x[nd], pool_f[nd]
    if len(pool_f) > n:
        sc = np.linalg.norm(pool_f - z, axis=1)
        keep = _ref_vector_truncate(pool_f, sc, s.refs, z, n)
        pool_x, pool_f = pool_x[keep], pool_f[keep]
    new_state = LmocsoState(new_v, s.refs, z, pool_x, pool_f)
    return new_state, Population(new_x, new_f, pop.nfe_stamp + half)


def lmocso_report(s: LmocsoState, pop: Population) -> np.ndarray:
    return s.archive_f if len(s.archive_f) else pop.f
