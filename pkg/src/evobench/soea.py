"""Single-objective algorithms as explicit state-transition steps.

Each algorithm is a small state dataclass plus ``*_init`` / ``*_step``
functions.  Steps are pure transitions: they take the current state and
population, draw randomness from the supplied stream, hand fitness evaluation
to a backend, and return the successor state and population.  The returned
population's ``nfe_stamp`` advances by exactly the number of rows evaluated.

Randomness is drawn centrally on the orchestrating thread, so results do not
depend on backend worker count or chunking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .backend import BackendSpec, map_row_blocks
from .core import Population, RngStream, clamp_to_bounds
from .problems import ProblemInstance, evaluate_batch

__all__ = [
    "PsoState", "pso_init", "pso_step",
    "CsoState", "cso_init", "cso_step",
    "DeState", "de_init", "de_step",
    "SadeState", "sade_init", "sade_step",
    "GaConfig", "ga_init", "ga_step",
    "CmaState", "cma_init", "cmaes_step",
    "IpopState", "ipop_init", "ipop_step", "ipop_restart_decision",
    "sbx_crossover", "polynomial_mutation",
    "uniform_crossover", "gaussian_mutation",
]

_SERIAL = BackendSpec.serial()


def _rng(r) -> np.random.Generator:
    """Accept either a stream descriptor or an already-running generator."""
    return r.generator() if isinstance(r, RngStream) else r


def _eval_rows(backend: BackendSpec, p: ProblemInstance, x: np.ndarray) -> np.ndarray:
    return map_row_blocks(backend, len(x), lambda lo, hi: evaluate_batch(p, x[lo:hi]))


def _distinct_indices(rng: np.random.Generator, n: int, k: int) -> list[np.ndarray]:
    """k index columns in [0, n), distinct per row and != the row index."""
    idx = np.arange(n)
    cols: list[np.ndarray] = []
    for _ in range(k):
        c = rng.integers(0, n, n)
        while True:
            bad = c == idx
            for prev in cols:
                bad |= c == prev
            nb = int(bad.sum())
            if nb == 0:
                break
            c[bad] = rng.integers(0, n, nb)
        cols.append(c)
    return cols


# ---------------------------------------------------------------------------
# variation operators (shared by GA and the multi-objective algorithms)
# ---------------------------------------------------------------------------

def _sbx_batch(rng, p1, p2, bounds, eta_c=20.0, pc=1.0):
    """Simulated binary crossover on parent row pairs.

    Per gene: spread factor from the SBX polynomial with probability 0.5,
    otherwise pass-through, then children swapped per gene with probability
    0.5 so offspring are gene-wise mixtures rather than whole-line copies.
    """
    n, d = p1.shape
    u = rng.random((n, d))
    beta = np.where(u <= 0.5, (2.0 * u) ** (1.0 / (eta_c + 1.0)),
                    (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta_c + 1.0)))
    cross = rng.random((n, d)) < 0.5
    beta = np.where(cross, beta, 1.0)
    # mean/offset form so identical parents reproduce themselves exactly
    mid = 0.5 * (p1 + p2)
    off = 0.5 * beta * (p2 - p1)
    c1 = mid - off
    c2 = mid + off
    swap = rng.random((n, d)) < 0.5
    c1s = np.where(swap, c2, c1)
    c2s = np.where(swap, c1, c2)
    if pc < 1.0:
        keep = (rng.random(n) >= pc)[:, None]
        c1s = np.where(keep, p1, c1s)
        c2s = np.where(keep, p2, c2s)
    lo, hi = bounds.lower, bounds.upper
    return np.clip(c1s, lo, hi), np.clip(c2s, lo, hi)


def sbx_crossover(parents: np.ndarray, eta_c: float, b, r) -> np.ndarray:
    """Crossover of one parent pair (2 x D) returning two children."""
    parents = np.asarray(parents, dtype=float)
    if parents.shape[0] != 2:
        raise ValueError("expected exactly two parents")
    c1, c2 = _sbx_batch(_rng(r), parents[:1], parents[1:], b, eta_c=eta_c)
    return np.vstack([c1, c2])


def polynomial_mutation(x: np.ndarray, eta_m: float, pm: float, b, r) -> np.ndarray:
    """Polynomial mutation with per-gene probability ``pm``; in-bounds output."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xm = np.atleast_2d(x)
    rng = _rng(r)
    n, d = xm.shape
    lb, ub = b.lower, b.upper
    do = rng.random((n, d)) < pm
    u = rng.random((n, d))
    span = ub - lb
    frac_lo = (xm - lb) / span
    frac_hi = (ub - xm) / span
    dl = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - frac_lo) ** (eta_m + 1.0)) \
        ** (1.0 / (eta_m + 1.0)) - 1.0
    dr = 1.0 - (2.0 * (1.0 - u) + (2.0 * u - 1.0) * (1.0 - frac_hi) ** (eta_m + 1.0)) \
        ** (1.0 / (eta_m + 1.0))
    delta = np.where(u <= 0.5, dl, dr)
    out = np.clip(np.where(do, xm + delta * span, xm), lb, ub)
    return out[0] if single else out


def uniform_crossover(parents: np.ndarray, pc: float, r) -> np.ndarray:
    """Each gene taken from either parent with probability 0.5; with
    probability 1 - pc the pair passes through unchanged."""
    parents = np.asarray(parents, dtype=float)
    if parents.shape[0] != 2:
        raise ValueError("expected exactly two parents")
    rng = _rng(r)
    if rng.random() >= pc:
        return parents.copy()
    pick = rng.random(parents.shape[1]) < 0.5
    c1 = np.where(pick, parents[0], parents[1])
    c2 = np.where(pick, parents[1], parents[0])
    return np.vstack([c1, c2])


def gaussian_mutation(x: np.ndarray, sigma, pm: float, b, r) -> np.ndarray:
    """Additive Gaussian perturbation per gene with probability ``pm``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xm = np.atleast_2d(x)
    rng = _rng(r)
    n, d = xm.shape
    do = rng.random((n, d)) < pm
    out = np.where(do, xm + sigma * rng.standard_normal((n, d)), xm)
    out = np.clip(out, b.lower, b.upper)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# PSO
# ---------------------------------------------------------------------------

@dataclass
class PsoState:
    v: np.ndarray
    pbest_x: np.ndarray
    pbest_f: np.ndarray
    gbest_x: np.ndarray
    gbest_f: float
    w: float = 0.6
    c1: float = 2.5
    c2: float = 0.8


def pso_init(pop: Population, p: ProblemInstance, r=None,
             w: float = 0.6, c1: float = 2.5, c2: float = 0.8) -> PsoState:
    """Zero initial velocities; personal bests seeded from the population."""
    f = pop.f[:, 0]
    gi = int(np.argmin(f))
    return PsoState(np.zeros_like(pop.x), pop.x.copy(), f.copy(),
                    pop.x[gi].copy(), float(f[gi]), w, c1, c2)


def pso_step(s: PsoState, pop: Population, p: ProblemInstance, r,
             backend: BackendSpec = _SERIAL) -> tuple[PsoState, Population]:
    rng = _rng(r)
    n, d = pop.x.shape
    r1 = rng.random((n, d))
    r2 = rng.random((n, d))
    vmax = 0.5 * p.bounds.span
    x, v = pop.x, s.v
    pbx, gbx = s.pbest_x, s.gbest_x
    w, c1, c2 = s.w, s.c1, s.c2
    lo, hi_b = p.bounds.lower, p.bounds.upper

    def block(a, b):
        vb = w * v[a:b] + c1 * r1[a:b] * (pbx[a:b] - x[a:b]) \
            + c2 * r2[a:b] * (gbx - x[a:b])
        np.clip(vb, -vmax, vmax, out=vb)
        xb = np.clip(x[a:b] + vb, lo, hi_b)
        return vb, xb, evaluate_batch(p, xb)

    vn, xn, fn = map_row_blocks(backend, n, block)
    f1 = fn[:, 0]
    imp = f1 <= s.pbest_f
    pbest_x = np.where(imp[:, None], xn, s.pbest_x)
    pbest_f = np.where(imp, f1, s.pbest_f)
    gi = int(np.argmin(pbest_f))
    if pbest_f[gi] <= s.gbest_f:
        gbest_x, gbest_f = pbest_x[gi].copy(), float(pbest_f[gi])
    else:
        gbest_x, gbest_f = s.gbest_x, s.gbest_f
    new_state = PsoState(vn, pbest_x, pbest_f, gbest_x, gbest_f, w, c1, c2)
    return new_state, Population(xn, fn, pop.nfe_stamp + n)


# ---------------------------------------------------------------------------
# CSO
# ---------------------------------------------------------------------------

@dataclass
class CsoState:
    v: np.ndarray
    phi: float = 0.0


def cso_init(pop: Population, p: ProblemInstance, r=None,
             phi: float = 0.0) -> CsoState:
    return CsoState(np.zeros_like(pop.x), phi)


def cso_step(s: CsoState, pop: Population, p: ProblemInstance, r,
             backend: BackendSpec = _SERIAL) -> tuple[CsoState, Population]:
    """Pairwise competitions: each loser learns from its winner (and, when
    phi > 0, from the population mean) and is re-evaluated; winners and any
    unpaired individual pass through.  floor(N/2) new evaluations."""
    rng = _rng(r)
    n, d = pop.x.shape
    half = n // 2
    if half == 0:
        return CsoState(s.v.copy(), s.phi), Population(
            pop.x.copy(), pop.f.copy(), pop.nfe_stamp)
    perm = rng.permutation(n)
    a, b = perm[:half], perm[half: 2 * half]
    f1 = pop.f[:, 0]
    a_wins = f1[a] <= f1[b]
    win = np.where(a_wins, a, b)
    lose = np.where(a_wins, b, a)
    r1 = rng.random((half, d))
    r2 = rng.random((half, d))
    r3 = rng.random((half, d))
    mean_x = pop.x.mean(axis=0)
    v_l = r1 * s.v[lose] + r2 * (pop.x[win] - pop.x[lose]) \
        + s.phi * r3 * (mean_x - pop.x[lose])
    x_l = clamp_to_bounds(pop.x[lose] + v_l, p.bounds)
    f_l = _eval_rows(backend, p, x_l)
    new_v = s.v.copy()
    new_v[lose] = v_l
    new_x = pop.x.copy()
    new_x[lose] = x_l
    new_f = pop.f.copy()
    new_f[lose] = f_l
    return CsoState(new_v, s.phi), Population(new_x, new_f, pop.nfe_stamp + half)


# ---------------------------------------------------------------------------
# DE (rand/1/bin)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeState:
    f: float = 0.5
    cr: float = 0.9


def de_init(pop: Population, p: ProblemInstance, r=None,
            f: float = 0.5, cr: float = 0.9) -> DeState:
    if pop.n < 4:
        raise ValueError("differential evolution needs a population of >= 4")
    return DeState(f, cr)


def de_step(s: DeState, pop: Population, p: ProblemInstance, r,
            backend: BackendSpec = _SERIAL) -> tuple[DeState, Population]:
    n, d = pop.x.shape
    if n < 4:
        raise ValueError("differential evolution needs a population of >= 4")
    rng = _rng(r)
    x, fcur = pop.x, pop.f[:, 0]
    r1, r2, r3 = _distinct_indices(rng, n, 3)
    mutant = x[r1] + s.f * (x[r2] - x[r3])
    jrand = rng.integers(0, d, n)
    mask = rng.random((n, d)) < s.cr
    mask[np.arange(n), jrand] = True
    trial = clamp_to_bounds(np.where(mask, mutant, x), p.bounds)
    ft = _eval_rows(backend, p, trial)[:, 0]
    acc = ft <= fcur
    new_x = np.where(acc[:, None], trial, x)
    new_f = np.where(acc, ft, fcur)
    return s, Population(new_x, new_f, pop.nfe_stamp + n)


# ---------------------------------------------------------------------------
# SaDE
# ---------------------------------------------------------------------------

_SADE_STRATEGIES = ("rand/1/bin", "rand-to-best/2/bin", "rand/2/bin",
                    "current-to-rand/1")


@dataclass
class SadeState:
    """Strategy roulette over four trial-vector strategies with rolling
    success/failure memories of the last ``lp`` generations.  Probabilities
    stay uniform until the learning period has filled once."""

    lp: int = 50
    gen: int = 0
    probs: np.ndarray = field(default_factory=lambda: np.full(4, 0.25))
    crm: np.ndarray = field(default_factory=lambda: np.full(4, 0.5))
    ns_hist: list = field(default_factory=list)
    nf_hist: list = field(default_factory=list)
    cr_hist: list = field(default_factory=list)

    @property
    def strategies(self) -> tuple[str, ...]:
        return _SADE_STRATEGIES


def sade_init(pop: Population, p: ProblemInstance, r=None, lp: int = 50) -> SadeState:
    if pop.n < 6:
        raise ValueError("strategy pool needs a population of >= 6 "
                         "(five distinct donors plus the target)")
    return SadeState(lp=lp)


def _sade_probabilities(ns_hist, nf_hist):
    ns = np.sum(ns_hist, axis=0)
    nf = np.sum(nf_hist, axis=0)
    s = ns / np.maximum(ns + nf, 1) + 0.01
    return s / s.sum()


def sade_step(s: SadeState, pop: Population, p: ProblemInstance, r,
              backend: BackendSpec = _SERIAL) -> tuple[SadeState, Population]:
    n, d = pop.x.shape
    if n < 6:
        raise ValueError("strategy pool needs a population of >= 6 "
                         "(five distinct donors plus the target)")
    rng = _rng(r)
    x, fcur = pop.x, pop.f[:, 0]
    nk = len(_SADE_STRATEGIES)
    strat = rng.choice(nk, size=n, p=s.probs)
    fs = np.clip(rng.normal(0.5, 0.3, n), 1e-4, 2.0)
    cr = np.clip(rng.normal(s.crm[strat], 0.1), 0.0, 1.0)
    r1, r2, r3, r4, r5 = _distinct_indices(rng, n, 5)
    xb = x[np.argmin(fcur)]
    fc = fs[:, None]
    v = np.empty_like(x)
    m0, m1, m2, m3 = (strat == k for k in range(nk))
    v[m0] = x[r1][m0] + fc[m0] * (x[r2][m0] - x[r3][m0])
    v[m1] = x[m1] + fc[m1] * (xb - x[m1]) + fc[m1] * (x[r1][m1] - x[r2][m1]) \
        + fc[m1] * (x[r3][m1] - x[r4][m1])
    v[m2] = x[r1][m2] + fc[m2] * (x[r2][m2] - x[r3][m2]) \
        + fc[m2] * (x[r4][m2] - x[r5][m2])
    kk = rng.random(n)[:, None]
    v[m3] = x[m3] + kk[m3] * (x[r1][m3] - x[m3]) + fc[m3] * (x[r2][m3] - x[r3][m3])
    jrand = rng.integers(0, d, n)
    mask = rng.random((n, d)) < cr[:, None]
    mask[np.arange(n), jrand] = True
    mask[m3] = True  # current-to-rand/1 uses no binomial crossover
    trial = clamp_to_bounds(np.where(mask, v, x), p.bounds)
    ft = _eval_rows(backend, p, trial)[:, 0]
    acc = ft <= fcur

    ns = np.array([int(np.sum(acc & (strat == k))) for k in range(nk)])
    nf = np.array([int(np.sum(~acc & (strat == k))) for k in range(nk)])
    crs = [cr[acc & (strat == k)].tolist() for k in range(nk)]
    ns_hist = s.ns_hist + [ns]
    nf_hist = s.nf_hist + [nf]
    cr_hist = s.cr_hist + [crs]
    if len(ns_hist) > s.lp:
        ns_hist, nf_hist, cr_hist = ns_hist[1:], nf_hist[1:], cr_hist[1:]

    gen = s.gen + 1
    probs, crm = s.probs, s.crm.copy()
    if gen >= s.lp:
        probs = _sade_probabilities(ns_hist, nf_hist)
        for k in range(nk):
            vals = [c for gen_crs in cr_hist for c in gen_crs[k]]
            if vals:
                crm[k] = float(np.median(vals))

    new_x = np.where(acc[:, None], trial, x)
    new_f = np.where(acc, ft, fcur)
    new_state = SadeState(s.lp, gen, probs, crm, ns_hist, nf_hist, cr_hist)
    return new_state, Population(new_x, new_f, pop.nfe_stamp + n)


# ---------------------------------------------------------------------------
# GA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaConfig:
    """Operator selection for the plain genetic algorithm: SBX or uniform
    crossover, polynomial or Gaussian mutation."""

    crossover: str = "sbx"
    mutation: str = "polynomial"
    eta_c: float = 20.0
    eta_m: float = 20.0
    pc: float = 1.0
    pm: Optional[float] = None          # default 1/D at step time
    sigma_frac: float = 0.1             # Gaussian sigma = sigma_frac * span

    def __post_init__(self):
        if self.crossover not in ("sbx", "uniform_random"):
            raise ValueError(f"unknown crossover {self.crossover!r}")
        if self.mutation not in ("polynomial", "gaussian"):
            raise ValueError(f"unknown mutation {self.mutation!r}")


def ga_init(pop: Population, p: ProblemInstance, r=None,
            config: GaConfig = GaConfig()) -> GaConfig:
    return config


def _ga_variation(rng, parents1, parents2, cfg: GaConfig, bounds):
    if cfg.crossover == "sbx":
        c1, c2 = _sbx_batch(rng, parents1, parents2, bounds,
                            eta_c=cfg.eta_c, pc=cfg.pc)
    else:
        pick = rng.random(parents1.shape) < 0.5
        c1 = np.where(pick, parents1, parents2)
        c2 = np.where(pick, parents2, parents1)
        if cfg.pc < 1.0:
            keep = (rng.random(len(parents1)) >= cfg.pc)[:, None]
            c1 = np.where(keep, parents1, c1)
            c2 = np.where(keep, parents2, c2)
    return np.vstack([c1, c2])


def _ga_mutation(rng, children, cfg: GaConfig, bounds):
    d = children.shape[1]
    pm = cfg.pm if cfg.pm is not None else 1.0 / d
    if cfg.mutation == "polynomial":
        return polynomial_mutation(children, cfg.eta_m, pm, bounds, rng)
    sigma = cfg.sigma_frac * bounds.span
    return gaussian_mutation(children, sigma, pm, bounds, rng)


def ga_step(cfg: GaConfig, pop: Population, p: ProblemInstance, r,
            backend: BackendSpec = _SERIAL) -> tuple[GaConfig, Population]:
    """Binary tournament, pairwise crossover, mutation, then elitist
    truncation of parents plus offspring back to N."""
    rng = _rng(r)
    n = pop.n
    x, fcur = pop.x, pop.f[:, 0]
    a = rng.integers(0, n, n)
    b = rng.integers(0, n, n)
    sel = np.where(fcur[a] <= fcur[b], a, b)
    half = n // 2
    children = _ga_variation(rng, x[sel[:half]], x[sel[half: 2 * half]],
                             cfg, p.bounds)
    if n % 2:
        children = np.vstack([children, x[sel[-1]][None, :]])
    children = _ga_mutation(rng, children, cfg, p.bounds)
    fch = _eval_rows(backend, p, children)[:, 0]
    all_x = np.vstack([x, children])
    all_f = np.concatenate([fcur, fch])
    order = np.argsort(all_f, kind="stable")[:n]
    return cfg, Population(all_x[order], all_f[order], pop.nfe_stamp + n)


# ---------------------------------------------------------------------------
# CMA-ES
# ---------------------------------------------------------------------------

@dataclass
class CmaState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    ps: np.ndarray
    pc: np.ndarray
    weights: np.ndarray
    mu: int
    mueff: float
    cs: float
    ds: float
    cc: float
    c1: float
    cmu: float
    lam: int
    gen: int = 0


def cma_weights(mu: int) -> np.ndarray:
    """Log-decreasing recombination weights, normalized to sum 1."""
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    return w / w.sum()


def cma_init(pop_or_dim, p: ProblemInstance, r=None, lam: Optional[int] = None,
             mean: Optional[np.ndarray] = None,
             sigma: Optional[float] = None) -> CmaState:
    """Strategy state with standard cumulation/learning-rate settings.

    The sampler mean starts at the box midpoint unless given; the step size
    defaults to 0.3x the widest bound span.  ``lam`` defaults to the
    population size when a population is passed.
    """
    if isinstance(pop_or_dim, Population):
        d = pop_or_dim.x.shape[1]
        if lam is None:
            lam = pop_or_dim.n
    else:
        d = int(pop_or_dim)
        if lam is None:
            raise ValueError("lam is required when no population is given")
    if lam < 2:
        raise ValueError("sample size lam must be >= 2")
    mu = lam // 2
    w = cma_weights(mu)
    mueff = 1.0 / np.sum(w ** 2)
    cs = (mueff + 2.0) / (d + mueff + 5.0)
    ds = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (d + 1.0)) - 1.0) + cs
    cc = (4.0 + mueff / d) / (d + 4.0 + 2.0 * mueff / d)
    c1 = 2.0 / ((d + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((d + 2.0) ** 2 + mueff))
    if mean is None:
        mean = p.bounds.midpoint.copy()
    if sigma is None:
        sigma = 0.3 * float(np.max(p.bounds.span))
    return CmaState(np.asarray(mean, dtype=float), float(sigma), np.eye(d),
                    np.zeros(d), np.zeros(d), w, mu, float(mueff), cs, ds, cc,
                    c1, cmu, int(lam))


def cmaes_step(s: CmaState, p: ProblemInstance, r,
               backend: BackendSpec = _SERIAL,
               nfe_stamp: int = 0) -> tuple[CmaState, Population]:
    """One sample-rank-update cycle; lam new evaluations.

    Fitness uses the in-bounds (clamped) points while the strategy updates
    use the raw Gaussian displacements, keeping the covariance adaptation
    consistent with what was actually sampled.
    """
    rng = _rng(r)
    d, lam = len(s.mean), s.lam
    evals, b_mat = np.linalg.eigh(s.C)
    floor = 1e-14 * np.trace(s.C) / d
    evals = np.maximum(evals, floor)
    sqrt_scale = np.sqrt(evals)
    z = rng.standard_normal((lam, d))
    y = z * sqrt_scale @ b_mat.T
    x = np.clip(s.mean + s.sigma * y, p.bounds.lower, p.bounds.upper)
    f = _eval_rows(backend, p, x)
    f1 = f[:, 0] if f.ndim == 2 else f
    order = np.argsort(f1, kind="stable")
    ys = y[order[: s.mu]]
    yw = s.weights @ ys
    new_mean = s.mean + s.sigma * yw  # cm = 1
    c_invsqrt = b_mat @ np.diag(1.0 / sqrt_scale) @ b_mat.T
    ps = (1.0 - s.cs) * s.ps \
        + math.sqrt(s.cs * (2.0 - s.cs) * s.mueff) * (c_invsqrt @ yw)
    gen = s.gen + 1
    en = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
    hsig = (np.linalg.norm(ps) / math.sqrt(1.0 - (1.0 - s.cs) ** (2 * gen))
            < (1.4 + 2.0 / (d + 1.0)) * en)
    pc = (1.0 - s.cc) * s.pc \
        + hsig * math.sqrt(s.cc * (2.0 - s.cc) * s.mueff) * yw
    rank1 = np.outer(pc, pc)
    rankmu = ys.T @ (s.weights[:, None] * ys)
    dh = (1.0 - hsig) * s.cc * (2.0 - s.cc)
    c_new = (1.0 - s.c1 - s.cmu) * s.C + s.c1 * (rank1 + dh * s.C) + s.cmu * rankmu
    c_new = (c_new + c_new.T) / 2.0
    evn, bn = np.linalg.eigh(c_new)
    fl = 1e-14 * np.trace(c_new) / d
    if evn[0] < fl:
        c_new = bn @ np.diag(np.maximum(evn, fl)) @ bn.T
        c_new = (c_new + c_new.T) / 2.0
    sigma = s.sigma * math.exp(s.cs / s.ds * (np.linalg.norm(ps) / en - 1.0))
    new_state = CmaState(new_mean, sigma, c_new, ps, pc, s.weights, s.mu,
                         s.mueff, s.cs, s.ds, s.cc, s.c1, s.cmu, lam, gen)
    return new_state, Population(x, f, nfe_stamp + lam)


# ---------------------------------------------------------------------------
# IPOP restart wrapper
# ---------------------------------------------------------------------------

@dataclass
class IpopState:
    cma: CmaState
    stagnation: int = 50
    tol_fun: float = 1e-12
    sigma_floor: float = 1e-12
    flat: int = 0
    prev_best: float = math.inf
    best_f: float = math.inf
    best_x: Optional[np.ndarray] = None
    restarts: int = 0


def ipop_init(pop: Population, p: ProblemInstance, r=None,
              lam: Optional[int] = None, stagnation: int = 50) -> IpopState:
    if lam is None:
        lam = pop.n
    return IpopState(cma_init(pop, p, lam=lam), stagnation=stagnation)


def ipop_restart_decision(best_history: Sequence[float], stagnation: int = 50,
                          tol_fun: float = 1e-12, sigma: Optional[float] = None,
                          sigma_floor: float = 1e-12) -> str:
    """'restart' once the running best has gone ``stagnation`` consecutive
    generations without improving by more than ``tol_fun`` (or the step size
    collapsed), else 'continue'."""
    if sigma is not None and sigma < sigma_floor:
        return "restart"
    h = np.minimum.accumulate(np.asarray(best_history, dtype=float))
    flat = 0
    for i in range(len(h) - 1, 0, -1):
        if h[i - 1] - h[i] > tol_fun:
            break
        flat += 1
    return "restart" if flat >= stagnation else "continue"


def ipop_step(s: IpopState, pop: Population, p: ProblemInstance, r,
              backend: BackendSpec = _SERIAL) -> tuple[IpopState, Population]:
    """One inner strategy step; on stagnation, relaunch with doubled sample
    size from a uniformly random mean while keeping the incumbent best."""
    rng = _rng(r)
    cma2, newpop = cmaes_step(s.cma, p, rng, backend, nfe_stamp=pop.nfe_stamp)
    f1 = newpop.f[:, 0]
    gi = int(np.argmin(f1))
    best_f, best_x = s.best_f, s.best_x
    if f1[gi] < best_f:
        best_f, best_x = float(f1[gi]), newpop.x[gi].copy()
    if s.prev_best - best_f > s.tol_fun:
        flat = 0
    else:
        flat = s.flat + 1
    restarts, lam = s.restarts, cma2.lam
    if flat >= s.stagnation or cma2.sigma < s.sigma_floor:
        lam *= 2
        mean = rng.uniform(p.bounds.lower, p.bounds.upper)
        cma2 = cma_init(len(mean), p, lam=lam, mean=mean)
        flat = 0
        restarts += 1
    new_state = IpopState(cma2, s.stagnation, s.tol_fun, s.sigma_floor, flat,
                          best_f, best_f, best_x, restarts)
    return new_state, newpop
