"""Experiment orchestration: specs, runs, sweeps, aggregation, reporting.

A run takes one algorithm, one problem, and one budget, repeats it over
independent random streams, and records a per-generation series of
(gen, nfe, elapsed_s, quality, diversity).  Quality is the running best
objective value for single-objective algorithms and the inverted
generational distance of the reported set for multi-objective ones.
Everything the optimizer consumes from the RNG is drawn on the
orchestrating thread, so results are bit-identical across backends.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _svg, metrics, moea, soea
from .backend import BackendSpec, evaluate
from .core import (Budget, Population, RealClock, RngStream, budget_exhausted,
                   split_stream)
from .problems import (ProblemInstance, load_transform, make_problem,
                       pareto_front_reference, transform_hash)

__all__ = [
    "Algorithm", "ALGORITHMS", "IncompatibleSpecError", "ExperimentSpec",
    "SeriesPoint", "RunRecord", "AggregateStats", "SweepSpec", "run",
    "run_sweep", "aggregate", "config_hash", "export_json", "import_json",
    "export_csv", "export_sweep_json", "import_sweep_json", "emit_plot",
    "PLOT_KINDS",
]

SCHEMA_VERSION = 1
PLOT_KINDS = ("quality_vs_nfe", "convergence", "diversity", "runtime_vs_axis")


class IncompatibleSpecError(ValueError):
    """Algorithm family and problem disagree on the number of objectives."""


# ---------------------------------------------------------------------------
# Algorithm registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Algorithm:
    """Uniform driver interface around one optimizer.

    init(pop, problem, rng, config) -> (state, pop)
    step(state, pop, problem, rng, backend) -> (state, pop)
    report(state, pop) -> objective rows used for quality measurement
    """

    id: str
    kind: str  # "soea" | "moea"
    init: Callable
    step: Callable
    report: Callable


def _pop_report(state, pop):
    return pop.f


def _wrap_init(fn):
    # single-objective inits return bare state; normalize to (state, pop)
    def init(pop, p, rng, cfg):
        return fn(pop, p, rng, **cfg), pop
    return init


def _ga_init(default: dict):
    def init(pop, p, rng, cfg):
        return soea.ga_init(pop, p, rng, soea.GaConfig(**{**default, **cfg})), pop
    return init


def _cma_init(pop, p, rng, cfg):
    return soea.cma_init(pop, p, rng, **cfg), pop


def _cmaes_step(state, pop, p, rng, backend):
    return soea.cmaes_step(state, p, rng, backend, nfe_stamp=pop.nfe_stamp)


def _moea_init(fn):
    def init(pop, p, rng, cfg):
        return fn(pop, p, rng, **cfg)
    return init


ALGORITHMS: dict[str, Algorithm] = {}


def _register(a: Algorithm) -> None:
    ALGORITHMS[a.id] = a


for _id, _init, _step in [
    ("pso", _wrap_init(soea.pso_init), soea.pso_step),
    ("cso", _wrap_init(soea.cso_init), soea.cso_step),
    ("de", _wrap_init(soea.de_init), soea.de_step),
    ("sade", _wrap_init(soea.sade_init), soea.sade_step),
    ("ga", _ga_init({}), soea.ga_step),
    ("ga_ur_gm", _ga_init({"crossover": "uniform_random",
                           "mutation": "gaussian"}), soea.ga_step),
    ("cmaes", _cma_init, _cmaes_step),
    ("ipop", _wrap_init(soea.ipop_init), soea.ipop_step),
]:
    _register(Algorithm(_id, "soea", _init, _step, _pop_report))

for _id, _initfn, _step, _report in [
    ("nsga2", moea.nsga2_init, moea.nsga2_step, _pop_report),
    ("nsga3", moea.nsga3_init, moea.nsga3_step, _pop_report),
    ("spea2", moea.spea2_init, moea.spea2_step, moea.spea2_report),
    ("ibea", moea.ibea_init, moea.ibea_step, _pop_report),
    ("hype", moea.hype_init, moea.hype_step, _pop_report),
    ("moead", moea.moead_init, moea.moead_step, _pop_report),
    ("rvea", moea.rvea_init, moea.rvea_step, _pop_report),
    ("lmocso", moea.lmocso_init, moea.lmocso_step, moea.lmocso_report),
]:
    _register(Algorithm(_id, "moea", _moea_init(_initfn), _step, _report))


# ---------------------------------------------------------------------------
# Specs and records
# ---------------------------------------------------------------------------

@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one experiment exactly."""

    algo: str
    problem: str
    dim: Optional[int] = None
    m: Optional[int] = None
    pop: int = 128
    budget: Budget = field(default_factory=lambda: Budget.generations(100))
    reps: int = 15
    backend: BackendSpec = field(default_factory=BackendSpec.serial)
    seed: int = 0
    history_stride: Optional[int] = None
    algo_config: dict = field(default_factory=dict)
    transform: Optional[str] = None  # path to a shift/rotation file

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.pop < 1:
            raise ValueError("population size must be >= 1")
        if self.reps < 1:
            raise ValueError("need at least one repetition")
        if self.history_stride is not None and self.history_stride < 1:
            raise ValueError("history stride must be >= 1")

    def to_dict(self) -> dict:
        return {
            "algo": self.algo, "problem": self.problem, "dim": self.dim,
            "m": self.m, "pop": self.pop,
            "budget": {"kind": self.budget.kind, "limit": self.budget.limit},
            "reps": self.reps,
            "backend": {"kind": self.backend.kind,
                        "workers": self.backend.workers,
                        "chunk": self.backend.chunk},
            "seed": self.seed, "history_stride": self.history_stride,
            "algo_config": dict(self.algo_config), "transform": self.transform,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(
            algo=d["algo"], problem=d["problem"], dim=d.get("dim"),
            m=d.get("m"), pop=d["pop"],
            budget=Budget(d["budget"]["kind"], d["budget"]["limit"]),
            reps=d["reps"],
            backend=BackendSpec(d["backend"]["kind"], d["backend"]["workers"],
                                d["backend"].get("chunk")),
            seed=d["seed"], history_stride=d.get("history_stride"),
            algo_config=dict(d.get("algo_config", {})),
            transform=d.get("transform"),
        )


def config_hash(spec: ExperimentSpec) -> str:
    blob = json.dumps(spec.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class SeriesPoint:
    gen: int
    nfe: int
    elapsed_s: float
    quality: float
    diversity: float


@dataclass
class RunRecord:
    """One repetition: its stream identity, recorded series, and final state."""

    seed: int
    stream_id: int
    series: list[SeriesPoint]
    final: dict


# ---------------------------------------------------------------------------
# History recording
# ---------------------------------------------------------------------------

_HISTORY_CAP = 1024


class _History:
    """Keeps every stride-th generation.  With a fixed stride (known run
    length) that is all; with an open-ended budget the stride doubles once
    the buffer exceeds its cap, so memory stays bounded."""

    def __init__(self, stride: Optional[int]):
        self.adaptive = stride is None
        self.stride = 1 if stride is None else int(stride)
        self.points: list[SeriesPoint] = []

    def wants(self, gen: int) -> bool:
        return gen % self.stride == 0

    def record(self, pt: SeriesPoint) -> None:
        self.points.append(pt)
        if self.adaptive and len(self.points) > _HISTORY_CAP:
            self.stride *= 2
            self.points = [q for q in self.points if q.gen % self.stride == 0]

    def finalize(self, pt: SeriesPoint) -> list[SeriesPoint]:
        if not self.points or self.points[-1].gen != pt.gen:
            self.points.append(pt)
        return self.points


def default_history_stride(budget: Budget, pop: int) -> Optional[int]:
    """Record every generation up to 1000 of them, then thin proportionally.
    Open-ended (wall-time) runs return None and use adaptive thinning."""
    if budget.kind == "generations":
        gens = int(budget.limit)
    elif budget.kind == "evaluations":
        gens = max(1, math.ceil(budget.limit / max(pop, 1)))
    else:
        return None
    return 1 if gens <= 1000 else math.ceil(gens / 1000)


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------

def _build_problem(spec: ExperimentSpec) -> ProblemInstance:
    p = make_problem(spec.problem, dim=spec.dim, m=spec.m)
    if spec.transform is not None:
        p = make_problem(spec.problem, dim=p.dim, m=spec.m,
                         transform=load_transform(spec.transform, p.dim))
    return p


def _check_arity(alg: Algorithm, p: ProblemInstance) -> None:
    if alg.kind == "soea" and p.m != 1:
        raise IncompatibleSpecError(
            f"{alg.id} minimizes a single objective but {p.id} has {p.m}")
    if alg.kind == "moea" and p.m < 2:
        raise IncompatibleSpecError(
            f"{alg.id} needs >= 2 objectives but {p.id} has {p.m}")


def _planned_generations(budget: Budget, pop: int) -> int:
    if budget.kind == "generations":
        return max(int(budget.limit), 1)
    if budget.kind == "evaluations":
        return max(int(budget.limit) // max(pop, 1), 1)
    return 100  # wall time: refined generation by generation while running


def _run_single(spec: ExperimentSpec, alg: Algorithm, p: ProblemInstance,
                front_ref: Optional[np.ndarray], stream: RngStream,
                clock) -> RunRecord:
    rng = stream.generator()
    t0 = clock()
    x = p.bounds.sample(spec.pop, rng)
    f = evaluate(spec.backend, p, x)
    pop = Population(x, f, spec.pop)

    cfg = dict(spec.algo_config)
    if spec.algo == "rvea":
        cfg.setdefault("t_max", _planned_generations(spec.budget, spec.pop))
    state, pop = alg.init(pop, p, rng, cfg)

    is_soea = alg.kind == "soea"
    best = float(pop.f[:, 0].min()) if is_soea else math.inf

    def measure() -> tuple[float, float]:
        if is_soea:
            q = best
        else:
            q = metrics.igd(alg.report(state, pop), front_ref)
        return q, metrics.diversity(pop)

    stride = spec.history_stride
    if stride is None:
        stride = default_history_stride(spec.budget, spec.pop)
    hist = _History(stride)

    gen = 0
    elapsed = clock() - t0
    q, dv = measure()
    hist.record(SeriesPoint(0, pop.nfe_stamp, elapsed, q, dv))

    rolling_tmax = spec.budget.kind == "walltime" and spec.algo == "rvea"
    while not budget_exhausted(spec.budget, gen, pop.nfe_stamp, elapsed):
        if rolling_tmax and elapsed > 0:
            est = math.ceil((gen + 1) * spec.budget.limit / elapsed)
            state = moea.rvea_set_t_max(state, est)
        state, pop = alg.step(state, pop, p, rng, spec.backend)
        gen += 1
        if is_soea:
            best = min(best, float(pop.f[:, 0].min()))
        elapsed = clock() - t0
        if hist.wants(gen):
            q, dv = measure()
            hist.record(SeriesPoint(gen, pop.nfe_stamp, elapsed, q, dv))

    q, dv = measure()
    series = hist.finalize(SeriesPoint(gen, pop.nfe_stamp, elapsed, q, dv))
    final = {"gen": gen, "nfe": pop.nfe_stamp, "elapsed_s": elapsed,
             "quality": q, "diversity": dv}
    return RunRecord(stream.seed, stream.stream_id, series, final)


def run(spec: ExperimentSpec, clock=None) -> list[RunRecord]:
    """Execute all repetitions of one experiment and return their records."""
    alg = ALGORITHMS[spec.algo]
    p = _build_problem(spec)
    _check_arity(alg, p)
    front_ref = pareto_front_reference(p, 1000) if alg.kind == "moea" else None
    clock = clock if clock is not None else RealClock()
    return [_run_single(spec, alg, p, front_ref, stream, clock)
            for stream in split_stream(RngStream(spec.seed), spec.reps)]


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class AggregateStats:
    """Per-position means across repetitions (population std, ddof=0).

    Series are aligned by recorded position and truncated to the shortest
    repetition, which keeps open-ended runs with different lengths
    comparable.
    """

    count: int
    gen: np.ndarray
    nfe: np.ndarray
    elapsed_s: np.ndarray
    quality_mean: np.ndarray
    quality_std: np.ndarray
    diversity_mean: np.ndarray
    diversity_std: np.ndarray
    final: dict[str, tuple[float, float]]


def aggregate(records: Sequence[RunRecord]) -> AggregateStats:
    if not records:
        raise ValueError("nothing to aggregate")
    n_pos = min(len(r.series) for r in records)
    cols = {name: np.array([[getattr(pt, name) for pt in r.series[:n_pos]]
                            for r in records], dtype=float)
            for name in ("gen", "nfe", "elapsed_s", "quality", "diversity")}
    final = {}
    for key in ("gen", "nfe", "elapsed_s", "quality", "diversity"):
        vals = np.array([r.final[key] for r in records], dtype=float)
        final[key] = (float(vals.mean()), float(vals.std()))
    return AggregateStats(
        count=len(records),
        gen=cols["gen"].mean(axis=0),
        nfe=cols["nfe"].mean(axis=0),
        elapsed_s=cols["elapsed_s"].mean(axis=0),
        quality_mean=cols["quality"].mean(axis=0),
        quality_std=cols["quality"].std(axis=0),
        diversity_mean=cols["diversity"].mean(axis=0),
        diversity_std=cols["diversity"].std(axis=0),
        final=final,
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepSpec:
    """Scale one axis (dim or pop) and measure both a fixed-generation and a
    fixed-time run at every value."""

    base: ExperimentSpec
    axis: str
    values: tuple[int, ...]
    gen_budget: Budget = field(default_factory=lambda: Budget.generations(100))
    time_budget: Optional[Budget] = field(
        default_factory=lambda: Budget.walltime(30.0))

    def __post_init__(self):
        if self.axis not in ("dim", "pop"):
            raise ValueError("sweep axis must be 'dim' or 'pop'")
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise ValueError("sweep needs at least one axis value")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("axis values must be strictly increasing")
        self.values = vals


def run_sweep(sweep: SweepSpec, clock=None) -> list[dict]:
    """One result row per axis value with final-point statistics for the
    fixed-generation ("gen_*") and fixed-time ("time_*") runs."""
    rows = []
    for v in sweep.values:
        base = replace(sweep.base, **{sweep.axis: v})
        row: dict = {"axis": sweep.axis, "value": v}
        for tag, budget in (("gen", sweep.gen_budget),
                            ("time", sweep.time_budget)):
            if budget is None:
                continue
            agg = aggregate(run(replace(base, budget=budget), clock))
            for key in ("quality", "nfe", "elapsed_s"):
                row[f"{tag}_{key}_mean"], row[f"{tag}_{key}_std"] = \
                    agg.final[key]
            if tag == "time" and row["time_elapsed_s_mean"] > 0:
                row["time_nfe_per_s"] = (row["time_nfe_mean"]
                                         / row["time_elapsed_s_mean"])
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Import / export
# ---------------------------------------------------------------------------

def _runs_doc(spec: ExperimentSpec, records: Sequence[RunRecord]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "spec": spec.to_dict(),
        "config_hash": config_hash(spec),
        "transform_hash": transform_hash(
            load_transform(spec.transform, _build_problem(spec).dim)
            if spec.transform else None),
        "runs": [
            {"seed": r.seed, "stream_id": r.stream_id,
             "series": [{"gen": pt.gen, "nfe": pt.nfe,
                         "elapsed_s": pt.elapsed_s, "quality": pt.quality,
                         "diversity": pt.diversity} for pt in r.series],
             "final": r.final}
            for r in records
        ],
    }


def export_json(path: str, spec: ExperimentSpec,
                records: Sequence[RunRecord]) -> None:
    with open(path, "w") as fh:
        json.dump(_runs_doc(spec, records), fh, indent=1)
        fh.write("\n")


def import_json(path: str) -> tuple[ExperimentSpec, list[RunRecord]]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema version {doc.get('schema_version')!r}")
    spec = ExperimentSpec.from_dict(doc["spec"])
    records = [
        RunRecord(r["seed"], r["stream_id"],
                  [SeriesPoint(pt["gen"], pt["nfe"], pt["elapsed_s"],
                               pt["quality"], pt["diversity"])
                   for pt in r["series"]],
                  dict(r["final"]))
        for r in doc["runs"]
    ]
    return spec, records


_CSV_HEADER = ["gen", "nfe", "elapsed_s", "quality", "diversity", "rep"]


def export_csv(path: str, records: Sequence[RunRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_HEADER)
        for rep, r in enumerate(records):
            for pt in r.series:
                w.writerow([pt.gen, pt.nfe, repr(pt.elapsed_s),
                            repr(pt.quality), repr(pt.diversity), rep])


def export_sweep_json(path: str, sweep: SweepSpec, rows: list[dict]) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "sweep": {"axis": sweep.axis, "values": list(sweep.values),
                  "base": sweep.base.to_dict(),
                  "gen_budget": {"kind": sweep.gen_budget.kind,
                                 "limit": sweep.gen_budget.limit},
                  "time_budget": None if sweep.time_budget is None else
                  {"kind": sweep.time_budget.kind,
                   "limit": sweep.time_budget.limit}},
        "rows": rows,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def import_sweep_json(path: str) -> tuple[dict, list[dict]]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema version {doc.get('schema_version')!r}")
    return doc["sweep"], doc["rows"]


# ---------------------------------------------------------------------------
# Plotting
# ---------------------------------------------------------------------------

def _series_from_agg(label: str, agg: AggregateStats, x_field: str,
                     y_field: str, band: bool) -> dict:
    x = getattr(agg, x_field)
    y = getattr(agg, f"{y_field}_mean")
    s = {"x": list(x), "y": list(y), "label": label}
    if band:
        std = getattr(agg, f"{y_field}_std")
        s["y_lo"] = list(y - std)
        s["y_hi"] = list(y + std)
    return s


def emit_plot(data, kind: str, path: Optional[str] = None) -> str:
    """Render one of the four report charts to SVG text.

    ``data`` is an AggregateStats (or list of (label, AggregateStats)) for
    the series kinds, or the row list from run_sweep for runtime_vs_axis.
    Empty input produces an axes-only chart.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}")
    if kind == "runtime_vs_axis":
        rows = list(data)
        axis = rows[0]["axis"] if rows else "axis"
        series = []
        if rows:
            xs = [r["value"] for r in rows]
            series.append({"x": xs,
                           "y": [r["gen_elapsed_s_mean"] for r in rows],
                           "label": "fixed generations"})
            if "time_nfe_per_s" in rows[0]:
                series.append({"x": xs,
                               "y": [r["time_nfe_per_s"] for r in rows],
                               "label": "evals/s (fixed time)"})
        return _svg.line_chart(series, title="runtime scaling", xlabel=axis,
                               ylabel="seconds | evals/s", x_log=True,
                               y_log=True, path=path)

    pairs = data if isinstance(data, list) else [("run", data)]
    x_field = "nfe" if kind == "quality_vs_nfe" else "gen"
    y_field = "diversity" if kind == "diversity" else "quality"
    series = [_series_from_agg(label, agg, x_field, y_field, band=True)
              for label, agg in pairs if agg.gen.size]
    y_log = bool(series) and all(
        min(s["y_lo"] if "y_lo" in s else s["y"]) > 0 for s in series)
    xlabel = "function evaluations" if x_field == "nfe" else "generation"
    ylabel = "diversity" if y_field == "diversity" else "quality"
    return _svg.line_chart(series, title=kind.replace("_", " "),
                           xlabel=xlabel, ylabel=ylabel, y_log=y_log,
                           path=path)
