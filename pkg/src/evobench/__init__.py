"""Batch-vectorized evolutionary algorithms with a fixed-budget benchmarking
harness: serial and thread-parallel evaluation backends, classic and rotated
test problems, quality indicators, and experiment orchestration."""

from .core import (
    Bounds, Budget, Population, RngStream, RealClock, VirtualClock,
    budget_exhausted, clamp_to_bounds, split_stream,
)
from .backend import BackendSpec, EvaluationError, evaluate, profile_backend
from .problems import (
    ProblemInstance, available_problems, evaluate_batch, load_transform,
    make_problem, pareto_front_reference, transform_hash,
)
from .metrics import (
    best_fitness, diversity, hypervolume, hypervolume_mc, igd, speedup,
    throughput,
)
from .harness import (
    ALGORITHMS, AggregateStats, ExperimentSpec, IncompatibleSpecError,
    RunRecord, SeriesPoint, SweepSpec, aggregate, emit_plot, export_csv,
    export_json, import_json, run, run_sweep,
)

__all__ = [
    "Bounds", "Budget", "Population", "RngStream", "RealClock", "VirtualClock",
    "budget_exhausted", "clamp_to_bounds", "split_stream",
    "BackendSpec", "EvaluationError", "evaluate", "profile_backend",
    "ProblemInstance", "available_problems", "evaluate_batch",
    "load_transform", "make_problem", "pareto_front_reference",
    "transform_hash",
    "best_fitness", "diversity", "hypervolume", "hypervolume_mc", "igd",
    "speedup", "throughput",
    "ALGORITHMS", "AggregateStats", "ExperimentSpec", "IncompatibleSpecError",
    "RunRecord", "SeriesPoint", "SweepSpec", "aggregate", "emit_plot",
    "export_csv", "export_json", "import_json", "run", "run_sweep",
]

__version__ = "0.1.0"
