"""Command-line front end.

Subcommands: run one experiment, sweep an axis, render reports from saved
results, and list the registered algorithms/problems.  Exit codes: 0 on
success, 2 for bad arguments, 3 for an algorithm/problem arity mismatch,
4 for I/O failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import harness
from .backend import BackendSpec
from .core import Budget
from .harness import (ALGORITHMS, ExperimentSpec, IncompatibleSpecError,
                      SweepSpec)
from .problems import available_problems

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCOMPATIBLE = 3
EXIT_IO = 4


def _budget(text: str) -> Budget:
    """Parse gen:<n>, fe:<n>, or time:<seconds>."""
    kind, sep, value = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(
            f"budget must look like gen:100, time:30, or fe:1000000 "
            f"(got {text!r})")
    try:
        if kind == "gen":
            return Budget.generations(int(value))
        if kind == "fe":
            return Budget.evaluations(int(value))
        if kind == "time":
            return Budget.walltime(float(value))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    raise argparse.ArgumentTypeError(f"unknown budget kind {kind!r}")


def _optional_budget(text: str) -> Optional[Budget]:
    if text == "none":
        return None
    return _budget(text)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}") from exc


def _add_run_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    sp.add_argument("--problem", required=True,
                    choices=available_problems(), metavar="PROBLEM")
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--m", type=int, default=None,
                    help="objective count (multi-objective problems only)")
    sp.add_argument("--pop", type=int, default=128)
    sp.add_argument("--reps", type=int, default=15)
    sp.add_argument("--backend", choices=("serial", "parallel"),
                    default="serial")
    sp.add_argument("--workers", type=int, default=None,
                    help="thread count for the parallel backend")
    sp.add_argument("--chunk", type=int, default=None,
                    help="rows per work block for the parallel backend")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--stride", type=int, default=None,
                    help="record every k-th generation")
    sp.add_argument("--transform", default=None,
                    help="shift/rotation file for the rotated suite")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evobench",
        description="Population-based optimizer benchmarking harness")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="run one experiment")
    _add_run_args(sp)
    sp.add_argument("--budget", type=_budget,
                    default=Budget.generations(100),
                    help="gen:<n>, time:<seconds>, or fe:<n>")
    sp.add_argument("--out", default=None, help="write results JSON here")

    sp = sub.add_parser("sweep", help="scale dim or pop and rerun")
    _add_run_args(sp)
    sp.add_argument("--axis", required=True, choices=("dim", "pop"))
    sp.add_argument("--values", required=True, type=_int_list,
                    metavar="V1,V2,...")
    sp.add_argument("--gen-budget", type=_budget,
                    default=Budget.generations(100))
    sp.add_argument("--time-budget", type=_optional_budget,
                    default=Budget.walltime(30.0),
                    help="fixed-time leg budget, or 'none' to skip it")
    sp.add_argument("--out", default=None, help="write sweep JSON here")

    sp = sub.add_parser("report", help="render saved results")
    sp.add_argument("--in", dest="inp", required=True,
                    help="results JSON from run or sweep")
    sp.add_argument("--kind", required=True, choices=harness.PLOT_KINDS)
    sp.add_argument("--format", choices=("csv", "svg"), default="svg")
    sp.add_argument("--out", required=True)

    sub.add_parser("list", help="list algorithms and problems")
    return parser


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    if args.backend == "parallel":
        backend = BackendSpec.parallel(args.workers or 0, chunk=args.chunk)
    else:
        backend = BackendSpec.serial()
    return ExperimentSpec(
        algo=args.algo, problem=args.problem, dim=args.dim, m=args.m,
        pop=args.pop, budget=getattr(args, "budget", Budget.generations(100)),
        reps=args.reps, backend=backend, seed=args.seed,
        history_stride=args.stride, transform=args.transform)


def _cmd_run(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    records = harness.run(spec)
    agg = harness.aggregate(records)
    for rep, rec in enumerate(records):
        print(f"rep {rep}: gen={rec.final['gen']} nfe={rec.final['nfe']} "
              f"elapsed={rec.final['elapsed_s']:.3f}s "
              f"quality={rec.final['quality']:.6g}")
    qm, qs = agg.final["quality"]
    tm, _ = agg.final["elapsed_s"]
    print(f"mean quality {qm:.6g} (std {qs:.3g}) over {agg.count} reps, "
          f"mean elapsed {tm:.3f}s")
    if args.out:
        harness.export_json(args.out, spec, records)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    sweep = SweepSpec(base=_spec_from_args(args), axis=args.axis,
                      values=args.values, gen_budget=args.gen_budget,
                      time_budget=args.time_budget)
    rows = harness.run_sweep(sweep)
    for row in rows:
        fields = " ".join(f"{k}={v:.6g}" for k, v in row.items()
                          if isinstance(v, float))
        print(f"{row['axis']}={row['value']}: {fields}")
    if args.out:
        harness.export_sweep_json(args.out, sweep, rows)
        print(f"wrote {args.out}")
    return EXIT_OK


def _write_agg_csv(path: str, agg: "harness.AggregateStats") -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gen", "nfe", "elapsed_s", "quality_mean", "quality_std",
                    "diversity_mean", "diversity_std"])
        for i in range(len(agg.gen)):
            w.writerow([repr(float(agg.gen[i])), repr(float(agg.nfe[i])),
                        repr(float(agg.elapsed_s[i])),
                        repr(float(agg.quality_mean[i])),
                        repr(float(agg.quality_std[i])),
                        repr(float(agg.diversity_mean[i])),
                        repr(float(agg.diversity_std[i]))])


def _write_rows_csv(path: str, rows: list[dict]) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        if not rows:
            fh.write("")
            return
        cols = list(rows[0].keys())
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def _cmd_report(args: argparse.Namespace) -> int:
    with open(args.inp) as fh:
        doc = json.load(fh)
    if args.kind == "runtime_vs_axis":
        if "rows" not in doc:
            raise ValueError("runtime_vs_axis needs a sweep results file")
        _, rows = harness.import_sweep_json(args.inp)
        if args.format == "csv":
            _write_rows_csv(args.out, rows)
        else:
            harness.emit_plot(rows, args.kind, path=args.out)
    else:
        if "runs" not in doc:
            raise ValueError(f"{args.kind} needs a run results file")
        _, records = harness.import_json(args.inp)
        agg = harness.aggregate(records)
        if args.format == "csv":
            _write_agg_csv(args.out, agg)
        else:
            harness.emit_plot(agg, args.kind, path=args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_list(args: argparse.Namespace) -> int:
    print("algorithms:")
    for aid, alg in ALGORITHMS.items():
        family = {"soea": "single-objective",
                  "moea": "multi-objective"}[alg.kind]
        print(f"  {aid:<10} {family}")
    print("problems:")
    for name in available_problems():
        print(f"  {name}")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "report": _cmd_report,
             "list": _cmd_list}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except IncompatibleSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
