#!/usr/bin/env python3
"""Population-size scaling experiment.

Runs one algorithm across a range of population sizes, once with a fixed
generation budget and once with a fixed time budget, then writes the sweep
table (JSON) and a runtime-scaling chart (SVG).
"""
import argparse
import os

from evobench.core import Budget
from evobench.harness import (ExperimentSpec, SweepSpec, emit_plot,
                              export_sweep_json, run_sweep)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--algo", default="pso")
    ap.add_argument("--problem", default="ackley")
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--values", default="64,128,256,512,1024",
                    help="comma-separated population sizes")
    ap.add_argument("--gens", type=int, default=100)
    ap.add_argument("--seconds", type=float, default=5.0)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    base = ExperimentSpec(algo=args.algo, problem=args.problem, dim=args.dim,
                          reps=args.reps, seed=args.seed)
    sweep = SweepSpec(base=base, axis="pop",
                      values=tuple(int(v) for v in args.values.split(",")),
                      gen_budget=Budget.generations(args.gens),
                      time_budget=Budget.walltime(args.seconds))
    rows = run_sweep(sweep)
    for row in rows:
        print(f"pop={row['value']:>5}  "
              f"gen run: {row['gen_elapsed_s_mean']:.3f}s "
              f"quality {row['gen_quality_mean']:.4g}   "
              f"time run: {row['time_nfe_mean']:.0f} evals "
              f"({row.get('time_nfe_per_s', 0):.0f}/s) "
              f"quality {row['time_quality_mean']:.4g}")

    os.makedirs(args.outdir, exist_ok=True)
    tag = f"{args.algo}_{args.problem}_pop"
    export_sweep_json(os.path.join(args.outdir, f"{tag}.json"), sweep, rows)
    emit_plot(rows, "runtime_vs_axis",
              path=os.path.join(args.outdir, f"{tag}.svg"))
    print(f"wrote {args.outdir}/{tag}.json and .svg")


if __name__ == "__main__":
    main()
