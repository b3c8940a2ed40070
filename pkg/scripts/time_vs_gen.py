#!/usr/bin/env python3
"""Fixed-time versus fixed-generation comparison.

The two stopping rules reward different things: a fixed generation count
measures per-iteration progress, while a fixed time slice also credits
cheap iterations.  This script runs the same algorithm/problem pair under
both budgets and reports final quality and evaluation counts side by side.
"""
import argparse
import os

from evobench.core import Budget
from evobench.harness import (ExperimentSpec, aggregate, emit_plot,
                              export_json, run)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--algo", default="de")
    ap.add_argument("--problem", default="rosenbrock")
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--pop", type=int, default=128)
    ap.add_argument("--gens", type=int, default=100)
    ap.add_argument("--seconds", type=float, default=5.0)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    os.makedirs(args.outdir, exist_ok=True)
    curves = []
    for label, budget in (("fixed generations", Budget.generations(args.gens)),
                          ("fixed time", Budget.walltime(args.seconds))):
        spec = ExperimentSpec(algo=args.algo, problem=args.problem,
                              dim=args.dim, pop=args.pop, budget=budget,
                              reps=args.reps, seed=args.seed)
        records = run(spec)
        agg = aggregate(records)
        qm, qs = agg.final["quality"]
        nm, _ = agg.final["nfe"]
        tm, _ = agg.final["elapsed_s"]
        print(f"{label:<18} quality {qm:.6g} (std {qs:.3g})  "
              f"nfe {nm:.0f}  elapsed {tm:.2f}s")
        tag = label.split()[-1]
        export_json(os.path.join(args.outdir,
                                 f"{args.algo}_{args.problem}_{tag}.json"),
                    spec, records)
        curves.append((label, agg))

    emit_plot(curves, "quality_vs_nfe",
              path=os.path.join(args.outdir,
                                f"{args.algo}_{args.problem}_budgets.svg"))
    print(f"wrote comparison chart to {args.outdir}/")


if __name__ == "__main__":
    main()
