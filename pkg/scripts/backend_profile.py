#!/usr/bin/env python3
"""Profile batch evaluation throughput: serial versus threaded backend.

Times whole-population evaluations over a grid of batch sizes and prints
the mean per-call latency plus the parallel speedup.  On a single-core
host the threaded backend mostly measures dispatch overhead; with more
cores the crossover point where threading pays off becomes visible.
"""
import argparse
import os

from evobench.backend import BackendSpec, profile_backend, resolve_workers
from evobench.core import RngStream
from evobench.metrics import speedup
from evobench.problems import make_problem


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="ackley")
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--sizes", default="256,1024,4096,16384")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = make_problem(args.problem, dim=args.dim)
    sizes = [(int(n), args.dim) for n in args.sizes.split(",")]
    serial = BackendSpec.serial()
    parallel = BackendSpec.parallel(args.workers)
    print(f"problem={p.id} dim={p.dim} workers={resolve_workers(parallel)}")

    rows_s = profile_backend(serial, p, sizes, reps=args.reps,
                             r=RngStream(args.seed))
    rows_p = profile_backend(parallel, p, sizes, reps=args.reps,
                             r=RngStream(args.seed))
    print(f"{'batch':>8} {'serial (s)':>12} {'threads (s)':>12} {'speedup':>8}")
    for (n, _, ts, _), (_, _, tp, _) in zip(rows_s, rows_p):
        print(f"{n:>8} {ts:>12.6f} {tp:>12.6f} {speedup(ts, tp):>8.2f}")


if __name__ == "__main__":
    main()
