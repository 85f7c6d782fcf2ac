#!/usr/bin/env python3
"""Regenerate the four reference sweeps as CSV files.

Equivalent to `kronbeam figures`, kept as a script for batch runs where
trial count, seed, and worker count are tweaked together.
"""

import argparse
import os
import sys
import time

from threadpoolctl import threadpool_limits

from kronbeam.harness import SimConfig, figure_presets, run_sweep, write_results


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=max(1, (os.cpu_count() or 2)))
    ap.add_argument("--which", nargs="*", default=["fig3", "fig4", "fig5", "fig6"],
                    choices=["fig3", "fig4", "fig5", "fig6"])
    args = ap.parse_args()

    threadpool_limits(limits=1)
    os.makedirs(args.out, exist_ok=True)
    base = SimConfig(trials=args.trials, master_seed=args.seed)
    presets = figure_presets(base)
    for name in args.which:
        spec = presets[name]
        t0 = time.monotonic()
        result = run_sweep(spec, workers=args.workers)
        path = os.path.join(args.out, f"{name}.csv")
        write_results(result, path, "csv")
        print(f"{name}: axis={spec.axis} values={spec.values} "
              f"-> {path} ({time.monotonic() - t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
