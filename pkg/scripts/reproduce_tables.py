"""Write every table as CSV into an output directory (default ``results/tables``).

Usage: python3 scripts/reproduce_tables.py [OUTDIR] [--jobs N]
"""
import argparse
import sys
import time
from pathlib import Path

from svrk.cli import main

RUNS = [
    ("critical_values", ["critical-table"]),
    ("ode_norms", ["norm-table", "--system", "ode3"]),
    ("ode_accuracy_modified", ["accuracy", "--system", "ode3", "--mode", "modified"]),
    ("ode_accuracy_filtered", ["accuracy", "--system", "ode3", "--mode", "filtered"]),
    ("dg_norms", ["norm-table", "--system", "dg"]),
    ("advection_accuracy_modified", ["accuracy", "--system", "advection", "--mode", "modified"]),
    ("advection_accuracy_filtered", ["accuracy", "--system", "advection", "--mode", "filtered"]),
    ("burgers_accuracy", ["accuracy", "--system", "burgers"]),
]


def run(outdir: Path, jobs: int) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    for name, argv in RUNS:
        t0 = time.perf_counter()
        extra = ["--jobs", str(jobs)] if argv[0] == "norm-table" else []
        code = main([*argv, *extra, "--out", str(outdir / f"{name}.csv")])
        print(f"{name:32s} exit {code}  {time.perf_counter() - t0:7.1f}s")
        if code:
            return code
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir", nargs="?", default="results/tables")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()
    sys.exit(run(Path(args.outdir), args.jobs))
