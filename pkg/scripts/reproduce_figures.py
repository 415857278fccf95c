"""Write the data behind every figure as CSV (default ``results/figures``).

Each run writes a main CSV plus sidecars (final profiles, summaries, norm
series, filter reports).  Plot with any CSV-aware tool.

Usage: python3 scripts/reproduce_figures.py [OUTDIR] [--quick]
"""
import argparse
import sys
import time
from pathlib import Path

from svrk.cli import main


def runs(quick: bool):
    long_T = "20" if quick else "1000"
    return [
        # norm growth without superviscosity, decay with it
        ("energy_p1_plain", ["energy", "--p", "1", "--k", "1"]),
        ("energy_p1_filtered", ["energy", "--p", "1", "--k", "1", "--nu", "-1.01/2", "--mode", "filtered"]),
        ("energy_p1_modified", ["energy", "--p", "1", "--k", "1", "--nu", "-1.01/2", "--mode", "modified"]),
        ("energy_p2_plain", ["energy", "--p", "2", "--k", "2"]),
        ("energy_p2_filtered", ["energy", "--p", "2", "--k", "2", "--mu", "-0.99/4", "--nu", "-1.01/8", "--mode", "filtered"]),
        ("energy_p5_plain", ["energy", "--p", "5", "--k", "5"]),
        ("energy_p5_filtered", ["energy", "--p", "5", "--k", "5", "--nu", "-1.01/720", "--mode", "filtered"]),
        # anti-superviscosity compensating a dissipative scheme over a long time
        ("compensation_p3_plain", ["energy", "--p", "3", "--k", "3", "--n-cells", "20", "--cfl", "0.1", "--ic", "sin5", "--T", long_T]),
        ("compensation_p3_filtered", ["energy", "--p", "3", "--k", "3", "--n-cells", "20", "--cfl", "0.1", "--ic", "sin5", "--T", long_T, "--nu", "1/24", "--mode", "filtered"]),
        # discontinuous data
        ("discontinuous_upwind", ["discontinuous"]),
        ("discontinuous_dispersive", ["discontinuous", "--mu", "1", "--nu", "0"]),
        ("discontinuous_central", ["discontinuous", "--alpha", "0", "--nu", "-2"]),
        # Burgers shock profiles and norm histories
        ("burgers_p5_plain", ["burgers", "--p", "5", "--mode", "plain"]),
        ("burgers_p5_adaptive", ["burgers", "--p", "5", "--mode", "adaptive"]),
        ("burgers_p2_plain", ["burgers", "--p", "2", "--mode", "plain"]),
        ("burgers_p2_adaptive", ["burgers", "--p", "2", "--mode", "adaptive"]),
        ("burgers_p2_fixed", ["burgers", "--p", "2", "--mode", "filtered", "--nu", "-10"]),
    ]


def run(outdir: Path, quick: bool) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    for name, argv in runs(quick):
        t0 = time.perf_counter()
        code = main([*argv, "--out", str(outdir / f"{name}.csv")])
        print(f"{name:28s} exit {code}  {time.perf_counter() - t0:7.1f}s")
        if code:
            return code
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir", nargs="?", default="results/figures")
    parser.add_argument("--quick", action="store_true", help="shorten the long-time compensation runs")
    args = parser.parse_args()
    sys.exit(run(Path(args.outdir), args.quick))
