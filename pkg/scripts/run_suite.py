"""Run every experiment at its default configuration and report wall time.

    python3 scripts/run_suite.py [--output results] [--seed 0]
"""
import argparse
import sys
import time
from pathlib import Path

from dynbound.cli import EXPERIMENTS, main


def run_all(output: Path, seed: int) -> int:
    status = 0
    start = time.perf_counter()
    for name in EXPERIMENTS:
        t0 = time.perf_counter()
        code = main(["--experiment", name, "--output", str(output / name), "--seed", str(seed), "--quiet"])
        print(f"{name:12s} exit {code}  {time.perf_counter() - t0:7.1f}s", flush=True)
        status = max(status, code)
    print(f"total {time.perf_counter() - start:.1f}s")
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--output", default="results", type=Path)
    ap.add_argument("--seed", default=0, type=int)
    args = ap.parse_args()
    sys.exit(run_all(args.output, args.seed))
