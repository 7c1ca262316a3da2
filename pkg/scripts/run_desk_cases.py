"""Run every CLI command on the example configs in scripts/configs.

Usage: python scripts/run_desk_cases.py [--out DIR] [--only CMD ...]
"""

import argparse
import os
import sys

from qsvtwave.cli import run

HERE = os.path.dirname(os.path.abspath(__file__))

JOBS = [
    ("verify-oracle", "case1_desk.json", ["--oracle", "structured"]),
    ("solve", "case1_desk.json", []),
    ("spectrum", "case2_spectrum.json", []),
    ("energy", "energy.json", []),
    ("power", "power.json", []),
    ("gauss", "gauss.json", []),
    ("scan", "scan.json", ["--axis", "kappa"]),
    ("scan", "scan.json", ["--axis", "eps"]),
    ("scan", "scan.json", ["--axis", "nx"]),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out", help="root output directory")
    ap.add_argument("--only", nargs="*", help="subset of commands to run")
    args = ap.parse_args()
    status = 0
    for command, cfg, extra in JOBS:
        if args.only and command not in args.only:
            continue
        tag = command if command != "scan" else f"scan-{extra[-1]}"
        out = os.path.join(args.out, tag)
        print(f"== {tag}", flush=True)
        code = run([command, "--config", os.path.join(HERE, "configs", cfg), "--out", out] + extra)
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
