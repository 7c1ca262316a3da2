"""Solve error over a (kappa_qsvt / kappa_enc, eps_qsvt) grid for one problem.

Shows that the error plateaus when kappa_qsvt is below the condition number
of the encoded block and falls linearly with eps_qsvt above it.

Usage: python scripts/kappa_precision_map.py [--n-x 3] [--lxk 5.0]
"""

import argparse
import csv
import sys

from qsvtwave.qsp import inverse_phases
from qsvtwave.qsvt import encoded_kappa, invert_apply, make_oracle
from qsvtwave.wave import WaveProblem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-x", type=int, default=3)
    ap.add_argument("--lxk", type=float, default=5.0)
    ap.add_argument("--factors", type=float, nargs="*", default=[0.3, 0.6, 1.0, 1.5])
    ap.add_argument("--epses", type=float, nargs="*", default=[1e-2, 1e-3, 1e-4])
    args = ap.parse_args()
    problem = WaveProblem.from_case(args.n_x, args.lxk)
    enc = make_oracle(problem)
    k_enc = encoded_kappa(problem, enc.normalization)
    w = csv.writer(sys.stdout)
    w.writerow(["factor", "kappa_qsvt", "eps_qsvt", "n_pol", "error_max_abs", "p0"])
    for f in args.factors:
        for eps in args.epses:
            pv = inverse_phases(f * k_enc, eps)
            rec = invert_apply(problem, pv, encoding=enc)
            w.writerow([f, f * k_enc, eps, pv.n_pol, rec.errors.max_abs, rec.p0])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
