"""Solve the semi-infinite hedgehog over a range of t and run the check battery.

    python scripts/verify_profiles.py --t 5 50 200 1000
"""

import argparse
import warnings

from hedgehog.cli import run_checks
from hedgehog.model import derive_model_params
from hedgehog.profile import solve_semi_infinite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, nargs="+", default=[5.0, 50.0, 200.0, 1000.0])
    ap.add_argument("--r-max", type=float, default=50.0)
    args = ap.parse_args()

    failures = 0
    for t in args.t:
        m = derive_model_params(t)
        p = solve_semi_infinite(m, args.r_max)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            checks = run_checks(p, m)
        print(f"t = {t:g}   a2 = {p.a2:.12f}   pieces = {p.solver_meta['n_pieces']}")
        for c in checks:
            flag = "PASS" if c["passed"] else "FAIL"
            failures += not c["passed"]
            print(f"  {flag}  {c['name']:<40s} {c['value']:.6e}")
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
