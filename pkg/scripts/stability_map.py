"""(t, R) stability map: small-ball threshold against the biaxial energy sign.

    python scripts/stability_map.py --workers 1 --out stability_map.csv
"""

import argparse
import sys

import numpy as np

from hedgehog import io
from hedgehog.perturbation import stability_map


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, nargs="+", default=[2.0, 5.0, 20.0, 50.0, 200.0, 1000.0])
    ap.add_argument("--R", type=float, nargs="+",
                    default=list(np.round(np.geomspace(0.05, 50, 16), 4)))
    ap.add_argument("--sigma", type=float, default=10.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    cells = stability_map(args.t, args.R, args.sigma, args.workers)
    rows = [(c.t, c.R, c.R_threshold, c.threshold_flag,
             "" if c.delta_sign is None else c.delta_sign, c.delta, c.status) for c in cells]
    text = io.rows_csv(["t", "R", "R_threshold", "threshold_flag", "delta_sign", "delta", "status"],
                       rows, {"sigma": args.sigma})
    if args.out:
        io.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    bad = [c for c in cells if c.status == "inconsistent"]
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
