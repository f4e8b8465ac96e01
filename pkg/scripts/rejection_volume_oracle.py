"""Rejection-sampling area of a 2D spectrahedron (reference for the volume code).

    python scripts/rejection_volume_oracle.py [LMI.json] --points 4000000
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from oracles import rejection_area  # noqa: E402
from spectrasample import example2d, read_lmi  # noqa: E402
from spectrasample.walks import WalkerConfig, sample  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("lmi", nargs="?", help="2D LMI file (default: shipped example)")
    ap.add_argument("--points", type=int, default=4_000_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--pad", type=float, default=0.3, help="margin added around the sampled extent")
    args = ap.parse_args()
    lmi = read_lmi(args.lmi) if args.lmi else example2d()
    if lmi.n != 2:
        sys.exit("only 2D bodies are supported")

    # bounding box from a long billiard run, then padded
    pts = sample(lmi, WalkerConfig(seed=args.seed), n_samples=20_000)
    lo, hi = pts.min(axis=0) - args.pad, pts.max(axis=0) + args.pad
    area, err, inside = rejection_area(lmi, ((lo[0], hi[0]), (lo[1], hi[1])), args.points, args.seed)
    touches = np.any(inside.min(axis=0) <= lo + 1e-3) or np.any(inside.max(axis=0) >= hi - 1e-3)
    print(f"box         [{lo[0]:.3f}, {hi[0]:.3f}] x [{lo[1]:.3f}, {hi[1]:.3f}]")
    print(f"area        {area:.5f} +- {err:.5f}  ({100 * err / area:.3f}% stderr)")
    if touches:
        print("warning: accepted points reach the box edge; increase --pad")


if __name__ == "__main__":
    main()
