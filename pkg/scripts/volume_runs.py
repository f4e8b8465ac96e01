"""Repeat volume estimates over seeds and summarize their spread.

    python scripts/volume_runs.py cube5 --seeds 10 --error 0.1 --exact 32
"""

import argparse
import time

import numpy as np

from spectrasample.cli import load_lmi_arg
from spectrasample.volume import VolumeConfig, estimate_volume


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("lmi", help="LMI file or builtin (cubeN, ballN, example2d)")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--error", type=float, default=0.1)
    ap.add_argument("--walk", default="billiard", choices=["billiard", "hnr", "chnr"])
    ap.add_argument("--exact", type=float, default=None, help="reference value for relative errors")
    args = ap.parse_args()
    lmi, _ = load_lmi_arg(args.lmi)

    vols = []
    for seed in range(args.seeds):
        t = time.perf_counter()
        rep = estimate_volume(lmi, VolumeConfig(error=args.error, walk=args.walk, seed=seed))
        dt = time.perf_counter() - t
        vols.append(rep.volume)
        ratios = ", ".join(f"{q:.3f}" for q in rep.ratios)
        print(f"seed {seed:3d}  volume {rep.volume:10.4f}  k={rep.k}  ratios [{ratios}]  {dt:5.1f}s")
    vols = np.array(vols)
    print(f"mean {vols.mean():.4f}  sd {vols.std(ddof=1) if len(vols) > 1 else 0.0:.4f}")
    if args.exact:
        rel = np.abs(vols / args.exact - 1)
        print(f"within {100 * args.error:.0f}% of {args.exact}: {np.sum(rel <= args.error)}/{len(vols)}")


if __name__ == "__main__":
    main()
