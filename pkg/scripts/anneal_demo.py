"""Annealing trace: best objective value per temperature for HMC-r and HnR.

    python scripts/anneal_demo.py cube5 --c e1 --iterations 70
"""

import argparse
import math

import numpy as np

from spectrasample.apps import AnnealConfig, sdp_minimize
from spectrasample.cli import load_lmi_arg


def parse_c(text, n):
    if text.startswith("e"):
        c = np.zeros(n)
        c[int(text[1:]) - 1] = 1.0
        return c
    return np.array([float(x) for x in text.split(",")])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("lmi")
    ap.add_argument("--c", default="e1")
    ap.add_argument("--iterations", type=int, default=None, help="fixed number of temperatures")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    lmi, _ = load_lmi_arg(args.lmi)
    c = parse_c(args.c, lmi.n)

    traces = {}
    for walk in ("hmcr", "hnr"):
        length = 1 if walk == "hmcr" else math.ceil(4 * math.sqrt(lmi.n))
        rep = sdp_minimize(lmi, c, AnnealConfig(walk=walk, walk_length=length, seed=args.seed,
                                                iterations=args.iterations))
        traces[walk] = rep.history
        print(f"{walk:5s} best {rep.best_value: .5f}  iterations {rep.iterations}/{rep.budget}  "
              f"failures {rep.failures}  stop: {rep.stop_reason}")
    print("\niter      hmcr        hnr")
    for i in range(max(len(t) for t in traces.values())):
        row = [t[i] if i < len(t) else float("nan") for t in traces.values()]
        print(f"{i:4d}  {row[0]: .5f}  {row[1]: .5f}")


if __name__ == "__main__":
    main()
