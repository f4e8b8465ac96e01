"""Walk through one intersection/reflection step on the shipped 2D body.

    python scripts/golden_example.py [--p0 -1,1] [--u 1.3,0.8]
"""

import argparse

import numpy as np

from spectrasample import example2d
from spectrasample.trajectory import PolyCurve, intersection, reflection


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p0", default="-1,1")
    ap.add_argument("--u", default="1.3,0.8")
    args = ap.parse_args()
    p0 = np.array([float(x) for x in args.p0.split(",")])
    u = np.array([float(x) for x in args.u.split(",")])

    lmi = example2d()
    curve = PolyCurve.line(p0, u)
    hit = intersection(lmi, curve)
    ref = reflection(lmi, curve, hit=hit)
    np.set_printoptions(precision=4, suppress=True)
    print(f"t-          {hit.t_minus: .4f}")
    print(f"t+          {hit.t_plus: .4f}")
    print(f"hit point   {ref.hit_point}")
    print(f"normal      {ref.normal}")
    print(f"reflected   {ref.s_plus}")


if __name__ == "__main__":
    main()
