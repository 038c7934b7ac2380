"""Check that the two sign branches of each closed-form family are mirror images.

For every c the eps = -1 branch is compared with the reflection y -> -y of
the eps = +1 branch at eps*s, and both are checked against <r,t> = 2 eps c².
"""

import argparse

import numpy as np

from normalplanes import curve_families as fam
from normalplanes.frenet_engine import tangents
from normalplanes.geom_core import rows_dot


def check(gen, c, n=512):
    grid = fam.branch_grid(c, 1, n)
    plus = gen(c, 1, grid)
    minus = gen(c, -1, -grid[::-1])
    mirror = np.max(np.abs(plus.points * [1, -1, 1] - minus.points[::-1]))
    offsets = [
        np.max(np.abs(rows_dot(curve.points, tangents(curve)) - 2 * eps * c * c))
        for curve, eps in ((plus, 1), (minus, -1))
    ]
    return mirror, *offsets


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--c", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    args = parser.parse_args()

    print(f"{'family':<16} {'c':>5} {'mirror dev':>12} {'offset +1':>12} {'offset -1':>12}")
    for name, gen in (("plane-involute", fam.gen_plane_involute), ("twisted-example", fam.gen_twisted_example)):
        for c in args.c:
            vals = check(gen, c)
            print(f"{name:<16} {c:5.2f} " + " ".join(f"{v:12.3e}" for v in vals))


if __name__ == "__main__":
    main()
