#!/usr/bin/env python3
"""Convergence of rescaled sphere slices toward the spherical conflict set.

For the walls-and-poles scene the limit is known in closed form (the two
great circles u3 = +-u1), so the slice-to-reference Hausdorff distance
measures pure discretization error.  The table below sweeps the grid
resolution and the slice radius; the distance should fall roughly linearly
in eps until it hits the grid floor ~h/eps.

Typical output (res down, eps across):

    res \\ eps   0.400   0.200   0.100   0.050
    48          0.201   0.100   0.050   -
    96          0.201   0.100   0.050   0.025
    144         0.201   0.100   0.050   0.025
"""

import argparse
import sys
import time

import numpy as np

from confset import (Window, extract_conflict, hausdorff, sphere_slice,
                     spherical_conflict, support_sets)
from confset.scenes import walls_and_poles_scene


def main():
    ap = argparse.ArgumentParser(description="slice convergence sweep")
    ap.add_argument("--res", type=int, nargs="*", default=[48, 72, 96, 144])
    ap.add_argument("--eps", type=float, nargs="*",
                    default=[0.4, 0.2, 0.1, 0.05])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    scene = walls_and_poles_scene()
    x0 = np.zeros(3)
    sph = spherical_conflict(support_sets(scene, x0))
    eps = sorted(args.eps, reverse=True)

    head = "res \\ eps " + " ".join(f"{e:7.3f}" for e in eps)
    print(head)
    print("-" * len(head))
    for res in sorted(args.res):
        t0 = time.perf_counter()
        cplx = extract_conflict(scene, Window.cube(1.125 * eps[0], 3), res,
                                workers=args.workers)
        cells = []
        h = float(np.max(cplx.window.spacing(res)))
        for e in eps:
            if e < 3.0 * h:
                cells.append("      -")
                continue
            d = hausdorff(sphere_slice(cplx, x0, e).dirs, sph.dirs)
            cells.append(f"{d:7.4f}")
        dt = time.perf_counter() - t0
        print(f"{res:<10d}" + " ".join(cells) + f"   [{dt:5.1f}s]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
