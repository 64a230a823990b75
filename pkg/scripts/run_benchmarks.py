#!/usr/bin/env python3
"""Analytic benchmarks: 1d oscillator (e0 = 0.5) and 3d Coulomb (e0 = -0.5).

Prints the per-grid ladder and the Richardson-extrapolated estimate for the
Coulomb problem.  Expect roughly a minute for the N=64 grid.
"""

import argparse
import time

from bindcert.onebody import converge_study, ground_state
from bindcert.operators import Coulomb, GridSpec, Harmonic, NonRelativistic


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-points", type=int, default=64,
                        help="finest Coulomb grid (power of two, default 64)")
    parser.add_argument("--tol", type=float, default=1e-9)
    args = parser.parse_args()

    t0 = time.monotonic()
    res, _ = ground_state(NonRelativistic(1.0), Harmonic(1.0), GridSpec(1, 20.0, 128),
                          tol=1e-11)
    print(f"oscillator  e0 = {res.eigenvalue:.12f}   error = {res.eigenvalue - 0.5:+.2e}"
          f"   ({res.iterations} matvecs)")

    ladder = []
    n = args.max_points
    while n >= 16 and len(ladder) < 3:
        ladder.append(n)
        n //= 2
    grids = [GridSpec(3, 40.0, n) for n in sorted(ladder)]
    study = converge_study(NonRelativistic(1.0), Coulomb(1.0, cell_average=True), grids,
                           tol=args.tol, max_iter=4000, dealias=True)
    print(f"\nCoulomb ladder (L = 40, cell-averaged, dealiased):")
    print("    N    eigenvalue        residual   matvecs")
    for row in study.rows:
        r = row.result
        print(f"  {row.grid.points:3d}   {r.eigenvalue:+.10f}   {r.residual:.1e}   "
              f"{r.iterations}")
    print(f"  Richardson (orders 2, 3): {study.extrapolated:+.10f}"
          f"   error = {study.extrapolated + 0.5:+.2e}")
    print(f"\ntotal {time.monotonic() - t0:.0f}s")


if __name__ == "__main__":
    main()
