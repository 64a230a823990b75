#!/usr/bin/env python3
"""Slack statistics of the energy comparison E^V <= E^0 + e0 on random instances.

Every instance is checked end to end (translation symmetry, dispersion bound,
transported trial state) before its slack is recorded.  The theorem promises
slack >= 0; this prints the empirical distribution, which the toolkit treats
as data rather than asserting against a target.
"""

import argparse

import numpy as np

from bindcert.fock import theorem_verify
from bindcert.onebody import ground_state
from bindcert.operators import BernsteinKinetic

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))
from test_acceptance import _random_instance  # noqa: E402  (reuse the generator)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=50)
    parser.add_argument("--seed", type=int, default=505)
    parser.add_argument("--tol", type=float, default=1e-10)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    slacks = []
    for i in range(args.instances):
        inst = _random_instance(rng, decoupled=(i % 10 == 0))
        res, vec = ground_state(BernsteinKinetic(inst.kinetic_shape), inst.potential,
                                inst.grid, tol=args.tol, seed=7)
        rep = theorem_verify(inst, res, vec, tol=args.tol, seed=11)
        slacks.append(rep.slack)
        print(f"{i:3d}  dim={inst.dimension:6d}  E0={rep.E0:+9.5f}  EV={rep.EV:+9.5f}  "
              f"e0={rep.e0:+9.5f}  slack={rep.slack:+.3e}")

    slacks = np.array(slacks)
    print(f"\nmin slack {slacks.min():+.3e}   median {np.median(slacks):+.3e}   "
          f"max {slacks.max():+.3e}")
    print("all nonnegative:", bool((slacks >= -1e-9).all()))


if __name__ == "__main__":
    main()
