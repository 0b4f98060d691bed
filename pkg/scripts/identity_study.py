#!/usr/bin/env python3
"""Convergence of the squared-Dirac identity D D phi - phi + (box' + F) phi = 0.

The identity holds exactly in the continuum for any smooth phi, so the
discrete residual measures pure truncation error. Random smooth spinors are
superpositions of a few plane waves; grids span (x^0, x^1, x^2).
"""
import argparse
import sys

import numpy as np

from diracone.clifford import BUILTIN_NAMES, builtin_representation
from diracone.emfield import catalog
from diracone.gridops import TRIM, SpacetimeGrid, SpinorGridField, convergence_order, squared_identity_residual

POTENTIALS = {
    "constant-E": ("constant-E", {"E": 0.5}),
    "plane-wave": ("plane-wave", {"amplitude": 0.5, "omega": 1.0}),
    "polynomial": ("polynomial-test", {"c0": 0.2, "L01": 0.3, "L21": -0.4, "Q12": 0.5, "Q30": 0.2}),
}


def smooth_spinor(grid, seed, modes=3, kmax=2.0):
    rng = np.random.default_rng(seed)
    x = grid.coords
    vals = np.zeros(grid.extents + (4,), dtype=complex)
    for _ in range(modes):
        k = rng.uniform(-kmax, kmax, size=4)
        amp = rng.normal(size=4) + 1j * rng.normal(size=4)
        vals += np.exp(1j * (x @ k))[..., None] * amp
    return SpinorGridField(grid, vals)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--representation", default="chiral", choices=BUILTIN_NAMES)
    p.add_argument("--spinors", type=int, default=5)
    p.add_argument("--sizes", type=int, nargs="+", default=[17, 33, 65])
    args = p.parse_args(argv)

    rep = builtin_representation(args.representation)
    worst = (np.inf, -np.inf)
    for label, (name, params) in POTENTIALS.items():
        pot = catalog(name, params)
        for seed in range(args.spinors):
            levels = []
            for n in args.sizes:
                h = 1.0 / (n - 1)
                grid = SpacetimeGrid((n, n, n, 1), (h, h, h, 1.0), boundary=(TRIM,) * 4)
                res = squared_identity_residual(smooth_spinor(grid, 100 + seed), pot, rep)
                levels.append((h, res.max_norm()))
            order = convergence_order(levels)
            worst = (min(worst[0], order), max(worst[1], order))
            norms = " ".join(f"{r:.3e}" for _, r in levels)
            print(f"{label:12s} spinor {seed}  residuals {norms}  order {order:.3f}")
    print(f"orders within [{worst[0]:.3f}, {worst[1]:.3f}]")
    return 0 if 1.8 <= worst[0] and worst[1] <= 2.2 else 1


if __name__ == "__main__":
    sys.exit(main())
