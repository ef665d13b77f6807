"""Godunov against the exact Burgers Riemann solution under grid doubling."""

import numpy as np

from stochsplit.clstep import Grid1D, GridFunction, cl_solve, riemann_burgers_cell_averages
from stochsplit.problem import get_problem

flux = get_problem("burgers-zero", range=1.0).flux

for name, ul, ur in [("shock", 1.0, 0.0), ("rarefaction", 0.0, 1.0)]:
    prev = None
    for n in (128, 256, 512, 1024):
        g = Grid1D(-1 / 32, 33 / 32, n)
        u0 = GridFunction(g, np.where(g.centers < 0, ul, ur).astype(float))
        err = float(np.sum(np.abs(cl_solve(u0, flux, 1.0).values
                                  - riemann_burgers_cell_averages(ul, ur, g, 1.0).values)) * g.dx)
        ratio = "" if prev is None else f"  ratio {prev / err:.3f}"
        print(f"{name:12s} n={n:5d}  L1 error {err:.3e}{ratio}")
        prev = err
