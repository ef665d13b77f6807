"""Run a few split trajectories and print the mean and spread of u(T) on a coarse stencil."""

import numpy as np

from stochsplit import WeightSpec, run_splitting, sample_paths, weighted_lp_norm
from stochsplit.harness import ExperimentConfig

cfg = ExperimentConfig(problem="burgers-cos")
k = 6
paths = sample_paths(cfg.seed, range(64), cfg.T, cfg.T, level=cfg.path_level)
traj = run_splitting(cfg.initial_state(k), cfg.build_problem(), paths, cfg.dt(k), cfg.T)
u = traj.final.values
x = traj.final.grid.centers
for i in range(0, x.size, x.size // 10):
    print(f"x = {x[i]:6.3f}   mean {u[:, i].mean():7.4f}   sd {u[:, i].std():.4f}")
norms = weighted_lp_norm(traj.final, WeightSpec(cfg.rho), 1)
print(f"E||u(T)||_1,phi = {norms.mean():.5f}")
