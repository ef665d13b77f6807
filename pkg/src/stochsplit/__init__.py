"""Operator splitting for scalar stochastic balance laws ``du + f(u)_x dt = sigma(x, u) dB``."""

from .clstep import Grid1D, GridFunction, cl_solve, exact_riemann_burgers, restrict
from .noise import WienerPath, refine, sample_path, sample_paths
from .problem import EntropyPair, FluxSpec, NoiseSpec, Problem, get_problem
from .sdestep import sde_step
from .splitting import (SplitTrajectory, eval_eta_interp, eval_u_interp, eval_v_interp,
                        run_splitting)
from .weights import MollifierSpec, WeightSpec, weighted_lp_norm

__version__ = "0.1.0"

__all__ = [
    "Grid1D", "GridFunction", "cl_solve", "exact_riemann_burgers", "restrict",
    "WienerPath", "refine", "sample_path", "sample_paths",
    "EntropyPair", "FluxSpec", "NoiseSpec", "Problem", "get_problem",
    "sde_step",
    "SplitTrajectory", "eval_eta_interp", "eval_u_interp", "eval_v_interp", "run_splitting",
    "MollifierSpec", "WeightSpec", "weighted_lp_norm",
]
