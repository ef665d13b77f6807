"""Inequality suite driven by one configuration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..diagnostics import (FracBVReport, entropy_residual, fractional_bv, fractional_bv_bound,
                           lp_local, standard_testfns, time_modulus)
from ..noise import sample_paths
from ..problem import EntropyPair
from ..splitting import SplitTrajectory, run_splitting
from .config import ConfigError, ExperimentConfig, config_hash
from .convergence import fit_loglog

log = logging.getLogger(__name__)

__all__ = ["DiagRow", "DiagnoseBundle", "run_diagnose", "diagnose_trajectory",
           "write_diagnose_csv"]


@dataclass(frozen=True)
class DiagRow:
    estimator: str
    params: str
    value: float
    stderr: float
    bound: float
    passed: bool


@dataclass
class DiagnoseBundle:
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def by_estimator(self, name: str) -> list:
        return [r for r in self.rows if r.estimator == name]

    def summary(self) -> str:
        lines = []
        for name in dict.fromkeys(r.estimator for r in self.rows):
            rows = self.by_estimator(name)
            bad = sum(not r.passed for r in rows)
            lines.append(f"{name:16s} {len(rows):4d} checks  {bad:3d} failed  "
                         f"{'PASS' if not bad else 'FAIL'}")
        if not lines:
            lines.append("no diagnostics enabled")
        return "\n".join(lines)


def diagnose_trajectory(cfg: ExperimentConfig, traj: SplitTrajectory) -> DiagnoseBundle:
    """Run the enabled estimators on a batched trajectory."""
    prob = traj.problem
    spec = cfg.weight
    flux, noise = prob.flux, prob.noise
    u0 = traj.checkpoints[0]
    dx = u0.grid.dx
    T = traj.T
    bundle = DiagnoseBundle()

    if cfg.diag_fracbv:
        for mult in cfg.fracbv_r:
            r = mult * dx
            d0 = fractional_bv(u0.member(0) if u0.batched else u0, r, spec).value
            rep = fractional_bv(traj.final, r, spec)
            if noise.homogeneous:
                bound = fractional_bv_bound(d0, spec, flux, T)
                rep = FracBVReport(r, rep.value, rep.mc_stderr, bound, slack=0.05)
                bundle.rows.append(DiagRow("fractional_bv", f"r={mult}dx", rep.value,
                                           rep.mc_stderr, bound * 1.05, rep.ok))
            else:
                # the r^kappa term has no explicit constant; reported without a gate
                bundle.rows.append(DiagRow("fractional_bv", f"r={mult}dx", rep.value,
                                           rep.mc_stderr, math.nan, True))

    if cfg.diag_modulus:
        n = traj.n_steps // 2
        tn = traj.tn(n)
        seps = [traj.dt * 2.0 ** -j for j in range(cfg.modulus_seps)]
        vals = [time_modulus(traj, tn, tn + s, spec) for s in seps]
        means = [m for m, _ in vals]
        for s, (m, se) in zip(seps, vals):
            bundle.rows.append(DiagRow("time_modulus", f"sep={s:.6g}", m, se, math.nan, True))
        if noise.zero:
            ok = all(m == 0.0 for m in means)
            bundle.rows.append(DiagRow("modulus_slope", "sigma=0", 0.0, 0.0, 0.0, ok))
        else:
            slope, _, half = fit_loglog(seps, means, [se for _, se in vals])
            ok = cfg.modulus_min <= slope <= cfg.modulus_max
            bundle.rows.append(DiagRow("modulus_slope", f"in [{cfg.modulus_min},{cfg.modulus_max}]",
                                       slope, half, math.nan, ok))

    if cfg.diag_lp:
        M = flux.lip
        if cfg.lp_R - M * T <= 0:
            raise ConfigError("lp_R too small: the cone radius R - M T must stay positive")
        for p in cfg.lp_p:
            rep = lp_local(traj.final, u0.member(0) if u0.batched else u0, p, cfg.lp_R, M, T,
                           spec, flux, noise)
            bundle.rows.append(DiagRow("lp_local", f"p={p:g} C1={rep.c1:.6g} C2={rep.c2:.6g}",
                                       rep.lhs, rep.lhs_stderr, rep.rhs, rep.ok))

    if cfg.diag_entropy:
        pair = EntropyPair(cfg.entropy_delta)
        fns = standard_testfns(T, cfg.entropy_center, cfg.entropy_width)
        for c in cfg.entropy_c:
            for res in entropy_residual(traj, pair, c, fns, cfg.entropy_a):
                tf = res.testfn
                bundle.rows.append(DiagRow(
                    "entropy", f"c={c:g} x0={tf.center:.4g} s={tf.scale:.4g}",
                    res.mean, res.stderr, -(3 * res.stderr + res.allowance), res.ok))
    return bundle


def run_diagnose(cfg: ExperimentConfig) -> DiagnoseBundle:
    if not (cfg.diag_fracbv or cfg.diag_modulus or cfg.diag_lp or cfg.diag_entropy):
        return DiagnoseBundle()
    k = cfg.diag_level
    need = k + (cfg.modulus_seps - 1 if cfg.diag_modulus else 0)
    if cfg.path_level < need:
        raise ConfigError(f"path_level must be at least {need} for the diagnose suite")
    path = sample_paths(cfg.seed, range(cfg.n_paths), cfg.T, cfg.T, level=cfg.path_level)
    traj = run_splitting(cfg.initial_state(k), cfg.build_problem(), path, cfg.dt(k), cfg.T,
                         cfg.cl_scheme, cfg.sde_scheme, keep="all")
    return diagnose_trajectory(cfg, traj)


def write_diagnose_csv(bundle: DiagnoseBundle, cfg: ExperimentConfig, filename) -> None:
    g = "%.17g"
    with open(filename, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash(cfg)} seed={cfg.seed}\n")
        fh.write("estimator,params,value,stderr,bound,pass\n")
        for r in bundle.rows:
            fh.write(f"{r.estimator},{r.params},{g % r.value},{g % r.stderr},{g % r.bound},"
                     f"{'pass' if r.passed else 'fail'}\n")
