"""Self-convergence experiment with common random numbers across time steps."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..clstep import restrict
from ..diagnostics import mc_mean
from ..noise import sample_paths
from ..splitting import run_splitting
from ..weights import weighted_lp_norm
from .config import ExperimentConfig, config_hash

log = logging.getLogger(__name__)

__all__ = ["RateFit", "fit_loglog", "run_convergence", "chunk_errors", "write_convergence_csv"]


def fit_loglog(dts, errors, stderrs=None) -> tuple[float, float, float]:
    """Weighted least squares of ``log(error)`` on ``log(dt)``.

    Returns ``(slope, intercept, halfwidth)`` where ``halfwidth`` is the 95%
    Student-t half-width of the slope computed from the residual variance.
    Weights are ``(error/stderr)^2``, the inverse variance of ``log(error)``
    to first order; without standard errors all points weigh the same.
    """
    x = np.log(np.asarray(dts, dtype=np.float64))
    e = np.asarray(errors, dtype=np.float64)
    if x.size < 3:
        raise ValueError("a rate fit needs at least 3 points")
    if np.any(e <= 0) or np.any(~np.isfinite(e)):
        raise ValueError("errors must be positive and finite")
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit: all step sizes are equal")
    y = np.log(e)
    if stderrs is None:
        w = np.ones_like(x)
    else:
        se = np.asarray(stderrs, dtype=np.float64)
        w = np.where(se > 0, (e / np.where(se > 0, se, 1.0)) ** 2, 0.0)
        w = np.where(se > 0, w, np.max(w) if np.any(se > 0) else 1.0)
    w = w / w.sum()
    X = np.stack([np.ones_like(x), x], axis=1)
    A = X.T @ (w[:, None] * X)
    coef = np.linalg.solve(A, X.T @ (w * y))
    resid = y - X @ coef
    dof = x.size - 2
    s2 = float(np.sum(w * resid ** 2)) / dof
    cov = s2 * np.linalg.inv(A)
    half = float(stats.t.ppf(0.975, dof) * math.sqrt(max(cov[1, 1], 0.0)))
    return float(coef[1]), float(coef[0]), half


@dataclass
class RateFit:
    levels: list
    dts: list
    means: list
    stderrs: list
    slope: float
    intercept: float
    halfwidth: float
    raw: np.ndarray = field(repr=False)         # (n_paths, n_levels)
    mid_raw: dict = field(default_factory=dict, repr=False)

    def level_correlation(self) -> float:
        """Smallest correlation of per-path errors between adjacent levels."""
        if self.raw.shape[0] < 3 or self.raw.shape[1] < 2:
            return float("nan")
        c = np.corrcoef(self.raw.T)
        return float(min(c[i, i + 1] for i in range(self.raw.shape[1] - 1)))


def chunk_errors(cfg: ExperimentConfig, start: int, stop: int):
    """Errors of paths ``start..stop-1`` at every ladder level (and requested mid-times).

    This is the unit of parallel work; its output depends only on the
    config and the path indices.
    """
    prob = cfg.build_problem()
    spec = cfg.weight
    path = sample_paths(cfg.seed, range(start, stop), cfg.T, cfg.T, level=cfg.path_level)
    levels = list(cfg.ladder) + [cfg.ref_level]
    finals, mids = {}, {}
    for k in levels:
        dt = cfg.dt(k)
        steps = {round(t / dt) for t in cfg.midtimes}
        traj = run_splitting(cfg.initial_state(k), prob, path, dt, cfg.T, cfg.cl_scheme,
                             cfg.sde_scheme, keep="ends", extra_steps=steps)
        finals[k] = traj.final
        mids[k] = {t: traj.checkpoints[round(t / dt)] for t in cfg.midtimes}
    ref = finals[cfg.ref_level]
    err = np.empty((stop - start, len(cfg.ladder)))
    mid_err = {t: np.empty_like(err) for t in cfg.midtimes}
    for j, k in enumerate(cfg.ladder):
        g = cfg.grid(k)
        err[:, j] = weighted_lp_norm(restrict(ref, g) - finals[k], spec, 1)
        for t in cfg.midtimes:
            mid_err[t][:, j] = weighted_lp_norm(restrict(mids[cfg.ref_level][t], g) - mids[k][t], spec, 1)
    bad = ~np.all(np.isfinite(err), axis=1)
    if np.any(bad):
        for i in np.nonzero(bad)[0]:
            log.error("non-finite error on path %d (seed %d)", start + i, path.seed[i])
        raise FloatingPointError("non-finite error in convergence run")
    return err, mid_err


def _chunk_task(args):
    text, start, stop = args
    from .config import parse_config
    return chunk_errors(parse_config(text), start, stop)


def run_convergence(cfg: ExperimentConfig) -> RateFit:
    if len(cfg.ladder) < 3:
        raise ValueError("the ladder needs at least 3 levels for a slope")
    if not cfg.build_problem().in_rate_hypotheses:
        log.warning("problem %s is outside the rate hypotheses (needs bounded sigma = sigma(u))",
                    cfg.problem)
    bounds = [(s, min(s + cfg.chunk, cfg.n_paths)) for s in range(0, cfg.n_paths, cfg.chunk)]
    if cfg.workers > 1:
        text = cfg.to_text()
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_chunk_task, [(text, a, b) for a, b in bounds]))
    else:
        results = [chunk_errors(cfg, a, b) for a, b in bounds]
    raw = np.concatenate([r[0] for r in results], axis=0)
    mid_raw = {t: np.concatenate([r[1][t] for r in results], axis=0) for t in cfg.midtimes}
    stats_ = [mc_mean(raw[:, j]) for j in range(raw.shape[1])]
    means = [m for m, _ in stats_]
    ses = [s for _, s in stats_]
    dts = [cfg.dt(k) for k in cfg.ladder]
    slope, intercept, half = fit_loglog(dts, means, ses)
    return RateFit(list(cfg.ladder), dts, means, ses, slope, intercept, half, raw, mid_raw)


def write_convergence_csv(fit: RateFit, cfg: ExperimentConfig, filename) -> None:
    """One ``raw`` row per (level, path), one ``mean`` row per level and a ``fit`` row."""
    g = "%.17g"
    with open(filename, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash(cfg)} seed={cfg.seed}\n")
        fh.write("kind,level,dt,t,path,value,stderr\n")
        for j, (k, dt) in enumerate(zip(fit.levels, fit.dts)):
            for i, e in enumerate(fit.raw[:, j]):
                fh.write(f"raw,{k},{g % dt},{g % cfg.T},{i},{g % e},\n")
        for t, arr in fit.mid_raw.items():
            for j, (k, dt) in enumerate(zip(fit.levels, fit.dts)):
                for i, e in enumerate(arr[:, j]):
                    fh.write(f"raw,{k},{g % dt},{g % t},{i},{g % e},\n")
        for k, dt, m, s in zip(fit.levels, fit.dts, fit.means, fit.stderrs):
            fh.write(f"mean,{k},{g % dt},{g % cfg.T},,{g % m},{g % s}\n")
        fh.write(f"fit,slope,,,,{g % fit.slope},{g % fit.halfwidth}\n")
        fh.write(f"fit,intercept,,,,{g % fit.intercept},\n")
