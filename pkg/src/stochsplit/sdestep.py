"""Pathwise SDE flow ``dw = sigma(x, w) dB`` applied cell by cell."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .clstep import GridFunction
from .noise import WienerPath
from .problem import NoiseSpec
from .weights import WeightSpec, weighted_lp_norm

log = logging.getLogger(__name__)

__all__ = ["SDE_SCHEMES", "sde_step", "SDEContractionReport", "sde_contraction_check",
           "lp_envelope_constants"]

SDE_SCHEMES = ("euler-maruyama", "milstein", "exact")


def _increments(path: WienerPath, w: GridFunction):
    # shape the per-knot increments so they broadcast against the cell axis
    if path.batched:
        if not w.batched or w.values.shape[0] != path.npaths:
            raise ValueError("batched path needs a state batch of the same size")
        return lambda a, b: (path.values[:, b] - path.values[:, a])[:, None]
    return lambda a, b: path.values[b] - path.values[a]


def sde_step(w: GridFunction, noise: NoiseSpec, path: WienerPath, s: float, t: float,
             scheme: str = "milstein") -> GridFunction:
    """Approximate ``S_SDE(t, s) w`` using every path knot in ``[s, t]`` as a substep.

    All cells see the same increments of ``B``; ``sigma`` is evaluated at the
    cell centers.
    """
    if s > t:
        raise ValueError("sde_step needs s <= t")
    if scheme not in SDE_SCHEMES:
        raise ValueError(f"unknown SDE scheme {scheme!r}; known: {SDE_SCHEMES}")
    if scheme == "exact" and noise.exact is None:
        raise ValueError(f"noise {noise.name!r} has no closed-form flow")
    i0, i1 = path.index_of(s), path.index_of(t)
    inc = _increments(path, w)
    if noise.zero or i0 == i1:
        return w.copy()
    x = w.grid.centers
    u = w.values
    if scheme == "exact":
        u = noise.exact(u, x, inc(i0, i1), t - s)
    else:
        for i in range(i0, i1):
            dB = inc(i, i + 1)
            sig = noise.sigma(x, u)
            if scheme == "milstein":
                h = path.times[i + 1] - path.times[i]
                u = u + sig * dB + 0.5 * sig * noise.dsigma(x, u) * (dB * dB - h)
            else:
                u = u + sig * dB
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("non-finite state in sde_step")
    return GridFunction(w.grid, np.broadcast_to(u, np.broadcast_shapes(u.shape, w.values.shape)).copy())


@dataclass(frozen=True)
class SDEContractionReport:
    lhs_mean: float
    lhs_stderr: float
    rhs_mean: float
    diff_stderr: float
    band: float
    npaths: int

    @property
    def gap(self) -> float:
        return abs(self.lhs_mean - self.rhs_mean)

    @property
    def ok(self) -> bool:
        return self.gap <= self.band


def sde_contraction_check(w: GridFunction, v: GridFunction, noise: NoiseSpec, path: WienerPath,
                          s: float, t: float, spec: WeightSpec, scheme: str = "milstein",
                          bias: float = 1.0e-3) -> SDEContractionReport:
    """Check ``E||S w - S v||_{1,phi} = E||w - v||_{1,phi}`` over a batched path.

    The band is three standard errors of the pathwise difference plus
    ``bias * E||w - v||_{1,phi}`` for the time discretization.
    """
    n = path.npaths
    if not path.batched or n < 30:
        raise ValueError(f"ensemble of {n} paths is too small (need at least 30)")
    if n < 100:
        warnings.warn(f"only {n} paths; the Monte Carlo band will be wide", stacklevel=2)

    def batch(g):
        return g if g.batched else GridFunction(g.grid, np.broadcast_to(g.values, (n, g.grid.ncells)))

    w, v = batch(w), batch(v)
    before = np.asarray(weighted_lp_norm(w - v, spec, 1))
    after = np.asarray(weighted_lp_norm(sde_step(w, noise, path, s, t, scheme)
                                        - sde_step(v, noise, path, s, t, scheme), spec, 1))
    d = after - before
    lhs_se = float(np.std(after, ddof=1) / math.sqrt(n))
    d_se = float(np.std(d, ddof=1) / math.sqrt(n))
    rhs = math.fsum(before) / n
    return SDEContractionReport(math.fsum(after) / n, lhs_se, rhs, d_se,
                                3.0 * d_se + bias * rhs, n)


def lp_envelope_constants(noise: NoiseSpec, p: float) -> tuple[float, float]:
    """``(C2, C3)`` of the local L^p growth bound for the SDE step.

    ``C3 = (p-1)((p-2)|sigma(.,0)|^2 + p|sigma|_Lip^2)`` and
    ``C2 = 2(p-1)|sigma(.,0)|^2``; both use the squared sup of ``sigma(., 0)``,
    the form an Ito computation of ``d|w|^p`` produces. ``C2`` vanishes when
    ``sigma(x, 0) = 0``.
    """
    s0 = noise.sup0
    c3 = (p - 1.0) * ((p - 2.0) * s0 * s0 + p * noise.lip * noise.lip)
    c2 = 2.0 * (p - 1.0) * s0 * s0
    return c2, c3
