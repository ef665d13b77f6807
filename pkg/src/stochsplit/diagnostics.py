"""Estimators for the a priori bounds of the splitting scheme.

Monte Carlo quantities take a batched :class:`GridFunction` (one row per
Wiener path) or a batched :class:`SplitTrajectory` and report mean and
standard error; totals over paths use ``math.fsum`` so that results do not
depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .clstep import GridFunction, restrict
from .problem import EntropyPair, FluxSpec, NoiseSpec, qdelta_table
from .sdestep import lp_envelope_constants
from .splitting import SplitTrajectory, eval_u_interp, eval_v_interp
from .weights import (MollifierSpec, UVPair, WeightSpec, bump, eval_weight, mollified_weight,
                      mollify, weight_modulus, weighted_lp_norm)

__all__ = [
    "mc_mean",
    "weighted_l1_error",
    "translate_functional",
    "translate_functional_bruteforce",
    "FracBVReport",
    "fractional_bv",
    "fractional_bv_bound",
    "time_modulus",
    "LpReport",
    "lp_local",
    "TestFunction",
    "standard_testfns",
    "EntropyResidual",
    "entropy_residual",
    "residual_allowance",
    "change_of_variables_pair",
    "mollified_weight_pair",
    "uv_chain",
    "doubling_defect",
]


def mc_mean(samples) -> tuple[float, float]:
    """Mean and standard error of a 1-D sample; the error is 0 for a single sample."""
    x = np.atleast_1d(np.asarray(samples, dtype=np.float64))
    n = x.size
    mean = math.fsum(x) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def weighted_l1_error(a: GridFunction, b: GridFunction, spec: WeightSpec):
    """``||a - b||_{1,phi}``, restricting the finer state onto the coarser grid first."""
    if a.grid != b.grid:
        if a.grid.ncells > b.grid.ncells:
            a = restrict(a, b.grid)
        else:
            b = restrict(b, a.grid)
    return weighted_lp_norm(a - b, spec, 1)


# {{{ fractional BV

def translate_functional(u: GridFunction, kernel: Callable, radius: float, weight: Callable):
    """``(1/2) sum_{i,j} |u_i - u_j| K((x_i - x_j)/2) phi((x_i + x_j)/2) dx^2``.

    The pair sum is reorganized by the offset ``k = i - j``: the midpoint
    ``(x_i + x_j)/2`` and half-distance ``k dx/2`` live on the half-cell
    lattice, so this is an exact reindexing of the double sum. ``K`` must
    vanish for half-distances ``>= radius``.
    """
    dx = u.grid.dx
    x = u.grid.centers
    vals = u.values
    kmax = int(math.ceil(2.0 * radius / dx))
    total = np.zeros(vals.shape[:-1])
    for k in range(1, min(kmax, vals.shape[-1] - 1) + 1):
        kz = float(kernel(0.5 * k * dx))
        if kz == 0.0:
            continue
        diff = np.abs(vals[..., k:] - vals[..., :-k])
        total = total + kz * (diff @ weight(x[:-k] + 0.5 * k * dx))
    # offsets k and -k contribute equally, which cancels the prefactor 1/2
    out = total * dx * dx
    return float(out) if np.ndim(out) == 0 else out


def translate_functional_bruteforce(u: GridFunction, kernel: Callable, weight: Callable) -> float:
    """Direct O(n^2) evaluation of :func:`translate_functional` for a single state."""
    x = u.grid.centers
    v = np.asarray(u.values)
    d = np.abs(v[:, None] - v[None, :])
    k = kernel(0.5 * (x[:, None] - x[None, :]))
    w = weight(0.5 * (x[:, None] + x[None, :]))
    return float(0.5 * np.sum(d * k * w) * u.grid.dx ** 2)


@dataclass(frozen=True)
class FracBVReport:
    r: float
    value: float
    mc_stderr: float
    bound: Optional[float] = None
    slack: float = 0.0

    def __post_init__(self):
        if self.value < 0 or self.r <= 0:
            raise ValueError("fractional BV report needs value >= 0 and r > 0")

    @property
    def ok(self) -> bool:
        if self.bound is None:
            return True
        return self.value <= self.bound * (1.0 + self.slack) + 3.0 * self.mc_stderr


def fractional_bv(u: GridFunction, r: float, spec: WeightSpec,
                  m: Optional[MollifierSpec] = None) -> FracBVReport:
    """Monte Carlo estimate of ``D_r = E[(1/2) iint |u(x)-u(y)| J_r((x-y)/2) phi((x+y)/2)]``.

    With ``m`` the state is mollified by ``J_delta`` first (the
    delta-regularized variant).
    """
    if r < 2.0 * u.grid.dx:
        raise ValueError(f"r = {r:g} is below 2 dx = {2 * u.grid.dx:g}")
    if m is not None:
        u = mollify(u, m)
    vals = translate_functional(u, MollifierSpec(r), r, spec)
    mean, se = mc_mean(vals)
    return FracBVReport(r, max(mean, 0.0), se)


def fractional_bv_bound(d0: float, spec: WeightSpec, flux: FluxSpec, t: float,
                        noise: Optional[NoiseSpec] = None, r: float = 0.0,
                        c_T: float = 0.0) -> float:
    """``exp(C_phi lip t) D_r(u^0) + C_T r^kappa_sigma``; the second term is absent for ``sigma = sigma(u)``."""
    out = math.exp(spec.cphi * flux.lip * t) * d0
    if noise is not None and not noise.homogeneous:
        out += c_T * r ** noise.kappa_sigma
    return out

# }}}


def time_modulus(traj: SplitTrajectory, tau1: float, tau2: float, spec: WeightSpec) -> tuple[float, float]:
    """MC estimate of ``E ||u_dt(tau2) - u_dt(tau1)||_{1,phi}`` with its standard error.

    ``tau1`` at a splitting time is read as the right limit, so pairs inside
    one interval ``[t_n, t_{n+1}]`` compare two states of the same SDE flow.
    """
    if not 0 <= tau1 <= tau2 <= traj.T:
        raise ValueError("time_modulus needs 0 <= tau1 <= tau2 <= T")
    if tau1 == tau2:
        return 0.0, 0.0
    a = eval_u_interp(traj, tau1, side="right")
    b = eval_u_interp(traj, tau2, side="left")
    return mc_mean(weighted_lp_norm(b - a, spec, 1))


# {{{ local L^p

@dataclass(frozen=True)
class LpReport:
    p: float
    t: float
    radius: float
    lhs: float
    lhs_stderr: float
    rhs: float
    c1: float
    c2: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + 3.0 * self.lhs_stderr


def _ball_integral(u: GridFunction, p: float, radius: float, spec: WeightSpec):
    x = u.grid.centers
    mask = np.abs(x) < radius
    return np.sum(np.abs(u.values[..., mask]) ** p * spec(x[mask]), axis=-1) * u.grid.dx


def lp_local(u_t: GridFunction, u0: GridFunction, p: float, R: float, M: float, t: float,
             spec: WeightSpec, flux: FluxSpec, noise: NoiseSpec) -> LpReport:
    """Cone estimate ``E int_{|x|<G(t)} |u|^p phi <= e^{C1 t} int_{|x|<R} |u0|^p phi + C2 t e^{C1 t} int_{|x|<R} phi``.

    ``G(t) = max(0, R - M t)``, ``C1 = lip C_phi + C3``.
    """
    if M < flux.lip:
        raise ValueError("cone speed M must be at least the flux Lipschitz constant")
    c2, c3 = lp_envelope_constants(noise, p)
    c1 = flux.lip * spec.cphi + c3
    gamma = max(0.0, R - M * t)
    lhs, se = mc_mean(_ball_integral(u_t, p, gamma, spec))
    x = u0.grid.centers
    phi_ball = float(np.sum(spec(x[np.abs(x) < R])) * u0.grid.dx)
    base = float(np.max(np.atleast_1d(_ball_integral(u0, p, R, spec))))
    e = math.exp(c1 * t)
    return LpReport(p, t, gamma, lhs, se, e * base + c2 * t * e * phi_ball, c1, c2)

# }}}


# {{{ entropy residual

def _bump_derivative(y):
    y = np.asarray(y, dtype=np.float64)
    inside = np.abs(y) < 1.0
    ys = np.where(inside, y, 0.0)
    return np.where(inside, bump(ys) * (-2.0 * ys / (1.0 - ys * ys) ** 2), 0.0)


@dataclass(frozen=True)
class TestFunction:
    """``theta(t) chi(x)`` with ``theta(t) = J(t/t_scale)/J(0)`` and ``chi(x) = J((x-c)/s)/J(0)``.

    ``theta`` is positive at ``t = 0`` and vanishes from ``t_scale`` on.
    """

    t_scale: float
    center: float
    scale: float

    __test__ = False  # not a pytest class

    def theta(self, t):
        return bump(np.asarray(t) / self.t_scale) / bump(0.0)

    def dtheta(self, t):
        return _bump_derivative(np.asarray(t) / self.t_scale) / (self.t_scale * bump(0.0))

    def chi(self, x):
        return bump((np.asarray(x) - self.center) / self.scale) / bump(0.0)

    def dchi(self, x):
        return _bump_derivative((np.asarray(x) - self.center) / self.scale) / (self.scale * bump(0.0))

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.scale, self.center + self.scale


def standard_testfns(T: float, center: float = 0.0, width: float = 1.0,
                     scales: Sequence[float] = (0.25, 0.5, 1.0), ncenters: int = 5,
                     t_frac: float = 0.8) -> list[TestFunction]:
    """Fixed family: 3 spatial scales times 5 centers spread over ``center +- width/2``."""
    centers = center + width * (np.linspace(-0.5, 0.5, ncenters))
    return [TestFunction(t_frac * T, float(c), float(s) * width) for s in scales for c in centers]


@dataclass(frozen=True)
class EntropyResidual:
    c: float
    testfn: TestFunction
    mean: float
    stderr: float
    allowance: float

    @property
    def ok(self) -> bool:
        return self.mean >= -(3.0 * self.stderr + self.allowance)


def residual_allowance(a: float, dx: float, dt: float) -> float:
    return a * (dx + dt ** (1.0 / 3.0))


def entropy_residual(traj: SplitTrajectory, pair: EntropyPair, c: float,
                     testfns: Sequence[TestFunction], a: float = 0.0) -> list[EntropyResidual]:
    """Residual of the entropy inequality for the constant ``c`` along a split trajectory.

    For each test function ``psi = theta chi`` it estimates

        int S(u0-c) psi(0) + sum_n int_{I_n} int [ S(u-c) psi_t + Q(v,c) psi_x
            + S''(u-c) sigma(u)^2 psi / 2 + (S(v-c) - S(w^n-c)) psi_t ] dx dt

    with ``u = u_dt``, ``v = v_dt`` and ``w^n = S_CL(dt) u^n``; the last term
    accounts for the CL step running over the same interval as the SDE step.
    A nonnegative mean is what an entropy solution gives. Time integrals use
    Simpson's rule on each interval.
    """
    grid = traj.checkpoints[0].grid
    x = grid.centers
    dx = grid.dx
    for tf in testfns:
        lo, hi = tf.support
        if lo <= grid.left or hi >= grid.right:
            raise ValueError("test function support touches the domain boundary")
        if tf.t_scale > traj.T * (1 + 1e-12):
            raise ValueError("test function must vanish before T")
    chi = np.stack([tf.chi(x) for tf in testfns])        # (F, n)
    dchi = np.stack([tf.dchi(x) for tf in testfns])
    flux, noise = traj.problem.flux, traj.problem.noise

    lo = min(float(np.min(u.values)) for u in traj.checkpoints if u is not None)
    hi = max(float(np.max(u.values)) for u in traj.checkpoints if u is not None)
    span = hi - lo + 1.0
    qtab = qdelta_table(pair, flux, c, lo - span, hi + span)

    u0 = traj.checkpoints[0].values
    theta0 = np.array([tf.theta(0.0) for tf in testfns])
    acc = (pair.S(u0 - c) @ chi.T) * theta0 * dx       # (P, F) or (F,)

    def integrand(t, u, v, w):
        th = np.array([tf.theta(t) for tf in testfns])
        dth = np.array([tf.dtheta(t) for tf in testfns])
        su = pair.S(u - c)
        stime = su + pair.S(v - c) - pair.S(w - c)
        ito = 0.5 * pair.d2S(u - c) * noise.sigma(x, u) ** 2
        q = qtab(v)
        return ((stime @ chi.T) * dth + (q @ dchi.T) * th + (ito @ chi.T) * th) * dx

    tmax = max(tf.t_scale for tf in testfns)
    for n in range(traj.n_steps):
        t0, t1 = traj.tn(n), traj.tn(n + 1)
        if t0 >= tmax:
            break
        un, wn = traj._u(n).values, traj._w(n).values
        un1 = traj._u(n + 1).values
        tm = 0.5 * (t0 + t1)
        um = eval_u_interp(traj, tm).values
        vm = eval_v_interp(traj, tm).values
        h = t1 - t0
        acc = acc + h / 6.0 * (integrand(t0, wn, un, wn)
                               + 4.0 * integrand(tm, um, vm, wn)
                               + integrand(t1, un1, wn, wn))

    acc = np.atleast_2d(acc)                             # (P, F)
    allowance = residual_allowance(a, dx, traj.dt)
    out = []
    for f, tf in enumerate(testfns):
        mean, se = mc_mean(acc[:, f])
        out.append(EntropyResidual(float(c), tf, mean, se, allowance))
    return out

# }}}


# {{{ identity and property checks

def _gauss_panels(lo: float, hi: float, npanels: int, order: int):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, npanels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * xg + 0.5 * (b + a)
    weights = 0.5 * (b - a) * wg + 0.0 * a
    return nodes.ravel(), weights.ravel()


def change_of_variables_pair(h: Callable, spec: WeightSpec, r: float, L: float = 30.0,
                             npanels: int = 2400, order: int = 16,
                             kpanels: int = 32, korder: int = 8) -> tuple[float, float]:
    """Two quadratures of the same integral under ``x = y + z, x' = y - z``.

    Returns ``(A, B)`` with
    ``A = (1/2) iint h(x, x') J_r((x - x')/2) phi((x + x')/2) dx dx'`` integrated over the band
    ``|x - x'| < 2r`` in the original variables, and
    ``B = iint h(y + z, y - z) J_r(z) phi(y) dy dz``.
    Both use composite Gauss rules, so a kink in ``h`` costs accuracy only
    on the panels it crosses.
    """
    J = MollifierSpec(r)
    xo, wo = _gauss_panels(-L, L, npanels, order)
    # A: outer x, inner x' = x + s with s in (-2r, 2r)
    s, ws = _gauss_panels(-2.0 * r, 2.0 * r, kpanels, korder)
    X = xo[:, None]
    Xp = X + s[None, :]
    A = 0.5 * np.sum(wo[:, None] * ws[None, :] * h(X, Xp) * J(0.5 * (X - Xp))
                     * eval_weight(spec, 0.5 * (X + Xp)))
    # B: outer y, inner z in (-r, r)
    z, wz = _gauss_panels(-r, r, kpanels, korder)
    Y = xo[:, None]
    B = np.sum(wo[:, None] * wz[None, :] * h(Y + z, Y - z) * J(z) * eval_weight(spec, Y))
    return float(A), float(B)


def mollified_weight_pair(spec: WeightSpec, r: float, x, order: int = 128):
    """``((1/2) int phi((x+y)/2) J_r((x-y)/2) dy, (phi * J_r)(x))`` at the points ``x``."""
    x = np.asarray(x, dtype=np.float64)
    J = MollifierSpec(r)
    yg, wg = np.polynomial.legendre.leggauss(order)
    # y = x + s, s in (-2r, 2r); a different node set from the convolution below
    s = 2.0 * r * yg
    w = 2.0 * r * wg
    X = x[..., None]
    lhs = 0.5 * np.sum(w * eval_weight(spec, X + 0.5 * s) * J(-0.5 * s), axis=-1)
    rhs = mollified_weight(spec, J, order=order // 2 + 1)(x)
    return lhs, rhs


def uv_chain(u: GridFunction, beta, uv: UVPair, delta: float, spec: WeightSpec) -> tuple[float, float]:
    """Both sides of ``|U_delta(u, beta)| <= M0/(2 M1) (V_delta(u)/delta + 2||u|| w(delta)/delta) ||beta||``.

    ``u`` and ``beta`` are extended by zero beyond the grid; all integrals are
    grid sums on a padded copy of the grid. ``U_delta(u, beta)`` uses the
    closed-form derivative of ``U_delta``.
    """
    dx = u.grid.dx
    k = int(math.ceil(delta / dx)) + 2
    n = u.grid.ncells + 2 * k
    x = u.grid.left - k * dx + (np.arange(n) + 0.5) * dx
    uu = np.zeros(n)
    bb = np.zeros(n)
    uu[k:-k] = u.values
    bb[k:-k] = np.asarray(beta, dtype=np.float64)
    phi = eval_weight(spec, x)
    offs = np.arange(-k, k + 1) * dx
    dU = uv.dU_delta(offs, delta)
    # (d/dx)(U_delta * beta)(x_i) = sum_j U_delta'(x_i - x_j) beta_j dx
    g = np.convolve(bb, dU, mode="same") * dx
    lhs = abs(float(np.sum(uu * g * phi) * dx))
    # V_delta(u) = sum_y sum_z |u(y+z) - u(y-z)| V_delta(z) phi(y) dz dy on the lattice z = m dx
    vd = 0.0
    for m in range(1, k + 1):
        vz = float(uv.V_delta(m * dx, delta))
        if vz == 0.0:
            continue
        diff = np.abs(uu[2 * m:] - uu[:-2 * m])
        vd += 2.0 * vz * float(np.sum(diff * phi[m:-m]))
    vd *= dx * dx
    norm1 = float(np.sum(np.abs(uu) * phi) * dx)
    wd = weight_modulus(spec, 1.0, delta)
    rhs = uv.m0 / (2.0 * uv.m1) * (vd / delta + 2.0 * norm1 * wd / delta) * float(np.max(np.abs(bb)))
    return lhs, rhs


def doubling_defect(F: Callable, u: Callable, v: Callable, psi: Callable, r: float,
                    L: float, n: int = 20000) -> float:
    """``T_r = iint F(u(x), v(y)) psi((x+y)/2) J_r((x-y)/2) / 2 dy dx - int F(u, v) psi dx``.

    ``u``, ``v``, ``psi`` are callables evaluated on a uniform grid of ``n``
    cells on ``[-L, L]``; the double integral uses the half-lattice offset
    form.
    """
    dx = 2.0 * L / n
    x = -L + (np.arange(n) + 0.5) * dx
    ux, vx = u(x), v(x)
    J = MollifierSpec(r)
    kmax = int(math.ceil(2.0 * r / dx))
    total = 0.0
    for kk in range(-kmax, kmax + 1):
        kz = float(J(0.5 * kk * dx))
        if kz == 0.0:
            continue
        if kk >= 0:
            a, b = ux[kk:], vx[:n - kk]
            mid = x[:n - kk] + 0.5 * kk * dx
        else:
            a, b = ux[:n + kk], vx[-kk:]
            mid = x[-kk:] + 0.5 * kk * dx
        total += 0.5 * kz * float(np.sum(F(a, b) * psi(mid)))
    total *= dx * dx
    return total - float(np.sum(F(ux, vx) * psi(x)) * dx)

# }}}
