"""Weight functions, weighted norms and mollifier kernels.

The weights are the exponential family ``phi_rho(x) = exp(-rho*sqrt(1+x^2))``,
for which ``|phi'| <= rho*phi`` holds with ``rho`` the sharp constant.
Every norm in the package is taken against one of these weights.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, interpolate

__all__ = [
    "WeightSpec",
    "MollifierSpec",
    "UVPair",
    "bump",
    "bump_antiderivative",
    "eval_weight",
    "weight_difference",
    "weight_modulus",
    "weighted_lp_norm",
    "mollified_weight",
    "mollify",
    "build_uv",
    "default_profile",
]


# {{{ weights

@dataclass(frozen=True)
class WeightSpec:
    """Exponential weight ``exp(-rho*sqrt(1+x^2))``."""

    rho: float = 1.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"weight rate must be positive, got {self.rho}")

    @property
    def cphi(self) -> float:
        return float(self.rho)

    def __call__(self, x):
        return eval_weight(self, x)

    def integral(self, a: float = -np.inf, b: float = np.inf) -> float:
        """Integral of the weight over ``[a, b]``."""
        val, _ = integrate.quad(self, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)
        return float(val)

    def truncation_radius(self, tol: float = 1.0e-12) -> float:
        """Smallest ``L`` with ``phi(L) <= tol``."""
        s = -np.log(tol) / self.rho
        return float(np.sqrt(max(s * s - 1.0, 0.0)))


def eval_weight(spec: WeightSpec, x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-spec.rho * np.sqrt(1.0 + x * x))


def weight_difference(spec: WeightSpec, x, h, p: float = 1.0):
    """Compute ``phi^{1/p}(x+h) - phi^{1/p}(x)`` without cancellation."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    a = np.sqrt(1.0 + (x + h) ** 2)
    b = np.sqrt(1.0 + x * x)
    # a - b written so that it stays accurate for small h
    dab = h * (2.0 * x + h) / (a + b)
    return np.exp(-spec.rho * b / p) * np.expm1(-spec.rho * dab / p)


def weight_modulus(spec: WeightSpec, p: float, r):
    """Modulus ``w_{p,phi}(r)`` with ``|phi^{1/p}(x+z)-phi^{1/p}(x)| <= w(|z|) phi^{1/p}(x)``."""
    if p <= 0:
        raise ValueError("p must be positive")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("weight modulus is only defined for r >= 0")
    c = spec.cphi / p
    out = c * r * (1.0 + c * r * np.exp(c * r))
    return float(out) if out.ndim == 0 else out


def weighted_lp_norm(u, spec, p: float = 1.0) -> float:
    """Midpoint-rule value of ``(int |u|^p phi dx)^{1/p}`` on the grid of ``u``.

    ``spec`` is either a :class:`WeightSpec` or any vectorized callable weight
    (for instance one returned by :func:`mollified_weight`). The grid must
    cover the region where ``|u|^p phi`` is not negligible; nothing beyond
    the grid is added.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    values = np.asarray(u.values, dtype=np.float64)
    if values.shape[-1] == 0:
        raise ValueError("empty grid")
    w = spec(u.grid.centers)
    total = np.sum(np.abs(values) ** p * w, axis=-1) * u.grid.dx
    out = total ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out

# }}}


# {{{ mollifiers

@functools.lru_cache(maxsize=None)
def _bump_mass() -> float:
    val, _ = integrate.quad(lambda s: np.exp(-1.0 / (1.0 - s * s)), 0.0, 1.0,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * val


def bump(x):
    """Unit-mass bump ``C exp(-1/(1-x^2))`` supported in ``(-1, 1)``."""
    x = np.asarray(x, dtype=np.float64)
    inside = np.abs(x) < 1.0
    xs = np.where(inside, x, 0.0)
    out = np.where(inside, np.exp(-1.0 / (1.0 - xs * xs)), 0.0) / _bump_mass()
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=None)
def _bump_tables(n: int = 4096):
    s = np.linspace(0.0, 1.0, n + 1)
    j = bump(s)
    k = integrate.cumulative_simpson(j, x=s, initial=0.0)
    # K(1) is exactly 1/2; remove the residual quadrature error
    k *= 0.5 / k[-1]
    kint = interpolate.CubicHermiteSpline(s, k, j)
    lint = kint.antiderivative()
    return kint, lint, float(lint(1.0))


def bump_antiderivative(s):
    """``K(s) = int_0^s J``; odd, equal to ``+-1/2`` outside ``(-1, 1)``."""
    s = np.asarray(s, dtype=np.float64)
    kint, _, _ = _bump_tables()
    a = np.minimum(np.abs(s), 1.0)
    out = np.sign(s) * kint(a)
    out = np.where(np.abs(s) >= 1.0, 0.5 * np.sign(s), out)
    return float(out) if out.ndim == 0 else out


def bump_second_antiderivative(s):
    """``L(s) = int_0^s K``; even, linear with slope 1/2 outside ``(-1, 1)``."""
    s = np.abs(np.asarray(s, dtype=np.float64))
    _, lint, l1 = _bump_tables()
    out = np.where(s < 1.0, lint(np.minimum(s, 1.0)), l1 + 0.5 * (s - 1.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MollifierSpec:
    """Scaled bump ``J_delta(x) = J(x/delta)/delta``.

    With ``shifted=True`` the kernel is ``J^+_delta(x) = J(x/delta - 1)/delta``,
    supported in ``(0, 2*delta)``.
    """

    delta: float
    shifted: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("mollifier width must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64) / self.delta
        if self.shifted:
            x = x - 1.0
        return bump(x) / self.delta

    @property
    def support(self) -> tuple[float, float]:
        if self.shifted:
            return 0.0, 2.0 * self.delta
        return -self.delta, self.delta

    @property
    def sup(self) -> float:
        return float(bump(0.0)) / self.delta


def mollified_weight(spec: WeightSpec, m: MollifierSpec, order: int = 64) -> Callable:
    """Return ``x -> (phi * J_delta)(x)`` evaluated by Gauss-Legendre quadrature."""
    nodes, wts = np.polynomial.legendre.leggauss(order)
    lo, hi = m.support
    z = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    wz = 0.5 * (hi - lo) * wts * m(z)

    def weight(x):
        x = np.asarray(x, dtype=np.float64)
        return np.sum(eval_weight(spec, x[..., None] - z) * wz, axis=-1)

    return weight


def mollify(u, m: MollifierSpec):
    """Discrete convolution ``u * J_delta`` on the grid of ``u``.

    Kernel weights are sampled at the grid offsets and renormalized to unit
    sum, so constants are reproduced exactly. Values beyond the grid ends
    are taken equal to the end values.
    """
    from .clstep import GridFunction

    dx = u.grid.dx
    if m.shifted:
        raise ValueError("mollify expects a symmetric kernel")
    if m.delta < dx:
        warnings.warn(f"mollifier width {m.delta:g} below grid spacing {dx:g}; returning input",
                      stacklevel=2)
        return GridFunction(u.grid, np.array(u.values, dtype=np.float64, copy=True))
    k = int(np.ceil(m.delta / dx))
    offs = np.arange(-k, k + 1) * dx
    wts = m(offs)
    wts = wts / wts.sum()
    vals = np.asarray(u.values, dtype=np.float64)
    pad = np.concatenate([np.repeat(vals[..., :1], k, axis=-1), vals,
                          np.repeat(vals[..., -1:], k, axis=-1)], axis=-1)
    n = vals.shape[-1]
    # u + sum_j w_j (u_shifted - u): constants come out exact, not just to rounding
    out = vals.copy()
    for j, w in enumerate(wts):
        out += w * (pad[..., j:j + n] - vals)
    return GridFunction(u.grid, out)

# }}}


# {{{ U/V pair

def default_profile(r):
    """Bump on ``(0, 1)`` with unit mass, ``2 J(2r - 1)``."""
    return 2.0 * bump(2.0 * np.asarray(r, dtype=np.float64) - 1.0)


@dataclass
class UVPair:
    """Kernels ``U`` and ``V`` built from a radial profile on ``(0, 1)`` (one dimension).

    ``U(x) = (1 - int_0^|x| profile) / (2 M1)`` and ``V(x) = profile(|x|) / (2 M0)``,
    where ``Mn = int r^n profile(r) dr``. Then
    ``U_delta'(x) = -(M0/M1) V_delta(x) sgn(x) / delta``.
    """

    profile: Callable
    m0: float
    m1: float
    _cum: interpolate.CubicHermiteSpline = field(repr=False)

    def U(self, x):
        a = np.abs(np.asarray(x, dtype=np.float64))
        cum = np.where(a < 1.0, self._cum(np.minimum(a, 1.0)), 1.0)
        return (1.0 - cum) / (2.0 * self.m1)

    def V(self, x):
        a = np.abs(np.asarray(x, dtype=np.float64))
        return np.where(a < 1.0, self.profile(np.minimum(a, 1.0)), 0.0) / (2.0 * self.m0)

    def U_delta(self, x, delta: float):
        return self.U(np.asarray(x) / delta) / delta

    def V_delta(self, x, delta: float):
        return self.V(np.asarray(x) / delta) / delta

    def dU_delta(self, x, delta: float):
        """Closed-form derivative of ``U_delta``."""
        x = np.asarray(x, dtype=np.float64)
        return -(self.m0 / self.m1) * self.V_delta(x, delta) * np.sign(x) / delta


def build_uv(profile: Callable = default_profile, n: int = 4096, tol: float = 1.0e-8) -> UVPair:
    r = np.linspace(0.0, 1.0, n + 1)
    rho = np.asarray(profile(r), dtype=np.float64)
    if np.any(rho < 0):
        raise ValueError("profile must be nonnegative")
    m0 = integrate.quad(profile, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    if abs(m0 - 1.0) > tol:
        raise ValueError(f"profile must have unit mass on (0, 1), got {m0:.12g}")
    m1 = integrate.quad(lambda s: s * profile(s), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13,
                        limit=200)[0]
    cum = integrate.cumulative_simpson(rho, x=r, initial=0.0)
    cum /= cum[-1]
    return UVPair(profile=profile, m0=m0, m1=m1,
                  _cum=interpolate.CubicHermiteSpline(r, cum, rho / m0))

# }}}
