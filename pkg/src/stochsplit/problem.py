"""Problem data: flux, noise coefficient, initial data and regularized entropies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate

from .weights import bump, bump_antiderivative, bump_second_antiderivative

log = logging.getLogger(__name__)

__all__ = [
    "FluxSpec",
    "NoiseSpec",
    "InitialData",
    "Problem",
    "EntropyPair",
    "sdelta",
    "sdelta_prime",
    "sdelta_second",
    "qdelta",
    "qdelta_table",
    "kruzkov_flux",
    "builtin_problems",
    "get_problem",
    "builtin_initial_data",
    "get_initial_data",
    "validate_flux",
    "validate_noise",
]


# {{{ flux and noise

@dataclass(frozen=True)
class FluxSpec:
    """Scalar flux with its Lipschitz data.

    ``umin`` locates the minimum of a convex flux; ``-inf`` marks a
    nondecreasing flux (upwind from the left), ``+inf`` a nonincreasing one.
    ``lip`` bounds ``|f'|`` over the range of states the run is expected to
    visit; it fixes the CFL substep.
    """

    name: str
    f: Callable
    fprime: Callable
    lip: float
    d2bound: Optional[float] = None
    umin: float = -math.inf

    def godunov(self, a, b):
        if self.umin == -math.inf:
            return self.f(a)
        if self.umin == math.inf:
            return self.f(b)
        return np.maximum(self.f(np.maximum(a, self.umin)), self.f(np.minimum(b, self.umin)))

    def engquist_osher(self, a, b):
        if not math.isfinite(self.umin):
            return self.godunov(a, b)
        c = self.umin
        return self.f(np.maximum(a, c)) + self.f(np.minimum(b, c)) - self.f(c)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise coefficient ``sigma(x, u)`` and its constants.

    ``dsigma`` is the derivative in ``u`` (needed by Milstein). ``exact``,
    when present, maps ``(w, x, dB, dt)`` to the exact SDE flow over an
    interval with Brownian increment ``dB`` and length ``dt``.
    """

    name: str
    sigma: Callable
    dsigma: Callable
    lip: float
    sup0: float
    homogeneous: bool = True
    supbound: Optional[float] = None
    msigma: Optional[float] = None
    kappa_sigma: Optional[float] = None
    exact: Optional[Callable] = None
    zero: bool = False

    def __post_init__(self):
        if self.homogeneous and self.msigma not in (None, 0.0):
            raise ValueError("homogeneous noise cannot carry an x-Holder constant")
        if self.kappa_sigma is not None and not 0.0 < self.kappa_sigma <= 0.5:
            raise ValueError("kappa_sigma must lie in (0, 1/2]")

    @property
    def bounded(self) -> bool:
        return self.supbound is not None


def validate_flux(flux: FluxSpec, lo: float, hi: float, n: int = 2000, seed: int = 0) -> bool:
    """Sample pairs in ``[lo, hi]`` and warn if the supplied constants are violated."""
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(lo, hi, (2, n))
    ok = bool(np.all(np.abs(flux.f(a) - flux.f(b)) <= flux.lip * np.abs(a - b) * (1 + 1e-12) + 1e-14))
    if flux.d2bound is not None:
        ok &= bool(np.all(np.abs(flux.fprime(a) - flux.fprime(b))
                          <= flux.d2bound * np.abs(a - b) * (1 + 1e-12) + 1e-14))
    if not ok:
        log.warning("flux %s violates its declared constants on [%g, %g]", flux.name, lo, hi)
    return ok


def validate_noise(noise: NoiseSpec, lo: float, hi: float, xlo: float = -5.0, xhi: float = 5.0,
                   n: int = 2000, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(xlo, xhi, (2, n))
    a, b = rng.uniform(lo, hi, (2, n))
    ok = bool(np.all(np.abs(noise.sigma(x, a) - noise.sigma(x, b))
                     <= noise.lip * np.abs(a - b) * (1 + 1e-12) + 1e-14))
    ok &= bool(np.all(np.abs(noise.sigma(x, 0.0 * a)) <= noise.sup0 + 1e-14))
    if noise.supbound is not None:
        ok &= bool(np.all(np.abs(noise.sigma(x, a)) <= noise.supbound + 1e-14))
    if not noise.homogeneous and noise.msigma is not None:
        expo = noise.kappa_sigma + 0.5
        ok &= bool(np.all(np.abs(noise.sigma(x, a) - noise.sigma(y, a))
                          <= noise.msigma * np.abs(x - y) ** expo * (1 + np.abs(a)) * (1 + 1e-12)
                          + 1e-14))
    if not ok:
        log.warning("noise %s violates its declared constants", noise.name)
    return ok

# }}}


# {{{ initial data

@dataclass(frozen=True)
class InitialData:
    """Initial profile with a closed-form antiderivative.

    Cell averages come from differences of the antiderivative, so averages
    on nested grids restrict onto each other exactly (up to rounding).
    """

    name: str
    func: Callable
    antiderivative: Callable
    support: tuple[float, float]

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=np.float64))

    def cell_averages(self, grid) -> np.ndarray:
        F = self.antiderivative(grid.edges)
        return np.diff(F) / grid.dx


def _step(x, x0):
    return np.where(x < x0, 1.0, 0.0)


def riemann(ul: float = 1.0, ur: float = 0.0, x0: float = 0.0) -> InitialData:
    def func(x):
        return np.where(x < x0, ul, ur) + 0.0 * x

    def anti(x):
        return np.where(x < x0, ul * (x - x0), ur * (x - x0))

    return InitialData(f"riemann({ul:g},{ur:g})", func, anti, (x0, x0))


def smooth_bump(amp: float = 0.5, center: float = 1.0, width: float = 0.5,
                base: float = 0.0) -> InitialData:
    """``base + amp*cos^2(pi (x-center) / (2 width))`` on ``|x-center| < width``."""
    k = math.pi / (2.0 * width)

    def func(x):
        s = x - center
        inside = np.abs(s) < width
        return base + np.where(inside, amp * np.cos(k * s) ** 2, 0.0)

    def anti(x):
        s = np.clip(x - center, -width, width)
        g = amp * (0.5 * s + np.sin(2.0 * k * s) / (4.0 * k))
        return base * x + g

    return InitialData(f"bump({amp:g},{center:g},{width:g})", func, anti,
                       (center - width, center + width))


def combine(name: str, *parts: InitialData) -> InitialData:
    lo = min(p.support[0] for p in parts)
    hi = max(p.support[1] for p in parts)
    return InitialData(name, lambda x: sum(p.func(x) for p in parts),
                       lambda x: sum(p.antiderivative(x) for p in parts), (lo, hi))


def sawtooth(teeth: int = 4, height: float = 1.0, left: float = -1.0,
             right: float = 1.0) -> InitialData:
    """Piecewise linear teeth rising from 0 to ``height`` on ``[left, right]``, zero outside."""
    w = (right - left) / teeth

    def func(x):
        s = (x - left) / w
        inside = (x >= left) & (x < right)
        return np.where(inside, height * (s - np.floor(s)), 0.0)

    def anti(x):
        s = np.clip((x - left) / w, 0.0, teeth)
        n = np.floor(s)
        frac = s - n
        return height * w * (0.5 * n + 0.5 * frac * frac)

    return InitialData(f"sawtooth({teeth})", func, anti, (left, right))


def builtin_initial_data() -> dict[str, Callable[..., InitialData]]:
    return {
        "riemann": riemann,
        "shock": lambda: riemann(1.0, 0.0),
        "rarefaction": lambda: riemann(0.0, 1.0),
        "expansion": lambda: riemann(-1.0, 1.0),
        "bump": smooth_bump,
        "smooth": lambda: smooth_bump(amp=0.5, center=0.0, width=1.0, base=0.25),
        "riemann-bump": lambda: combine("riemann-bump", riemann(1.0, 0.0, 0.0),
                                        smooth_bump(0.5, 1.5, 1.0)),
        "sawtooth": sawtooth,
        "zero": lambda: InitialData("zero", lambda x: 0.0 * x, lambda x: 0.0 * x, (0.0, 0.0)),
    }


def get_initial_data(name: str, **params) -> InitialData:
    catalog = builtin_initial_data()
    try:
        factory = catalog[name]
    except KeyError:
        raise KeyError(f"unknown initial data {name!r}; known: {sorted(catalog)}") from None
    return factory(**params)

# }}}


# {{{ problem catalog

@dataclass(frozen=True)
class Problem:
    name: str
    flux: FluxSpec
    noise: NoiseSpec
    initial: InitialData
    oracle_only: bool = False
    params: dict = field(default_factory=dict, compare=False)

    @property
    def in_rate_hypotheses(self) -> bool:
        """Homogeneous and bounded noise (the setting of the Delta t^(1/3) rate)."""
        return self.noise.homogeneous and self.noise.bounded and not self.oracle_only


def _burgers(range_bound: float) -> FluxSpec:
    return FluxSpec("burgers", lambda u: 0.5 * u * u, lambda u: u + 0.0, lip=float(range_bound),
                    d2bound=1.0, umin=0.0)


def _linear(c: float) -> FluxSpec:
    return FluxSpec("linear", lambda u: c * u, lambda u: c + 0.0 * u, lip=abs(c), d2bound=0.0,
                    umin=-math.inf if c >= 0 else math.inf)


def _zero_flux() -> FluxSpec:
    return FluxSpec("zero", lambda u: 0.0 * u, lambda u: 0.0 * u, lip=0.0, d2bound=0.0)


def _cos_noise(a: float) -> NoiseSpec:
    return NoiseSpec("cos", lambda x, u: a * np.cos(u), lambda x, u: -a * np.sin(u),
                     lip=abs(a), sup0=abs(a), supbound=abs(a))


def _sin_noise(a: float) -> NoiseSpec:
    return NoiseSpec("sin", lambda x, u: a * np.sin(u), lambda x, u: a * np.cos(u),
                     lip=abs(a), sup0=0.0, supbound=abs(a))


def _additive_noise(c: float) -> NoiseSpec:
    return NoiseSpec("additive", lambda x, u: c + 0.0 * u, lambda x, u: 0.0 * u,
                     lip=0.0, sup0=abs(c), supbound=abs(c),
                     exact=lambda w, x, dB, dt: w + c * dB)


def _gbm_noise(lam: float) -> NoiseSpec:
    return NoiseSpec("gbm", lambda x, u: lam * u, lambda x, u: lam + 0.0 * u,
                     lip=abs(lam), sup0=0.0, supbound=None,
                     exact=lambda w, x, dB, dt: w * np.exp(lam * dB - 0.5 * lam * lam * dt))


def _zero_noise() -> NoiseSpec:
    return NoiseSpec("zero", lambda x, u: 0.0 * u, lambda x, u: 0.0 * u, lip=0.0, sup0=0.0,
                     supbound=0.0, exact=lambda w, x, dB, dt: w + 0.0 * dB, zero=True)


def _xdep_noise(a: float, kappa: float) -> NoiseSpec:
    alpha = kappa + 0.5

    def amp(x):
        return a * np.minimum(np.abs(x), 1.0) ** alpha

    return NoiseSpec("xdep-cos", lambda x, u: amp(x) * np.cos(u),
                     lambda x, u: -amp(x) * np.sin(u), lip=abs(a), sup0=abs(a),
                     homogeneous=False, supbound=abs(a), msigma=abs(a), kappa_sigma=kappa)


def builtin_problems() -> dict[str, Callable[..., Problem]]:
    """Named problem factories; keyword arguments override the defaults."""

    def burgers_cos(a=0.5, range=3.0, initial="riemann-bump"):
        return Problem("burgers-cos", _burgers(range), _cos_noise(a), get_initial_data(initial),
                       params=dict(a=a, range=range, initial=initial))

    def burgers_sin(a=0.5, range=3.0, initial="riemann-bump"):
        return Problem("burgers-sin", _burgers(range), _sin_noise(a), get_initial_data(initial),
                       params=dict(a=a, range=range, initial=initial))

    def burgers_additive(c=0.5, range=3.0, initial="riemann-bump"):
        return Problem("burgers-additive", _burgers(range), _additive_noise(c),
                       get_initial_data(initial), params=dict(c=c, range=range, initial=initial))

    def burgers_zero(range=3.0, initial="riemann-bump"):
        return Problem("burgers-zero", _burgers(range), _zero_noise(), get_initial_data(initial),
                       params=dict(range=range, initial=initial))

    def burgers_xdep(a=0.5, kappa=0.25, range=3.0, initial="riemann-bump"):
        return Problem("burgers-xdep", _burgers(range), _xdep_noise(a, kappa),
                       get_initial_data(initial),
                       params=dict(a=a, kappa=kappa, range=range, initial=initial))

    def advection_gbm(speed=1.0, lam=0.5, initial="bump"):
        return Problem("advection-gbm", _linear(speed), _gbm_noise(lam), get_initial_data(initial),
                       oracle_only=True, params=dict(speed=speed, lam=lam, initial=initial))

    def zeroflux_cos(a=0.5, initial="riemann-bump"):
        return Problem("zeroflux-cos", _zero_flux(), _cos_noise(a), get_initial_data(initial),
                       params=dict(a=a, initial=initial))

    return {
        "burgers-cos": burgers_cos,
        "burgers-sin": burgers_sin,
        "burgers-additive": burgers_additive,
        "burgers-zero": burgers_zero,
        "burgers-xdep": burgers_xdep,
        "advection-gbm": advection_gbm,
        "zeroflux-cos": zeroflux_cos,
    }


def get_problem(name: str, **overrides) -> Problem:
    catalog = builtin_problems()
    try:
        factory = catalog[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(catalog)}") from None
    prob = factory(**overrides)
    if prob.oracle_only:
        log.info("problem %s has unbounded noise and is meant for oracle checks only", name)
    return prob

# }}}


# {{{ regularized entropy pair

@dataclass(frozen=True)
class EntropyPair:
    """Regularized absolute value ``S_delta`` with ``S_delta'(r) = 2 int_0^r J_delta``."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def S(self, r):
        return sdelta(self, r)

    def dS(self, r):
        return sdelta_prime(self, r)

    def d2S(self, r):
        return sdelta_second(self, r)

    def Q(self, flux: FluxSpec, u, v):
        return qdelta(self, flux, u, v)

    @property
    def d2sup(self) -> float:
        """``(2/delta) sup J``, the bound on ``|S_delta''|``."""
        return 2.0 * float(bump(0.0)) / self.delta


def sdelta(pair: EntropyPair, r):
    r = np.asarray(r, dtype=np.float64)
    out = 2.0 * pair.delta * bump_second_antiderivative(r / pair.delta)
    return float(out) if np.ndim(out) == 0 else out


def sdelta_prime(pair: EntropyPair, r):
    r = np.asarray(r, dtype=np.float64)
    out = 2.0 * bump_antiderivative(r / pair.delta)
    return float(out) if np.ndim(out) == 0 else out


def sdelta_second(pair: EntropyPair, r):
    r = np.asarray(r, dtype=np.float64)
    out = 2.0 * bump(r / pair.delta) / pair.delta
    return float(out) if np.ndim(out) == 0 else out


def _simpson_nodes(a: float, b: float, hmax: float):
    n = max(2, int(math.ceil(abs(b - a) / hmax)))
    n += n % 2
    xs = np.linspace(a, b, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return xs, w * (b - a) / (3.0 * n)


def qdelta(pair: EntropyPair, flux: FluxSpec, u: float, v: float) -> float:
    """``Q_delta(u, v) = int_v^u S_delta'(xi - v) f'(xi) dxi`` by composite Simpson.

    The step is ``delta/32`` (well inside ``delta/8``); the breakpoints ``v +- delta`` where the
    integrand loses smoothness are quadrature nodes.
    """
    u = float(u)
    v = float(v)
    if u == v:
        return 0.0
    lo, hi = (v, u) if u > v else (u, v)
    cuts = [lo] + [c for c in (v - pair.delta, v + pair.delta) if lo < c < hi] + [hi]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        xs, w = _simpson_nodes(a, b, pair.delta / 32.0)
        total += float(np.dot(w, sdelta_prime(pair, xs - v) * flux.fprime(xs)))
    return total if u > v else -total


def qdelta_table(pair: EntropyPair, flux: FluxSpec, c: float, lo: float, hi: float) -> Callable:
    """Vectorized ``u -> Q_delta(u, c)`` on ``[lo, hi]`` from a cumulative Simpson table."""
    lo = min(lo, c - 2 * pair.delta)
    hi = max(hi, c + 2 * pair.delta)
    h = pair.delta / 16.0
    n_left = int(math.ceil((c - lo) / h))
    n_right = int(math.ceil((hi - c) / h))
    xs = c + h * np.arange(-n_left, n_right + 1)
    g = sdelta_prime(pair, xs - c) * flux.fprime(xs)
    cum = integrate.cumulative_simpson(g, x=xs, initial=0.0)
    cum -= cum[n_left]
    spline = interpolate.CubicHermiteSpline(xs, cum, g)

    def table(u):
        u = np.asarray(u, dtype=np.float64)
        if u.size and (u.min() < xs[0] or u.max() > xs[-1]):
            raise ValueError("state outside the tabulated range of Q_delta")
        return spline(u)

    return table


def kruzkov_flux(flux: FluxSpec, u, v):
    """``sgn(u - v) (f(u) - f(v))``, the ``delta -> 0`` limit of ``Q_delta``."""
    return np.sign(np.asarray(u) - v) * (flux.f(np.asarray(u, dtype=np.float64)) - flux.f(v))

# }}}
