import math
import warnings

import numpy as np
import pytest

from conftest import random_bv
from stochsplit.clstep import Grid1D, GridFunction
from stochsplit.noise import sample_path, sample_paths
from stochsplit.problem import get_problem
from stochsplit.sdestep import lp_envelope_constants, sde_contraction_check, sde_step
from stochsplit.weights import WeightSpec

G = Grid1D(-3, 3, 60)
SCHEMES = ("euler-maruyama", "milstein")


def test_zero_noise_identity(rng):
    u = random_bv(rng, G)
    p = sample_path(1, 1.0, 1.0, level=4)
    out = sde_step(u, get_problem("burgers-zero").noise, p, 0.0, 1.0)
    assert np.array_equal(out.values, u.values)


@pytest.mark.parametrize("scheme", SCHEMES + ("exact",))
def test_additive_exact(rng, scheme):
    u = random_bv(rng, G)
    p = sample_path(2, 1.0, 1.0, level=5)
    noise = get_problem("burgers-additive", c=0.3).noise
    out = sde_step(u, noise, p, 0.25, 0.75, scheme)
    assert np.allclose(out.values, u.values + 0.3 * (p(0.75) - p(0.25)), atol=1e-14)


def test_errors(rng):
    u = random_bv(rng, G)
    p = sample_path(2, 1.0, 1.0, level=3)
    noise = get_problem("burgers-cos").noise
    with pytest.raises(ValueError):
        sde_step(u, noise, p, 0.5, 0.25)
    with pytest.raises(ValueError):
        sde_step(u, noise, p, 0.0, 0.3)           # not a knot
    with pytest.raises(ValueError):
        sde_step(u, noise, sample_path(2, 0.5, 0.5), 0.0, 1.0)   # not covered
    with pytest.raises(ValueError):
        sde_step(u, noise, p, 0.0, 0.5, "exact")


def test_gbm_strong_orders():
    prob = get_problem("advection-gbm", lam=0.8)
    u = GridFunction(Grid1D(0, 1, 1), [1.0])
    errs = {s: [] for s in SCHEMES}
    levels = (3, 4, 5, 6, 7)
    paths = sample_paths(4, range(400), 1.0, 1.0, level=levels[-1])
    u = GridFunction(u.grid, np.ones((400, 1)))
    exact = sde_step(u, prob.noise, paths, 0.0, 1.0, "exact").values
    for lev in levels:
        from stochsplit.noise import subsample
        p = subsample(paths, 2 ** (levels[-1] - lev))
        for s in SCHEMES:
            errs[s].append(np.mean(np.abs(sde_step(u, prob.noise, p, 0.0, 1.0, s).values - exact)))
    h = np.array([2.0 ** -l for l in levels])
    em = np.polyfit(np.log(h), np.log(errs["euler-maruyama"]), 1)[0]
    mil = np.polyfit(np.log(h), np.log(errs["milstein"]), 1)[0]
    assert 0.35 <= em <= 0.7
    assert 0.85 <= mil <= 1.2


def test_flow_property_exact():
    prob = get_problem("advection-gbm")
    p = sample_path(5, 1.0, 1.0, level=4)
    u = GridFunction(G, np.linspace(0.1, 1, G.ncells))
    a = sde_step(sde_step(u, prob.noise, p, 0.0, 0.5, "exact"), prob.noise, p, 0.5, 1.0, "exact")
    b = sde_step(u, prob.noise, p, 0.0, 1.0, "exact")
    assert np.allclose(a.values, b.values, rtol=1e-13)


def test_flow_property_milstein():
    noise = get_problem("burgers-cos").noise
    p = sample_path(5, 1.0, 1.0, level=6)
    u = GridFunction(G, np.linspace(-1, 1, G.ncells))
    a = sde_step(sde_step(u, noise, p, 0.0, 0.5), noise, p, 0.5, 1.0)
    assert np.array_equal(a.values, sde_step(u, noise, p, 0.0, 1.0).values)


@pytest.mark.parametrize("name,scheme", [("advection-gbm", "exact"), ("burgers-cos", "milstein"),
                                         ("advection-gbm", "milstein")])
def test_order_preserved(rng, name, scheme):
    noise = get_problem(name).noise
    for s in range(20):
        p = sample_path(s, 1.0, 1.0, level=7)
        a = GridFunction(G, np.sort(rng.uniform(0.1, 2, G.ncells)))
        b = GridFunction(G, a.values + rng.uniform(0, 0.5, G.ncells))
        assert np.all(sde_step(a, noise, p, 0, 1, scheme).values
                      <= sde_step(b, noise, p, 0, 1, scheme).values)


def test_xdep_uses_centers():
    prob = get_problem("burgers-xdep", a=1.0)
    p = sample_path(3, 1.0, 1.0, level=0)
    u = GridFunction(Grid1D(-2, 2, 4), np.zeros(4))
    out = sde_step(u, prob.noise, p, 0.0, 1.0, "euler-maruyama")
    amp = np.minimum(np.abs(u.grid.centers), 1.0) ** 0.75
    assert np.allclose(out.values, amp * p(1.0))


class TestContractionIdentity:
    def test_equal_states(self, rng):
        u = random_bv(rng, G)
        p = sample_paths(1, range(100), 1.0, 1.0, level=4)
        rep = sde_contraction_check(u, u, get_problem("burgers-cos").noise, p, 0, 1, WeightSpec(1.0))
        assert rep.lhs_mean == 0.0 and rep.rhs_mean == 0.0 and rep.ok

    def test_additive_pathwise(self, rng):
        u, v = random_bv(rng, G), random_bv(rng, G)
        p = sample_paths(1, range(100), 1.0, 1.0, level=4)
        noise = get_problem("burgers-additive").noise
        rep = sde_contraction_check(u, v, noise, p, 0, 1, WeightSpec(1.0))
        assert rep.diff_stderr == pytest.approx(0.0, abs=1e-14)
        assert rep.gap <= 1e-13

    def test_ensemble_size(self, rng):
        u = random_bv(rng, G)
        noise = get_problem("burgers-cos").noise
        with pytest.raises(ValueError):
            sde_contraction_check(u, u, noise, sample_paths(1, range(29), 1.0, 1.0, 2), 0, 1,
                                  WeightSpec(1.0))
        with pytest.warns(UserWarning):
            sde_contraction_check(u, u, noise, sample_paths(1, range(50), 1.0, 1.0, 2), 0, 1,
                                  WeightSpec(1.0))


def test_lp_constants():
    cos = get_problem("burgers-cos", a=0.5).noise
    sin = get_problem("burgers-sin", a=0.5).noise
    c2, c3 = lp_envelope_constants(cos, 4)
    assert c2 == pytest.approx(2 * 3 * 0.25)
    assert c3 == pytest.approx(3 * (2 * 0.25 + 4 * 0.25))
    assert lp_envelope_constants(sin, 2)[0] == 0.0


@pytest.mark.parametrize("p", [2.0, 4.0])
def test_lp_envelope(p, rng):
    noise = get_problem("burgers-cos", a=0.5).noise
    spec = WeightSpec(1.0)
    u = random_bv(rng, G, lo=-2, hi=2)
    paths = sample_paths(9, range(300), 1.0, 1.0, level=6)
    ub = GridFunction(G, np.repeat(u.values[None], 300, axis=0))
    out = sde_step(ub, noise, paths, 0.0, 1.0)
    w = spec(G.centers)
    lhs = np.sum(np.abs(out.values) ** p * w, axis=1) * G.dx
    c2, c3 = lp_envelope_constants(noise, p)
    base = np.sum(np.abs(u.values) ** p * w) * G.dx
    rhs = math.exp(c3) * (base + c2 * np.sum(w) * G.dx)
    assert lhs.mean() <= rhs + 3 * lhs.std(ddof=1) / math.sqrt(lhs.size)
