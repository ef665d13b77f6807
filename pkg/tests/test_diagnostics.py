import math

import numpy as np
import pytest

from conftest import random_bv
from stochsplit.clstep import Grid1D, GridFunction
from stochsplit.diagnostics import (FracBVReport, TestFunction, change_of_variables_pair,
                                    doubling_defect, entropy_residual, fractional_bv,
                                    fractional_bv_bound, lp_local, mc_mean, mollified_weight_pair,
                                    residual_allowance, standard_testfns, time_modulus,
                                    translate_functional, translate_functional_bruteforce, uv_chain,
                                    weighted_l1_error)
from stochsplit.noise import sample_paths
from stochsplit.problem import EntropyPair, get_problem
from stochsplit.splitting import run_splitting
from stochsplit.weights import MollifierSpec, WeightSpec, build_uv

SPEC = WeightSpec(1.0)

# [DERIVED] D_r of the unit step H(x) with r = 0.1, rho = 1; mpmath double integral
STEP_DBV = 0.024597045368558528


def test_mc_mean():
    x = np.array([1.0, 2.0, 4.0, 7.0])
    m, se = mc_mean(x)
    assert m == 3.5
    assert se == pytest.approx(x.std(ddof=1) / 2)
    assert mc_mean([3.0]) == (3.0, 0.0)
    perm = np.random.default_rng(0).permutation(1000)
    y = np.random.default_rng(1).normal(size=1000)
    assert mc_mean(y) == mc_mean(y[perm])


def test_weighted_l1_error_restricts():
    g1, g2 = Grid1D(-1, 1, 8), Grid1D(-1, 1, 32)
    a = GridFunction(g1, np.ones(8))
    b = GridFunction(g2, np.zeros(32))
    want = float(np.sum(SPEC(g1.centers)) * g1.dx)
    assert weighted_l1_error(a, b, SPEC) == pytest.approx(want)
    assert weighted_l1_error(b, a, SPEC) == pytest.approx(want)


def test_translate_matches_bruteforce(rng):
    g = Grid1D(-2, 2, 120)
    u = random_bv(rng, g)
    J = MollifierSpec(0.2)
    fast = translate_functional(u, J, 0.2, SPEC)
    slow = translate_functional_bruteforce(u, J, SPEC)
    assert fast == pytest.approx(slow, rel=1e-12)


def test_fracbv_step_oracle():
    g = Grid1D(-10, 10, 20000)
    u = GridFunction(g, (g.centers > 0).astype(float))
    assert fractional_bv(u, 0.1, SPEC).value == pytest.approx(STEP_DBV, rel=1e-4)


def test_fracbv_scaling_and_errors(rng):
    g = Grid1D(-4, 4, 800)
    u = random_bv(rng, g)
    assert fractional_bv(GridFunction(g, 2 * u.values), 0.1, SPEC).value == pytest.approx(
        2 * fractional_bv(u, 0.1, SPEC).value)
    assert fractional_bv(GridFunction(g, np.full(800, 3.0)), 0.1, SPEC).value == 0.0
    with pytest.raises(ValueError):
        fractional_bv(u, 1.5 * g.dx, SPEC)


def test_fracbv_bound():
    flux = get_problem("burgers-cos").flux
    assert fractional_bv_bound(2.0, WeightSpec(0.5), flux, 1.5) == pytest.approx(
        2.0 * math.exp(0.5 * flux.lip * 1.5))
    assert FracBVReport(0.1, 1.0, 0.0, 1.0).ok
    assert not FracBVReport(0.1, 1.1, 0.0, 1.0).ok
    assert FracBVReport(0.1, 1.1, 0.0, 1.0, slack=0.2).ok
    assert FracBVReport(0.1, 1.1, 0.05, 1.0).ok


def test_fracbv_decreases_under_cl(rng):
    # deterministic Burgers is TVD and the weight gain is bounded by exp(C_phi lip t)
    prob = get_problem("burgers-zero")
    g = Grid1D(-4, 4, 400)
    u0 = random_bv(rng, g)
    p = sample_paths(0, range(1), 0.5, 0.5, level=2)
    tr = run_splitting(u0, prob, p, 0.125, 0.5)
    d0 = fractional_bv(u0, 0.1, SPEC).value
    assert fractional_bv(tr.final, 0.1, SPEC).value <= fractional_bv_bound(d0, SPEC, prob.flux, 0.5)


def test_time_modulus_trivial(rng):
    g = Grid1D(-3, 3, 48)
    tr = run_splitting(random_bv(rng, g), get_problem("burgers-zero"),
                       sample_paths(0, range(40), 1.0, 1.0, 4), 0.25, 1.0)
    assert time_modulus(tr, 0.25, 0.25, SPEC) == (0.0, 0.0)
    assert time_modulus(tr, 0.25, 0.375, SPEC) == (0.0, 0.0)   # no noise: u_dt is constant in the interval
    with pytest.raises(ValueError):
        time_modulus(tr, 0.5, 0.25, SPEC)


def test_lp_local_deterministic(rng):
    g = Grid1D(-3, 3, 120)
    prob = get_problem("burgers-zero")
    u0 = random_bv(rng, g)
    tr = run_splitting(u0, prob, sample_paths(0, range(1), 0.5, 0.5, 3), 0.125, 0.5)
    rep = lp_local(tr.final, u0, 2.0, 2.0, prob.flux.lip, 0.5, SPEC, prob.flux, prob.noise)
    assert rep.c2 == 0.0 and rep.c1 == pytest.approx(prob.flux.lip)
    assert rep.radius == pytest.approx(2.0 - 0.5 * prob.flux.lip)
    assert rep.ok
    with pytest.raises(ValueError):
        lp_local(tr.final, u0, 2.0, 2.0, 0.1, 0.5, SPEC, prob.flux, prob.noise)


def test_testfunction():
    tf = TestFunction(0.4, 0.5, 0.25)
    assert tf.theta(0.0) == pytest.approx(1.0) and tf.theta(0.4) == 0.0
    assert tf.chi(0.5) == pytest.approx(1.0) and tf.chi(0.76) == 0.0
    t = np.linspace(0.01, 0.39, 9)
    h = 1e-6
    assert np.allclose(tf.dtheta(t), (tf.theta(t + h) - tf.theta(t - h)) / (2 * h), rtol=1e-5, atol=1e-8)
    x = np.linspace(0.3, 0.7, 9)
    assert np.allclose(tf.dchi(x), (tf.chi(x + h) - tf.chi(x - h)) / (2 * h), rtol=1e-5, atol=1e-8)
    fns = standard_testfns(1.0, 0.5, 1.0)
    assert len(fns) == 15 and min(f.support[0] for f in fns) == pytest.approx(-1.0)


def test_entropy_constant_state_is_zero():
    g = Grid1D(-2, 3, 100)
    tr = run_splitting(GridFunction(g, np.full(100, 0.5)), get_problem("burgers-zero"),
                       sample_paths(0, range(30), 0.5, 0.5, 3), 0.125, 0.5)
    res = entropy_residual(tr, EntropyPair(0.05), 0.5, standard_testfns(0.5, 0.5, 1.0))
    assert all(abs(r.mean) < 1e-14 and r.ok for r in res)


def test_entropy_allowance():
    assert residual_allowance(0.05, 0.01, 0.008) == pytest.approx(0.05 * (0.01 + 0.2))


def test_entropy_support_checks(rng):
    g = Grid1D(-1, 1, 40)
    tr = run_splitting(random_bv(rng, g), get_problem("burgers-zero"),
                       sample_paths(0, range(1), 0.5, 0.5, 2), 0.125, 0.5)
    with pytest.raises(ValueError):
        entropy_residual(tr, EntropyPair(0.05), 0.0, [TestFunction(0.4, 0.9, 0.25)])
    with pytest.raises(ValueError):
        entropy_residual(tr, EntropyPair(0.05), 0.0, [TestFunction(0.6, 0.0, 0.25)])


# identities under the change of variables x = y + z, x' = y - z

@pytest.mark.parametrize("r", [0.05, 0.3, 1.0])
def test_change_of_variables(r):
    def h(x, xp):
        return np.abs(np.tanh(x) - np.tanh(xp) + 0.3 * np.sin(x * xp)) + np.exp(-x ** 2)
    A, B = change_of_variables_pair(h, SPEC, r)
    assert A == pytest.approx(B, rel=1e-6)


@pytest.mark.parametrize("rho,r", [(1.0, 0.1), (2.5, 0.4)])
def test_mollified_weight_identity(rho, r):
    x = np.linspace(-4, 4, 41)
    lhs, rhs = mollified_weight_pair(WeightSpec(rho), r, x)
    assert np.allclose(lhs, rhs, rtol=1e-6, atol=0)


@pytest.mark.parametrize("delta", [0.05, 0.2])
def test_uv_chain(delta, rng):
    g = Grid1D(-3, 3, 600)
    u = random_bv(rng, g)
    beta = rng.uniform(-1, 1, g.ncells)
    lhs, rhs = uv_chain(u, beta, build_uv(), delta, SPEC)
    assert 0 <= lhs <= rhs


def test_doubling_defect_vanishes():
    F = lambda a, b: np.abs(a - b) + a * b
    u = np.sin
    v = lambda x: np.cos(x) * 0.5
    psi = lambda x: np.exp(-x ** 2)
    d = [abs(doubling_defect(F, u, v, psi, r, 5.0)) for r in (0.2, 0.1, 0.05)]
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.02
