import math
import logging

import numpy as np
import pytest

from stochsplit.clstep import Grid1D
from stochsplit.problem import (EntropyPair, builtin_problems, get_initial_data, get_problem,
                                kruzkov_flux, qdelta, qdelta_table, sdelta, sdelta_prime,
                                sdelta_second, validate_flux, validate_noise)
from stochsplit.weights import bump

# Q_delta oracles for Burgers (f' = xi), adaptive mpmath quadrature at 30 digits
# with S_delta' built from its own bump quadrature.
Q_ORACLE = [
    (2.0, 0.5, 0.1, 1.8574867319331822),
    (0.3, -0.4, 0.25, -0.0064956513622461721),
    (-1.0, 0.2, 0.05, -0.48314689793177),
]
S_HALF_DELTA = 0.019806185144649089   # S_delta(delta/2) for delta = 0.1

BURGERS = get_problem("burgers-cos").flux


class TestSdelta:
    def test_zero(self):
        assert sdelta(EntropyPair(0.1), 0.0) == 0.0

    def test_value(self):
        assert sdelta(EntropyPair(0.1), 0.05) == pytest.approx(S_HALF_DELTA, rel=1e-9)

    def test_sandwich_at_ten_delta(self):
        d = 0.07
        v = sdelta(EntropyPair(d), 10 * d)
        assert 9 * d <= v <= 10 * d

    def test_derivative_saturates(self):
        p = EntropyPair(0.2)
        assert sdelta_prime(p, 0.2) == 1.0 and sdelta_prime(p, 5.0) == 1.0
        assert sdelta_prime(p, -0.2) == -1.0

    def test_sandwich_and_uniform_rate(self):
        rng = np.random.default_rng(1)
        for d in (0.01, 0.1, 1.0):
            p = EntropyPair(d)
            r = rng.uniform(-5, 5, 1000)
            s = sdelta(p, r)
            assert np.count_nonzero(s > np.abs(r)) == 0
            assert np.count_nonzero(s < np.abs(r) - d) == 0
            assert np.max(np.abs(np.abs(r) - s)) <= d

    def test_even_convex(self):
        p = EntropyPair(0.3)
        r = np.linspace(-1, 1, 2001)
        s = sdelta(p, r)
        assert np.allclose(s, s[::-1], atol=1e-15)
        assert np.all(np.diff(s, 2) >= -1e-15)

    def test_second_derivative_bound(self):
        p = EntropyPair(0.2)
        r = np.random.default_rng(2).uniform(-1, 1, 1000)
        s2 = sdelta_second(p, r)
        assert np.all(s2 <= 2 / 0.2 * bump(0.0) * (np.abs(r) < 0.2) + 0.0)
        assert np.all(s2 >= 0)
        h = 1e-5
        fd = (sdelta_prime(p, r + h) - sdelta_prime(p, r - h)) / (2 * h)
        assert np.allclose(fd, s2, atol=1e-5)


class TestQdelta:
    def test_diagonal(self):
        assert qdelta(EntropyPair(0.1), BURGERS, 0.7, 0.7) == 0.0

    @pytest.mark.parametrize("u,v,d,expected", Q_ORACLE)
    def test_against_oracle(self, u, v, d, expected):
        assert qdelta(EntropyPair(d), BURGERS, u, v) == pytest.approx(expected, rel=1e-5, abs=1e-7)
        tab = qdelta_table(EntropyPair(d), BURGERS, v, -3, 3)
        assert float(tab(u)) == pytest.approx(expected, rel=1e-5, abs=1e-7)

    def test_flux_bound(self):
        rng = np.random.default_rng(3)
        p = EntropyPair(0.15)
        u, v = rng.uniform(-3, 3, (2, 1000))
        q = np.array([qdelta(p, BURGERS, a, b) for a, b in zip(u, v)])
        assert np.count_nonzero(np.abs(q) > BURGERS.lip * sdelta(p, u - v) + 1e-12) == 0

    def test_symmetry_defect_bound(self):
        # |d/du (Q(u,v) - Q(v,u))| <= |f''| delta
        rng = np.random.default_rng(4)
        d = 0.2
        p = EntropyPair(d)
        h = 1e-4
        viol = 0
        for u, v in rng.uniform(-2, 2, (1000, 2)):
            g = lambda a: qdelta(p, BURGERS, a, v) - qdelta(p, BURGERS, v, a)
            deriv = (g(u + h) - g(u - h)) / (2 * h)
            viol += abs(deriv) > BURGERS.d2bound * d + 1e-6
        assert viol == 0

    def test_kruzkov_limit(self):
        rng = np.random.default_rng(5)
        u, v = rng.uniform(-2, 2, (2, 50))
        gaps = []
        for d in (0.2, 0.1, 0.05):
            p = EntropyPair(d)
            q = np.array([qdelta(p, BURGERS, a, b) for a, b in zip(u, v)])
            gaps.append(np.max(np.abs(q - kruzkov_flux(BURGERS, u, v))))
        assert gaps[0] > gaps[1] > gaps[2]

    def test_table_out_of_range(self):
        tab = qdelta_table(EntropyPair(0.1), BURGERS, 0.0, -1, 1)
        with pytest.raises(ValueError):
            tab(np.array([5.0]))


class TestCatalog:
    def test_required_entries(self):
        names = set(builtin_problems())
        assert {"burgers-cos", "burgers-additive", "advection-gbm", "burgers-xdep"} <= names

    def test_burgers_cos(self):
        p = get_problem("burgers-cos", a=0.5, range=4.0)
        assert p.flux.lip == 4.0
        assert p.noise.supbound == 0.5 and p.noise.homogeneous
        assert p.in_rate_hypotheses

    def test_gbm_oracle_only(self):
        p = get_problem("advection-gbm")
        assert p.oracle_only and p.noise.exact is not None
        assert not p.in_rate_hypotheses

    def test_additive(self):
        p = get_problem("burgers-additive", c=0.3)
        assert np.all(p.noise.sigma(0.0, np.array([-5.0, 0.0, 7.0])) == 0.3)

    def test_xdep(self):
        p = get_problem("burgers-xdep")
        assert not p.noise.homogeneous and 0 < p.noise.kappa_sigma <= 0.5
        assert validate_noise(p.noise, -3, 3)

    def test_unknown(self):
        with pytest.raises(KeyError):
            get_problem("navier-stokes")
        with pytest.raises(KeyError):
            get_initial_data("nope")

    @pytest.mark.parametrize("name", sorted(builtin_problems()))
    def test_declared_constants(self, name):
        p = get_problem(name)
        assert validate_flux(p.flux, -p.flux.lip or -1, p.flux.lip or 1)
        assert validate_noise(p.noise, -3, 3)

    def test_validator_warns(self, caplog):
        from dataclasses import replace
        bad = replace(BURGERS, lip=0.5)
        with caplog.at_level(logging.WARNING):
            assert not validate_flux(bad, -3, 3)
        assert "violates" in caplog.text


class TestInitialData:
    @pytest.mark.parametrize("name", ["riemann", "shock", "rarefaction", "expansion", "bump",
                                      "smooth", "riemann-bump", "sawtooth", "zero"])
    def test_averages_match_pointwise(self, name):
        ic = get_initial_data(name)
        g = Grid1D(-3, 3, 6000)
        avg = ic.cell_averages(g)
        pts = ic(g.centers)
        assert np.sum(np.abs(avg - pts)) * g.dx < 5e-3

    def test_nested_restriction(self):
        ic = get_initial_data("riemann-bump")
        fine, coarse = Grid1D(-2, 3, 640), Grid1D(-2, 3, 40)
        a = ic.cell_averages(fine).reshape(40, 16).mean(axis=1)
        assert np.allclose(a, ic.cell_averages(coarse), rtol=0, atol=1e-13)
