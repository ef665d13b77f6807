import numpy as np
import pytest

from conftest import random_bv
from stochsplit.clstep import Grid1D, GridFunction, cl_solve
from stochsplit.noise import sample_path, sample_paths
from stochsplit.problem import get_problem
from stochsplit.sdestep import sde_step
from stochsplit.splitting import (eval_eta_interp, eval_u_interp, eval_v_interp, export_csv,
                                  run_splitting, step_count)

G = Grid1D(-3, 3, 48)


@pytest.fixture
def traj(rng):
    u0 = random_bv(rng, G)
    p = sample_path(8, 1.0, 1.0, level=6)
    return run_splitting(u0, get_problem("burgers-cos"), p, 0.125, 1.0)


def test_step_count():
    assert step_count(1.0, 0.125) == 8
    with pytest.raises(ValueError):
        step_count(1.0, 0.3)


def test_zero_noise_is_cl(rng):
    u0 = random_bv(rng, G)
    tr = run_splitting(u0, get_problem("burgers-zero"), sample_path(1, 1.0, 1.0, 3), 0.25, 1.0)
    u = u0
    for _ in range(4):
        u = cl_solve(u, get_problem("burgers-zero").flux, 0.25)
    assert np.array_equal(tr.final.values, u.values)


def test_zero_flux_is_sde(rng):
    u0 = random_bv(rng, G)
    prob = get_problem("zeroflux-cos")
    p = sample_path(1, 1.0, 1.0, 5)
    tr = run_splitting(u0, prob, p, 0.25, 1.0)
    assert np.array_equal(tr.final.values, sde_step(u0, prob.noise, p, 0.0, 1.0).values)


def test_path_must_resolve_steps(rng):
    with pytest.raises(ValueError):
        run_splitting(random_bv(rng, G), get_problem("burgers-cos"), sample_path(1, 1.0, 1.0, 2),
                      0.125, 1.0)
    with pytest.raises(ValueError):
        run_splitting(random_bv(rng, G), get_problem("burgers-cos"), sample_path(1, 0.5, 0.5, 4),
                      0.125, 1.0)


def test_knot_limits(traj):
    for n in range(1, traj.n_steps):
        t = traj.tn(n)
        assert np.array_equal(eval_u_interp(traj, t).values, traj.checkpoints[n].values)
        assert np.array_equal(eval_u_interp(traj, t, "right").values, traj.intermediates[n].values)
        assert np.array_equal(eval_v_interp(traj, t).values, traj.checkpoints[n].values)
        assert np.array_equal(eval_v_interp(traj, t, "left").values, traj.intermediates[n - 1].values)
    assert np.array_equal(eval_v_interp(traj, 1.0).values, traj.final.values)
    assert np.array_equal(eval_u_interp(traj, 0.0).values, traj.checkpoints[0].values)


def test_eta_continuous(traj):
    # eta at an interior time approaches u^n from both sides
    for n in (2, 5):
        t = traj.tn(n)
        a = eval_eta_interp(traj, t)
        assert np.array_equal(a.values, traj.checkpoints[n].values)
        h = 2.0 ** -6  # one path knot
        left = eval_eta_interp(traj, t - h).values
        right = eval_eta_interp(traj, t + h).values
        assert np.max(np.abs(left - a.values)) < 0.5
        assert np.max(np.abs(right - a.values)) < 0.5
        # the jumps of u and v cancel: eta(t_n-) = u^n exactly in the limit
        lim = eval_u_interp(traj, t).values - traj.intermediates[n - 1].values \
            + eval_v_interp(traj, t, "left").values
        assert np.allclose(lim, traj.checkpoints[n].values, rtol=0, atol=1e-14)


def test_u_interp_is_sde_flow(traj):
    t = traj.tn(3) + 2.0 ** -5
    want = sde_step(traj.intermediates[3], traj.problem.noise, traj.path, traj.tn(3), t)
    assert np.array_equal(eval_u_interp(traj, t).values, want.values)


def test_batched_broadcast(rng):
    u0 = random_bv(rng, G)
    paths = sample_paths(2, range(3), 1.0, 1.0, level=3)
    tr = run_splitting(u0, get_problem("burgers-cos"), paths, 0.25, 1.0)
    assert tr.final.values.shape == (3, G.ncells)
    single = run_splitting(u0, get_problem("burgers-cos"), paths.member(1), 0.25, 1.0)
    assert np.array_equal(tr.final.values[1], single.final.values)


def test_keep_ends(rng):
    u0 = random_bv(rng, G)
    tr = run_splitting(u0, get_problem("burgers-cos"), sample_path(1, 1.0, 1.0, 3), 0.125, 1.0,
                       keep="ends", extra_steps={4})
    full = run_splitting(u0, get_problem("burgers-cos"), sample_path(1, 1.0, 1.0, 3), 0.125, 1.0)
    assert np.array_equal(tr.final.values, full.final.values)
    assert np.array_equal(tr.checkpoints[4].values, full.checkpoints[4].values)
    with pytest.raises(ValueError):
        eval_u_interp(tr, 0.3)


def test_export_csv(tmp_path, traj):
    f = tmp_path / "t.csv"
    export_csv(traj, f)
    lines = f.read_text().splitlines()
    assert lines[0] == "t,path,x,u"
    assert len(lines) == 1 + (traj.n_steps + 1) * G.ncells
    t, p, x, u = lines[-1].split(",")
    assert float(t) == 1.0 and float(u) == traj.final.values[-1]
