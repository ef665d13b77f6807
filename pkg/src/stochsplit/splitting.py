"""Splitting recursion ``u^{n+1} = S_SDE(t_{n+1}, t_n) S_CL(dt) u^n`` and its interpolants."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clstep import GridFunction, cl_solve
from .noise import WienerPath
from .problem import Problem
from .sdestep import sde_step

__all__ = [
    "SplitTrajectory",
    "run_splitting",
    "step_count",
    "eval_u_interp",
    "eval_v_interp",
    "eval_eta_interp",
    "export_csv",
]


def step_count(T: float, dt: float) -> int:
    n = round(T / dt)
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ValueError(f"T = {T!r} is not an integer multiple of dt = {dt!r}")
    return n


@dataclass
class SplitTrajectory:
    """Output of :func:`run_splitting`.

    ``checkpoints[n]`` is ``u^n`` and ``intermediates[n]`` is
    ``w^n = S_CL(dt) u^n``. With ``keep="ends"`` only ``u^0``, ``u^N`` and
    ``w^{N-1}`` are stored and the interpolants are available at ``T`` only.
    """

    dt: float
    n_steps: int
    problem: Problem
    path: WienerPath
    checkpoints: list
    intermediates: list
    cl_scheme: str = "godunov"
    sde_scheme: str = "milstein"
    keep: str = "all"
    times: np.ndarray = field(init=False)

    def __post_init__(self):
        self.times = self.dt * np.arange(self.n_steps + 1)

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def final(self) -> GridFunction:
        return self.checkpoints[-1]

    def interval(self, t: float, side: str) -> int:
        """Index ``n`` of the interval owning ``t`` for a left or right limit."""
        if not -1e-12 <= t <= self.T * (1 + 1e-12):
            raise ValueError(f"t = {t!r} outside [0, {self.T}]")
        s = t / self.dt
        n = int(np.floor(s + 1e-9))
        on_knot = abs(s - round(s)) < 1e-9
        if on_knot:
            n = int(round(s))
            if side == "left":
                n -= 1
        return min(max(n, 0), self.n_steps - 1)

    def _u(self, n: int) -> GridFunction:
        u = self.checkpoints[n]
        if u is None:
            raise ValueError("checkpoint not stored (trajectory built with keep='ends')")
        return u

    def _w(self, n: int) -> GridFunction:
        w = self.intermediates[n]
        if w is None:
            raise ValueError("intermediate state not stored (trajectory built with keep='ends')")
        return w

    def tn(self, n: int) -> float:
        return float(self.times[n])


def run_splitting(u0: GridFunction, problem: Problem, path: WienerPath, dt: float, T: float,
                  cl_scheme: str = "godunov", sde_scheme: str = "milstein",
                  keep: str = "all", extra_steps=()) -> SplitTrajectory:
    """Run the recursion to ``T``.

    ``keep="ends"`` stores only the first and last states, plus the
    checkpoints listed in ``extra_steps``.
    """
    if keep not in ("all", "ends"):
        raise ValueError("keep must be 'all' or 'ends'")
    N = step_count(T, dt)
    if path.horizon < T * (1 - 1e-12):
        raise ValueError("path does not cover [0, T]")
    knots = [path.index_of(n * dt) for n in range(N + 1)]  # raises if t_n is not a knot
    del knots
    if path.batched and not u0.batched:
        u0 = GridFunction(u0.grid, np.repeat(u0.values[None, :], path.npaths, axis=0))
    us: list[Optional[GridFunction]] = [u0] + [None] * N
    ws: list[Optional[GridFunction]] = [None] * N
    u = u0
    for n in range(N):
        w = cl_solve(u, problem.flux, dt, cl_scheme)
        u = sde_step(w, problem.noise, path, n * dt, (n + 1) * dt, sde_scheme)
        if keep == "all" or n == N - 1:
            ws[n] = w
            us[n + 1] = u
        elif n + 1 in extra_steps:
            us[n + 1] = u
    return SplitTrajectory(dt, N, problem, path, us, ws, cl_scheme, sde_scheme, keep)


def eval_u_interp(traj: SplitTrajectory, t: float, side: str = "left") -> GridFunction:
    """``u_dt(t) = S_SDE(t, t_n) w^n`` on ``(t_n, t_{n+1}]``.

    At a splitting time ``t_n`` the default ``side="left"`` gives the value
    ``u^n``; ``side="right"`` gives the right limit ``w^n``.
    """
    n = traj.interval(t, side)
    if t == 0 and side == "left":
        return traj._u(0)
    return sde_step(traj._w(n), traj.problem.noise, traj.path, traj.tn(n), t, traj.sde_scheme)


def eval_v_interp(traj: SplitTrajectory, t: float, side: str = "right") -> GridFunction:
    """``v_dt(t) = S_CL(t - t_n) u^n`` on ``[t_n, t_{n+1})``.

    ``side="right"`` (default) gives ``u^n`` at ``t_n``; ``side="left"`` gives
    the left limit ``w^{n-1}``. At ``T`` the value is ``u^N``.
    """
    if abs(t - traj.T) <= 1e-12 * traj.T and side == "right":
        return traj.final
    n = traj.interval(t, side)
    if side == "left" and abs(t / traj.dt - (n + 1)) < 1e-9:
        return traj._w(n)
    return cl_solve(traj._u(n), traj.problem.flux, t - traj.tn(n), traj.cl_scheme)


def eval_eta_interp(traj: SplitTrajectory, t: float) -> GridFunction:
    """``eta_dt(t) = u_dt(t) - w^n + v_dt(t)`` on ``[t_n, t_{n+1}]``; continuous in ``t``."""
    n = traj.interval(t, "left")
    if abs(t / traj.dt - round(t / traj.dt)) < 1e-9:
        k = int(round(t / traj.dt))
        return traj._u(k)
    w = traj._w(n)
    u = sde_step(w, traj.problem.noise, traj.path, traj.tn(n), t, traj.sde_scheme)
    v = cl_solve(traj._u(n), traj.problem.flux, t - traj.tn(n), traj.cl_scheme)
    return GridFunction(w.grid, u.values - w.values + v.values)


def export_csv(traj: SplitTrajectory, filename) -> None:
    """Write the stored checkpoints in long form: ``t, path, x, u``."""
    x = traj.checkpoints[0].grid.centers
    with open(filename, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "path", "x", "u"])
        for n, u in enumerate(traj.checkpoints):
            if u is None:
                continue
            vals = np.atleast_2d(u.values)
            for p, row in enumerate(vals):
                for xi, ui in zip(x, row):
                    out.writerow([f"{traj.tn(n):.17g}", p, f"{xi:.17g}", f"{ui:.17g}"])
