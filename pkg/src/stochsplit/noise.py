"""Brownian paths with bridge refinement.

Every normal draw comes from a Philox stream keyed by ``(seed, level)``:
level 0 holds the base increments, level ``l >= 1`` the bridge midpoints
inserted by the ``l``-th halving. A path at a given level is therefore a
pure function of ``(seed, horizon, base_step, level)``, whichever order or
process computes it.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "WienerPath",
    "path_seed",
    "sample_path",
    "sample_paths",
    "refine",
    "subsample",
    "dump_paths",
    "load_paths",
]

MAGIC = b"WPTH"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQd")  # magic, version, level, npaths, nknots, horizon


def path_seed(master: int, index: int) -> int:
    """Seed of path ``index`` under ``master``; stable across runs and platforms."""
    ss = np.random.SeedSequence([int(master), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _normals(seed: int, level: int, count: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(level),))
    return np.random.Generator(np.random.Philox(ss)).standard_normal(count)


@dataclass(frozen=True)
class WienerPath:
    """Knots ``times`` and values ``B(times)``.

    ``values`` is 1-D for a single path or ``(npaths, nknots)`` for a batch, in
    which case ``seed`` is a tuple with one entry per row.
    """

    seed: int | tuple
    times: np.ndarray
    values: np.ndarray
    level: int
    horizon: float

    @property
    def batched(self) -> bool:
        return self.values.ndim == 2

    @property
    def npaths(self) -> int:
        return self.values.shape[0] if self.batched else 1

    @property
    def nintervals(self) -> int:
        return self.times.size - 1

    @property
    def step(self) -> float:
        return self.horizon / self.nintervals

    def index_of(self, t: float) -> int:
        """Index of the knot at time ``t``; raise if ``t`` is not a knot."""
        j = int(round(t / self.horizon * self.nintervals))
        if j < 0 or j > self.nintervals or abs(self.times[j] - t) > 1e-12 * max(1.0, self.horizon):
            raise ValueError(f"time {t!r} is not a knot of the path")
        return j

    def member(self, i: int) -> "WienerPath":
        if not self.batched:
            raise ValueError("not a batch")
        return WienerPath(self.seed[i], self.times, self.values[i], self.level, self.horizon)

    def __call__(self, t: float):
        return self.values[..., self.index_of(t)]


def _knot_times(horizon: float, n: int) -> np.ndarray:
    # T * (j / n): nested grids share their common knots bit-exactly
    return horizon * (np.arange(n + 1) / n)


def _base_count(horizon: float, base_step: float) -> int:
    if not (horizon > 0 and base_step > 0):
        raise ValueError("horizon and base_step must be positive")
    n = round(horizon / base_step)
    if n < 1 or abs(n * base_step - horizon) > 1e-9 * horizon:
        raise ValueError("base_step must divide the horizon")
    return n


def _base_values(seed: int, horizon: float, n: int) -> np.ndarray:
    z = _normals(seed, 0, n) * math.sqrt(horizon / n)
    return np.concatenate([[0.0], np.cumsum(z)])


def sample_path(seed: int, horizon: float, base_step: float, level: int = 0) -> WienerPath:
    n = _base_count(horizon, base_step)
    path = WienerPath(int(seed), _knot_times(horizon, n), _base_values(seed, horizon, n), 0, horizon)
    return refine(path, 2 ** level) if level else path


def sample_paths(master: int, indices: Sequence[int], horizon: float, base_step: float,
                 level: int = 0) -> WienerPath:
    """Batch of paths ``path_seed(master, i)`` for ``i`` in ``indices``."""
    n = _base_count(horizon, base_step)
    seeds = tuple(path_seed(master, i) for i in indices)
    if not seeds:
        raise ValueError("no path indices")
    vals = np.stack([_base_values(s, horizon, n) for s in seeds])
    path = WienerPath(seeds, _knot_times(horizon, n), vals, 0, horizon)
    return refine(path, 2 ** level) if level else path


def refine(path: WienerPath, factor: int) -> WienerPath:
    """Insert Brownian-bridge midpoints until the step shrinks by ``factor``."""
    factor = int(factor)
    if factor < 1 or factor & (factor - 1):
        raise ValueError("refinement factor must be a power of two")
    seeds = path.seed if path.batched else (path.seed,)
    vals = np.atleast_2d(path.values)
    level = path.level
    while factor > 1:
        m = vals.shape[1] - 1
        level += 1
        scale = math.sqrt(path.horizon / m / 4.0)
        z = np.stack([_normals(s, level, m) for s in seeds])
        mid = 0.5 * (vals[:, :-1] + vals[:, 1:]) + scale * z
        new = np.empty((vals.shape[0], 2 * m + 1))
        new[:, 0::2] = vals
        new[:, 1::2] = mid
        vals = new
        factor //= 2
    if not path.batched:
        vals = vals[0]
    return WienerPath(path.seed, _knot_times(path.horizon, vals.shape[-1] - 1), vals, level,
                      path.horizon)


def subsample(path: WienerPath, stride: int) -> WienerPath:
    """Keep every ``stride``-th knot (the inverse of :func:`refine` on values)."""
    if path.nintervals % stride:
        raise ValueError("stride must divide the number of intervals")
    level = path.level - int(round(math.log2(stride)))
    return WienerPath(path.seed, _knot_times(path.horizon, path.nintervals // stride),
                      path.values[..., ::stride].copy(), level, path.horizon)


# {{{ binary dump

def dump_paths(path: WienerPath, filename) -> None:
    """Write ``path`` in the little-endian WPTH layout.

    Layout: header ``<4sIIIQd`` (magic, version, level, npaths, nknots,
    horizon), then ``npaths`` uint64 seeds, ``nknots`` float64 times and
    ``npaths * nknots`` float64 values in row order.
    """
    seeds = path.seed if path.batched else (path.seed,)
    vals = np.atleast_2d(path.values)
    with open(filename, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, path.level, len(seeds), path.times.size,
                              float(path.horizon)))
        fh.write(np.asarray(seeds, dtype="<u8").tobytes())
        fh.write(path.times.astype("<f8").tobytes())
        fh.write(vals.astype("<f8").tobytes())


def load_paths(filename) -> WienerPath:
    data = Path(filename).read_bytes()
    magic, version, level, npaths, nknots, horizon = _HEADER.unpack_from(data, 0)
    if magic != MAGIC or version != VERSION:
        raise ValueError(f"{filename}: not a WPTH v{VERSION} file")
    off = _HEADER.size
    seeds = np.frombuffer(data, "<u8", npaths, off)
    off += 8 * npaths
    times = np.frombuffer(data, "<f8", nknots, off).astype(np.float64)
    off += 8 * nknots
    vals = np.frombuffer(data, "<f8", npaths * nknots, off).astype(np.float64)
    vals = vals.reshape(npaths, nknots)
    if npaths == 1:
        return WienerPath(int(seeds[0]), times, vals[0], level, horizon)
    return WienerPath(tuple(int(s) for s in seeds), times, vals, level, horizon)

# }}}
