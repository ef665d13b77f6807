import numpy as np
import pytest

from stochsplit.clstep import Grid1D, GridFunction


def random_bv(rng, grid, njumps=8, lo=-1.0, hi=1.0, margin=0.25):
    """Random piecewise-constant state, constant within ``margin`` of the grid ends."""
    x = grid.centers
    a, b = grid.left + margin * (grid.right - grid.left), grid.right - margin * (grid.right - grid.left)
    cuts = np.sort(rng.uniform(a, b, njumps))
    levels = rng.uniform(lo, hi, njumps + 1)
    return GridFunction(grid, levels[np.searchsorted(cuts, x)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid():
    return Grid1D(-4.0, 4.0, 400)
