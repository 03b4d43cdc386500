import functools

import numpy as np
import pytest

from bstraight import build_grid, get_model


@functools.lru_cache(maxsize=None)
def grid_for(name: str, resolution: int, scheme: str | None = None, seed: int = 0):
    return build_grid(get_model(name), resolution, seed, scheme)


# grids on which bar(nu(x)) = x holds to ~1e-12 for x near o
ACCURATE = {
    "h2": ("uniform", 1024),
    "h3": ("gauss", 8000),
    "h4": ("gauss", 20000),
    "h5": ("gauss", 40000),
    "h2xh2": ("product", 64),
}


def accurate_grid(name: str):
    scheme, res = ACCURATE[name]
    return grid_for(name, res, scheme)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
