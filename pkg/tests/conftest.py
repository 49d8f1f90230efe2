"""Shared fixtures and small surface factories for the test suite."""
import numpy as np
import pytest

from wirecut import SurfaceMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def full_surface(h, w, rng=None, res=0.645):
    """Fully observed random surface."""
    gen = rng or np.random.default_rng(0)
    return SurfaceMatrix(gen.normal(size=(h, w)), res_x=res, res_y=res)


def holed_surface(h, w, frac, rng=None, res=0.645):
    """Random surface with a fraction of cells knocked out."""
    gen = rng or np.random.default_rng(0)
    g = gen.normal(size=(h, w))
    g[gen.uniform(size=(h, w)) < frac] = np.nan
    return SurfaceMatrix(g, res_x=res, res_y=res)
