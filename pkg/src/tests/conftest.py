"""Shared pytest setup.

The repository root goes on sys.path so the tests import `src` without
PYTHONPATH. Solved grids are expensive, so the default ex1 grid is built once
per session.
"""
import os
import sys

import numpy as np
import pytest
from hypothesis import settings

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

settings.register_profile("geodesic", deadline=None, print_blob=True)
settings.load_profile("geodesic")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ex1_grid():
    """(entry, solved default grid) of ex1-implicit."""
    from src.core.hodograph import solve_on_grid
    from src.data.registry import get_example

    entry = get_example("ex1-implicit")
    grid = solve_on_grid(entry.system, entry.grid, entry.anchor.a, anchor=(entry.anchor.t, entry.anchor.x))
    return entry, grid
