# tests/conftest.py
import json

import numpy as np
import pytest

from fracshape.grid.lattice import build_grid
from fracshape.grid.stiffness import assemble_stiffness


@pytest.fixture(scope="session")
def grid1d():
    # h = 1/16 on [-1, 1]
    return build_grid(1, 1.0, 32)


@pytest.fixture(scope="session")
def base1d(grid1d):
    return assemble_stiffness(grid1d, 0.5)


@pytest.fixture(scope="session")
def grid2d():
    return build_grid(2, 1.0, 8)


@pytest.fixture(scope="session")
def base2d(grid2d):
    return assemble_stiffness(grid2d, 0.5)


@pytest.fixture(scope="session")
def line128():
    """[-8, 8] in 128 cells, the grid of the shape experiments."""
    grid = build_grid(1, 8.0, 128)
    return assemble_stiffness(grid, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def write_config(tmp_path):
    def write(payload: dict, name: str = "config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return write
