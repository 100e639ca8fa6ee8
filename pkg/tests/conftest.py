"""
Fixtures compartidos por la batería de tests.
"""

from pathlib import Path

import numpy as np
import pytest

from oscholder.approach.sets import SetSpec
from oscholder.approach.target import TargetSet
from oscholder.data.generators import disconnected_input, lattice_input
from oscholder.grid.grid_function import from_samples

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"


@pytest.fixture
def ramp_1d():
    """g(x) = x on 0, 0.1, ..., 1."""
    return from_samples(np.linspace(0.0, 1.0, 11), 0.1)


@pytest.fixture
def bump_1d():
    return from_samples([0.0, 0.0, 1.0, 0.0, 0.0], 1.0)


@pytest.fixture
def square_2d():
    """Constant 1 on a full 5x5 grid with h = 1."""
    return from_samples(np.ones((5, 5)), 1.0)


@pytest.fixture
def lattice_small():
    """Lattice indicator with r = 1/16, h = 1/256 on [0, 1]."""
    return lattice_input(L=1.0, r=1.0 / 16, h=1.0 / 256)


@pytest.fixture
def disconnected_small():
    return disconnected_input(N=4.0, h=1.0 / 16)


@pytest.fixture
def origin_site():
    return TargetSet.from_points([[0.0, 0.0]])


@pytest.fixture
def unit_annulus():
    """{1 ≤ |x| < 2} in the plane."""
    return SetSpec.annulus([0.0, 0.0], 1.0, 2.0)


@pytest.fixture
def tmp_output(tmp_path):
    out = tmp_path / "results"
    out.mkdir()
    return out


@pytest.fixture
def config_dir():
    return CONFIG_DIR
