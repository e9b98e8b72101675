import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lowertail import BoxWindow, PointConfig, RngStream, sample_poisson  # noqa: E402


@pytest.fixture
def cross():
    """Origin plus four points at distance 2 on the axes: its cell is [-1, 1]^2."""
    return PointConfig(np.array([[0, 0], [2, 0], [-2, 0], [0, 2], [0, -2]], dtype=float))


@pytest.fixture
def twelve_axes():
    ang = np.pi * np.arange(12) / 6
    pts = np.vstack([[0.0, 0.0], np.c_[np.cos(ang), np.sin(ang)]])
    return PointConfig(pts, BoxWindow(8.0))


def poisson_cfg(seed, side, intensity=1.0):
    return sample_poisson(intensity, BoxWindow(side), RngStream(seed))
