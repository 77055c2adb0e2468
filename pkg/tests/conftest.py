import numpy as np
import pytest

from ripscan import PointCloud


@pytest.fixture
def unit_square() -> PointCloud:
    return PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


@pytest.fixture
def equilateral() -> PointCloud:
    return PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]]))


def random_cloud(rng, n=None, d=None) -> PointCloud:
    n = int(rng.integers(3, 9)) if n is None else n
    d = int(rng.integers(1, 4)) if d is None else d
    return PointCloud(rng.normal(size=(n, d)))
