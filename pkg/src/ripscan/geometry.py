"""Point clouds and pairwise Euclidean distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform


@dataclass(frozen=True)
class PointCloud:
    """A finite set of points in R^d, stored as an (n, d) array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(
                f"point cloud must be a 2-d array of shape (n, d), got ndim={pts.ndim} "
                "(ragged or scalar input means the points do not share a dimension)"
            )
        if pts.shape[0] < 1:
            raise ValueError("point cloud needs at least one point")
        if pts.shape[1] < 1:
            raise ValueError("points need at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise Euclidean distances with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("distance matrix must be square")
        if np.any(np.diagonal(m) != 0.0):
            raise ValueError("distance matrix diagonal must be exactly zero")
        if np.any(m < 0.0):
            raise ValueError("distances must be non-negative")
        if not np.array_equal(m, m.T):
            raise ValueError("distance matrix must be symmetric")
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def enclosing_radius(self) -> float:
        """Smallest r such that some point is within r of every other point.

        Beyond this scale the complex is a cone over that point, so nothing
        of positive dimension survives; useful as a lossless truncation bound.
        """
        return float(self.entries.max(axis=1).min())


def distance_matrix(cloud: PointCloud) -> DistanceMatrix:
    """Pairwise Euclidean distances of a point cloud."""
    if cloud.n == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(squareform(pdist(cloud.points)))
