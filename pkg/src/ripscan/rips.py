"""Vietoris-Rips filtration construction.

A subset of points is a simplex once the scale parameter exceeds its
diameter, so each simplex is tagged with its diameter as filtration value.
Simplices are kept in reduction order: (value, dimension, vertex list).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import DistanceMatrix


@dataclass(frozen=True)
class FilteredSimplex:
    """A simplex (strictly increasing vertex indices) with its filtration value."""

    vertices: tuple[int, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class Filtration:
    """Sorted filtration, stored columnar for speed.

    ``verts`` is an (N, max_dim + 1) int array padded with -1, ``dims`` and
    ``values`` are parallel (N,) arrays. Rows are sorted by
    (value, dim, vertices) -- the order the reduction consumes.
    """

    verts: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    max_dim: int
    n_vertices: int

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        for i in range(len(self.values)):
            vs = tuple(int(v) for v in self.verts[i] if v >= 0)
            yield FilteredSimplex(vs, float(self.values[i]))

    @property
    def simplices(self) -> list[FilteredSimplex]:
        return list(self)

    @classmethod
    def from_simplices(cls, simplices, max_dim: int | None = None,
                       n_vertices: int | None = None) -> "Filtration":
        """Build columnar storage from FilteredSimplex objects, as given.

        No sorting or completion is applied; callers own the invariants.
        """
        simplices = list(simplices)
        if max_dim is None:
            max_dim = max((s.dim for s in simplices), default=0)
        if n_vertices is None:
            n_vertices = 1 + max(
                (v for s in simplices for v in s.vertices), default=-1)
        n = len(simplices)
        verts = np.full((n, max_dim + 1), -1, dtype=np.int64)
        dims = np.empty(n, dtype=np.int64)
        values = np.empty(n, dtype=np.float64)
        for i, s in enumerate(simplices):
            verts[i, : len(s.vertices)] = s.vertices
            dims[i] = s.dim
            values[i] = s.value
        return cls(verts, dims, values, max_dim, n_vertices)


@lru_cache(maxsize=64)
def _combo_indices(n: int, k: int) -> np.ndarray:
    """All k-subsets of range(n) as a ((n choose k), k) array, lexicographic."""
    idx = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.int64,
        count=k * math.comb(n, k),
    )
    out = idx.reshape(-1, k)
    out.setflags(write=False)
    return out


def simplex_diameters(dist: DistanceMatrix, combos: np.ndarray) -> np.ndarray:
    """Diameter (max pairwise distance) of each vertex combination."""
    m = dist.entries
    k = combos.shape[1]
    if k == 1:
        return np.zeros(len(combos))
    diam = np.zeros(len(combos))
    for a in range(k):
        for b in range(a + 1, k):
            np.maximum(diam, m[combos[:, a], combos[:, b]], out=diam)
    return diam


def build_filtration(dist: DistanceMatrix, max_dim: int = 2,
                     threshold: float | None = None) -> Filtration:
    """All simplices of dimension <= max_dim with diameter <= threshold.

    With no threshold every subset of size <= max_dim + 1 is included.
    Dimensions beyond n - 1 contribute nothing (no subsets that large), so a
    max_dim above n - 1 behaves like n - 1.
    """
    if max_dim < 0:
        raise ValueError("max_dim must be >= 0")
    if threshold is not None and threshold < 0:
        raise ValueError("threshold must be >= 0")
    n = dist.n

    vert_blocks = []
    dim_blocks = []
    val_blocks = []
    for d in range(min(max_dim, n - 1) + 1):
        combos = _combo_indices(n, d + 1)
        vals = simplex_diameters(dist, combos)
        if threshold is not None:
            keep = vals <= threshold
            combos = combos[keep]
            vals = vals[keep]
        vert_blocks.append(combos)
        dim_blocks.append(np.full(len(vals), d, dtype=np.int64))
        val_blocks.append(vals)

    total = sum(len(b) for b in dim_blocks)
    verts = np.full((total, max_dim + 1), -1, dtype=np.int64)
    dims = np.concatenate(dim_blocks)
    values = np.concatenate(val_blocks)
    pos = 0
    for d, block in enumerate(vert_blocks):
        verts[pos: pos + len(block), : d + 1] = block
        pos += len(block)

    # merge the per-dimension blocks into global (value, dim, vertices) order
    pad = [verts[:, c] for c in reversed(range(max_dim + 1))]
    order = np.lexsort(tuple(pad) + (dims, values))
    return Filtration(verts[order], dims[order], values[order], max_dim, n)
