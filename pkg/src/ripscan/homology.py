"""Persistence of a sorted filtration via boundary-matrix reduction over Z2.

The standard column algorithm: walk the columns of the boundary matrix in
filtration order, repeatedly adding earlier columns with the same lowest
nonzero row until the column is either empty (the simplex creates a class)
or has a fresh low (the simplex kills the class created at that row).
Columns of different dimensions never interact, so the matrix is reduced
one dimension at a time; pairing is unchanged.

Coefficients are Z2. The diagrams agree with real coefficients for Rips
complexes of point clouds (no torsion in the dimensions computed here).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .rips import Filtration

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


@dataclass(frozen=True, order=True)
class PersistenceInterval:
    """A homology class' lifespan; death is math.inf for essential classes."""

    dim: int
    birth: float
    death: float

    def __post_init__(self):
        if self.death < self.birth:
            raise ValueError(f"death {self.death} before birth {self.birth}")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.death)


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of persistence intervals, canonically sorted."""

    intervals: tuple[PersistenceInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(sorted(self.intervals)))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def in_dim(self, dim: int) -> tuple[PersistenceInterval, ...]:
        return tuple(iv for iv in self.intervals if iv.dim == dim)

    def finite_intervals(self, dims) -> tuple[PersistenceInterval, ...]:
        dims = set(dims)
        return tuple(iv for iv in self.intervals if iv.dim in dims and iv.finite)


def _reduce_py(boundary_rows: np.ndarray, n_rows: int, skip: np.ndarray) -> np.ndarray:
    """Pure-Python reduction; columns are arbitrary-precision int bitsets."""
    n_cols = boundary_rows.shape[0]
    pair_row = np.full(n_cols, -1, dtype=np.int64)
    lowmap: dict[int, int] = {}
    cols: dict[int, int] = {}
    for j in range(n_cols):
        if skip[j]:
            continue
        col = 0
        for r in boundary_rows[j]:
            if r >= 0:
                col |= 1 << int(r)
        while col:
            low = col.bit_length() - 1
            k = lowmap.get(low)
            if k is None:
                lowmap[low] = j
                cols[j] = col
                pair_row[j] = low
                break
            col ^= cols[k]
    return pair_row


if _HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _reduce_numba(boundary_rows, n_rows, skip):  # pragma: no cover - jitted
        n_cols = boundary_rows.shape[0]
        words = max(1, (n_rows + 63) // 64)
        storage = np.zeros((n_cols, words), dtype=np.uint64)
        lowmap = np.full(n_rows, -1, dtype=np.int64)
        pair_row = np.full(n_cols, -1, dtype=np.int64)
        buf = np.zeros(words, dtype=np.uint64)
        one = np.uint64(1)
        for j in range(n_cols):
            if skip[j]:
                continue
            for w in range(words):
                buf[w] = 0
            for t in range(boundary_rows.shape[1]):
                r = boundary_rows[j, t]
                if r >= 0:
                    buf[r >> 6] |= one << np.uint64(r & 63)
            while True:
                low = -1
                for w in range(words - 1, -1, -1):
                    x = buf[w]
                    if x != 0:
                        b = 0
                        if x >> np.uint64(32):
                            x >>= np.uint64(32)
                            b += 32
                        if x >> np.uint64(16):
                            x >>= np.uint64(16)
                            b += 16
                        if x >> np.uint64(8):
                            x >>= np.uint64(8)
                            b += 8
                        if x >> np.uint64(4):
                            x >>= np.uint64(4)
                            b += 4
                        if x >> np.uint64(2):
                            x >>= np.uint64(2)
                            b += 2
                        if x >> np.uint64(1):
                            b += 1
                        low = (w << 6) + b
                        break
                if low < 0:
                    break
                k = lowmap[low]
                if k < 0:
                    lowmap[low] = j
                    pair_row[j] = low
                    for w in range(words):
                        storage[j, w] = buf[w]
                    break
                for w in range(words):
                    buf[w] ^= storage[k, w]
        return pair_row


def _reduce(boundary_rows: np.ndarray, n_rows: int, skip: np.ndarray,
            engine: str | None) -> np.ndarray:
    if engine is None:
        engine = "numba" if _HAVE_NUMBA else "python"
    if engine == "numba":
        if not _HAVE_NUMBA:
            raise ValueError("numba engine requested but numba is unavailable")
        return _reduce_numba(np.ascontiguousarray(boundary_rows), n_rows, skip)
    if engine == "python":
        return _reduce_py(boundary_rows, n_rows, skip)
    raise ValueError(f"unknown reduction engine {engine!r}")


def _check_sorted(filt: Filtration) -> None:
    n = len(filt)
    if n < 2:
        return
    values, dims, verts = filt.values, filt.dims, filt.verts
    a_v, b_v = values[:-1], values[1:]
    a_d, b_d = dims[:-1], dims[1:]
    strictly_less = a_v < b_v
    tied = a_v == b_v
    strictly_less |= tied & (a_d < b_d)
    eq_so_far = tied & (a_d == b_d)
    for c in range(verts.shape[1]):
        a_c, b_c = verts[:-1, c], verts[1:, c]
        strictly_less |= eq_so_far & (a_c < b_c)
        eq_so_far &= a_c == b_c
    if not np.all(strictly_less):
        i = int(np.argmin(strictly_less))
        raise ValueError(
            "filtration is not sorted by (value, dim, vertices) or contains a "
            f"duplicate simplex near position {i}"
        )


def _facet_rows(filt: Filtration, dim_positions: list[np.ndarray]) -> list[np.ndarray]:
    """Local facet indices for each dimension's columns.

    Entry d (for d >= 1) is an (n_d, d + 1) array: for every d-simplex, the
    positions of its facets within the (d-1)-block. Missing facets raise.
    """
    verts = filt.verts
    n = filt.n_vertices
    rows_by_dim: list[np.ndarray | None] = [None] * (filt.max_dim + 1)

    vert_ids = verts[dim_positions[0], 0] if len(dim_positions[0]) else np.empty(0, np.int64)
    vrank = np.full(n, -1, dtype=np.int64)
    vrank[vert_ids] = np.arange(len(vert_ids))

    if filt.max_dim >= 1 and len(dim_positions[1]):
        ev = verts[dim_positions[1]][:, :2]
        rows = vrank[ev]
        if np.any(rows < 0):
            raise ValueError("filtration is missing a vertex required by an edge")
        rows_by_dim[1] = rows

    if filt.max_dim >= 2 and len(dim_positions) > 2 and len(dim_positions[2]):
        ev = verts[dim_positions[1]][:, :2] if len(dim_positions[1]) else np.empty((0, 2), np.int64)
        erank = np.full((n, n), -1, dtype=np.int64)
        erank[ev[:, 0], ev[:, 1]] = np.arange(len(ev))
        tv = verts[dim_positions[2]][:, :3]
        rows = np.stack(
            [erank[tv[:, 0], tv[:, 1]], erank[tv[:, 0], tv[:, 2]], erank[tv[:, 1], tv[:, 2]]],
            axis=1,
        )
        if np.any(rows < 0):
            raise ValueError("filtration is missing an edge required by a triangle")
        rows_by_dim[2] = rows

    for d in range(3, filt.max_dim + 1):
        if not len(dim_positions[d]):
            rows_by_dim[d] = np.empty((0, d + 1), dtype=np.int64)
            continue
        facet_rank = {
            tuple(verts[p, :d]): i for i, p in enumerate(dim_positions[d - 1])
        }
        cols = verts[dim_positions[d]][:, : d + 1]
        rows = np.empty((len(cols), d + 1), dtype=np.int64)
        for i, simplex in enumerate(cols):
            sv = tuple(simplex)
            for drop in range(d + 1):
                facet = sv[:drop] + sv[drop + 1:]
                try:
                    rows[i, drop] = facet_rank[facet]
                except KeyError:
                    raise ValueError(
                        f"filtration is missing facet {facet} of simplex {sv}"
                    ) from None
        rows_by_dim[d] = rows

    out = []
    for d in range(filt.max_dim + 1):
        r = rows_by_dim[d]
        out.append(r if r is not None else np.empty((0, max(d + 1, 1)), dtype=np.int64))
    return out


def compute_persistence(filt: Filtration, twist: bool = True,
                        engine: str | None = None) -> PersistenceDiagram:
    """Persistence diagram of a sorted, face-complete filtration.

    Pairs with equal birth and death are dropped. Unpaired creators of
    dimension below max_dim become intervals with infinite death. ``twist``
    enables the clearing optimization (skip columns already known to reduce
    to zero from the pairing one dimension up); output is identical either
    way. ``engine`` selects the reduction backend ("numba" or "python",
    default: numba when available), again with identical output.
    """
    _check_sorted(filt)
    if len(filt) and int(filt.dims.max()) > filt.max_dim:
        raise ValueError("filtration contains simplices above its declared max_dim")

    dim_positions = [np.flatnonzero(filt.dims == d) for d in range(filt.max_dim + 1)]
    rows_by_dim = _facet_rows(filt, dim_positions)
    values_by_dim = [filt.values[pos] for pos in dim_positions]

    for d in range(1, filt.max_dim + 1):
        rows = rows_by_dim[d]
        if len(rows) and np.any(values_by_dim[d - 1][rows] > values_by_dim[d][:, None]):
            raise ValueError("filtration violates monotonicity: a facet appears "
                             "after one of its cofaces")

    dims_iter = range(filt.max_dim, 0, -1) if twist else range(1, filt.max_dim + 1)
    pair_rows: dict[int, np.ndarray] = {}
    cleared: np.ndarray | None = None
    for d in dims_iter:
        n_cols = len(dim_positions[d])
        skip = np.zeros(n_cols, dtype=np.bool_)
        if twist and cleared is not None:
            skip[cleared] = True
        pair_rows[d] = _reduce(rows_by_dim[d], len(dim_positions[d - 1]), skip, engine)
        if twist:
            cleared = pair_rows[d][pair_rows[d] >= 0]

    intervals: list[PersistenceInterval] = []
    paired_as_row: dict[int, set[int]] = {d: set() for d in range(filt.max_dim + 1)}
    for d in range(1, filt.max_dim + 1):
        pr = pair_rows[d]
        births = values_by_dim[d - 1]
        deaths = values_by_dim[d]
        for j in np.flatnonzero(pr >= 0):
            i = pr[j]
            paired_as_row[d - 1].add(int(i))
            if deaths[j] > births[i]:
                intervals.append(
                    PersistenceInterval(d - 1, float(births[i]), float(deaths[j]))
                )

    # creators never killed from above are essential
    for d in range(0, filt.max_dim):
        if d == 0:
            positive = range(len(dim_positions[0]))
        else:
            positive = np.flatnonzero(pair_rows[d] < 0)
        for i in positive:
            if int(i) not in paired_as_row[d]:
                intervals.append(
                    PersistenceInterval(d, float(values_by_dim[d][i]), math.inf)
                )

    return PersistenceDiagram(tuple(intervals))


def write_diagram_csv(diag: PersistenceDiagram, out: io.TextIOBase) -> None:
    """Rows of dim,birth,death; infinite deaths serialized as "inf"."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["dim", "birth", "death"])
    for iv in diag:
        death = "inf" if not iv.finite else repr(iv.death)
        w.writerow([iv.dim, repr(iv.birth), death])


def read_diagram_csv(src: io.TextIOBase) -> PersistenceDiagram:
    r = csv.reader(src)
    header = next(r, None)
    if header != ["dim", "birth", "death"]:
        raise ValueError(f"expected diagram header dim,birth,death, got {header}")
    intervals = []
    for lineno, row in enumerate(r, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"diagram line {lineno}: expected 3 fields, got {len(row)}")
        try:
            dim = int(row[0])
            birth = float(row[1])
            death = math.inf if row[2] == "inf" else float(row[2])
        except ValueError as exc:
            raise ValueError(f"diagram line {lineno}: {exc}") from None
        intervals.append(PersistenceInterval(dim, birth, death))
    return PersistenceDiagram(tuple(intervals))
