"""Periodic voxel grids over the unit torus and their free-space components."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

MAX_GRID_DIM = 6


@dataclass
class TorusGrid:
    """Cells of ``[0,1)^N`` at resolution ``R`` per axis; indices wrap modulo ``R``."""

    dim: int
    resolution: int
    cells: np.ndarray

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_GRID_DIM:
            raise ValueError(f"grid dimension must be in 1..{MAX_GRID_DIM}")
        self.cells = np.asarray(self.cells)
        if self.cells.shape != (self.resolution,) * self.dim:
            raise ValueError(f"cell array shape {self.cells.shape} does not match R^N")

    @classmethod
    def zeros(cls, dim: int, resolution: int, dtype=bool) -> TorusGrid:
        return cls(dim, resolution, np.zeros((resolution,) * dim, dtype=dtype))

    @property
    def h(self) -> float:
        return 1.0 / self.resolution

    def centers(self, axis_only: bool = False):
        c = (np.arange(self.resolution) + 0.5) / self.resolution
        if axis_only:
            return c
        return np.meshgrid(*([c] * self.dim), indexing="ij")

    def index_of(self, points) -> np.ndarray:
        """Cell multi-index of each point, wrapped into ``[0, R)``."""
        p = np.asarray(points, dtype=float)
        return np.mod(np.floor(p * self.resolution).astype(np.int64), self.resolution)

    def lifted_index(self, points) -> np.ndarray:
        """Unwrapped cell index (no modulo)."""
        return np.floor(np.asarray(points, dtype=float) * self.resolution).astype(np.int64)

    def value_at(self, points) -> np.ndarray:
        idx = self.index_of(points)
        return self.cells[tuple(idx[..., a] for a in range(self.dim))]

    def dilated(self, steps: int = 1) -> TorusGrid:
        """Periodic dilation of an occupied (boolean) grid by face neighbours."""
        out = self.cells.astype(bool)
        fp = ndimage.generate_binary_structure(self.dim, 1)
        for _ in range(steps):
            out = ndimage.grey_dilation(out.astype(np.uint8), footprint=fp, mode="wrap").astype(bool)
        return TorusGrid(self.dim, self.resolution, out)

    def rolled(self, shift) -> TorusGrid:
        return TorusGrid(self.dim, self.resolution, np.roll(self.cells, tuple(shift), axis=tuple(range(self.dim))))


class _OffsetUnionFind:
    """Union-find whose elements carry an integer lift relative to their root."""

    def __init__(self, n: int, dim: int):
        self.parent = np.arange(n)
        self.offset = np.zeros((n, dim), dtype=np.int64)   # lift(x) - lift(parent)
        self.loops: dict[int, list[np.ndarray]] = {}

    def find(self, x: int):
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        root = x
        acc = np.zeros(self.offset.shape[1], dtype=np.int64)
        for y in reversed(path):
            acc = acc + self.offset[y]
            self.offset[y] = acc
            self.parent[y] = root
        return root

    def lift(self, x: int) -> np.ndarray:
        r = self.find(x)
        return self.offset[x] if x != r else np.zeros(self.offset.shape[1], dtype=np.int64)

    def union(self, u: int, v: int, d: np.ndarray):
        """Record ``lift(v) = lift(u) + d``."""
        ru, rv = self.find(u), self.find(v)
        lu, lv = self.lift(u), self.lift(v)
        if ru == rv:
            loop = lu + d - lv
            if loop.any():
                self.loops.setdefault(ru, []).append(loop)
            return
        # attach rv under ru: lift(rv) = lift(v) - lv = lu + d - lv
        self.parent[rv] = ru
        self.offset[rv] = lu + d - lv
        if rv in self.loops:
            self.loops.setdefault(ru, []).extend(self.loops.pop(rv))


@dataclass
class Components:
    """Free-cell components of a torus grid.

    ``labels`` holds the component id per cell (``-1`` for occupied cells).
    ``raw`` and ``raw_lift`` describe the non-periodic pieces that were glued:
    a cell with raw label ``q`` sits at lifted index ``cell + R * raw_lift[q]``
    inside the unwrapped copy of its component.
    """

    labels: np.ndarray
    count: int
    cells: np.ndarray
    extent: np.ndarray          # (count, N) lifted extent in cells, inf on winding axes
    winding: np.ndarray         # (count, N) bool
    raw: np.ndarray
    raw_component: np.ndarray
    raw_lift: np.ndarray
    resolution: int

    @property
    def max_extent(self) -> np.ndarray:
        return self.extent.max(axis=1) if self.count else np.zeros(0)

    def cell_lift(self, idx) -> np.ndarray:
        """Lift vectors for cell multi-indices ``idx`` of shape ``(..., N)``."""
        q = self.raw[tuple(np.moveaxis(np.asarray(idx), -1, 0))]
        return self.raw_lift[q]

    def separated(self) -> bool:
        return bool(not self.winding.any() and np.all(self.max_extent < self.resolution))


def grid_components(g: TorusGrid, wrap: bool = True) -> Components:
    """Face-connected components of the free (``False``) cells of ``g``."""
    occupied = np.asarray(g.cells, dtype=bool)
    free = ~occupied
    n, R = g.dim, g.resolution
    structure = ndimage.generate_binary_structure(n, 1)
    raw, nraw = ndimage.label(free, structure=structure)
    raw = raw.astype(np.int64)
    uf = _OffsetUnionFind(nraw + 1, n)
    if wrap:
        for ax in range(n):
            hi = np.take(raw, R - 1, axis=ax).ravel()
            lo = np.take(raw, 0, axis=ax).ravel()
            both = (hi > 0) & (lo > 0)
            if not both.any():
                continue
            pairs = np.unique(np.column_stack([hi[both], lo[both]]), axis=0)
            step = np.zeros(n, dtype=np.int64)
            step[ax] = 1
            for u, v in pairs:
                uf.union(int(u), int(v), step)
    roots = np.array([uf.find(q) for q in range(nraw + 1)], dtype=np.int64)
    raw_lift = np.array([uf.lift(q) for q in range(nraw + 1)], dtype=np.int64).reshape(nraw + 1, n)
    uniq_roots = np.unique(roots[1:])
    comp_of_root = {int(r): i for i, r in enumerate(uniq_roots)}
    raw_component = np.full(nraw + 1, -1, dtype=np.int64)
    for q in range(1, nraw + 1):
        raw_component[q] = comp_of_root[int(roots[q])]
    count = len(uniq_roots)
    labels = raw_component[raw]
    cells = np.bincount(labels[labels >= 0], minlength=count)
    winding = np.zeros((count, n), dtype=bool)
    for r, loops in uf.loops.items():
        if r in comp_of_root:
            winding[comp_of_root[r]] = np.any(np.array(loops) != 0, axis=0)
    lo = np.full((count, n), np.iinfo(np.int64).max)
    hi = np.full((count, n), np.iinfo(np.int64).min)
    for q, sl in enumerate(ndimage.find_objects(raw), start=1):
        if sl is None:
            continue
        c = raw_component[q]
        start = np.array([s.start for s in sl]) + R * raw_lift[q]
        stop = np.array([s.stop for s in sl]) + R * raw_lift[q]
        lo[c] = np.minimum(lo[c], start)
        hi[c] = np.maximum(hi[c], stop)
    extent = (hi - lo).astype(float) if count else np.zeros((0, n))
    extent[winding] = np.inf
    return Components(labels, count, cells, extent, winding, raw, raw_component, raw_lift, R)
