"""Nerve of the cover by complement components of posed foam copies, and the map into it.

Each copy ``i`` is ``g_i(foam)``. A query ``y`` is pulled back to foam coordinates
``p = g_i^{-1}(y)``; the grid cell of ``p`` names the component ``C_j^(i)`` that
contains it. The image of ``y`` is the weighted average of the representative
points of the components containing it, with weights given by the clamped
distance to the separator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..errors import PreconditionError, QueryInSeparatorError
from ..foam import FoamState
from .pose import Pose

DEFAULT_CLAMP = 3.0


def periodic_distance(free: np.ndarray) -> np.ndarray:
    """Euclidean distance (in cells) from each free cell to the nearest occupied cell, periodically."""
    r = free.shape[0]
    pad = r // 2
    tiled = np.pad(free, pad, mode="wrap")
    d = ndimage.distance_transform_edt(tiled)
    crop = tuple(slice(pad, pad + r) for _ in range(free.ndim))
    return d[crop]


@dataclass
class FoamCover:
    """Grid data shared by every copy of one foam."""

    foam: FoamState
    dist: np.ndarray
    vertex_cell: np.ndarray       # (count, N) lifted cell of each component's representative

    @classmethod
    def build(cls, foam: FoamState) -> FoamCover:
        comps = foam.components
        if not comps.separated():
            raise PreconditionError("foam must be separated")
        free = comps.labels >= 0
        dist = periodic_distance(free)
        pos = ndimage.maximum_position(dist, comps.labels, index=np.arange(comps.count))
        cells = np.array(pos, dtype=np.int64).reshape(-1, foam.n)
        lifted = cells + foam.resolution * comps.cell_lift(cells)
        return cls(foam, dist, lifted)

    def locate(self, p: np.ndarray):
        """Component id, weight source distance and vertex (foam coordinates) for points ``p``."""
        R = self.foam.resolution
        comps = self.foam.components
        cl = np.floor(p * R).astype(np.int64)
        q = np.mod(cl, R)
        idx = tuple(q[:, a] for a in range(q.shape[1]))
        lab = comps.labels[idx]
        d = self.dist[idx]
        inst = cl - (q + R * comps.cell_lift(q))      # which lifted instance the query sits in
        safe = np.where(lab >= 0, lab, 0)
        vert = (self.vertex_cell[safe] + inst + 0.5) / R
        return lab, np.where(lab >= 0, d, 0.0), vert


@dataclass
class NerveComplex:
    vertices: dict = field(default_factory=dict)    # (copy, component) -> point in R^N
    simplices: set = field(default_factory=set)     # frozensets of (copy, component)

    def copy_indices_distinct(self) -> bool:
        return all(len({i for i, _ in s}) == len(s) for s in self.simplices)

    @property
    def dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)


@dataclass
class NerveResult:
    images: np.ndarray
    displacement: np.ndarray      # l-infinity, per query
    complex: NerveComplex
    weights: np.ndarray           # (Q, copies)

    @property
    def sup_displacement(self) -> float:
        return float(self.displacement.max()) if len(self.displacement) else 0.0


class NerveMap:
    def __init__(self, foam: FoamState, poses: list[Pose], clamp: float = DEFAULT_CLAMP,
                 cover: FoamCover | None = None):
        self.cover = cover or FoamCover.build(foam)
        self.poses = list(poses)
        self.clamp = clamp

    def coverage(self, points) -> np.ndarray:
        """Number of copies whose complement contains each point (grid level)."""
        y = np.atleast_2d(np.asarray(points, dtype=float))
        total = np.zeros(len(y), dtype=int)
        for g in self.poses:
            lab, _, _ = self.cover.locate(g.apply_inverse(y))
            total += lab >= 0
        return total

    def __call__(self, points) -> NerveResult:
        y = np.atleast_2d(np.asarray(points, dtype=float))
        k = len(self.poses)
        W = np.zeros((len(y), k))
        V = np.zeros((len(y), k, y.shape[1]))
        L = np.zeros((len(y), k), dtype=np.int64)
        for i, g in enumerate(self.poses):
            lab, d, vert = self.cover.locate(g.apply_inverse(y))
            W[:, i] = np.minimum(d, self.clamp)
            V[:, i] = g.apply(vert)
            L[:, i] = lab
        tot = W.sum(axis=1)
        bad = np.flatnonzero(tot <= 0)
        if len(bad):
            raise QueryInSeparatorError(
                f"{len(bad)} query point(s) lie in the separator of every copy, first at {y[bad[0]].tolist()}",
                copies=range(k))
        W = W / tot[:, None]
        img = np.einsum("qk,qkj->qj", W, V)
        disp = np.abs(img - y).max(axis=1)
        nc = NerveComplex()
        comps = self.cover.foam.components
        R = self.cover.foam.resolution
        for i, g in enumerate(self.poses):
            for j in range(comps.count):
                nc.vertices[(i, j)] = g.apply((self.cover.vertex_cell[j] + 0.5) / R)
        for row_w, row_l in zip(W, L):
            nc.simplices.add(frozenset((i, int(row_l[i])) for i in range(k) if row_w[i] > 0))
        return NerveResult(img, disp, nc, W)


def nerve_map(tower, query_points, clamp: float = DEFAULT_CLAMP) -> NerveResult:
    """Map queries through the nerve of the copies of ``tower``."""
    return NerveMap(tower.foam, tower.poses, clamp)(query_points)


def vertices_inside(cover: FoamCover) -> bool:
    """Each representative cell carries its own component label."""
    comps = cover.foam.components
    R = cover.foam.resolution
    q = np.mod(cover.vertex_cell, R)
    lab = comps.labels[tuple(q[:, a] for a in range(q.shape[1]))]
    return bool(np.array_equal(lab, np.arange(comps.count)))
