"""Crosses: a centre in each cube joined by disjoint voxel paths to one point per facet.

Endpoints on a shared facet are chosen from the overlap of the two cubes'
cleared good components, by a rule both cubes evaluate identically, so the
crosses glue into one graph.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import FalsificationError, LinfWidthError
from ..geom.mesh import TriMesh
from .cubes import FACETS, CubeDecomposition, analyze_cube, facet_layer, good_component

MAX_RES = 256
_STEPS = [(a, d) for a in range(3) for d in (1, -1)]


@dataclass
class Cross:
    key: tuple
    center: np.ndarray                # world point
    center_cell: tuple
    paths: list                       # per facet: (k, 3) int cell path, centre first
    endpoints: np.ndarray             # (6, 3) world points on the facets
    lo: np.ndarray
    side: float
    res: int

    def polyline(self, j: int) -> np.ndarray:
        """World polyline of path ``j``, ending on the facet."""
        h = self.side / self.res
        pts = self.lo + (self.paths[j] + 0.5) * h
        return np.vstack([pts, self.endpoints[j]])


class RoutingError(LinfWidthError):
    pass


def _slices(axis, d):
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    if d > 0:
        src[axis], dst[axis] = slice(0, -1), slice(1, None)
    else:
        src[axis], dst[axis] = slice(1, None), slice(0, -1)
    return tuple(src), tuple(dst)


_SLICES = [_slices(a, d) for a, d in _STEPS]


def bfs_path(free: np.ndarray, src: tuple, dst: tuple) -> np.ndarray | None:
    """Shortest 6-connected cell path inside ``free`` from ``src`` to ``dst`` (frontier BFS)."""
    if not (free[src] and free[dst]):
        return None
    came = np.full(free.shape, -1, dtype=np.int8)
    open_ = free.copy()
    open_[src] = False
    front = np.zeros_like(free)
    front[src] = True
    while open_[dst]:
        new = np.zeros_like(free)
        for k, (si, di) in enumerate(_SLICES):
            step = front[si] & open_[di]
            came[di][step] = k
            open_[di] &= ~step
            new[di] |= step
        if not new.any():
            return None
        front = new
    path = [dst]
    cur = np.array(dst)
    while tuple(cur) != tuple(src):
        a, d = _STEPS[came[tuple(cur)]]
        cur[a] -= d
        path.append(tuple(cur))
    return np.array(path[::-1], dtype=np.int64)


def cleared(U: np.ndarray, blocked: np.ndarray) -> np.ndarray:
    """Cells of ``U`` with no blocked cell among their 26 neighbours."""
    return U & ~ndimage.binary_dilation(blocked, structure=np.ones((3, 3, 3), dtype=bool))


def _deepest(mask: np.ndarray) -> tuple:
    d = ndimage.distance_transform_edt(np.pad(mask, 1))
    d = d[tuple(slice(1, -1) for _ in range(mask.ndim))]
    return tuple(int(i) for i in np.unravel_index(np.argmax(d), d.shape))


def _neighbor(key, j):
    a, s = FACETS[j]
    k = list(key)
    k[a] += 1 if s else -1
    return tuple(k), 2 * a + (1 - s)


def _cube_fields(dec: CubeDecomposition, key, res: int, M_pieces: dict):
    """(U, cleared U) for a cube; unoccupied cubes are entirely free."""
    if key in M_pieces:
        c = M_pieces[key]
        if c.res != res:
            c = analyze_cube(key, c.piece, c.lo, c.side, res)
            M_pieces[key] = c
        U = good_component(c).mask
        return U, cleared(U, c.blocked)
    full = np.ones((res, res, res), dtype=bool)
    return full, full


def _route(key, dec, res, fields, cubes):
    U, free = fields[key]
    lo = dec.cube_lo(key)
    h = dec.side / res
    comp, _ = ndimage.label(free, structure=ndimage.generate_binary_structure(3, 1))
    center = _deepest(free)
    paths, ends = [], np.zeros((6, 3))
    avail = free & (comp == comp[center])
    for j in range(6):
        nk, nj = _neighbor(key, j)
        mine = facet_layer(fields[key][1], j)
        theirs = facet_layer(fields[nk][1], nj)
        overlap = mine & theirs
        if not overlap.any():
            raw = facet_layer(fields[key][0], j) & facet_layer(fields[nk][0], nj)
            if not raw.any():
                raise FalsificationError(f"cubes {key} and {nk} have disjoint good components on a shared facet")
            raise RoutingError(f"no cleared overlap on facet {j} of cube {key}")
        u, v = _deepest(overlap)
        a, s = FACETS[j]
        cell = [u, v]
        cell.insert(a, res - 1 if s else 0)
        cell = tuple(cell)
        p = bfs_path(avail, center, cell)
        if p is None:
            raise RoutingError(f"no disjoint path to facet {j} of cube {key}")
        avail[tuple(p[1:].T)] = False
        paths.append(p)
        e = lo + (np.array(cell) + 0.5) * h
        e[a] = dec.cube_lo(nk if s else key)[a]
        ends[j] = e
    return Cross(key, lo + (np.array(center) + 0.5) * h, center, paths, ends, lo, dec.side, res)


def build_crosses(dec: CubeDecomposition) -> dict:
    """Glued crosses for every occupied cube and its six neighbours.

    Cubes further away carry the standard cross (cube centre joined to the
    facet centres), which agrees with the endpoint rule on fully free facets.
    Routing failures are retried at doubled resolution.
    """
    res = dec.res
    cubes = dict(dec.cubes)
    while True:
        keys = set(cubes)
        for k in list(cubes):
            keys.update(_neighbor(k, j)[0] for j in range(6))
        try:
            halo = set(keys)
            for k in list(keys):
                halo.update(_neighbor(k, j)[0] for j in range(6))
            fields = {k: _cube_fields(dec, k, res, cubes) for k in sorted(halo)}
            return {k: _route(k, dec, res, fields, cubes) for k in sorted(keys)}
        except RoutingError:
            if res * 2 > MAX_RES:
                raise
            res *= 2


def cross_checks(crosses: dict, M: TriMesh | None = None, dec: CubeDecomposition | None = None) -> dict:
    """Disjointness, clearance and gluing of a set of crosses."""
    disjoint = True
    clear = True
    single = True
    for c in crosses.values():
        cells = [set(map(tuple, p[1:])) for p in c.paths]
        for i in range(6):
            for j in range(i + 1, 6):
                disjoint &= not (cells[i] & cells[j])
            single &= len(c.paths[i]) == len({tuple(x) for x in c.paths[i]})
        if dec is not None and c.key in dec.cubes:
            b = dec.cubes[c.key]
            if b.res == c.res:
                near = ndimage.binary_dilation(b.blocked, structure=np.ones((3, 3, 3), dtype=bool))
                for p in c.paths:
                    clear &= not near[tuple(p.T)].any()
    glued = True
    for k, c in crosses.items():
        for j in range(6):
            nk, nj = _neighbor(k, j)
            if nk in crosses:
                glued &= bool(np.array_equal(c.endpoints[j], crosses[nk].endpoints[nj]))
    return {"disjoint": disjoint, "clearance": clear, "simple": single, "glued": glued}
