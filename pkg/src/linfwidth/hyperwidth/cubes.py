"""Lattice-cube decomposition of a closed surface in R^3 and the good component of each cube.

Everything that depends on complement regions is computed on a voxel grid of
``res^3`` cells per cube. A cell is *blocked* when it touches the surface; free
cells are entirely on one side of every piece, so voxel volumes of free regions
are lower bounds for the true volumes and facet fractions of free regions are
lower bounds for the true facet areas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..errors import FalsificationError, PreconditionError
from ..geom.clip import partition_by_lattice
from ..geom.mesh import TriMesh, is_closed, mesh_area, triangle_areas, triangle_components
from ..geom.raster import voxelize_triangles
from ..tolerances import JITTER, JITTER_RETRIES

DEFAULT_RES = 64
AREA_FRACTION = 1 / 3
FACET_FRACTION = 1 / 2
TRANSVERSAL_TOL = 1e-9

# facet j = 2 * axis + side, side 0 the low face
FACETS = [(a, s) for a in range(3) for s in (0, 1)]
_FACE6 = ndimage.generate_binary_structure(3, 1)
_CUBE26 = np.ones((3, 3, 3), dtype=bool)


def facet_layer(grid: np.ndarray, j: int) -> np.ndarray:
    """The ``res x res`` layer of cells touching facet ``j``, indexed by the two other axes."""
    a, s = FACETS[j]
    return np.take(grid, -1 if s else 0, axis=a)


@dataclass
class CubeData:
    key: tuple
    lo: np.ndarray
    side: float
    res: int
    piece: TriMesh
    piece_labels: np.ndarray          # component of each triangle of ``piece``
    areas: np.ndarray                 # area(A_i) / l^2
    volumes: np.ndarray               # voxel volume of V_i / l^3 (lower bound)
    shells: np.ndarray                # blocked volume of A_i / l^3
    facet_areas: np.ndarray           # (k, 6) S_ij / l^2
    blocked: np.ndarray
    small_side: np.ndarray            # union of the V_i
    separates: np.ndarray             # A_i splits the voxel cube into >= 2 regions
    ties: int = 0

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @property
    def count(self) -> int:
        return len(self.areas)

    @property
    def h(self) -> float:
        return self.side / self.res


@dataclass
class CubeDecomposition:
    side: float
    offset: np.ndarray
    res: int
    cubes: dict = field(default_factory=dict)
    jitters: int = 0
    area: float = 0.0

    def cube_lo(self, key) -> np.ndarray:
        return self.offset + self.side * np.asarray(key, dtype=float)

    def max_cube_area(self) -> float:
        return max((c.area for c in self.cubes.values()), default=0.0)


def _transversal(m: TriMesh, side: float, offset: np.ndarray) -> bool:
    u = (m.vertices - offset) / side
    return bool(np.all(np.abs(u - np.round(u)) > TRANSVERSAL_TOL))


def _split_regions(free: np.ndarray):
    """Labels of the free region and the label of the big side (largest count, ties by depth)."""
    lab, k = ndimage.label(free, structure=_FACE6)
    if k == 0:
        return lab, k, 0, False
    counts = np.bincount(lab.ravel(), minlength=k + 1)[1:]
    top = np.flatnonzero(counts == counts.max()) + 1
    if len(top) == 1:
        return lab, k, int(top[0]), False
    depth = ndimage.distance_transform_edt(np.pad(free, 1))[1:-1, 1:-1, 1:-1]
    deepest = np.unravel_index(np.argmax(depth), depth.shape)
    big = int(lab[deepest]) if lab[deepest] in top else int(top[0])
    return lab, k, big, True


def analyze_cube(key, piece: TriMesh, lo, side: float, res: int) -> CubeData:
    """Pieces, voxel complement regions and facet traces of the surface inside one cube."""
    lo = np.asarray(lo, dtype=float)
    k, plab = triangle_components(piece)
    soup = piece.soup
    tri_area = triangle_areas(soup) if len(soup) else np.zeros(0)
    cell = (side / res) ** 3 / side ** 3
    blocked = np.zeros((res, res, res), dtype=bool)
    small = np.zeros_like(blocked)
    areas = np.zeros(k)
    vols = np.zeros(k)
    shells = np.zeros(k)
    facets = np.zeros((k, 6))
    seps = np.zeros(k, dtype=bool)
    ties = 0
    for i in range(k):
        sel = plab == i
        areas[i] = tri_area[sel].sum() / side ** 2
        b = voxelize_triangles(soup[sel], lo, side, res)
        blocked |= b
        shells[i] = b.sum() * cell
        lab, count, big, tie = _split_regions(~b)
        ties += tie
        v = (lab > 0) & (lab != big)
        seps[i] = count >= 2
        vols[i] = v.sum() * cell
        small |= v
        for j in range(6):
            facets[i, j] = facet_layer(v, j).mean()
    return CubeData(tuple(int(c) for c in key), lo, side, res, piece, plab, areas, vols, shells,
                    facets, blocked, small, seps, ties)


def lattice_offset(M: TriMesh, side: float, seed: int = 0) -> tuple[np.ndarray, int]:
    """Seeded small lattice translation keeping every vertex off the cube faces."""
    rng = np.random.default_rng([int(seed), 41])
    for attempt in range(JITTER_RETRIES + 1):
        offset = rng.uniform(-JITTER, JITTER, 3) * side
        if len(M) == 0 or _transversal(M, side, offset):
            return offset, attempt
    raise PreconditionError(f"lattice faces stay non-transversal after {JITTER_RETRIES} jitters")


def cube_areas(M: TriMesh, side: float, seed: int = 0) -> dict:
    """Area of ``M`` inside each occupied cube, divided by ``side^2``."""
    offset, _ = lattice_offset(M, side, seed)
    return {k: float(triangle_areas(p.soup).sum()) / side ** 2
            for k, p in partition_by_lattice(M, side, offset).items()}


def decompose(M: TriMesh, side: float, voxel_res: int = DEFAULT_RES, seed: int = 0) -> CubeDecomposition:
    """Clip ``M`` to a slightly translated cubic lattice of side ``side`` and analyse every occupied cube."""
    if side <= 0:
        raise PreconditionError("lattice side must be positive")
    if not is_closed(M):
        raise PreconditionError("mesh must be closed (every edge shared by two triangles)")
    if len(M) == 0:
        return CubeDecomposition(side, np.zeros(3), voxel_res)
    offset, jitters = lattice_offset(M, side, seed)
    dec = CubeDecomposition(side, offset, voxel_res, jitters=jitters, area=mesh_area(M))
    for key, piece in sorted(partition_by_lattice(M, side, offset).items()):
        dec.cubes[key] = analyze_cube(key, piece.compact(), dec.cube_lo(key), side, voxel_res)
    return dec


def admissible_side(M: TriMesh, side: float, seed: int = 0, eps: float = 1e-2) -> float:
    """Grow ``side`` until every occupied cube carries area below ``side^2 / 3``.

    Always terminates: at ``sqrt(3 area(M)) (1 + eps)`` the whole surface fits
    the bound.
    """
    cap = math.sqrt(3 * mesh_area(M)) * (1 + eps)
    while side < cap:
        a = max(cube_areas(M, side, seed).values(), default=0.0)
        if a < AREA_FRACTION:
            return side
        side = min(cap, side * math.sqrt(3 * a) * (1 + eps))
    return cap


# -- good component ------------------------------------------------------------


@dataclass
class GoodComponent:
    mask: np.ndarray
    facet_areas: np.ndarray           # (6,) fraction of each facet in U
    candidates: int                   # voxel components of the complement of the V_i
    iso: list                         # one row per piece
    facet_grid_error: np.ndarray      # (6,) blocked fraction of each facet layer

    @property
    def min_facet_area(self) -> float:
        return float(self.facet_areas.min())

    @property
    def iso_ok(self) -> bool:
        return all(r["pass"] for r in self.iso)


def isoperimetric_rows(c: CubeData) -> list[dict]:
    """``A_i >= 4 V_i (1 - V_i) (1 - delta_grid)`` per piece.

    ``V_lo`` is the free-voxel volume of the small side and ``V_hi`` adds the
    piece's blocked shell (capped at 1/2); ``delta_grid`` is the relative gap
    of ``4V(1-V)`` between the two, so the check is implied by the exact
    inequality whenever the true volume lies in ``[V_lo, V_hi]``.
    """
    rows = []
    for i in range(c.count):
        vlo = float(c.volumes[i])
        vhi = min(vlo + float(c.shells[i]), 0.5)
        g_lo, g_hi = 4 * vlo * (1 - vlo), 4 * vhi * (1 - vhi)
        delta = 1 - g_lo / g_hi if g_hi > 0 else 0.0
        rhs = g_hi * (1 - delta)
        rows.append({"piece": i, "area": float(c.areas[i]), "v_lo": vlo, "v_hi": vhi,
                     "delta_grid": delta, "rhs": rhs, "pass": c.areas[i] >= rhs})
    return rows


def good_component(c: CubeData) -> GoodComponent:
    """The complement region meeting every facet in more than half of its area."""
    if c.area >= AREA_FRACTION:
        raise PreconditionError(f"cube {c.key}: area {c.area!r} l^2 is not below l^2 / 3")
    free = ~c.blocked & ~c.small_side
    lab, k = ndimage.label(free, structure=_FACE6)
    if k == 0:
        raise FalsificationError(f"cube {c.key}: no region outside the small sides")
    counts = np.bincount(lab.ravel(), minlength=k + 1)[1:]
    U = lab == int(np.argmax(counts)) + 1
    fa = np.array([facet_layer(U, j).mean() for j in range(6)])
    ge = np.array([facet_layer(c.blocked, j).mean() for j in range(6)])
    g = GoodComponent(U, fa, k, isoperimetric_rows(c), ge)
    if g.min_facet_area <= FACET_FRACTION:
        raise FalsificationError(
            f"cube {c.key}: good component covers only {g.min_facet_area!r} of a facet")
    return g


def good_components(dec: CubeDecomposition) -> dict:
    return {key: good_component(c) for key, c in dec.cubes.items()}
