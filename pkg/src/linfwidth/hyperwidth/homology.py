"""Z/2 homology of closed triangulated surfaces and noncontractible cycles inside a cube.

A tree-cotree split of a closed surface gives ``beta_1`` leftover edges. The
dual cycle through each leftover edge is a cocycle, and these cocycles pair
with the primal fundamental cycles of the leftover edges as the identity
matrix, so an edge cycle is nonzero in ``H_1(M; Z/2)`` exactly when some
cocycle evaluates to 1 on it. The independent check reduces the cycle against
the column space of the face-boundary matrix over GF(2).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import FalsificationError, PreconditionError
from ..geom.clip import clip_mesh_to_cube, split_by_plane
from ..geom.mesh import TriMesh, edge_face_counts, edges, is_closed, triangle_components


@dataclass
class SurfaceComplex:
    mesh: TriMesh
    edges: np.ndarray                 # (E, 2) sorted vertex pairs
    tri_edges: np.ndarray             # (F, 3)
    edge_faces: np.ndarray            # (E, 2)

    @classmethod
    def of(cls, m: TriMesh) -> SurfaceComplex:
        E, te = edges(m)
        ef = np.full((len(E), 2), -1, dtype=np.int64)
        fill = np.zeros(len(E), dtype=np.int64)
        for f, row in enumerate(te):
            for e in row:
                if fill[e] < 2:
                    ef[e, fill[e]] = f
                fill[e] += 1
        return cls(m, E, te, ef)

    @property
    def euler(self) -> int:
        used = np.unique(self.mesh.triangles)
        return len(used) - len(self.edges) + len(self.mesh.triangles)

    def edge_id(self, u, v) -> np.ndarray:
        u, v = np.minimum(u, v), np.maximum(u, v)
        nv = len(self.mesh.vertices)
        key = self.edges[:, 0] * nv + self.edges[:, 1]
        q = np.asarray(u) * nv + np.asarray(v)
        idx = np.searchsorted(key, q)
        if np.any(key[np.minimum(idx, len(key) - 1)] != q):
            raise KeyError("not an edge")
        return idx


def betti1(m: TriMesh) -> int:
    """First Z/2 Betti number of a closed surface: ``sum over components of 2 - chi``."""
    k, lab = triangle_components(m)
    total = 0
    for c in range(k):
        total += 2 - SurfaceComplex.of(m.subset(lab == c).compact()).euler
    return total


def _spanning_tree(nv: int, E: np.ndarray, usable: np.ndarray, roots=None):
    """BFS forest over vertices using usable edges: parent vertex and parent edge per vertex."""
    adj = [[] for _ in range(nv)]
    for e in np.flatnonzero(usable):
        a, b = E[e]
        adj[a].append((b, e))
        adj[b].append((a, e))
    parent = np.full(nv, -1, dtype=np.int64)
    pedge = np.full(nv, -1, dtype=np.int64)
    seen = np.zeros(nv, dtype=bool)
    order = []
    for r in (roots if roots is not None else range(nv)):
        if seen[r]:
            continue
        seen[r] = True
        q = deque([r])
        while q:
            x = q.popleft()
            order.append(x)
            for y, e in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    parent[y], pedge[y] = x, e
                    q.append(y)
    return parent, pedge, np.array(order, dtype=np.int64)


@dataclass
class CohomologyBasis:
    complex: SurfaceComplex
    leftover: np.ndarray              # edge ids, one per basis class
    cocycles: np.ndarray              # (k, E) bool
    tree_edge: np.ndarray             # (E,) bool, primal spanning tree
    parent: np.ndarray
    pedge: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.leftover)

    def evaluate(self, cycle_edges) -> np.ndarray:
        """Pairing of an edge cycle (ids, with multiplicity mod 2) with every cocycle."""
        z = np.zeros(len(self.complex.edges), dtype=bool)
        np.logical_xor.at(z, np.asarray(cycle_edges, dtype=np.int64), True)
        return (self.cocycles & z).sum(axis=1) % 2

    def generator(self, k: int) -> list:
        """Primal fundamental cycle (edge ids) of leftover edge ``k``."""
        e = self.leftover[k]
        a, b = self.complex.edges[e]
        return [int(e)] + _tree_path(self.parent, self.pedge, a, b)


def _ancestors(parent, v):
    out = [v]
    while parent[v] >= 0:
        v = parent[v]
        out.append(v)
    return out


def _tree_path(parent, pedge, a, b) -> list:
    """Edge ids of the tree path between ``a`` and ``b``."""
    pa, pb = _ancestors(parent, a), _ancestors(parent, b)
    sb = set(pb)
    lca = next(v for v in pa if v in sb)
    out = []
    for chain in (pa, pb):
        for v in chain:
            if v == lca:
                break
            out.append(int(pedge[v]))
    return out


def cohomology_basis(m: TriMesh) -> CohomologyBasis:
    """Tree-cotree cocycle basis of ``H^1(M; Z/2)`` for a closed surface."""
    if not is_closed(m):
        raise PreconditionError("surface must be closed")
    sc = SurfaceComplex.of(m)
    E = sc.edges
    parent, pedge, _ = _spanning_tree(len(m.vertices), E, np.ones(len(E), dtype=bool))
    tree = np.zeros(len(E), dtype=bool)
    tree[pedge[pedge >= 0]] = True
    # dual spanning forest over faces through non-tree edges
    F = len(m.triangles)
    fparent, fpedge, _ = _spanning_tree(F, sc.edge_faces, ~tree)
    cotree = np.zeros(len(E), dtype=bool)
    cotree[fpedge[fpedge >= 0]] = True
    left = np.flatnonzero(~tree & ~cotree)
    co = np.zeros((len(left), len(E)), dtype=bool)
    for k, e in enumerate(left):
        f1, f2 = sc.edge_faces[e]
        co[k, e] = True
        co[k, _tree_path(fparent, fpedge, f1, f2)] = True
    return CohomologyBasis(sc, left, co, tree, parent, pedge)


# -- independent check: rank over GF(2) with integer bitsets ----------------------


class BoundarySpan:
    """Column space of the face-boundary matrix, reduced to pivot form."""

    def __init__(self, sc: SurfaceComplex):
        self.pivots: dict[int, int] = {}
        for row in sc.tri_edges:
            v = 0
            for e in row:
                v ^= 1 << int(e)
            self._insert(v)

    def _reduce(self, v: int) -> int:
        while v:
            p = v.bit_length() - 1
            b = self.pivots.get(p)
            if b is None:
                return v
            v ^= b
        return 0

    def _insert(self, v: int):
        v = self._reduce(v)
        if v:
            self.pivots[v.bit_length() - 1] = v

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def contains(self, cycle_edges) -> bool:
        v = 0
        for e in cycle_edges:
            v ^= 1 << int(e)
        return self._reduce(v) == 0


def is_cycle(sc: SurfaceComplex, cycle_edges) -> bool:
    deg = np.zeros(len(sc.mesh.vertices), dtype=np.int64)
    z = np.zeros(len(sc.edges), dtype=bool)
    np.logical_xor.at(z, np.asarray(cycle_edges, dtype=np.int64), True)
    np.add.at(deg, sc.edges[z].ravel(), 1)
    return bool(np.all(deg % 2 == 0))


# -- cube scan --------------------------------------------------------------------


@dataclass
class CurveCertificate:
    cube_lo: np.ndarray
    side: float
    cycle: np.ndarray                 # (k, 3) closed vertex loop, first vertex not repeated
    cycle_edges: list
    mesh: TriMesh                     # the cube-refined surface carrying the cycle
    pairing: list                     # cocycle evaluations, at least one is 1
    rank_check: bool                  # the cycle is not a boundary (independent route)
    cubes_scanned: int = 0
    info: dict = field(default_factory=dict)

    def inside(self, tol: float = 1e-9) -> bool:
        return bool(np.all((self.cycle >= self.cube_lo - tol) & (self.cycle <= self.cube_lo + self.side + tol)))


def refine_to_cube(m: TriMesh, lo, side: float) -> TriMesh:
    """Subdivide ``m`` along the six face planes of the cube (same surface, same homology)."""
    out = m
    for a in range(3):
        out = split_by_plane(out, a, float(lo[a]))
        out = split_by_plane(out, a, float(lo[a] + side))
    return out


def _cycle_loop(sc: SurfaceComplex, cyc: list) -> np.ndarray:
    """Order the edges of a simple cycle into a vertex loop."""
    E = sc.edges[cyc]
    nxt = {}
    for a, b in E:
        nxt.setdefault(int(a), []).append(int(b))
        nxt.setdefault(int(b), []).append(int(a))
    start = int(E[0, 0])
    loop, prev, cur = [start], None, start
    while True:
        n = [v for v in nxt[cur] if v != prev]
        step = n[0] if n else nxt[cur][0]
        if step == start:
            break
        loop.append(step)
        prev, cur = cur, step
        if len(loop) > len(E):
            raise FalsificationError("cycle edges do not form a simple loop")
    return np.array(loop, dtype=np.int64)


def cube_cycle(m: TriMesh, lo, side: float):
    """A cycle of the surface inside the cube with nonzero class in ``H_1(M; Z/2)``, or None."""
    lo = np.asarray(lo, dtype=float)
    r = refine_to_cube(m, lo, side)
    c = r.soup.mean(axis=1)
    inside = np.all((c >= lo) & (c <= lo + side), axis=1)
    if not inside.any():
        return None
    basis = cohomology_basis(r)
    sc = basis.complex
    sub = np.zeros(len(sc.edges), dtype=bool)
    sub[np.unique(sc.tri_edges[inside])] = True
    parent, pedge, order = _spanning_tree(len(r.vertices), sc.edges, sub)
    tree = np.zeros(len(sc.edges), dtype=bool)
    tree[pedge[pedge >= 0]] = True
    # cocycle potentials along the cube forest
    P = np.zeros((basis.rank, len(r.vertices)), dtype=bool)
    for v in order:
        if parent[v] >= 0:
            P[:, v] = P[:, parent[v]] ^ basis.cocycles[:, pedge[v]]
    cand = np.flatnonzero(sub & ~tree)
    if len(cand) == 0:
        return None
    a, b = sc.edges[cand, 0], sc.edges[cand, 1]
    val = basis.cocycles[:, cand] ^ P[:, a] ^ P[:, b]
    hit = np.flatnonzero(val.any(axis=0))
    if len(hit) == 0:
        return None
    e = int(cand[hit[0]])
    cyc = [e] + _tree_path(parent, pedge, *sc.edges[e])
    return r, sc, basis, cyc


def patch_betti1(m: TriMesh, lo, side: float) -> int:
    """First Betti number of ``M`` clipped to the cube, from components and Euler characteristic."""
    tris = m.soup
    near = np.all((tris.max(axis=1) >= lo) & (tris.min(axis=1) <= lo + side), axis=1)
    if not near.any():
        return 0
    S = clip_mesh_to_cube(m.subset(near).compact(), lo, side)
    if len(S) == 0:
        return 0
    S = S.compact()
    k, lab = triangle_components(S)
    closed = sum(bool(np.all(edge_face_counts(S.subset(lab == c).compact()) == 2)) for c in range(k))
    return k - SurfaceComplex.of(S).euler + closed


def essential_curve_in_cube(M: TriMesh, side: float, max_cubes: int | None = None) -> CurveCertificate | None:
    """Scan cubes of the given side on a half-side grid for a Z/2-nontrivial cycle of ``M``."""
    if side <= 0:
        raise PreconditionError("cube side must be positive")
    if not is_closed(M) or len(M) == 0:
        raise PreconditionError("surface must be closed and nonempty")
    chi_m = SurfaceComplex.of(M).euler
    if betti1(M) < 1:
        raise PreconditionError("surface has trivial first Z/2 homology")
    lo, hi = M.bbox()
    step = side / 2
    counts = np.floor((hi - lo) / step).astype(int) + 2
    scanned = 0
    for idx in np.ndindex(*counts):
        corner = lo - step + step * np.array(idx)
        scanned += 1
        if patch_betti1(M, corner, side) == 0:
            continue
        found = cube_cycle(M, corner, side)
        if found is not None:
            r, sc, basis, cyc = found
            if sc.euler != chi_m:
                raise FalsificationError("refinement changed the Euler characteristic")
            rank_ok = is_cycle(sc, cyc) and not BoundarySpan(sc).contains(cyc)
            loop = _cycle_loop(sc, cyc)
            return CurveCertificate(corner, side, r.vertices[loop], cyc, r,
                                    basis.evaluate(cyc).tolist(), rank_ok, scanned,
                                    {"betti1": basis.rank, "euler": chi_m})
        if max_cubes is not None and scanned >= max_cubes:
            break
    return None
