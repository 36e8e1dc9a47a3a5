"""Triangle meshes in R^N and polygonal curves in the plane."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..tolerances import GEOM_TOL


class DegenerateTriangleWarning(UserWarning):
    pass


@dataclass
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.intp))

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim != 2:
            self.vertices = self.vertices.reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.intp).reshape(-1, 3)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise ValueError("triangle index out of range")

    @classmethod
    def empty(cls, dim: int = 3) -> TriMesh:
        return cls(np.zeros((0, dim)), np.zeros((0, 3), dtype=np.intp))

    @classmethod
    def from_soup(cls, tris) -> TriMesh:
        tris = np.asarray(tris, dtype=float)
        if len(tris) == 0:
            return cls.empty(tris.shape[-1] if tris.ndim == 3 else 3)
        return cls(tris.reshape(-1, tris.shape[-1]), np.arange(3 * len(tris)).reshape(-1, 3))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self):
        return len(self.triangles)

    @property
    def soup(self) -> np.ndarray:
        """Triangle corner coordinates, shape ``(F, 3, N)``."""
        return self.vertices[self.triangles]

    def bbox(self):
        if len(self.triangles) == 0:
            return None
        used = self.vertices[np.unique(self.triangles)]
        return used.min(axis=0), used.max(axis=0)

    def transformed(self, fn) -> TriMesh:
        return TriMesh(fn(self.vertices), self.triangles.copy())

    def translated(self, x) -> TriMesh:
        return TriMesh(self.vertices + np.asarray(x, dtype=float), self.triangles.copy())

    def scaled(self, c: float, center=None) -> TriMesh:
        center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        return TriMesh(center + c * (self.vertices - center), self.triangles.copy())

    def compact(self) -> TriMesh:
        """Drop unreferenced vertices."""
        used, inv = np.unique(self.triangles, return_inverse=True)
        return TriMesh(self.vertices[used], inv.reshape(-1, 3))

    def subset(self, mask) -> TriMesh:
        return TriMesh(self.vertices, self.triangles[np.asarray(mask)]).compact()


def triangle_areas(tris: np.ndarray) -> np.ndarray:
    """Areas from the Gram determinant; valid in any ambient dimension."""
    tris = np.asarray(tris, dtype=float)
    if len(tris) == 0:
        return np.zeros(0)
    u = tris[:, 1] - tris[:, 0]
    v = tris[:, 2] - tris[:, 0]
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    return 0.5 * np.sqrt(np.maximum(uu * vv - uv * uv, 0.0))


def mesh_area(m: TriMesh) -> float:
    """Total area. Degenerate triangles contribute zero and raise a warning."""
    a = triangle_areas(m.soup)
    bad = a <= GEOM_TOL
    if bad.any():
        warnings.warn(f"{int(bad.sum())} degenerate triangle(s) contribute zero area",
                      DegenerateTriangleWarning, stacklevel=2)
        a = np.where(bad, 0.0, a)
    return float(a.sum())


def unit_normals(tris: np.ndarray) -> np.ndarray:
    n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    return n / np.where(norm > 0, norm, 1.0)


def edges(m: TriMesh):
    """Unique undirected edges and, per triangle, the indices of its three edges.

    Edge ``k`` of triangle ``t`` joins corners ``k`` and ``(k+1) % 3``.
    """
    t = m.triangles
    e = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
    e = np.sort(e, axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    return uniq, inv.reshape(-1, 3)


def edge_face_counts(m: TriMesh) -> np.ndarray:
    _, tri_edges = edges(m)
    return np.bincount(tri_edges.ravel(), minlength=tri_edges.max() + 1 if tri_edges.size else 0)


def is_closed(m: TriMesh) -> bool:
    """Every edge shared by exactly two triangles."""
    if len(m) == 0:
        return True
    return bool(np.all(edge_face_counts(m) == 2))


def triangle_components(m: TriMesh) -> tuple[int, np.ndarray]:
    """Connected components of triangles sharing a vertex."""
    f = len(m.triangles)
    if f == 0:
        return 0, np.zeros(0, dtype=int)
    rows = np.repeat(np.arange(f), 3)
    cols = m.triangles.ravel()
    nv = len(m.vertices)
    g = coo_matrix((np.ones(3 * f), (rows, f + cols)), shape=(f + nv, f + nv))
    _, lab = connected_components(g, directed=False)
    tri_lab = lab[:f]
    uniq, relabel = np.unique(tri_lab, return_inverse=True)
    return len(uniq), relabel


def adjacency(m: TriMesh):
    """Shared-edge graph between triangles as a sparse matrix."""
    _, tri_edges = edges(m)
    f = len(m.triangles)
    rows = np.repeat(np.arange(f), 3)
    inc = coo_matrix((np.ones(3 * f), (rows, tri_edges.ravel()))).tocsr()
    adj = (inc @ inc.T).tocoo()
    keep = adj.row != adj.col
    return coo_matrix((np.ones(keep.sum()), (adj.row[keep], adj.col[keep])), shape=(f, f)).tocsr()


def sample_surface(m: TriMesh, count: int, rng: np.random.Generator) -> np.ndarray:
    """Area-weighted uniform samples on the mesh."""
    if count <= 0 or len(m) == 0:
        return np.zeros((0, m.dim))
    a = triangle_areas(m.soup)
    idx = rng.choice(len(a), size=count, p=a / a.sum())
    r1, r2 = rng.random(count), rng.random(count)
    s = np.sqrt(r1)
    w = np.stack([1 - s, s * (1 - r2), s * r2], axis=1)
    return np.einsum("ki,kij->kj", w, m.soup[idx])


def weld(m: TriMesh, decimals: int = 12) -> TriMesh:
    """Merge vertices whose coordinates agree after rounding."""
    key = np.round(m.vertices, decimals)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return TriMesh(m.vertices[first], inv.ravel()[m.triangles])


@dataclass
class EdgeMesh:
    """Polygonal curves in the plane: vertices ``(V, 2)`` and segments ``(E, 2)``."""

    vertices: np.ndarray
    segments: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        self.segments = np.asarray(self.segments, dtype=np.intp).reshape(-1, 2)
        if self.segments.size and (self.segments.min() < 0 or self.segments.max() >= len(self.vertices)):
            raise ValueError("segment index out of range")

    @property
    def dim(self) -> int:
        return 2

    def __len__(self):
        return len(self.segments)

    @property
    def soup(self) -> np.ndarray:
        return self.vertices[self.segments]

    def length(self) -> float:
        s = self.soup
        return float(np.linalg.norm(s[:, 1] - s[:, 0], axis=1).sum()) if len(s) else 0.0

    def is_closed(self) -> bool:
        if len(self.segments) == 0:
            return True
        deg = np.bincount(self.segments.ravel(), minlength=len(self.vertices))
        used = deg > 0
        return bool(np.all(deg[used] == 2))

    def scaled(self, c: float) -> EdgeMesh:
        return EdgeMesh(c * self.vertices, self.segments.copy())

    def translated(self, x) -> EdgeMesh:
        return EdgeMesh(self.vertices + np.asarray(x, dtype=float), self.segments.copy())

    def bbox(self):
        if len(self.segments) == 0:
            return None
        used = self.vertices[np.unique(self.segments)]
        return used.min(axis=0), used.max(axis=0)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if count <= 0 or len(self.segments) == 0:
            return np.zeros((0, 2))
        s = self.soup
        lengths = np.linalg.norm(s[:, 1] - s[:, 0], axis=1)
        idx = rng.choice(len(s), size=count, p=lengths / lengths.sum())
        t = rng.random(count)[:, None]
        return s[idx, 0] + t * (s[idx, 1] - s[idx, 0])
