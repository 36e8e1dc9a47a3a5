"""Splitting meshes along axis-aligned planes and clipping them to lattice cubes."""
from __future__ import annotations

import numpy as np

from ..tolerances import GEOM_TOL
from .mesh import EdgeMesh, TriMesh, edges


def split_by_plane(m: TriMesh, axis: int, value: float, tol: float = GEOM_TOL) -> TriMesh:
    """Refine ``m`` so that no triangle crosses the plane ``x[axis] = value``.

    New vertices are shared between the two triangles of a cut edge, so a
    conforming mesh stays conforming. Orientation of every piece is kept.
    """
    if len(m) == 0:
        return m
    d = m.vertices[:, axis] - value
    d = np.where(np.abs(d) <= tol, 0.0, d)
    side = np.sign(d)
    tri_side = side[m.triangles]
    cut = (tri_side.max(axis=1) > 0) & (tri_side.min(axis=1) < 0)
    if not cut.any():
        return m
    E, tri_edges = edges(m)
    ecut = side[E[:, 0]] * side[E[:, 1]] < 0
    cut_ids = np.flatnonzero(ecut)
    a, b = E[cut_ids, 0], E[cut_ids, 1]
    t = d[a] / (d[a] - d[b])
    newpts = m.vertices[a] + t[:, None] * (m.vertices[b] - m.vertices[a])
    newpts[:, axis] = value
    new_index = np.full(len(E), -1, dtype=np.intp)
    new_index[cut_ids] = len(m.vertices) + np.arange(len(cut_ids))
    verts = np.vstack([m.vertices, newpts])
    vside = np.concatenate([side, np.zeros(len(newpts))])
    out = [m.triangles[~cut]]
    pieces = []
    for f in np.flatnonzero(cut):
        poly = []
        for k in range(3):
            poly.append(m.triangles[f, k])
            ne = new_index[tri_edges[f, k]]
            if ne >= 0:
                poly.append(ne)
        for sgn in (1, -1):
            part = [v for v in poly if vside[v] * sgn >= 0]
            for j in range(1, len(part) - 1):
                pieces.append((part[0], part[j], part[j + 1]))
    if pieces:
        out.append(np.asarray(pieces, dtype=np.intp))
    return TriMesh(verts, np.vstack(out))


def split_by_lattice(m: TriMesh, spacing: float, offset=(0.0, 0.0, 0.0)) -> TriMesh:
    """Refine ``m`` along every plane ``x[a] = offset[a] + k * spacing``."""
    box = m.bbox()
    if box is None:
        return m
    out = m
    for ax in range(m.dim):
        k0 = int(np.ceil((box[0][ax] - offset[ax]) / spacing))
        k1 = int(np.floor((box[1][ax] - offset[ax]) / spacing))
        for k in range(k0, k1 + 1):
            out = split_by_plane(out, ax, offset[ax] + k * spacing)
    return out


def cube_index(points, spacing: float, offset=(0.0, 0.0, 0.0)) -> np.ndarray:
    return np.floor((np.asarray(points) - np.asarray(offset)) / spacing).astype(np.int64)


def partition_by_lattice(m: TriMesh, spacing: float, offset=(0.0, 0.0, 0.0)) -> dict:
    """Clipped submeshes keyed by the integer index of their lattice cube."""
    r = split_by_lattice(m, spacing, offset)
    if len(r) == 0:
        return {}
    idx = cube_index(r.soup.mean(axis=1), spacing, offset)
    keys, inv = np.unique(idx, axis=0, return_inverse=True)
    inv = inv.ravel()
    return {tuple(int(c) for c in key): r.subset(inv == i) for i, key in enumerate(keys)}


def clip_mesh_to_cube(m: TriMesh, lo, side: float) -> TriMesh:
    """Part of ``m`` inside the closed cube ``[lo, lo + side]^3``."""
    if m.dim != 3:
        raise ValueError("mesh clipping is implemented for N = 3")
    lo = np.asarray(lo, dtype=float)
    out = m
    for ax in range(3):
        out = split_by_plane(out, ax, lo[ax])
        out = split_by_plane(out, ax, lo[ax] + side)
    if len(out) == 0:
        return TriMesh.empty(3)
    c = out.soup.mean(axis=1)
    inside = np.all((c >= lo) & (c <= lo + side), axis=1)
    return out.subset(inside)


# -- planar curves ---------------------------------------------------------


def split_edges_by_line(c: EdgeMesh, axis: int, value: float, tol: float = GEOM_TOL) -> EdgeMesh:
    if len(c) == 0:
        return c
    d = c.vertices[:, axis] - value
    d = np.where(np.abs(d) <= tol, 0.0, d)
    s = c.segments
    cut = d[s[:, 0]] * d[s[:, 1]] < 0
    if not cut.any():
        return c
    a, b = s[cut, 0], s[cut, 1]
    t = d[a] / (d[a] - d[b])
    p = c.vertices[a] + t[:, None] * (c.vertices[b] - c.vertices[a])
    p[:, axis] = value
    ids = len(c.vertices) + np.arange(cut.sum())
    new = np.vstack([s[~cut], np.column_stack([a, ids]), np.column_stack([ids, b])])
    return EdgeMesh(np.vstack([c.vertices, p]), new)


def partition_curve_by_lattice(c: EdgeMesh, spacing: float, offset=(0.0, 0.0)) -> dict:
    box = c.bbox()
    if box is None:
        return {}
    out = c
    for ax in range(2):
        k0 = int(np.ceil((box[0][ax] - offset[ax]) / spacing))
        k1 = int(np.floor((box[1][ax] - offset[ax]) / spacing))
        for k in range(k0, k1 + 1):
            out = split_edges_by_line(out, ax, offset[ax] + k * spacing)
    idx = cube_index(out.soup.mean(axis=1), spacing, offset)
    keys, inv = np.unique(idx, axis=0, return_inverse=True)
    inv = inv.ravel()
    return {tuple(int(v) for v in key): EdgeMesh(out.vertices, out.segments[inv == i])
            for i, key in enumerate(keys)}
