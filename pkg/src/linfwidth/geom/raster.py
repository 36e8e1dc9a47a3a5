"""Conservative voxelization of triangles (3D) and segments (2D)."""
from __future__ import annotations

import numpy as np

from .intersect import _expand_bins


def _sat_overlap(T, centers, half):
    """Separating-axis test for triangles ``T (K,3,3)`` against boxes with ``centers (K,3)``."""
    v = T - centers[:, None, :]
    e = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)
    ok = np.ones(len(T), dtype=bool)
    # box face normals
    ok &= np.all(v.min(axis=1) <= half, axis=1) & np.all(v.max(axis=1) >= -half, axis=1)
    # triangle normal
    n = np.cross(e[:, 0], e[:, 1])
    r = half * np.abs(n).sum(axis=1)
    p = np.einsum("kj,kj->k", n, v[:, 0])
    ok &= np.abs(p) <= r
    # edge x axis
    eye = np.eye(3)
    for i in range(3):
        for j in range(3):
            a = np.cross(e[:, i], eye[j][None, :])
            pr = np.einsum("kvj,kj->kv", v, a)
            rad = half * np.abs(a).sum(axis=1)
            ok &= (pr.min(axis=1) <= rad) & (pr.max(axis=1) >= -rad)
    return ok


def voxelize_triangles(tris, lo, side: float, res: int, pad: float = 1e-9) -> np.ndarray:
    """Boolean ``(res, res, res)`` grid of cells of ``[lo, lo+side]^3`` touched by any triangle."""
    tris = np.asarray(tris, dtype=float)
    lo = np.asarray(lo, dtype=float)
    out = np.zeros((res, res, res), dtype=bool)
    if len(tris) == 0:
        return out
    h = side / res
    a = np.floor((tris.min(axis=1) - lo - pad) / h).astype(np.int64)
    b = np.floor((tris.max(axis=1) - lo + pad) / h).astype(np.int64)
    a = np.clip(a, 0, res - 1)
    b = np.clip(b, 0, res - 1)
    keep = np.all(b >= a, axis=1)
    idx = np.flatnonzero(keep)
    owner, cells = _expand_bins(a[idx], b[idx])
    tri = idx[owner]
    step = 1 << 20
    for s in range(0, len(tri), step):
        c = cells[s:s + step]
        centers = lo + (c + 0.5) * h
        hit = _sat_overlap(tris[tri[s:s + step]], centers, h / 2 + pad)
        c = c[hit]
        out[c[:, 0], c[:, 1], c[:, 2]] = True
    return out


def voxelize_segments(segs, lo, side: float, res: int, pad: float = 1e-9) -> np.ndarray:
    """Boolean ``(res, res)`` grid of pixels of ``[lo, lo+side]^2`` touched by any segment."""
    segs = np.asarray(segs, dtype=float)
    lo = np.asarray(lo, dtype=float)
    out = np.zeros((res, res), dtype=bool)
    if len(segs) == 0:
        return out
    h = side / res
    a = np.clip(np.floor((segs.min(axis=1) - lo - pad) / h).astype(np.int64), 0, res - 1)
    b = np.clip(np.floor((segs.max(axis=1) - lo + pad) / h).astype(np.int64), 0, res - 1)
    owner, cells = _expand_bins(a, b)
    s = segs[owner]
    centers = lo + (cells + 0.5) * h
    v = s - centers[:, None, :]
    d = v[:, 1] - v[:, 0]
    nrm = np.stack([-d[:, 1], d[:, 0]], axis=1)
    half = h / 2 + pad
    ok = np.all(v.min(axis=1) <= half, axis=1) & np.all(v.max(axis=1) >= -half, axis=1)
    ok &= np.abs(np.einsum("kj,kj->k", nrm, v[:, 0])) <= half * np.abs(nrm).sum(axis=1)
    c = cells[ok]
    out[c[:, 0], c[:, 1]] = True
    return out
