"""Batched intersection predicates in R^3 and bounding-box candidate search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tolerances import GEOM_TOL
from .mesh import TriMesh

EMPTY, SEGMENT, COPLANAR = 0, 1, 2
_EDGES = ((0, 1), (1, 2), (2, 0))


def _unit_planes(T):
    n = np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
    norm = np.linalg.norm(n, axis=1)
    n = n / np.where(norm > 0, norm, 1.0)[:, None]
    return n, -np.einsum("ij,ij->i", n, T[:, 0])


def _plane_section(T, d, D, tol):
    """Points where triangles ``T`` meet a plane, given signed vertex distances ``d``.

    Returns the min/max parameter along direction ``D`` and the corresponding points.
    """
    k = len(T)
    pts = np.empty((k, 6, 3))
    ok = np.zeros((k, 6), dtype=bool)
    tol = np.broadcast_to(np.asarray(tol, dtype=float).reshape(-1), (k,))
    zero = np.abs(d) <= tol[:, None]
    for e, (i, j) in enumerate(_EDGES):
        di, dj = d[:, i], d[:, j]
        cross = ((di > tol) & (dj < -tol)) | ((di < -tol) & (dj > tol))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(cross, di / (di - dj), 0.0)
        pts[:, e] = T[:, i] + t[:, None] * (T[:, j] - T[:, i])
        ok[:, e] = cross
        pts[:, 3 + e] = T[:, i]
        ok[:, 3 + e] = zero[:, i]
    s = np.einsum("kpj,kj->kp", pts, D)
    lo = np.where(ok, s, np.inf)
    hi = np.where(ok, s, -np.inf)
    imin, imax = lo.argmin(axis=1), hi.argmax(axis=1)
    r = np.arange(k)
    return lo[r, imin], hi[r, imax], pts[r, imin], pts[r, imax], ok.any(axis=1)


def _coplanar_overlap(A, B, n, tol):
    """Separating-axis test for coplanar triangle pairs (in-plane edge normals)."""
    k = len(A)
    overlap = np.ones(k, dtype=bool)
    for T in (A, B):
        for i, j in _EDGES:
            axis = np.cross(n, T[:, j] - T[:, i])
            pa = np.einsum("kvj,kj->kv", A, axis)
            pb = np.einsum("kvj,kj->kv", B, axis)
            sep = (pa.max(axis=1) < pb.min(axis=1) - tol) | (pb.max(axis=1) < pa.min(axis=1) - tol)
            overlap &= ~sep
    return overlap


def tri_tri_batch(A, B, tol: float = GEOM_TOL):
    """Intersect triangle pairs ``A[k]``, ``B[k]`` (arrays ``(K, 3, 3)``).

    Returns ``(kind, p, q)``: ``kind`` is ``EMPTY``, ``SEGMENT`` or ``COPLANAR``;
    for segments ``p`` and ``q`` are the endpoints (possibly coincident).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    k = len(A)
    kind = np.zeros(k, dtype=np.int8)
    p = np.full((k, 3), np.nan)
    q = np.full((k, 3), np.nan)
    if k == 0:
        return kind, p, q
    scale = np.maximum(np.abs(A).reshape(k, -1).max(axis=1), np.abs(B).reshape(k, -1).max(axis=1))
    scale = np.maximum(scale, 1.0)
    eps = tol * scale
    nA, dA0 = _unit_planes(A)
    nB, dB0 = _unit_planes(B)
    dA = np.einsum("kvj,kj->kv", A, nB) + dB0[:, None]   # A's vertices vs plane of B
    dB = np.einsum("kvj,kj->kv", B, nA) + dA0[:, None]
    e = eps[:, None]
    sepA = np.all(dA > e, axis=1) | np.all(dA < -e, axis=1)
    sepB = np.all(dB > e, axis=1) | np.all(dB < -e, axis=1)
    cop = np.all(np.abs(dA) <= e, axis=1)
    live = ~(sepA | sepB) & ~cop
    if cop.any():
        idx = np.flatnonzero(cop & ~sepB)
        ov = _coplanar_overlap(A[idx], B[idx], nA[idx], eps[idx])
        kind[idx[ov]] = COPLANAR
    if live.any():
        idx = np.flatnonzero(live)
        D = np.cross(nA[idx], nB[idx])
        dn = np.linalg.norm(D, axis=1)
        good = dn > tol
        idx, D = idx[good], D[good] / dn[good, None]
        ea = eps[idx]
        amin, amax, pamin, pamax, oka = _plane_section(A[idx], dA[idx], D, ea)
        bmin, bmax, pbmin, pbmax, okb = _plane_section(B[idx], dB[idx], D, ea)
        lo = np.maximum(amin, bmin)
        hi = np.minimum(amax, bmax)
        hit = oka & okb & (hi >= lo - ea)
        plo = np.where((amin >= bmin)[:, None], pamin, pbmin)
        phi = np.where((amax <= bmax)[:, None], pamax, pbmax)
        sel = idx[hit]
        kind[sel] = SEGMENT
        p[sel] = plo[hit]
        q[sel] = phi[hit]
    return kind, p, q


@dataclass(frozen=True)
class TriTriResult:
    kind: str                       # "empty", "segment" or "coplanar"
    segment: tuple | None = None

    @property
    def length(self) -> float:
        if self.segment is None:
            return 0.0
        return float(np.linalg.norm(self.segment[1] - self.segment[0]))


def tri_tri_intersection(t1, t2, tol: float = GEOM_TOL) -> TriTriResult:
    kind, p, q = tri_tri_batch(np.asarray(t1, float)[None], np.asarray(t2, float)[None], tol)
    if kind[0] == SEGMENT:
        return TriTriResult("segment", (p[0], q[0]))
    if kind[0] == COPLANAR:
        return TriTriResult("coplanar")
    return TriTriResult("empty")


def segment_tri_batch(P0, P1, T, tol: float = GEOM_TOL):
    """Moller-Trumbore for segment/triangle pairs.

    Returns ``(hit, t, point, degenerate)`` where ``t`` is the parameter along
    ``P0 -> P1``. ``degenerate`` marks grazing contact (edge, vertex, endpoint or
    coplanar touching) within ``tol`` in barycentric/parameter units.
    """
    P0 = np.asarray(P0, dtype=float)
    P1 = np.asarray(P1, dtype=float)
    T = np.asarray(T, dtype=float)
    d = P1 - P0
    e1 = T[:, 1] - T[:, 0]
    e2 = T[:, 2] - T[:, 0]
    h = np.cross(d, e2)
    a = np.einsum("ij,ij->i", e1, h)
    scale = np.linalg.norm(d, axis=1) * np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    parallel = np.abs(a) <= tol * np.maximum(scale, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(parallel, 0.0, 1.0 / a)
    s = P0 - T[:, 0]
    u = f * np.einsum("ij,ij->i", s, h)
    qv = np.cross(s, e1)
    v = f * np.einsum("ij,ij->i", d, qv)
    t = f * np.einsum("ij,ij->i", e2, qv)
    w = 1.0 - u - v
    inside = (u >= -tol) & (v >= -tol) & (w >= -tol) & (t >= -tol) & (t <= 1 + tol) & ~parallel
    near = (np.abs(u) <= tol) | (np.abs(v) <= tol) | (np.abs(w) <= tol) | (np.abs(t) <= tol) | (np.abs(t - 1) <= tol)
    degenerate = inside & near
    hit = inside & ~near
    # coplanar segment touching the triangle's plane
    if parallel.any():
        n = np.cross(e1, e2)
        nn = np.linalg.norm(n, axis=1)
        dist0 = np.abs(np.einsum("ij,ij->i", P0 - T[:, 0], n)) / np.maximum(nn, 1e-300)
        lo = np.minimum(P0, P1)
        hi = np.maximum(P0, P1)
        tlo, thi = T.min(axis=1), T.max(axis=1)
        box = np.all((lo <= thi + tol) & (hi >= tlo - tol), axis=1)
        degenerate |= parallel & (dist0 <= tol * np.maximum(1.0, np.linalg.norm(d, axis=1))) & box
    point = P0 + t[:, None] * d
    return hit, t, point, degenerate


@dataclass(frozen=True)
class SegmentHits:
    count: int
    points: np.ndarray
    params: np.ndarray
    degenerate: bool


def segment_mesh_hits(seg, m: TriMesh, tol: float = GEOM_TOL) -> SegmentHits:
    """Transversal hits of one segment with a mesh, ordered along the segment."""
    p0, p1 = (np.asarray(x, dtype=float) for x in seg)
    if len(m) == 0:
        return SegmentHits(0, np.zeros((0, 3)), np.zeros(0), False)
    T = m.soup
    lo, hi = np.minimum(p0, p1), np.maximum(p0, p1)
    cand = np.flatnonzero(np.all((T.min(axis=1) <= hi + tol) & (T.max(axis=1) >= lo - tol), axis=1))
    if len(cand) == 0:
        return SegmentHits(0, np.zeros((0, 3)), np.zeros(0), False)
    k = len(cand)
    hit, t, pts, deg = segment_tri_batch(np.tile(p0, (k, 1)), np.tile(p1, (k, 1)), T[cand], tol)
    order = np.argsort(t[hit], kind="stable")
    return SegmentHits(int(hit.sum()), pts[hit][order], t[hit][order], bool(deg.any()))


def count_segment_hits(P0, P1, m: TriMesh, tol: float = GEOM_TOL, chunk: int = 1 << 20):
    """Hit counts and degeneracy flags for many segments against one mesh."""
    P0 = np.asarray(P0, dtype=float)
    P1 = np.asarray(P1, dtype=float)
    ns = len(P0)
    counts = np.zeros(ns, dtype=np.int64)
    deg = np.zeros(ns, dtype=bool)
    if len(m) == 0 or ns == 0:
        return counts, deg
    T = m.soup
    ia, ib, _ = candidate_pairs(np.minimum(P0, P1), np.maximum(P0, P1), T.min(axis=1), T.max(axis=1))
    for s in range(0, len(ia), chunk):
        a, b = ia[s:s + chunk], ib[s:s + chunk]
        hit, _, _, dg = segment_tri_batch(P0[a], P1[a], T[b], tol)
        np.add.at(counts, a, hit.astype(np.int64))
        np.logical_or.at(deg, a, dg)
    return counts, deg


def point_triangle_distance(p, tri) -> float:
    """Euclidean distance from a point to a closed triangle in R^3."""
    p = np.asarray(p, dtype=float)
    a, b, c = (np.asarray(x, dtype=float) for x in tri)
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(p - a))
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(p - b))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        v = d1 / (d1 - d3)
        return float(np.linalg.norm(p - (a + v * ab)))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(p - c))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        w = d2 / (d2 - d6)
        return float(np.linalg.norm(p - (a + w * ac)))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + w * (c - b))))
    denom = 1.0 / (va + vb + vc)
    v, w = vb * denom, vc * denom
    return float(np.linalg.norm(p - (a + ab * v + ac * w)))


# -- candidate search ------------------------------------------------------


def _expand_bins(lo_bin, hi_bin):
    """All integer bin coordinates covered by each box; returns (owner, bins)."""
    n = hi_bin - lo_bin + 1
    total = np.prod(n, axis=1)
    owner = np.repeat(np.arange(len(n)), total)
    local = np.arange(total.sum()) - np.repeat(np.cumsum(total) - total, total)
    bins = np.empty((len(owner), n.shape[1]), dtype=np.int64)
    nn = n[owner]
    for ax in range(n.shape[1] - 1, -1, -1):
        bins[:, ax] = lo_bin[owner, ax] + local % nn[:, ax]
        local = local // nn[:, ax]
    return owner, bins


def _join(keys_a, keys_b):
    """Index pairs ``(i, j)`` with ``keys_a[i] == keys_b[j]``."""
    order = np.argsort(keys_b, kind="stable")
    kb = keys_b[order]
    lo = np.searchsorted(kb, keys_a, side="left")
    hi = np.searchsorted(kb, keys_a, side="right")
    cnt = hi - lo
    ia = np.repeat(np.arange(len(keys_a)), cnt)
    off = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    ib = order[np.repeat(lo, cnt) + off]
    return ia, ib


def candidate_pairs(lo_a, hi_a, lo_b, hi_b, period: float | None = None, pad: float = 1e-9):
    """Pairs of boxes that may overlap.

    With ``period`` set, set B is treated as periodic with that lattice
    spacing on every axis; each returned pair carries the integer lattice
    offset ``z`` such that box ``b + z * period`` overlaps box ``a``.
    Returns ``(ia, ib, z)`` with duplicates removed.
    """
    lo_a = np.asarray(lo_a, dtype=float)
    hi_a = np.asarray(hi_a, dtype=float)
    lo_b = np.asarray(lo_b, dtype=float)
    hi_b = np.asarray(hi_b, dtype=float)
    dim = lo_a.shape[1] if lo_a.ndim == 2 else 3
    empty = (np.zeros(0, np.intp), np.zeros(0, np.intp), np.zeros((0, dim), np.int64))
    if len(lo_a) == 0 or len(lo_b) == 0:
        return empty
    ext = max(float(np.max(hi_a - lo_a)), float(np.max(hi_b - lo_b)), 1e-12) + 2 * pad
    if period is not None:
        nb = max(1, int(np.floor(period / ext)))
        cell = period / nb
    else:
        nb = None
        span = max(float(np.max(hi_a) - np.min(lo_a)), float(np.max(hi_b) - np.min(lo_b)), ext)
        cell = max(ext, span / 64)
    ba_owner, ba = _expand_bins(np.floor((lo_a - pad) / cell).astype(np.int64),
                                np.floor((hi_a + pad) / cell).astype(np.int64))
    bb_owner, bb = _expand_bins(np.floor((lo_b - pad) / cell).astype(np.int64),
                                np.floor((hi_b + pad) / cell).astype(np.int64))
    if nb is not None:
        key_a, lift_a = np.mod(ba, nb), np.floor_divide(ba, nb)
        key_b, lift_b = np.mod(bb, nb), np.floor_divide(bb, nb)
        base = nb
    else:
        key_a, key_b = ba, bb
        mn = min(ba.min(), bb.min())
        key_a, key_b = key_a - mn, key_b - mn
        base = int(max(key_a.max(), key_b.max())) + 1
    ka = np.zeros(len(key_a), dtype=np.int64)
    kb = np.zeros(len(key_b), dtype=np.int64)
    for ax in range(key_a.shape[1]):
        ka = ka * base + key_a[:, ax]
        kb = kb * base + key_b[:, ax]
    ja, jb = _join(ka, kb)
    ia, ib = ba_owner[ja], bb_owner[jb]
    if nb is not None:
        z = lift_a[ja] - lift_b[jb]
    else:
        z = np.zeros((len(ia), key_a.shape[1]), dtype=np.int64)
    if len(ia) == 0:
        return empty
    rows = np.unique(np.column_stack([ia, ib, z]), axis=0)
    ia, ib, z = rows[:, 0], rows[:, 1], rows[:, 2:]
    shift = z * (period if period is not None else 0.0)
    ov = np.all((lo_a[ia] - pad <= hi_b[ib] + shift + pad) & (lo_b[ib] + shift - pad <= hi_a[ia] + pad), axis=1)
    return ia[ov].astype(np.intp), ib[ov].astype(np.intp), z[ov]
