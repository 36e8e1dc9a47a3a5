"""Shifted dual 1-skeleton missing a small surface, and the retraction onto the lattice 1-skeleton.

All work happens in lattice units ``u = (x - offset) / side``: the lattice is
``Z^3`` and the plane families are ``{u_a = k + t_a}``. The surface must have
area below ``1/3`` in these units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..certificate import WidthCertificate
from ..errors import PreconditionError, SearchExhausted
from ..geom.intersect import count_segment_hits
from ..geom.mesh import EdgeMesh, TriMesh, is_closed, mesh_area, sample_surface
from ..tolerances import GEOM_TOL, JITTER_RETRIES

AREA_LIMIT = 1 / 3
DEFAULT_EPS = 1e-3
MAX_REFINE = 6
RAY_TOL = 1e-12
RETRACT_JITTER = 1e-9


def _sweep_values(res: int, rng: np.random.Generator) -> np.ndarray:
    """One seeded sample in each of ``res`` equal bins of ``(0, 1)``."""
    return (np.arange(res) + rng.uniform(0.25, 0.75, res)) / res


def plane_sections(T: np.ndarray, axis: int, t: float) -> tuple[np.ndarray, bool]:
    """Segments of the soup ``T`` on the planes ``u[axis] = k + t`` and a vertex-on-plane flag."""
    x = T[:, :, axis] - t
    k0 = np.ceil(x.min(axis=1)).astype(np.int64)
    k1 = np.floor(x.max(axis=1)).astype(np.int64)
    n = np.maximum(k1 - k0 + 1, 0)
    if n.sum() == 0:
        return np.zeros((0, 2, 3)), False
    tri = np.repeat(np.arange(len(T)), n)
    k = np.repeat(k0 - np.concatenate([[0], np.cumsum(n)[:-1]]), n) + np.arange(n.sum())
    d = x[tri] - k[:, None]
    touch = bool((np.abs(d) <= GEOM_TOL).any())
    P = T[tri]
    ends = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        di, dj = d[:, i], d[:, j]
        cross = (di < 0) != (dj < 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(cross, di / (di - dj), np.nan)
        ends.append((cross, P[:, i] + s[:, None] * (P[:, j] - P[:, i])))
    segs = np.full((len(tri), 2, 3), np.nan)
    filled = np.zeros(len(tri), dtype=int)
    for cross, p in ends:
        for slot in (0, 1):
            put = cross & (filled == slot)
            segs[put, slot] = p[put]
            filled += put
            cross = cross & ~put
    keep = filled == 2
    segs = segs[keep]
    segs[:, :, axis] = (k[keep] + t)[:, None]
    return segs, touch


def section_length(T, axis, t) -> tuple[float, bool]:
    s, touch = plane_sections(T, axis, t)
    return float(np.linalg.norm(s[:, 1] - s[:, 0], axis=1).sum()), touch


def plane_crossings(segs: np.ndarray, axis: int, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Number of crossings of the segments with the planes ``u[axis] = k + t`` for every ``t``."""
    if len(segs) == 0:
        return np.zeros(len(ts), dtype=np.int64), np.zeros(len(ts), dtype=bool)
    a = np.minimum(segs[:, 0, axis], segs[:, 1, axis])[:, None] - ts[None, :]
    b = np.maximum(segs[:, 0, axis], segs[:, 1, axis])[:, None] - ts[None, :]
    count = np.maximum(np.floor(b) - np.ceil(a) + 1, 0).sum(axis=0).astype(np.int64)
    fa, fb = a - np.round(a), b - np.round(b)
    touch = ((np.abs(fa) <= GEOM_TOL) | (np.abs(fb) <= GEOM_TOL)).any(axis=0)
    return count, touch


@dataclass
class DualSkeletonT:
    t: np.ndarray                     # (3,) offsets in (0, 1)
    side: float = 1.0
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    lengths: tuple = (0.0, 0.0)       # |X ∩ M|, |Y ∩ M| in lattice units
    counts: tuple = (0, 0, 0)         # crossings of XY, XZ, YZ lines with M, from the sections
    hits: tuple = (0, 0, 0)           # the same counts by segment-triangle hit testing
    degenerate: int = 0
    sweep_res: int = 0

    def to_lattice(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.offset) / self.side

    def from_lattice(self, u) -> np.ndarray:
        return self.offset + self.side * np.asarray(u, dtype=float)

    @property
    def disjoint(self) -> bool:
        return all(h == 0 for h in self.hits) and self.degenerate == 0


def line_family(t: np.ndarray, lo, hi, axes) -> tuple[np.ndarray, np.ndarray]:
    """Segments of the lines ``u[a] = i + t[a], u[b] = j + t[b]`` crossing the box, along the third axis."""
    a, b = axes
    c = 3 - a - b
    ii = np.arange(math.floor(lo[a] - t[a]), math.ceil(hi[a] - t[a]) + 1) + t[a]
    jj = np.arange(math.floor(lo[b] - t[b]), math.ceil(hi[b] - t[b]) + 1) + t[b]
    I, J = np.meshgrid(ii, jj, indexing="ij")
    P0 = np.zeros((I.size, 3))
    P0[:, a], P0[:, b] = I.ravel(), J.ravel()
    P1 = P0.copy()
    P0[:, c], P1[:, c] = lo[c] - 1, hi[c] + 1
    return P0, P1


def verify_T(Mu: TriMesh, t) -> tuple[tuple, int]:
    """Hits of the three line families with the surface (lattice units), by direct testing."""
    if len(Mu) == 0:
        return (0, 0, 0), 0
    lo, hi = Mu.bbox()
    hits, deg = [], 0
    for axes in ((0, 1), (0, 2), (1, 2)):
        P0, P1 = line_family(np.asarray(t), lo, hi, axes)
        cnt, d = count_segment_hits(P0, P1, Mu)
        hits.append(int(cnt.sum()))
        deg += int(d.sum())
    return tuple(hits), deg


def three_plane_T(Mu: TriMesh, sweep_res: int = 256, seed: int = 0) -> DualSkeletonT:
    """Offsets ``t`` whose shifted dual 1-skeleton misses ``Mu`` (given in lattice units)."""
    area = mesh_area(Mu) if len(Mu) else 0.0
    if area >= AREA_LIMIT:
        raise PreconditionError(f"area {area!r} in lattice units is not below 1/3")
    rng = np.random.default_rng([int(seed), 43])
    if len(Mu) == 0:
        t = _sweep_values(1, rng).repeat(3)
        return DualSkeletonT(t, sweep_res=0)
    T = Mu.soup
    res = sweep_res
    for _ in range(MAX_REFINE):
        ts = _sweep_values(res, rng)
        found = _pick(T, ts, rng)
        if found is not None:
            t, lengths, counts = found
            hits, deg = verify_T(Mu, t)
            return DualSkeletonT(t, 1.0, np.zeros(3), lengths, counts, hits, deg, res)
        res *= 2
    raise SearchExhausted(f"no offsets passed the sweep up to {res // 2} samples",
                          report={"area": area})


def _pick(T, ts, rng):
    """Seeded choice among the sweep samples passing each stage's threshold."""
    lx = [section_length(T, 0, t) for t in ts]
    ok = [i for i, (v, touch) in enumerate(lx) if not touch and v < AREA_LIMIT]
    if not ok:
        return None
    ix = int(rng.choice(ok))
    tx = float(ts[ix])
    SX, _ = plane_sections(T, 0, tx)
    cxy, txy = plane_crossings(SX, 1, ts)
    ok = []
    for i in np.flatnonzero((cxy == 0) & ~txy):
        ly, touch = section_length(T, 1, ts[i])
        if not touch and ly < 2 * AREA_LIMIT:
            ok.append((i, ly))
    if not ok:
        return None
    iy, ly = ok[int(rng.integers(len(ok)))]
    ty = float(ts[iy])
    SY, _ = plane_sections(T, 1, ty)
    cxz, txz = plane_crossings(SX, 2, ts)
    cyz, tyz = plane_crossings(SY, 2, ts)
    ok = np.flatnonzero((cxz == 0) & (cyz == 0) & ~txz & ~tyz)
    if len(ok) == 0:
        return None
    tz = float(ts[rng.choice(ok)])
    counts = (int(cxy[iy]), int(cxz[ok[0]]), int(cyz[ok[0]]))
    return np.array([tx, ty, tz]), (lx[ix][0], ly), counts


# -- retraction ----------------------------------------------------------------


def _radial(w: np.ndarray, c: np.ndarray, skip=None):
    """Push ``w`` away from ``c`` to the boundary of the unit box; returns the point and the axis hit."""
    d = w - c
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(d > 0, (1 - c) / d, np.where(d < 0, -c / d, np.inf))
    if skip is not None:
        s[np.arange(len(s)), skip] = np.inf
    ax = np.argmin(s, axis=1)
    sm = s[np.arange(len(s)), ax]
    with np.errstate(invalid="ignore"):
        p = c + sm[:, None] * d
    p[np.arange(len(p)), ax] = (d[np.arange(len(d)), ax] > 0).astype(float)
    return p, ax


def retract_lattice(u, t, seed: int = 0) -> tuple[np.ndarray, np.ndarray, int]:
    """Two-stage radial retraction in lattice units; returns images, cube keys and the jitter count."""
    u = np.atleast_2d(np.asarray(u, dtype=float)).copy()
    t = np.asarray(t, dtype=float)
    rng = np.random.default_rng([int(seed), 47])
    jitters = 0
    for _ in range(JITTER_RETRIES + 1):
        key = np.floor(u)
        w = u - key
        c = np.broadcast_to(t, w.shape)
        bad = np.abs(w - c).max(axis=1) < RAY_TOL
        p, ax = _radial(w, c)
        c2 = c.copy()
        c2[np.arange(len(p)), ax] = p[np.arange(len(p)), ax]
        off = p - c2
        off[np.arange(len(p)), ax] = 0
        bad |= np.abs(off).max(axis=1) < RAY_TOL
        if not bad.any():
            q, _ = _radial(p, c2, skip=ax)
            return key + q, key.astype(np.int64), jitters
        jitters += int(bad.sum())
        u[bad] += rng.uniform(-RETRACT_JITTER, RETRACT_JITTER, (int(bad.sum()), 3))
    raise PreconditionError("query points stay on the retraction centres after jittering")


def retraction_phi(T: DualSkeletonT, x, seed: int = 0) -> np.ndarray:
    """Map points off ``T`` to the lattice 1-skeleton, staying in their closed cube."""
    q, _, _ = retract_lattice(T.to_lattice(x), T.t, seed)
    return T.from_lattice(q)


def retraction_checks(T: DualSkeletonT, x, seed: int = 0, tol: float = 1e-9) -> dict:
    u = T.to_lattice(np.atleast_2d(x))
    q, key, jit = retract_lattice(u, T.t, seed)
    same = np.all((q >= key - tol) & (q <= key + 1 + tol), axis=1)
    frac = np.abs(q - np.round(q)) <= tol
    on_skel = frac.sum(axis=1) >= 2
    disp = np.abs(q - u).max(axis=1) * T.side if len(u) else np.zeros(0)
    return {"same_cube": bool(same.all()), "on_skeleton": bool(on_skel.all()),
            "sup_displacement": float(disp.max()) if len(disp) else 0.0, "jitters": jit}


# -- certificates --------------------------------------------------------------


def codim1_side(area: float, eps: float = DEFAULT_EPS) -> float:
    """``sqrt(3 area) (1 + eps)``: every cube, and the whole surface, carries area below ``side^2 / 3``."""
    return math.sqrt(3 * area) * (1 + eps)


def width_certificate_codim1(M: TriMesh, sweep_res: int = 256, seed: int = 0, samples: int = 10_000,
                             eps: float = DEFAULT_EPS) -> tuple[WidthCertificate, DualSkeletonT]:
    """Map a closed surface to the 1-skeleton of a cubic lattice with displacement at most ``side``."""
    if not is_closed(M):
        raise PreconditionError("mesh must be closed (every edge shared by two triangles)")
    if len(M) == 0:
        return WidthCertificate.trivial(3, 0.0), DualSkeletonT(np.full(3, 0.5))
    area = mesh_area(M)
    side = codim1_side(area, eps)
    rng = np.random.default_rng([int(seed), 53])
    offset = M.bbox()[0] - side * rng.random(3)
    Mu = M.transformed(lambda v: (v - offset) / side)
    T = three_plane_T(Mu, sweep_res, seed)
    T.side, T.offset = side, offset
    if not T.disjoint:
        raise SearchExhausted("chosen offsets meet the surface under direct hit testing",
                              report={"hits": T.hits, "degenerate": T.degenerate})
    pts = np.vstack([M.vertices, sample_surface(M, samples, rng)])
    img = retraction_phi(T, pts, seed)
    info = {"area": area, "side": side, "t": T.t.tolist(), "sweep_res": T.sweep_res}
    cert = WidthCertificate({"skeleton": 1, "side": side, "offset": offset.tolist()}, 1, pts, img,
                            side, side, "three-plane", info)
    return cert, T


def width_certificate_curve(c: EdgeMesh, sweep_res: int = 256, seed: int = 0, samples: int = 10_000,
                            eps: float = DEFAULT_EPS) -> WidthCertificate:
    """Planar closed curve to the vertices of a square lattice of side ``3 length (1 + eps)``.

    Two shifted line families missing the curve cut the plane into squares,
    each holding exactly one lattice vertex; every point goes to that vertex.
    """
    if len(c) == 0:
        return WidthCertificate.trivial(2, 0.0)
    if not c.is_closed():
        raise PreconditionError("curve must be closed")
    side = 3 * c.length() * (1 + eps)
    rng = np.random.default_rng([int(seed), 59])
    offset = c.bbox()[0] - side * rng.random(2)
    S = (c.soup - offset) / side
    res = sweep_res
    for _ in range(MAX_REFINE):
        ts = _sweep_values(res, rng)
        t = []
        for ax in range(2):
            cnt, touch = plane_crossings(S, ax, ts)
            ok = np.flatnonzero((cnt == 0) & ~touch)
            if len(ok) == 0:
                break
            t.append(ts[rng.choice(ok)])
        if len(t) == 2:
            break
        res *= 2
    else:
        raise SearchExhausted("no line offsets avoid the curve")
    t = np.array(t)
    pts = np.vstack([c.vertices, c.sample(samples, rng)])
    u = (pts - offset) / side
    img = offset + side * (np.floor(u - t) + 1)
    return WidthCertificate({"skeleton": 0, "side": side, "offset": offset.tolist()}, 0, pts, img,
                            side, side, "lines", {"length": c.length(), "t": t.tolist(), "sweep_res": res})

