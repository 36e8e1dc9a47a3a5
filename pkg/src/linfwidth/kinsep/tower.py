"""Towers of intersections of posed copies of a periodic foam (N = 3).

Level 0 is the foam surface itself, level 1 its intersection with a second
posed copy (a periodic curve made of segments), level 2 the intersection with a
third copy (a periodic point set). All sets are ``Z^3``-periodic and stored by
one representative per period, in lifted coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegeneratePoseError, PreconditionError
from ..foam import FoamState
from ..geom.clip import clip_mesh_to_cube
from ..geom.intersect import COPLANAR, SEGMENT, candidate_pairs, point_triangle_distance, segment_tri_batch, tri_tri_batch
from ..geom.mesh import TriMesh, triangle_areas
from ..tolerances import JITTER, JITTER_RETRIES
from .pose import Pose, random_poses

N = 3
CONTAIN_TOL = 1e-9


def level_bound(m: int, n: int = N) -> float:
    """``(2 pi)^(m+1) sqrt(N (N-1) ... (N-m))``."""
    return (2 * math.pi) ** (m + 1) * math.sqrt(math.perm(n, m + 1))


@dataclass
class Segments:
    """Periodic segment set with the triangle pair each segment came from."""

    segs: np.ndarray            # (K, 2, 3)
    tri_a: np.ndarray           # index into the first soup
    tri_b: np.ndarray           # index into the second soup
    z: np.ndarray               # (K, 3) lattice offset applied to the second soup
    degenerate: int = 0

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.segs[:, 1] - self.segs[:, 0], axis=1).sum()) if len(self.segs) else 0.0


@dataclass
class Points:
    pts: np.ndarray             # (K, 3)
    seg: np.ndarray             # index into the segment set
    tri: np.ndarray             # index into the posed soup
    z: np.ndarray
    degenerate: int = 0

    @property
    def count(self) -> int:
        return len(self.pts)


def _boxes(x):
    return x.min(axis=1), x.max(axis=1)


def periodic_tri_tri(A: np.ndarray, B: np.ndarray, chunk: int = 1 << 18) -> Segments:
    """Intersection of the soup ``A`` with every integer translate of ``B``."""
    if len(A) == 0 or len(B) == 0:
        e = np.zeros(0, dtype=np.intp)
        return Segments(np.zeros((0, 2, 3)), e, e, np.zeros((0, 3), np.int64))
    ia, ib, z = candidate_pairs(*_boxes(A), *_boxes(B), period=1.0)
    if len(ia) == 0:
        return periodic_tri_tri(A[:0], B)
    segs, ka, kb, kz = [], [], [], []
    degenerate = 0
    for s in range(0, len(ia), chunk):
        a, b, zz = ia[s:s + chunk], ib[s:s + chunk], z[s:s + chunk]
        kind, p, q = tri_tri_batch(A[a], B[b] + zz[:, None, :])
        degenerate += int((kind == COPLANAR).sum())
        ok = kind == SEGMENT
        ok &= np.linalg.norm(np.nan_to_num(q - p), axis=1) > 0
        segs.append(np.stack([p[ok], q[ok]], axis=1))
        ka.append(a[ok]); kb.append(b[ok]); kz.append(zz[ok])
    return Segments(np.concatenate(segs), np.concatenate(ka), np.concatenate(kb), np.concatenate(kz), degenerate)


def periodic_seg_tri(S: np.ndarray, B: np.ndarray, chunk: int = 1 << 18) -> Points:
    """Transversal hits of segments ``S`` with every integer translate of the soup ``B``."""
    if len(S) == 0 or len(B) == 0:
        e = np.zeros(0, dtype=np.intp)
        return Points(np.zeros((0, 3)), e, e, np.zeros((0, 3), np.int64))
    ia, ib, z = candidate_pairs(*_boxes(S), *_boxes(B), period=1.0)
    if len(ia) == 0:
        return periodic_seg_tri(S[:0], B)
    pts, ks, kb, kz = [], [], [], []
    degenerate = 0
    for s in range(0, len(ia), chunk):
        a, b, zz = ia[s:s + chunk], ib[s:s + chunk], z[s:s + chunk]
        hit, _, p, deg = segment_tri_batch(S[a, 0], S[a, 1], B[b] + zz[:, None, :])
        degenerate += int(deg.sum())
        pts.append(p[hit]); ks.append(a[hit]); kb.append(b[hit]); kz.append(zz[hit])
    return Points(np.concatenate(pts), np.concatenate(ks), np.concatenate(kb), np.concatenate(kz), degenerate)


@dataclass
class SeparatorTower:
    foam: FoamState
    base: np.ndarray                       # foam soup (K, 3, 3), lifted coordinates
    poses: list                            # pose of copy i, copy 0 is the identity
    levels: list                           # [soup, Segments, Points][: m + 1]
    measures: list
    bounds: list
    bound_miss: list
    search_log: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.poses) - 1

    def copy_soup(self, i: int) -> np.ndarray:
        return self.poses[i].apply(self.base)


def _search(level_fn, poses, rng):
    """Evaluate poses, re-jittering degenerate ones; return the best and a log."""
    best, best_val, log = None, math.inf, []
    for p in poses:
        for attempt in range(JITTER_RETRIES + 1):
            res, val, deg = level_fn(p)
            if deg == 0:
                break
            p = p.jittered(rng, JITTER)
        else:
            log.append((p, math.nan))
            continue
        log.append((p, val))
        if val < best_val:
            best, best_val = (p, res), val
    if best is None:
        raise DegeneratePoseError("every candidate pose stayed degenerate after jittering")
    return best[0], best[1], best_val, log


def build_tower(foam: FoamState, base: TriMesh | np.ndarray, m: int, pose_samples: int = 256,
                seed: int = 0) -> SeparatorTower:
    """Greedy sampled-pose tower of height ``m`` over the foam soup ``base``."""
    if foam.n != N:
        raise PreconditionError("mesh towers are built for N = 3")
    if not foam.separated:
        raise PreconditionError("foam must be separated")
    if not 0 <= m <= N - 1:
        raise PreconditionError("tower height must satisfy 0 <= m <= 2")
    soup = base.soup if isinstance(base, TriMesh) else np.asarray(base, dtype=float)
    area0 = float(triangle_areas(soup).sum())
    poses = [Pose.identity(N)]
    levels = [soup]
    measures = [area0]
    rng = np.random.default_rng([int(seed), 99])
    log = []
    for level in range(1, m + 1):
        cands = random_poses(N, pose_samples, [int(seed), level])
        prev = levels[-1]
        if level == 1:
            def fn(p, prev=prev):
                r = periodic_tri_tri(prev, p.apply(soup))
                return r, r.length, r.degenerate
        else:
            def fn(p, prev=prev):
                r = periodic_seg_tri(prev.segs, p.apply(soup))
                return r, float(r.count), r.degenerate
        pose, res, val, lg = _search(fn, cands, rng)
        log.append(lg)
        poses.append(pose)
        levels.append(res)
        measures.append(val)
    bounds = [level_bound(j) for j in range(m + 1)]
    miss = [mv > b for mv, b in zip(measures, bounds)]
    return SeparatorTower(foam, soup, poses, levels, measures, bounds, miss, log)


# -- checks ------------------------------------------------------------------


def containment_errors(t: SeparatorTower) -> list[float]:
    """Largest distance from each level's elements to the copies they must lie on."""
    out = [0.0]
    if t.m >= 1:
        S = t.levels[1]
        c0, c1 = t.copy_soup(0), t.copy_soup(1)
        worst = 0.0
        for k in range(len(S.segs)):
            for p in S.segs[k]:
                worst = max(worst, point_triangle_distance(p, c0[S.tri_a[k]]),
                            point_triangle_distance(p, c1[S.tri_b[k]] + S.z[k]))
        out.append(worst)
    if t.m >= 2:
        P = t.levels[2]
        S = t.levels[1]
        c0, c1, c2 = t.copy_soup(0), t.copy_soup(1), t.copy_soup(2)
        worst = 0.0
        for k in range(P.count):
            p, sk = P.pts[k], P.seg[k]
            worst = max(worst, point_triangle_distance(p, c2[P.tri[k]] + P.z[k]),
                        point_triangle_distance(p, c0[S.tri_a[sk]]),
                        point_triangle_distance(p, c1[S.tri_b[sk]] + S.z[sk]))
        out.append(worst)
    return out


def _translates(lo_box, hi_box, corner):
    """Integer vectors ``z`` such that a box translated by ``z`` may meet the unit cube at ``corner``."""
    zlo = np.floor(corner - hi_box).astype(int)
    zhi = np.ceil(corner + 1 - lo_box).astype(int)
    return [np.array(z) for z in np.ndindex(*(zhi - zlo + 1))], zlo


def _clip_segments(segs, lo, hi):
    """Total length of segments inside the box (parametric slab clipping)."""
    p0, d = segs[:, 0], segs[:, 1] - segs[:, 0]
    t0 = np.zeros(len(segs))
    t1 = np.ones(len(segs))
    with np.errstate(divide="ignore", invalid="ignore"):
        for ax in range(3):
            a = (lo[ax] - p0[:, ax]) / d[:, ax]
            b = (hi[ax] - p0[:, ax]) / d[:, ax]
            tmin, tmax = np.minimum(a, b), np.maximum(a, b)
            flat = d[:, ax] == 0
            inside = (p0[:, ax] >= lo[ax]) & (p0[:, ax] <= hi[ax])
            tmin = np.where(flat, np.where(inside, -np.inf, np.inf), tmin)
            tmax = np.where(flat, np.where(inside, np.inf, -np.inf), tmax)
            t0 = np.maximum(t0, tmin)
            t1 = np.minimum(t1, tmax)
    return float((np.maximum(t1 - t0, 0) * np.linalg.norm(d, axis=1)).sum())


def cell_measure(t: SeparatorTower, level: int, corner) -> float:
    """Measure of the periodic level set inside the unit cube ``[corner, corner + 1]^3``."""
    corner = np.asarray(corner, dtype=float)
    data = t.levels[level]
    if level == 0:
        X = data
    elif level == 1:
        X = data.segs
    else:
        X = data.pts[:, None, :]
    if len(X) == 0:
        return 0.0
    lo_box, hi_box = X.reshape(-1, 3).min(0), X.reshape(-1, 3).max(0)
    zs, zlo = _translates(lo_box, hi_box, corner)
    total = 0.0
    for z in zs:
        Y = X + (z + zlo)
        lo, hi = Y.min(axis=1), Y.max(axis=1)
        near = np.all((hi >= corner) & (lo <= corner + 1), axis=1)
        if not near.any():
            continue
        Y = Y[near]
        if level == 0:
            total += float(triangle_areas(clip_mesh_to_cube(TriMesh.from_soup(Y), corner, 1.0).soup).sum())
        elif level == 1:
            total += _clip_segments(Y, corner, corner + 1)
        else:
            p = Y[:, 0]
            total += float(np.all((p >= corner) & (p < corner + 1), axis=1).sum())
    return total


def cell_checks(t: SeparatorTower, cells: int = 10, seed: int = 0) -> list[dict]:
    """Per-level measure in random unit cubes, compared with the per-period measure and the bound."""
    rng = np.random.default_rng([int(seed), 5])
    out = []
    for k in range(cells):
        corner = rng.uniform(-1, 1, 3)
        for level in range(t.m + 1):
            v = cell_measure(t, level, corner)
            out.append({"cell": k, "level": level, "corner": corner, "measure": v,
                        "period_measure": t.measures[level], "bound": t.bounds[level],
                        "pass": v <= t.bounds[level]})
    return out
