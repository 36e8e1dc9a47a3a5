"""Translation integrals of intersection measures, averaged over signed permutations (N = 3).

For two triangles the integral over all shifts ``x`` of ``length(T1 ∩ (T2 + x))``
equals ``area1 * area2 * |n1 x n2|``; for a triangle and a segment the integral
of the intersection count is ``area * length * |n . u|``. These closed forms are
the oracles; the Monte Carlo route integrates each pair over the bounding box of
shifts for which the two pieces can meet, which is exact truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..geom.intersect import SEGMENT, COPLANAR, segment_tri_batch, tri_tri_batch
from ..geom.mesh import TriMesh, triangle_areas, unit_normals
from ..sgnperm import enumerate_group

N = 3


@dataclass
class KinematicResult:
    value: float              # group average of the shift integral
    se: float
    bound: float
    per_pose: np.ndarray      # (G,) Monte Carlo integrals
    per_pose_se: np.ndarray
    oracle: np.ndarray        # (G,) closed-form integrals
    degenerate: int

    @property
    def oracle_average(self) -> float:
        return float(self.oracle.mean()) if len(self.oracle) else 0.0

    @property
    def within_bound(self) -> bool:
        return self.value <= self.bound + 4 * self.se


def _posed(s, tris):
    return s.apply(tris)


def hypersurface_oracle(T1, T2) -> float:
    """Exact ``∫ length(T1 ∩ (T2 + x)) dx`` summed over all triangle pairs."""
    T1 = np.asarray(T1, float).reshape(-1, 3, 3)
    T2 = np.asarray(T2, float).reshape(-1, 3, 3)
    if len(T1) == 0 or len(T2) == 0:
        return 0.0
    a1, a2 = triangle_areas(T1), triangle_areas(T2)
    n1, n2 = unit_normals(T1), unit_normals(T2)
    sin = np.linalg.norm(np.cross(n1[:, None, :], n2[None, :, :]), axis=-1)
    return float(a1 @ sin @ a2)


def count_oracle(T, S) -> float:
    """Exact ``∫ #(T ∩ (S + x)) dx`` summed over triangle/segment pairs."""
    T = np.asarray(T, float).reshape(-1, 3, 3)
    S = np.asarray(S, float).reshape(-1, 2, 3)
    if len(T) == 0 or len(S) == 0:
        return 0.0
    a = triangle_areas(T)
    n = unit_normals(T)
    d = S[:, 1] - S[:, 0]
    length = np.linalg.norm(d, axis=1)
    u = d / np.where(length > 0, length, 1.0)[:, None]
    return float(a @ np.abs(n @ u.T) @ length)


def _box(lo_a, hi_a, lo_b, hi_b):
    lo = lo_a - hi_b
    hi = hi_a - lo_b
    return lo, hi, float(np.prod(hi - lo))


def mc_pair_surface(T1, T2, samples: int, rng: np.random.Generator):
    """Monte Carlo ``∫ length(T1 ∩ (T2 + x)) dx`` for one pair; returns (value, se, degenerate)."""
    lo, hi, vol = _box(T1.min(0), T1.max(0), T2.min(0), T2.max(0))
    x = lo + (hi - lo) * rng.random((samples, 3))
    A = np.broadcast_to(T1, (samples, 3, 3))
    kind, p, q = tri_tri_batch(A, T2[None] + x[:, None, :])
    length = np.where(kind == SEGMENT, np.linalg.norm(np.nan_to_num(q - p), axis=1), 0.0)
    return vol * length.mean(), vol * length.std(ddof=1) / math.sqrt(samples), int((kind == COPLANAR).sum())


def mc_pair_count(T, S, samples: int, rng: np.random.Generator):
    lo, hi, vol = _box(T.min(0), T.max(0), S.min(0), S.max(0))
    x = lo + (hi - lo) * rng.random((samples, 3))
    hit, _, _, deg = segment_tri_batch(S[0] + x, S[1] + x, np.broadcast_to(T, (samples, 3, 3)))
    h = hit.astype(float)
    return vol * h.mean(), vol * h.std(ddof=1) / math.sqrt(samples), int(deg.sum())


def _check_ambient(*ms):
    for m in ms:
        if m.shape[-1] != N:
            raise PreconditionError("kinematic checks are implemented for N = 3")


def _pose_loop(A, B, pair_fn, oracle_fn, shift_samples, seed):
    group = list(enumerate_group(N))
    g = len(group)
    vals, ses, orc = np.zeros(g), np.zeros(g), np.zeros(g)
    degenerate = 0
    for k, s in enumerate(group):
        Bs = s.apply(B)
        orc[k] = oracle_fn(A, Bs)
        rng = np.random.default_rng([int(seed), k])
        var = 0.0
        for a in A:
            for b in Bs:
                v, e, d = pair_fn(a, b, shift_samples, rng)
                vals[k] += v
                var += e * e
                degenerate += d
        ses[k] = math.sqrt(var)
    return vals, ses, orc, degenerate


def kinematic_hypersurface_avg(M: TriMesh, P: TriMesh, shift_samples: int = 2000, seed: int = 0) -> KinematicResult:
    """Group average of ``∫ length(M ∩ (sP + x)) dx`` against ``sqrt(2/3) area(M) area(P)``."""
    A, B = M.soup, P.soup
    _check_ambient(M.vertices, P.vertices)
    bound = math.sqrt(2 / 3) * float(triangle_areas(A).sum()) * float(triangle_areas(B).sum())
    if len(A) == 0 or len(B) == 0:
        z = np.zeros(0)
        return KinematicResult(0.0, 0.0, bound, z, z, z, 0)
    vals, ses, orc, deg = _pose_loop(A, B, mc_pair_surface, hypersurface_oracle, shift_samples, seed)
    g = len(vals)
    return KinematicResult(float(vals.mean()), float(np.sqrt((ses ** 2).sum()) / g), bound, vals, ses, orc, deg)


def kinematic_count_avg(M: TriMesh, segments, shift_samples: int = 2000, seed: int = 0) -> KinematicResult:
    """Group average of ``∫ #(M ∩ (sP + x)) dx`` against ``area(M) length(P) / sqrt(3)``."""
    _check_ambient(M.vertices, np.asarray(segments, dtype=float))
    A = M.soup
    S = np.asarray(segments, dtype=float).reshape(-1, 2, 3)
    length = float(np.linalg.norm(S[:, 1] - S[:, 0], axis=1).sum()) if len(S) else 0.0
    bound = float(triangle_areas(A).sum()) * length / math.sqrt(3)
    if len(A) == 0 or length == 0:
        z = np.zeros(0)
        return KinematicResult(0.0, 0.0, bound, z, z, z, 0)
    vals, ses, orc, deg = _pose_loop(A, S, mc_pair_count, count_oracle, shift_samples, seed)
    g = len(vals)
    return KinematicResult(float(vals.mean()), float(np.sqrt((ses ** 2).sum()) / g), bound, vals, ses, orc, deg)


def exact_normal_average(n1, n2) -> float:
    """Average of ``|n1 x s n2|`` over the 48 signed permutations of R^3."""
    group = enumerate_group(N)
    perms, signs = group.arrays
    n2 = np.asarray(n2, dtype=float)
    imgs = (n2[perms][:, None, :] * signs[None, :, :]).reshape(-1, 3)
    return float(np.linalg.norm(np.cross(np.asarray(n1, float), imgs), axis=1).mean())
