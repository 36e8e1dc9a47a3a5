"""Width certificates for surfaces in R^3 from posed foam copies.

Two routes. The separator route poses the surface against the curve set
``SEP_1`` of a tower until the two are disjoint, then maps through the nerve of
the tower's two copies. The slicing route cuts the surface with one posed copy
(giving curves), then with another (giving points) until no point is left, and
maps through the nerve of those two copies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..certificate import WidthCertificate
from ..errors import PreconditionError, SearchExhausted
from ..geom.mesh import TriMesh, mesh_area, sample_surface
from .nerve import FoamCover, NerveMap
from .pose import Pose, random_poses
from .tower import SeparatorTower, periodic_seg_tri, periodic_tri_tri

N = 3
SURFACE_DIM = 2


def scaled_hypothesis(area: float, n: int = SURFACE_DIM) -> float:
    """``(2 pi)^n sqrt(n!) vol``; the pipeline needs this below 1."""
    return (2 * math.pi) ** n * math.sqrt(math.factorial(n)) * area


@dataclass
class RouteLog:
    route: str
    masses: list = field(default_factory=list)      # measured intersection mass per candidate
    success_at: int | None = None
    uncovered: int = 0

    @property
    def mean_mass(self) -> float:
        return float(np.mean(self.masses)) if self.masses else 0.0

    @property
    def mass_se(self) -> float:
        if len(self.masses) < 2:
            return math.inf
        return float(np.std(self.masses, ddof=1) / math.sqrt(len(self.masses)))


def _samples(m: TriMesh, count: int, seed) -> np.ndarray:
    rng = np.random.default_rng([int(seed), 3])
    return np.vstack([m.vertices[np.unique(m.triangles)], sample_surface(m, count, rng)])


def separator_route(M: TriMesh, tower: SeparatorTower, budget: int = 256, seed: int = 0,
                    samples: int = 2000, cover: FoamCover | None = None):
    """Search ``g`` with ``g^{-1}(M)`` disjoint from ``SEP_1``; map through the two-copy nerve."""
    if tower.m < 1:
        raise PreconditionError("separator route needs a tower of height >= 1")
    cover = cover or FoamCover.build(tower.foam)
    seg = tower.levels[1].segs
    pts = _samples(M, samples, seed)
    log = RouteLog("separator")
    for k, g in enumerate(random_poses(N, budget, [int(seed), 11])):
        ginv = g.inverse()
        hits = periodic_seg_tri(seg, ginv.apply(M.soup))
        log.masses.append(hits.count)
        if hits.count or hits.degenerate:
            continue
        nm = NerveMap(tower.foam, [g.compose(p) for p in tower.poses[:2]], cover=cover)
        if np.any(nm.coverage(pts) == 0):
            log.uncovered += 1
            continue
        res = nm(pts)
        log.success_at = k
        return res, g, log
    return None, None, log


def slicing_route(M: TriMesh, tower: SeparatorTower, budget: int = 256, seed: int = 0,
                  samples: int = 2000, cover: FoamCover | None = None):
    """Greedy curve slice with one copy, then a copy that leaves no points."""
    cover = cover or FoamCover.build(tower.foam)
    base = tower.base
    pts = _samples(M, samples, seed)
    log = RouteLog("slicing")
    best, best_len = None, math.inf
    for p in random_poses(N, budget, [int(seed), 21]):
        c = periodic_tri_tri(M.soup, p.apply(base))
        if c.degenerate == 0 and c.length < best_len:
            best, best_len = (p, c), c.length
    if best is None:
        return None, None, log
    p1, curves = best
    for k, p2 in enumerate(random_poses(N, budget, [int(seed), 22])):
        hits = periodic_seg_tri(curves.segs, p2.apply(base))
        log.masses.append(hits.count)
        if hits.count or hits.degenerate:
            continue
        nm = NerveMap(tower.foam, [p1, p2], cover=cover)
        if np.any(nm.coverage(pts) == 0):
            log.uncovered += 1
            continue
        log.success_at = k
        return nm(pts), (p1, p2), log
    return None, None, log


def width_pipeline_highcodim(M: TriMesh, tower: SeparatorTower, seed: int = 0, budget: int = 256,
                             samples: int = 2000, routes=("separator", "slicing")):
    """Certificate that ``M`` maps to a 1-complex moving points by less than 1 in l-infinity.

    Returns ``(certificate, logs)``; raises :class:`SearchExhausted` when no
    route succeeds within the pose budget.
    """
    if len(M) == 0:
        return WidthCertificate.trivial(N, 1.0), {}
    area = mesh_area(M)
    h = scaled_hypothesis(area)
    if h >= 1:
        raise PreconditionError(f"(2 pi)^2 sqrt(2) area = {h!r} is not below 1")
    cover = FoamCover.build(tower.foam)
    logs, cert = {}, None
    for name in routes:
        fn = separator_route if name == "separator" else slicing_route
        res, pose, log = fn(M, tower, budget, seed, samples, cover)
        logs[name] = log
        if res is not None and cert is None:
            pts = _samples(M, samples, seed)
            cert = WidthCertificate(res.complex, 1, pts, res.images, 1.0, 1.0, name,
                                    {"hypothesis": h, "area": area, "attempts": log.success_at + 1})
    if cert is None:
        raise SearchExhausted("no route produced a certificate within the pose budget", report=logs)
    return cert, logs
