"""Shifts of the three coordinate axes that miss a small surface in the unit cube."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError, SearchExhausted
from ..geom.intersect import count_segment_hits
from ..geom.mesh import TriMesh, mesh_area

AREA_LIMIT = 1 / math.sqrt(3)
_MARGIN = 0.1


@dataclass(frozen=True)
class AvoidResult:
    t: np.ndarray
    draws: int
    bad_draws: int
    hits: int

    @property
    def bad_fraction(self) -> float:
        return self.bad_draws / max(self.draws, 1)


def axis_lines(t, lo=-_MARGIN, hi=1 + _MARGIN) -> tuple[np.ndarray, np.ndarray]:
    """The three axis-parallel segments through ``t`` spanning ``[lo, hi]``."""
    t = np.asarray(t, dtype=float)
    P0 = np.repeat(t[None], 3, axis=0)
    P1 = P0.copy()
    for d in range(3):
        P0[d, d] = lo
        P1[d, d] = hi
    return P0, P1


def axis_hits(m: TriMesh, ts) -> tuple[np.ndarray, np.ndarray]:
    """Total hits of the three axis lines through each ``t`` and a degeneracy flag."""
    ts = np.atleast_2d(np.asarray(ts, dtype=float))
    P0 = np.repeat(ts, 3, axis=0)
    P1 = P0.copy()
    d = np.tile(np.arange(3), len(ts))
    P0[np.arange(len(P0)), d] = -_MARGIN
    P1[np.arange(len(P1)), d] = 1 + _MARGIN
    counts, deg = count_segment_hits(P0, P1, m)
    return counts.reshape(-1, 3).sum(axis=1), deg.reshape(-1, 3).any(axis=1)


def expected_axis_hits(m: TriMesh) -> float:
    """Closed-form average over ``t`` of the hit count: ``sum_d ∫ |n_d| dA``."""
    from ..geom.mesh import triangle_areas, unit_normals
    T = m.soup
    if len(T) == 0:
        return 0.0
    return float(triangle_areas(T) @ np.abs(unit_normals(T)).sum(axis=1))


def coordinate_subspace_avoid(m: TriMesh, seed: int = 0, max_draws: int = 10_000,
                              batch: int = 64) -> AvoidResult:
    """First seeded ``t`` in ``[0,1]^3`` whose axis lines have zero hits with ``m``."""
    if len(m) and m.dim != 3:
        raise PreconditionError("axis avoidance is implemented for N = 3")
    area = mesh_area(m) if len(m) else 0.0
    if area >= AREA_LIMIT:
        raise PreconditionError(f"area {area!r} is not below 1/sqrt(3)")
    box = m.bbox()
    if box is not None and (np.any(box[0] < 0) or np.any(box[1] > 1)):
        raise PreconditionError("surface must lie in the unit cube")
    rng = np.random.default_rng(seed)
    draws = bad = 0
    while draws < max_draws:
        k = min(batch, max_draws - draws)
        ts = rng.random((k, 3))
        if len(m) == 0:
            return AvoidResult(ts[0], draws + 1, 0, 0)
        hits, deg = axis_hits(m, ts)
        for i in range(k):
            draws += 1
            if not deg[i] and hits[i] == 0:
                return AvoidResult(ts[i], draws, bad, 0)
            bad += 1
    raise SearchExhausted(f"no avoiding shift in {max_draws} draws",
                          report={"draws": draws, "bad_fraction": bad / max(draws, 1),
                                  "expected_hits": expected_axis_hits(m)})
