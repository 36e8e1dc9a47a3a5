"""Closed test surfaces: icospheres, tori of revolution, perturbed spheres and circles."""
from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .geom.mesh import EdgeMesh, TriMesh

MAX_SUBDIVISION = 7


def _icosahedron():
    t = (1 + np.sqrt(5)) / 2
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(v, f):
    e = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = v[uniq[:, 0]] + v[uniq[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    nf = len(f)
    m01, m12, m20 = (len(v) + inv[k * nf:(k + 1) * nf] for k in range(3))
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    nfaces = np.concatenate([
        np.column_stack([a, m01, m20]), np.column_stack([b, m12, m01]),
        np.column_stack([c, m20, m12]), np.column_stack([m01, m12, m20]),
    ])
    return np.vstack([v, mid]), nfaces


def icosphere(radius: float = 1.0, subdivisions: int = 4, center=(0.0, 0.0, 0.0)) -> TriMesh:
    if radius <= 0:
        raise PreconditionError("radius must be positive")
    if not 0 <= subdivisions <= MAX_SUBDIVISION:
        raise PreconditionError(f"subdivisions must be in 0..{MAX_SUBDIVISION}")
    v, f = _icosahedron()
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
    return TriMesh(radius * v + np.asarray(center, dtype=float), f)


def torus(major: float = 2.0, minor: float = 0.5, nu: int = 64, nv: int = 32,
          center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Torus of revolution about the z axis, ``nu`` steps around, ``nv`` around the tube."""
    if not major > minor > 0:
        raise PreconditionError("torus radii must satisfy R > r > 0")
    if nu < 3 or nv < 3:
        raise PreconditionError("torus needs at least 3 steps in each direction")
    u = 2 * np.pi * np.arange(nu) / nu
    w = 2 * np.pi * np.arange(nv) / nv
    U, W = np.meshgrid(u, w, indexing="ij")
    rho = major + minor * np.cos(W)
    v = np.stack([rho * np.cos(U), rho * np.sin(U), minor * np.sin(W)], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    a = i * nv + j
    b = ((i + 1) % nu) * nv + j
    c = ((i + 1) % nu) * nv + (j + 1) % nv
    d = i * nv + (j + 1) % nv
    f = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    return TriMesh(v + np.asarray(center, dtype=float), f)


def perturbed_sphere(radius: float = 1.0, subdivisions: int = 4, amplitude: float = 0.1,
                     seed: int = 0, modes: int = 6, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Icosphere with a smooth random radial bump field; ``amplitude=0`` gives the icosphere."""
    base = icosphere(1.0, subdivisions)
    if amplitude == 0:
        return icosphere(radius, subdivisions, center)
    if not 0 <= amplitude < 1:
        raise PreconditionError("amplitude must be in [0, 1)")
    rng = np.random.default_rng(seed)
    k = rng.standard_normal((modes, 3)) * 1.5
    phase = rng.uniform(0, 2 * np.pi, modes)
    weight = rng.standard_normal(modes) / np.sqrt(modes)
    bump = np.sin(base.vertices @ k.T + phase) @ weight
    bump = bump / max(np.abs(bump).max(), 1e-12)
    r = radius * (1 + amplitude * bump)
    return TriMesh(base.vertices * r[:, None] + np.asarray(center, dtype=float), base.triangles)


def circle(radius: float = 1.0, segments: int = 64, center=(0.0, 0.0)) -> EdgeMesh:
    if radius <= 0 or segments < 3:
        raise PreconditionError("circle needs radius > 0 and at least 3 segments")
    t = 2 * np.pi * np.arange(segments) / segments
    v = radius * np.column_stack([np.cos(t), np.sin(t)]) + np.asarray(center, dtype=float)
    i = np.arange(segments)
    return EdgeMesh(v, np.column_stack([i, (i + 1) % segments]))


def generate_mesh(kind: str, seed: int = 0, **params) -> TriMesh:
    if kind == "icosphere":
        return icosphere(params.get("radius", 1.0), params.get("subdivisions", 4), params.get("center", (0, 0, 0)))
    if kind == "torus":
        return torus(params.get("major", 2.0), params.get("minor", 0.5), params.get("nu", 64),
                     params.get("nv", 32), params.get("center", (0, 0, 0)))
    if kind == "perturbed-sphere":
        return perturbed_sphere(params.get("radius", 1.0), params.get("subdivisions", 4),
                                params.get("amplitude", 0.1), seed, params.get("modes", 6),
                                params.get("center", (0, 0, 0)))
    raise PreconditionError(f"unknown mesh kind {kind!r}")
