"""Periodic foams from level sets of the first Dirichlet eigenfunction of the cube.

The field is ``f(x) = prod_i sin(pi x_i)`` on the torus ``[0,1)^N``. Its superlevel
set ``{f > lam}`` is a rounded cube (a "blob") sitting inside the unit cell. The
union process drops randomly shifted blobs onto the torus; every cell of the
voxel grid remembers the first blob that covered it, and the foam is the set of
facets between cells with different owners.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, SeparationFailure
from .geom.grid import Components, TorusGrid, grid_components
from .geom.mesh import TriMesh
from .geom.montecarlo import Estimate, ScalarField, level_set_area_mc, mc_volume

MAX_SWEEP_N = 6
MAX_UNION_N = 4
CALIBRATION_SAMPLES = 200_000


def _eig_value(x):
    return np.prod(np.sin(np.pi * np.asarray(x, dtype=float)), axis=-1)


def _eig_gradient(x):
    x = np.asarray(x, dtype=float)
    s = np.sin(np.pi * x)
    c = np.cos(np.pi * x)
    n = x.shape[-1]
    g = np.empty_like(x)
    for i in range(n):
        others = np.prod(np.delete(s, i, axis=-1), axis=-1) if n > 1 else 1.0
        g[..., i] = np.pi * c[..., i] * others
    return g


def eigenfield(n: int) -> ScalarField:
    """``f = prod sin(pi x_i)`` with ``-Laplacian f = N pi^2 f``."""
    if n < 1:
        raise PreconditionError("N must be at least 1")
    return ScalarField(n, _eig_value, _eig_gradient, 0.0, 1.0,
                       laplacian=lambda x: -n * np.pi ** 2 * _eig_value(x))


def field_checks(f: ScalarField, points: int = 1000, seed: int = 0, step: float = 1e-5) -> dict:
    """Max relative errors of the analytic gradient and Laplacian against central differences."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.05, 0.95, (points, f.dim))
    g = f.gradient(x)
    fd = np.empty_like(g)
    lap = np.zeros(points)
    f0 = f.value(x)
    hl = 1e-3
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = step
        fd[:, i] = (f.value(x + e) - f.value(x - e)) / (2 * step)
        e[i] = hl
        # fourth-order stencil keeps the truncation error near 1e-10
        lap += (-f.value(x + 2 * e) + 16 * f.value(x + e) - 30 * f0
                + 16 * f.value(x - e) - f.value(x - 2 * e)) / (12 * hl * hl)
    gscale = np.maximum(np.linalg.norm(g, axis=1), 1e-300)
    out = {"gradient_rel_err": float(np.max(np.linalg.norm(g - fd, axis=1) / gscale))}
    if f.laplacian is not None:
        exact = f.laplacian(x)
        out["laplacian_rel_err"] = float(np.max(np.abs(lap - exact) / np.maximum(np.abs(exact), 1e-300)))
        out["eigen_rel_err"] = float(np.max(np.abs(-lap - f.dim * np.pi ** 2 * f0)
                                            / np.maximum(f.dim * np.pi ** 2 * np.abs(f0), 1e-300)))
    return out


# -- ratio sweep -----------------------------------------------------------


def default_lambda_grid(points: int = 64) -> np.ndarray:
    return np.geomspace(1e-3, 0.99, points)


def _ratio(a: Estimate, v: float, v_se: float) -> tuple[float, float]:
    if v <= 0 or a.value <= 0:
        return math.inf, math.inf
    r = a.value / v
    return r, r * math.hypot(a.se / a.value, v_se / v)


@dataclass(frozen=True)
class RatioPoint:
    lam: float
    area: Estimate
    volume: Estimate
    ratio: float               # area / vol(Omega)
    ratio_se: float
    alt_ratio: float           # area / min(vol, 1 - vol)
    alt_ratio_se: float
    blob_ratio: float          # area / (1 - vol)
    blob_ratio_se: float
    degenerate: bool


@dataclass
class RatioCurve:
    n: int
    points: list[RatioPoint]
    band: float

    def __post_init__(self):
        lams = [p.lam for p in self.points]
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("lambda grid must be strictly increasing")

    def _argmin(self, key, admissible) -> RatioPoint | None:
        cands = [p for p in self.points if admissible(p) and not p.degenerate and math.isfinite(key(p))]
        return min(cands, key=key) if cands else None

    def minimum(self) -> RatioPoint | None:
        """Minimizer of ``area / vol(Omega)`` over grid points with ``vol(Omega) <= 1/2``."""
        return self._argmin(lambda p: p.ratio, lambda p: p.volume.value <= 0.5)

    def minimum_unrestricted(self) -> RatioPoint | None:
        return self._argmin(lambda p: p.ratio, lambda p: True)

    def minimum_alt(self) -> RatioPoint | None:
        return self._argmin(lambda p: p.alt_ratio, lambda p: True)

    @property
    def bound(self) -> float:
        return 2 * math.pi * math.sqrt(self.n)


def ratio_sweep(n: int, lambda_grid=None, samples: int = 200_000, seed: int = 0,
                band: float | None = None) -> RatioCurve:
    """Estimate level-set area, sublevel volume and their ratios on a grid of levels."""
    if not 1 <= n <= MAX_SWEEP_N:
        raise PreconditionError(f"ratio sweep supports 1 <= N <= {MAX_SWEEP_N}")
    lams = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    if np.any(lams <= 0) or np.any(lams > 1):
        raise PreconditionError("levels must lie in (0, 1]")
    f = eigenfield(n)
    band = 0.02 if band is None else band
    pts = []
    for k, lam in enumerate(lams):
        lam = float(lam)
        area = level_set_area_mc(f, lam, band, samples, (seed, k, 0))
        vol = mc_volume(lambda x, lam=lam: f.value(x) <= lam, samples, (seed, k, 1), dim=n)
        r, rse = _ratio(area, vol.value, vol.se)
        small = min(vol.value, 1 - vol.value)
        ar, arse = _ratio(area, small, vol.se)
        br, brse = _ratio(area, 1 - vol.value, vol.se)
        degenerate = lam - band / 2 <= 0 or lam + band / 2 >= 1 or bool(area.flags)
        pts.append(RatioPoint(lam, area, vol, r, rse, ar, arse, br, brse, degenerate))
    return RatioCurve(n, pts, band)


def sweep_minimizer(n: int, samples: int = 200_000, seed: int = 0) -> float:
    p = ratio_sweep(n, samples=samples, seed=seed).minimum()
    if p is None:
        raise PreconditionError("no admissible level in the sweep")
    return p.lam


def foam_vs_lattice(n: int) -> dict:
    """Per-cell boundary of the foam bound against the closed cube boundary ``2N``."""
    foam = 2 * math.pi * math.sqrt(n)
    return {"n": n, "foam_bound": foam, "lattice": 2.0 * n, "foam_smaller": foam < 2 * n,
            "crossover": math.pi ** 2}


# -- union process ---------------------------------------------------------


def blob_mask(n: int, resolution: int, lam: float, shift) -> np.ndarray:
    """Cells whose centre satisfies ``f(c - v mod 1) > lam``."""
    c = (np.arange(resolution) + 0.5) / resolution
    out = None
    for i in range(n):
        s = np.abs(np.sin(np.pi * (c - shift[i])))
        out = s if out is None else np.multiply.outer(out, s)
    return np.asarray(out) > lam


def boundary_facets(owner: np.ndarray) -> tuple[int, np.ndarray]:
    """Count faces between cells with different owners; mark the cells they touch."""
    total = 0
    touched = np.zeros(owner.shape, dtype=bool)
    for ax in range(owner.ndim):
        diff = owner != np.roll(owner, -1, axis=ax)
        total += int(diff.sum())
        touched |= diff | np.roll(diff, 1, axis=ax)
    return total, touched


def facet_correction(n: int, lam: float, resolution: int, samples: int = CALIBRATION_SAMPLES,
                     seed: int = 0) -> dict:
    """Ratio of the coarea area of one blob boundary to its rasterized facet area."""
    owner = np.where(blob_mask(n, resolution, lam, np.zeros(n)), 0, -1)
    facets, _ = boundary_facets(owner)
    raster_area = facets * resolution ** -(n - 1)
    mc = level_set_area_mc(eigenfield(n), lam, None, samples, (seed, 7))
    corr = mc.value / raster_area if raster_area > 0 else 1.0
    return {"correction": corr, "mc_area": mc.value, "mc_se": mc.se, "raster_area": raster_area}


@dataclass
class FoamState:
    n: int
    lam: float
    resolution: int
    seed: int
    owner: np.ndarray
    shifts: list
    separator: TorusGrid           # cells touching a foam facet, before dilation
    dilated: TorusGrid
    components: Components
    facets: int
    correction: float
    history: list = field(default_factory=list)    # facet counts after each step

    @property
    def grid(self) -> TorusGrid:
        return self.separator

    @property
    def steps(self) -> int:
        return len(self.shifts)

    @property
    def boundary_measure(self) -> float:
        return self.facets * self.resolution ** -(self.n - 1) * self.correction

    @property
    def raw_measure(self) -> float:
        return self.facets * self.resolution ** -(self.n - 1)

    @property
    def separated(self) -> bool:
        return self.components.separated()

    def owner_grid(self) -> TorusGrid:
        return TorusGrid(self.n, self.resolution, self.owner)


def _analyse(owner, n, resolution):
    facets, touched = boundary_facets(owner)
    sep = TorusGrid(n, resolution, touched)
    dil = sep.dilated(1)
    return facets, sep, dil, grid_components(dil)


def union_process(n: int, lam: float, resolution: int, max_steps: int | None = None,
                  seed: int = 0, correction: float | None = None) -> FoamState:
    """Random-shift union of blobs until the foam separates the torus.

    The first blob is unshifted; later shifts are uniform on the torus. Raises
    :class:`SeparationFailure` carrying the partial state after ``max_steps``.
    """
    if not 1 <= n <= MAX_UNION_N:
        raise PreconditionError(f"union process supports 1 <= N <= {MAX_UNION_N}")
    if not 0 < lam <= 1:
        raise PreconditionError("lambda must lie in (0, 1]")
    if max_steps is None:
        max_steps = 64 * n
    if correction is None:
        correction = facet_correction(n, lam, resolution)["correction"]
    rng = np.random.default_rng(seed)
    owner = np.full((resolution,) * n, -1, dtype=np.int32)
    shifts, history = [], []
    state = None
    for i in range(max_steps):
        v = np.zeros(n) if i == 0 else rng.random(n)
        claim = (owner < 0) & blob_mask(n, resolution, lam, v)
        owner[claim] = i
        shifts.append(v)
        facets, sep, dil, comps = _analyse(owner, n, resolution)
        history.append(facets)
        state = FoamState(n, lam, resolution, seed, owner.copy(), list(shifts), sep, dil, comps,
                          facets, correction, list(history))
        if facets > 0 and comps.count > 0 and comps.separated():
            return state
    raise SeparationFailure(f"no separation after {max_steps} steps (lambda={lam!r})", state)


def state_from_owner(owner, lam: float, shifts, seed: int = 0, correction: float = 1.0) -> FoamState:
    """Rebuild a state from a stored owner grid."""
    owner = np.asarray(owner, dtype=np.int32)
    n, resolution = owner.ndim, owner.shape[0]
    facets, sep, dil, comps = _analyse(owner, n, resolution)
    return FoamState(n, lam, resolution, seed, owner, [np.asarray(s, float) for s in shifts],
                     sep, dil, comps, facets, correction, [facets])


# -- cubic lattice reference -----------------------------------------------


@dataclass(frozen=True)
class CubicSeparator:
    grid: TorusGrid
    formula: float
    measured: float


def cubic_separator_formula(n: int, m: int, w: float) -> float:
    return 2 ** (m + 1) * math.comb(n, m + 1) * w ** (n - m - 1)


def cubic_separator(n: int, m: int, w: float = 1.0, resolution: int = 32) -> CubicSeparator:
    """Rasterized union of the ``(N-m-1)``-planes of the lattice ``w Z^N``.

    ``measured`` recovers the per-cube closed count from the raster: every
    ``(N-m-1)``-plane is a slab one cell thick in ``m+1`` directions.
    """
    if not 0 <= m <= n - 1:
        raise PreconditionError("need 0 <= m <= N-1")
    period = w * resolution
    if abs(period - round(period)) > 1e-9 or round(period) < 1:
        raise PreconditionError("w * resolution must be a positive integer")
    period = int(round(period))
    on = (np.arange(resolution) % period) == 0
    axes_on = np.stack(np.meshgrid(*([on] * n), indexing="ij"), axis=0).sum(axis=0)
    cells = axes_on >= m + 1
    h = 1.0 / resolution
    measure = 0.0
    for sub in itertools.combinations(range(n), m + 1):
        mask = np.ones((resolution,) * n, dtype=bool)
        for a in sub:
            shape = [1] * n
            shape[a] = resolution
            mask &= on.reshape(shape)
        measure += mask.sum() * h ** n / h ** (m + 1)
    measured = measure * w ** n * 2 ** (m + 1)
    return CubicSeparator(TorusGrid(n, resolution, cells), cubic_separator_formula(n, m, w), measured)


# -- surface extraction ----------------------------------------------------


def blob_surface(lam: float, resolution: int = 48) -> TriMesh:
    """Marching-cubes surface of ``{f = lam}`` in the unit cube (N = 3)."""
    from skimage.measure import marching_cubes

    c = np.linspace(0.0, 1.0, resolution + 1)
    s = np.sin(np.pi * c)
    s[0] = s[-1] = 0.0
    vol = np.multiply.outer(np.multiply.outer(s, s), s)
    verts, faces, _, _ = marching_cubes(vol, level=lam, spacing=(c[1],) * 3)
    return TriMesh(verts, faces)


def _inside_blob(points, lam, shift):
    y = np.mod(np.asarray(points) - shift, 1.0)
    return _eig_value(y) > lam


def foam_mesh(state: FoamState, resolution: int = 48) -> TriMesh:
    """Periodic triangle soup of the foam in lifted coordinates.

    Blob ``i`` contributes its boundary translated by ``v_i``, minus triangles
    whose centroid lies inside an earlier blob.
    """
    if state.n != 3:
        raise PreconditionError("foam meshes are built for N = 3")
    base = blob_surface(state.lam, resolution)
    parts = []
    for i, v in enumerate(state.shifts):
        tris = base.soup + v
        cen = tris.mean(axis=1)
        keep = np.ones(len(tris), dtype=bool)
        for j in range(i):
            keep &= ~_inside_blob(cen, state.lam, state.shifts[j])
        parts.append(tris[keep])
    return TriMesh.from_soup(np.concatenate(parts)) if parts else TriMesh.empty(3)
