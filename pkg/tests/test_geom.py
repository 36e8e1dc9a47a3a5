import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linfwidth import meshgen
from linfwidth.geom import clip, intersect, montecarlo, raster
from linfwidth.geom.grid import TorusGrid, grid_components
from linfwidth.geom.mesh import DegenerateTriangleWarning, TriMesh, is_closed, mesh_area, weld


def unit_square():
    return TriMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]])


# -- mesh ------------------------------------------------------------------


def test_mesh_area_examples():
    assert mesh_area(unit_square()) == pytest.approx(1.0, abs=1e-15)
    assert mesh_area(TriMesh.empty()) == 0.0
    m = meshgen.icosphere(2.0, 4)
    assert abs(mesh_area(m) - 4 * np.pi * 4) / (16 * np.pi) < 0.01
    assert is_closed(m)


def test_degenerate_triangle_warns():
    m = TriMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.warns(DegenerateTriangleWarning):
        assert mesh_area(m) == 0.0


def test_index_out_of_range():
    with pytest.raises(ValueError):
        TriMesh([[0, 0, 0]], [[0, 1, 2]])


def test_generators():
    t = meshgen.torus(2.0, 0.5, 64, 32)
    assert abs(mesh_area(t) - 4 * np.pi ** 2) / (4 * np.pi ** 2) < 0.01
    assert is_closed(t)
    a = meshgen.perturbed_sphere(1.0, 3, 0.0, seed=4)
    b = meshgen.icosphere(1.0, 3)
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)
    p1 = meshgen.perturbed_sphere(1.0, 3, 0.2, seed=4)
    p2 = meshgen.perturbed_sphere(1.0, 3, 0.2, seed=4)
    assert np.array_equal(p1.vertices, p2.vertices) and is_closed(p1)
    with pytest.raises(ValueError):
        meshgen.torus(1.0, 2.0)
    with pytest.raises(ValueError):
        meshgen.icosphere(1.0, 8)


# -- triangle/triangle -----------------------------------------------------


def test_tri_tri_parallel_planes():
    t = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    assert intersect.tri_tri_intersection(t, t + [0, 0, 0.5]).kind == "empty"


def test_tri_tri_perpendicular_crossing():
    t1 = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    # vertical triangle in the plane y = 0.25 spanning x in [0.1, 0.5]
    t2 = np.array([[0.1, 0.25, -1], [0.5, 0.25, -1], [0.3, 0.25, 1.0]])
    r = intersect.tri_tri_intersection(t1, t2)
    assert r.kind == "segment"
    # at z=0 t2 spans x in [0.2, 0.4]; t1 at y=0.25 spans x in [0, 0.75]
    ends = sorted([tuple(np.round(p, 12)) for p in r.segment])
    assert ends == [(0.2, 0.25, 0.0), (0.4, 0.25, 0.0)]
    assert r.length == pytest.approx(0.2, abs=1e-12)


def test_tri_tri_shared_vertex():
    t1 = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    t2 = np.array([[0, 0, 0], [-1, 0, 1], [-1, 0, -1.0]])
    r = intersect.tri_tri_intersection(t1, t2)
    assert r.kind == "empty" or r.length <= 1e-12


def test_tri_tri_coplanar():
    t = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    assert intersect.tri_tri_intersection(t, t + [0.2, 0.2, 0]).kind == "coplanar"
    assert intersect.tri_tri_intersection(t, t + [2, 0, 0]).kind == "empty"


def test_tri_tri_against_sampling_oracle():
    """Segment endpoints lie on both triangles; lengths agree with a dense line scan."""
    rng = np.random.default_rng(0)
    A = rng.random((200, 3, 3))
    B = rng.random((200, 3, 3))
    kind, p, q = intersect.tri_tri_batch(A, B)
    for k in np.flatnonzero(kind == intersect.SEGMENT):
        for pt in (p[k], q[k]):
            for T in (A[k], B[k]):
                assert intersect.point_triangle_distance(pt, T) < 1e-9
    # non-hits: no point of A's edges pierces B and vice versa
    for k in np.flatnonzero(kind == intersect.EMPTY)[:50]:
        for T1, T2 in ((A[k], B[k]), (B[k], A[k])):
            P0 = T1[[0, 1, 2]]
            P1 = T1[[1, 2, 0]]
            hit, *_ = intersect.segment_tri_batch(P0, P1, np.repeat(T2[None], 3, 0))
            assert not hit.any()


# -- segment hits ----------------------------------------------------------


def test_segment_mesh_hits():
    m = meshgen.icosphere(1.0, 3)
    far = intersect.segment_mesh_hits(([5, 5, 5], [6, 6, 6]), m)
    assert far.count == 0
    d = np.array([0.3, 0.5, 0.8])
    d /= np.linalg.norm(d)
    r = intersect.segment_mesh_hits((-2 * d, 2 * d), m)
    assert r.count == 2 and not r.degenerate
    assert np.all(np.diff(r.params) > 0)
    v = m.vertices[0]
    u = np.cross(v, [1.0, 0.0, 0.0])
    tangent = intersect.segment_mesh_hits((v - 0.5 * u, v + 0.5 * u), m)
    assert tangent.degenerate


def test_segment_hit_parity_closed_mesh():
    m = meshgen.icosphere(1.0, 2)
    rng = np.random.default_rng(3)
    P0 = rng.normal(size=(1000, 3))
    P0 = 1.5 * P0 / np.linalg.norm(P0, axis=1, keepdims=True)
    P1 = rng.normal(size=(1000, 3))
    P1 = 1.5 * P1 / np.linalg.norm(P1, axis=1, keepdims=True)
    counts, deg = intersect.count_segment_hits(P0, P1, m)
    ok = ~deg
    assert ok.sum() > 990
    assert np.all(counts[ok] % 2 == 0)


def test_periodic_candidate_pairs_brute_force():
    rng = np.random.default_rng(1)
    a = rng.random((300, 3)) * 2 - 0.5
    b = rng.random((200, 3))
    ea, eb = 0.07, 0.05
    ia, ib, z = intersect.candidate_pairs(a, a + ea, b, b + eb, period=1.0)
    got = {(int(i), int(j), tuple(int(c) for c in zz)) for i, j, zz in zip(ia, ib, z)}
    want = set()
    for zz in np.ndindex(5, 5, 5):
        s = np.array(zz) - 2
        lo, hi = b + s, b + s + eb
        ov = np.all((a[:, None] <= hi[None]) & (lo[None] <= a[:, None] + ea), axis=2)
        want.update((int(i), int(j), tuple(int(c) for c in s)) for i, j in np.argwhere(ov))
    assert got == want


# -- clipping --------------------------------------------------------------


def test_clip_inside_outside():
    m = meshgen.icosphere(0.2, 3, center=(0.5, 0.5, 0.5))
    c = clip.clip_mesh_to_cube(m, (0, 0, 0), 1.0)
    assert mesh_area(c) == pytest.approx(mesh_area(m), rel=1e-12)
    assert len(clip.clip_mesh_to_cube(m, (5, 5, 5), 1.0)) == 0


def test_clip_octant():
    m = meshgen.icosphere(1.0, 5)
    c = clip.clip_mesh_to_cube(m, (0, 0, 0), 1.0)
    assert abs(mesh_area(c) - np.pi / 2) / (np.pi / 2) < 0.01


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_partition_additivity(seed):
    rng = np.random.default_rng(seed)
    m = meshgen.perturbed_sphere(1.3, 3, 0.2, seed=seed)
    offset = rng.uniform(0, 1, 3) + rng.uniform(-1e-6, 1e-6, 3)
    parts = clip.partition_by_lattice(m, 0.7, offset)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTriangleWarning)
        total = sum(mesh_area(p) for p in parts.values())
    assert abs(total - mesh_area(m)) <= 1e-9 * mesh_area(m)


def test_split_keeps_closedness():
    m = meshgen.icosphere(1.0, 3)
    s = clip.split_by_plane(m, 0, 0.123)
    assert is_closed(weld(s))
    assert mesh_area(s) == pytest.approx(mesh_area(m), rel=1e-12)


# -- voxelization ----------------------------------------------------------


def test_voxelize_plane_and_sphere():
    # a triangle on z = 0.5 exactly between layers hits two layers; off-grid only one
    tri = np.array([[[-1, -1, 0.51], [3, -1, 0.51], [-1, 3, 0.51]]])
    g = raster.voxelize_triangles(tri, (0, 0, 0), 1.0, 10)
    assert g.sum() == 100 and g[:, :, 5].all()
    m = meshgen.icosphere(0.3, 3, center=(0.5, 0.5, 0.5))
    g = raster.voxelize_triangles(m.soup, (0, 0, 0), 1.0, 32)
    from scipy import ndimage
    _, n = ndimage.label(~g)
    assert n == 2


def test_voxelize_segments():
    s = np.array([[[0.05, 0.05], [0.95, 0.95]]])
    g = raster.voxelize_segments(s, (0, 0), 1.0, 10)
    assert np.all(np.diag(g))


# -- grids -----------------------------------------------------------------


def test_grid_components_trivial():
    g = TorusGrid.zeros(3, 8)
    c = grid_components(g)
    assert c.count == 1 and c.winding.all() and not c.separated()
    full = TorusGrid(2, 8, np.ones((8, 8), dtype=bool))
    assert grid_components(full).count == 0


def lattice_lines(R, w_cells):
    cells = np.zeros((R, R), dtype=bool)
    cells[::w_cells, :] = True
    cells[:, ::w_cells] = True
    return TorusGrid(2, R, cells)


def test_grid_components_lattice():
    R = 64
    c = grid_components(lattice_lines(R, 16))
    assert c.count == 16
    assert not c.winding.any()
    assert np.all(c.max_extent == 15)
    assert c.separated()


def test_grid_winding_stripe_and_seam_crossing():
    R = 16
    cells = np.zeros((R, R), dtype=bool)
    cells[:, 3] = True       # a vertical wall: free set winds along axis 0 only
    c = grid_components(TorusGrid(2, R, cells))
    assert c.count == 1
    assert list(c.winding[0]) == [True, False]
    assert c.extent[0, 1] == R - 1
    # a closed square box straddling the seam
    cells = np.zeros((R, R), dtype=bool)
    for k in (6, 13):
        cells[k, :] = True
        cells[:, k] = True
    c = grid_components(TorusGrid(2, R, cells))
    assert c.count == 4 and not c.winding.any()
    big = np.argmax(c.cells)
    assert c.cells[big] == 8 * 8
    assert np.all(c.extent[big] == 8)


def test_cell_lift_is_consistent():
    R = 16
    cells = np.zeros((R, R), dtype=bool)
    for k in (6, 13):
        cells[k, :] = True
        cells[:, k] = True
    c = grid_components(TorusGrid(2, R, cells))
    idx = np.argwhere(c.labels >= 0)
    lifted = idx + R * c.cell_lift(idx)
    for comp in range(c.count):
        pts = lifted[c.labels[tuple(idx.T)] == comp]
        assert np.all(pts.max(axis=0) - pts.min(axis=0) + 1 == c.extent[comp])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 15), st.integers(0, 15))
def test_grid_components_translation_invariant(seed, sx, sy):
    rng = np.random.default_rng(seed)
    g = TorusGrid(2, 16, rng.random((16, 16)) < 0.45)
    a = grid_components(g)
    b = grid_components(g.rolled((sx, sy)))
    la = np.roll(a.labels, (sx, sy), axis=(0, 1))
    assert a.count == b.count
    pairs = {(int(x), int(y)) for x, y in zip(la.ravel(), b.labels.ravel())}
    assert len({p[0] for p in pairs}) == len(pairs) == len({p[1] for p in pairs})
    assert sorted(map(tuple, a.winding)) == sorted(map(tuple, b.winding))


def test_dilation_wraps():
    cells = np.zeros((8, 8), dtype=bool)
    cells[0, 0] = True
    d = TorusGrid(2, 8, cells).dilated().cells
    assert d[7, 0] and d[0, 7] and d[1, 0] and d[0, 1] and d.sum() == 5


# -- Monte Carlo -----------------------------------------------------------


def test_mc_volume_examples():
    e = montecarlo.mc_volume(lambda x: np.ones(len(x), dtype=bool), 1000, 1, dim=2)
    assert e.value == 1.0
    e = montecarlo.mc_volume(lambda x: x[:, 0] < 0.5, 100_000, 2, dim=3)
    assert e.within(0.5)
    lam = math.sin(math.pi / 4)
    e = montecarlo.mc_volume(lambda x: np.sin(np.pi * x[:, 0]) <= lam, 100_000, 3, dim=1)
    assert e.within(2 * math.asin(lam) / math.pi)
    assert montecarlo.mc_volume(lambda x: x[:, 0] < 0.3, 5000, 9, dim=2) == \
        montecarlo.mc_volume(lambda x: x[:, 0] < 0.3, 5000, 9, dim=2)
    with pytest.raises(ValueError):
        montecarlo.mc_volume(lambda x: x[:, 0] < 0.5, 10, 1, dim=1)


def sine_1d():
    return montecarlo.ScalarField(
        1, lambda x: np.sin(np.pi * x[..., 0]),
        lambda x: np.pi * np.cos(np.pi * x[..., :1]), 0.0, 1.0)


def radial_2d(c=(0.5, 0.5)):
    c = np.asarray(c)
    return montecarlo.ScalarField(
        2, lambda x: np.linalg.norm(x - c, axis=-1),
        lambda x: (x - c) / np.linalg.norm(x - c, axis=-1, keepdims=True), 0.0, np.sqrt(0.5))


def test_level_set_area_examples():
    e = montecarlo.level_set_area_mc(sine_1d(), 0.5, samples=400_000, seed=1)
    assert abs(e.value - 2.0) / 2.0 < 0.10
    r = 0.3
    e = montecarlo.level_set_area_mc(radial_2d(), r, samples=400_000, seed=2)
    assert abs(e.value - 2 * np.pi * r) / (2 * np.pi * r) < 0.05
    e = montecarlo.level_set_area_mc(sine_1d(), 1.5, samples=1000, seed=1)
    assert e.value == 0.0 and "empty-band" in e.flags


def test_level_set_determinism_and_band_check():
    f = radial_2d()
    a = montecarlo.level_set_area_mc(f, 0.25, samples=50_000, seed=5)
    b = montecarlo.level_set_area_mc(f, 0.25, samples=50_000, seed=5)
    assert a == b
    chk = montecarlo.band_check(f, 0.25, samples=200_000, seed=6)
    assert chk["ok"]
