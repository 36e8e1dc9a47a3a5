import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linfwidth import foam
from linfwidth.errors import PreconditionError, QueryInSeparatorError
from linfwidth.geom.mesh import TriMesh, mesh_area
from linfwidth.kinsep import avoid, kinematic, nerve, pipeline, tower
from linfwidth.kinsep.pose import Pose, random_poses
from linfwidth.meshgen import icosphere, perturbed_sphere
from linfwidth.sgnperm import SignedPermutation

FOAM_LAM = 0.17173


@pytest.fixture(scope="module")
def foam3():
    st_ = foam.union_process(3, FOAM_LAM, 64, seed=1)
    return st_, foam.foam_mesh(st_, 16)


@pytest.fixture(scope="module")
def tower3(foam3):
    st_, m = foam3
    return tower.build_tower(st_, m, 2, pose_samples=16, seed=1)


# -- poses ---------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_pose_is_linf_isometry(seed):
    rng = np.random.default_rng(seed)
    g = random_poses(3, 1, seed)[0]
    a, b = rng.normal(size=(2, 5, 3))
    assert np.allclose(np.abs(g.apply(a) - g.apply(b)).max(axis=1), np.abs(a - b).max(axis=1), atol=1e-12)
    assert np.allclose(g.apply_inverse(g.apply(a)), a, atol=1e-12)
    assert np.allclose(g.inverse().apply(a), g.apply_inverse(a), atol=1e-12)


def test_pose_compose_order():
    g, h = random_poses(3, 2, 4)
    y = np.random.default_rng(0).normal(size=(4, 3))
    assert np.allclose(g.compose(h).apply(y), g.apply(h.apply(y)), atol=1e-12)
    assert np.allclose(Pose.identity(3).apply(y), y)


# -- kinematic averages ----------------------------------------------------------


def _tri(rng):
    return rng.normal(size=(3, 3))


@pytest.mark.parametrize("seed", range(5))
def test_pair_surface_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = _tri(rng), _tri(rng)
    v, se, deg = kinematic.mc_pair_surface(a, b, 40_000, rng)
    assert deg == 0
    assert abs(v - kinematic.hypersurface_oracle(a, b)) < 4 * se


@pytest.mark.parametrize("seed", range(5))
def test_pair_count_matches_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    a, s = _tri(rng), rng.normal(size=(2, 3))
    v, se, _ = kinematic.mc_pair_count(a, s, 40_000, rng)
    assert abs(v - kinematic.count_oracle(a, s)) < 4 * se


def test_hypersurface_oracle_closed_form():
    # perpendicular unit right triangles: area 1/2 each, sin = 1
    a = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float)
    b = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 1]], float)
    assert kinematic.hypersurface_oracle(a, b) == pytest.approx(0.25, abs=1e-15)
    assert kinematic.hypersurface_oracle(a, a) == 0.0
    seg = np.array([[0, 0, 0], [0, 0, 2]], float)
    assert kinematic.count_oracle(a, seg) == pytest.approx(1.0, abs=1e-15)


def test_unit_squares_group_average():
    sq = TriMesh(np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float), np.array([[0, 1, 2], [0, 2, 3]]))
    r = kinematic.kinematic_hypersurface_avg(sq, sq, shift_samples=400, seed=1)
    # the exact average of |n x s n| over the group is 2/3 for a coordinate normal
    assert r.oracle_average == pytest.approx(2 / 3, abs=1e-12)
    assert abs(r.value - 2 / 3) < 4 * r.se
    assert r.bound == pytest.approx(math.sqrt(2 / 3))
    assert r.within_bound


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_exact_normal_average_bound(v):
    a, b = np.array(v[:3]), np.array(v[3:])
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
        return
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    assert kinematic.exact_normal_average(a, b) <= math.sqrt(2 / 3) + 1e-9


def test_kinematic_empty_and_dimension():
    r = kinematic.kinematic_hypersurface_avg(TriMesh.empty(), icosphere(1, 0))
    assert r.value == 0.0
    with pytest.raises(PreconditionError):
        kinematic.kinematic_count_avg(TriMesh(np.zeros((3, 2)), np.array([[0, 1, 2]])), np.zeros((1, 2, 2)))


# -- axis avoidance ------------------------------------------------------------


def test_avoid_tiny_sphere():
    m = icosphere(0.1, 2, (0.5, 0.5, 0.5))
    r = avoid.coordinate_subspace_avoid(m, seed=3)
    assert r.hits == 0
    hits, deg = avoid.axis_hits(m, r.t)
    assert hits[0] == 0 and not deg[0]


def test_avoid_expected_hits_matches_sampling():
    m = icosphere(0.2, 3, (0.5, 0.5, 0.5))
    ts = np.random.default_rng(0).random((4000, 3))
    hits, _ = avoid.axis_hits(m, ts)
    se = hits.std(ddof=1) / math.sqrt(len(hits))
    assert abs(hits.mean() - avoid.expected_axis_hits(m)) < 4 * se


def test_avoid_preconditions():
    with pytest.raises(PreconditionError):
        avoid.coordinate_subspace_avoid(icosphere(0.3, 2, (0.5, 0.5, 0.5)))    # area ~ 1.1
    with pytest.raises(PreconditionError):
        avoid.coordinate_subspace_avoid(icosphere(0.1, 2, (0.95, 0.5, 0.5)))   # leaves the cube
    assert avoid.coordinate_subspace_avoid(TriMesh.empty(), seed=1).draws == 1


# -- towers --------------------------------------------------------------------


def test_level_bounds():
    assert tower.level_bound(0) == pytest.approx(2 * math.pi * math.sqrt(3))
    assert tower.level_bound(1) == pytest.approx((2 * math.pi) ** 2 * math.sqrt(6))
    assert tower.level_bound(2) == pytest.approx((2 * math.pi) ** 3 * math.sqrt(6))


def test_tower_levels(tower3):
    t = tower3
    assert t.m == 2 and len(t.levels) == 3
    assert not any(t.bound_miss)
    errs = tower.containment_errors(t)
    assert max(errs) < 1e-9


def test_tower_cells_match_period(tower3):
    # a unit cube is a fundamental domain, so every cube carries one period's measure
    for row in tower.cell_checks(tower3, cells=3, seed=2):
        assert row["measure"] == pytest.approx(row["period_measure"], rel=1e-9, abs=1e-9)
        assert row["pass"]


def test_tower_rejects_height(foam3):
    st_, m = foam3
    with pytest.raises(PreconditionError):
        tower.build_tower(st_, m, 3)


# -- nerve map -----------------------------------------------------------------


def test_nerve_map_displacement(tower3):
    cover = nerve.FoamCover.build(tower3.foam)
    assert nerve.vertices_inside(cover)
    nm = nerve.NerveMap(tower3.foam, tower3.poses, cover=cover)
    q = np.random.default_rng(5).uniform(-2, 2, (3000, 3))
    q = q[nm.coverage(q) > 0]
    res = nm(q)
    assert res.sup_displacement < 1
    assert res.complex.copy_indices_distinct()
    assert np.allclose(res.weights.sum(axis=1), 1)


def test_nerve_map_rejects_uncovered(tower3):
    nm = nerve.NerveMap(tower3.foam, tower3.poses[:1])
    q = np.random.default_rng(6).random((4000, 3))
    bad = q[nm.coverage(q) == 0]
    assert len(bad)
    with pytest.raises(QueryInSeparatorError):
        nm(bad[:1])


# -- high-codimension pipeline ---------------------------------------------------


def test_pipeline_sphere(tower3):
    base = icosphere(1.0, 3)
    c = math.sqrt(0.95 / pipeline.scaled_hypothesis(mesh_area(base)))
    m = base.scaled(c)
    cert, logs = pipeline.width_pipeline_highcodim(m, tower3, seed=0, budget=64, samples=500)
    assert cert.holds()
    assert cert.info["hypothesis"] == pytest.approx(0.95, rel=1e-9)
    assert logs["separator"].success_at is not None


def test_pipeline_precondition_and_empty(tower3):
    with pytest.raises(PreconditionError):
        pipeline.width_pipeline_highcodim(icosphere(0.2, 2), tower3)
    cert, logs = pipeline.width_pipeline_highcodim(TriMesh.empty(), tower3)
    assert cert.sup_displacement == 0.0 and logs == {}
