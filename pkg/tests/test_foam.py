import math

import numpy as np
import pytest

from linfwidth import foam
from linfwidth.errors import PreconditionError, SeparationFailure
from linfwidth.geom.mesh import mesh_area


def test_eigenfield_values():
    f = foam.eigenfield(3)
    assert f([0.5, 0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)
    assert f([0.0, 0.3, 0.7]) == 0.0
    assert abs(f([0.3, 1.0, 0.7])) < 1e-15
    assert foam.eigenfield(2)([0.25, 0.25]) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_eigenfield_derivative_checks(n):
    chk = foam.field_checks(foam.eigenfield(n), points=1000, seed=n)
    assert chk["gradient_rel_err"] < 1e-4
    assert chk["eigen_rel_err"] < 1e-6


def test_ratio_sweep_n1_closed_form():
    lams = [0.2, 0.5, 0.7]
    c = foam.ratio_sweep(1, lams, samples=200_000, seed=1)
    for p in c.points:
        assert p.area.within(2.0)
        assert p.volume.within(2 * math.asin(p.lam) / math.pi)
        assert abs(p.ratio - math.pi / math.asin(p.lam)) < 4 * p.ratio_se
    best = c.minimum()
    assert best.lam == 0.7    # admissible grid points need vol <= 1/2, i.e. lam <= sin(pi/4)


def test_ratio_sweep_bound_n2():
    c = foam.ratio_sweep(2, samples=50_000, seed=2)
    p = c.minimum()
    assert c.bound == pytest.approx(8.8858, abs=1e-4)
    assert p.ratio <= c.bound + 4 * p.ratio_se
    assert all(p.lam < q.lam for p, q in zip(c.points, c.points[1:]))
    assert c.points[0].degenerate    # band crosses zero at the smallest level


def test_ratio_sweep_rejects():
    with pytest.raises(PreconditionError):
        foam.ratio_sweep(7, [0.5])
    with pytest.raises(PreconditionError):
        foam.ratio_sweep(2, [0.0, 0.5])


def test_cubic_separator_formula():
    assert foam.cubic_separator_formula(3, 0, 1.0) == 6
    assert foam.cubic_separator_formula(2, 0, 1.0) == 4
    assert foam.cubic_separator_formula(3, 1, 1.0) == 12
    for n, m, w in [(2, 0, 0.5), (3, 0, 0.25), (3, 1, 0.5), (3, 2, 1.0)]:
        s = foam.cubic_separator(n, m, w, resolution=16)
        assert s.measured == pytest.approx(s.formula, rel=1e-12)


def test_cubic_separator_components():
    s = foam.cubic_separator(2, 0, 0.25, resolution=64)
    from linfwidth.geom.grid import grid_components
    c = grid_components(s.grid)
    assert c.count == 16 and c.separated()


def test_foam_vs_lattice_report():
    assert not foam.foam_vs_lattice(3)["foam_smaller"]
    assert foam.foam_vs_lattice(10)["foam_smaller"]
    assert not foam.foam_vs_lattice(9)["foam_smaller"]


def test_union_process_lambda_one_fails():
    with pytest.raises(SeparationFailure) as exc:
        foam.union_process(2, 1.0, 32, max_steps=5, seed=0, correction=1.0)
    st = exc.value.state
    assert st.facets == 0 and st.steps == 5 and not st.separated


def test_union_process_structure_and_determinism():
    lam = 0.33
    corr = foam.facet_correction(2, lam, 128)["correction"]
    a = foam.union_process(2, lam, 128, seed=4, correction=corr)
    b = foam.union_process(2, lam, 128, seed=4, correction=corr)
    assert np.array_equal(a.owner, b.owner) and a.boundary_measure == b.boundary_measure
    assert a.separated and a.steps == len(a.shifts)
    assert not a.components.winding.any()
    assert np.all(a.components.max_extent < a.resolution)
    assert all(x <= y for x, y in zip(a.history, a.history[1:]))
    assert np.array_equal(a.shifts[0], np.zeros(2))


def test_union_process_rejects_high_dim():
    with pytest.raises(PreconditionError):
        foam.union_process(5, 0.1, 8)


def test_facet_correction_against_circle_like_oracle():
    # at a fine grid the facet length overestimates a curve by at most the l1/l2 factor
    c = foam.facet_correction(2, 0.33, 256)
    assert 1 / math.sqrt(2) - 0.05 < c["correction"] <= 1.0 + 0.05


def test_blob_surface_area_matches_coarea():
    lam = 0.17
    m = foam.blob_surface(lam, 48)
    mc = foam.level_set_area_mc(foam.eigenfield(3), lam, None, 200_000, 5)
    assert abs(mesh_area(m) - mc.value) < 0.02 * mc.value + 4 * mc.se


def test_foam_mesh_soup():
    st = foam.union_process(3, 0.17, 48, seed=1)
    m = foam.foam_mesh(st, 32)
    assert len(m) > 0
    cen = m.soup.mean(axis=1)
    # no surviving triangle lies inside an earlier blob than its own
    assert mesh_area(m) < len(st.shifts) * mesh_area(foam.blob_surface(0.17, 32)) + 1e-9
    assert np.all(np.isfinite(cen))
