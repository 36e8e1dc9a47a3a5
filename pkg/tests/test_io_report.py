import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linfwidth.errors import PreconditionError
from linfwidth.io import (certificate_to_text, grid_from_text, grid_to_text, mesh_from_text, mesh_to_text,
                          read_mesh, write_mesh)
from linfwidth.meshgen import icosphere, perturbed_sphere
from linfwidth.certificate import WidthCertificate
from linfwidth.report import Record, Report, fmt


# -- mesh and grid files -------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_mesh_roundtrip_exact(seed):
    m = perturbed_sphere(1.3, 1, 0.2, seed).translated(np.random.default_rng(seed).normal(size=3))
    back = mesh_from_text(mesh_to_text(m))
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert mesh_to_text(back) == mesh_to_text(m)


def test_mesh_file_comments(tmp_path):
    text = "# two triangles\nmesh 4 2\n0 0 0\n1 0 0  # corner\n0 1 0\n0 0 1\n0 1 2\n0 2 3\n"
    m = mesh_from_text(text)
    assert m.vertices.shape == (4, 3) and m.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]
    write_mesh(tmp_path / "a.msh", icosphere(1, 1))
    assert len(read_mesh(tmp_path / "a.msh")) == 80


@pytest.mark.parametrize("text", ["", "mush 1 0\n0 0 0\n", "mesh 2 0\n0 0 0\n", "mesh 3 1\n0 0 0\n1 0 0\n0 1 0\n0 1 5\n",
                                  "mesh 1 0\n0 0\n", "mesh 1 0\nx y z\n"])
def test_mesh_file_errors(text):
    with pytest.raises(PreconditionError):
        mesh_from_text(text)


def test_read_missing_mesh(tmp_path):
    with pytest.raises(PreconditionError):
        read_mesh(tmp_path / "nope.msh")


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 10_000))
def test_grid_roundtrip(n, r, seed):
    labels = np.random.default_rng(seed).integers(-1, 3, (r,) * n)
    text = grid_to_text(labels)
    assert text.startswith(f"grid {n} {r}\n")
    assert np.array_equal(grid_from_text(text), labels)


def test_grid_run_lengths():
    assert grid_to_text(np.array([[0, 0], [0, 5]])) == "grid 2 2\n0 3\n5 1\n"
    with pytest.raises(PreconditionError):
        grid_from_text("grid 2 2\n0 3\n")


def test_certificate_text():
    p = np.array([[0.5, 0.25, 0.75], [1.0, 2.0, 3.0]])
    cert = WidthCertificate({"skeleton": 1, "side": 2.0, "offset": [0.0, 0.5, 1.0]}, 1, p, p + 0.25, 2.0, 2.0, "x")
    lines = certificate_to_text(cert).splitlines()
    assert lines[0] == "certificate 2 3"
    assert "sup_displacement 0.25" in lines
    assert "target.offset 0.0 0.5 1.0" in lines
    assert lines[-1] == "1.0 2.0 3.0 -> 1.25 2.25 3.25"


# -- records and reports ----------------------------------------------------------------


def test_fmt():
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.float64(0.1)) == "0.1" and fmt(np.int64(3)) == "3"
    assert fmt([1, np.float64(2.5)]) == "[1,2.5]"
    assert fmt("a b") == '"a b"' and fmt("ab") == "ab" and fmt(None) == "none"


@pytest.mark.parametrize("op,value,bound,se,sigmas,tol,expect", [
    ("<=", 1.0, 1.0, 0, 0, 0, True),
    ("<", 1.0, 1.0, 0, 0, 0, False),
    ("<", 1.0, 1.0, 0, 0, 1e-12, True),
    ("<=", 1.3, 1.0, 0.1, 4, 0, True),
    ("<=", 1.5, 1.0, 0.1, 4, 0, False),
    (">=", 0.7, 1.0, 0.1, 4, 0, True),
    (">", 0.5, 0.5, 0, 0, 0, False),
    ("abs<", 2.0, 2.3, 0.1, 4, 0, True),
    ("abs<", 2.0, 2.5, 0.1, 4, 0, False),
    ("==", 3, 3, 0, 0, 0, True),
])
def test_record_status_from_fields(op, value, bound, se, sigmas, tol, expect):
    r = Record("f", "x", value, bound, op, se, sigmas, tol)
    assert r.holds is expect
    assert r.status == ("pass" if expect else "fail")
    assert Record("f", "x", value, bound, op, se, sigmas, tol, report_only=True).status == "report"


def test_record_nan_fails():
    assert not Record("f", "x", math.nan, 1.0).holds


def test_report_text_and_exit(tmp_path):
    rep = Report("demo", {"b": 2, "a": [1, 2]}, provenance={"version": "0"})
    rep.add("fam", "ok", 0.5, 1.0)
    rep.add("fam", "soft", 5.0, 1.0, report_only=True)
    assert rep.exit_code == 0 and rep.passed
    rep.add("other", "falsified", 1, 0, "==", fail_code=4)
    rep.add("other", "miss", 2.0, 1.0)
    assert rep.exit_code == 4 and len(rep.failures) == 2
    text = rep.text()
    assert text.splitlines()[1] == "config a=[1,2] b=2"
    assert text.endswith("summary records=4 failures=2 status=fail\n")
    for line in text.splitlines()[3:-1]:
        keys = [kv.split("=", 1)[0] for kv in line.split()[1:]]
        assert keys == sorted(keys)
    rep.timing["t"] = 1.0
    rep.write(tmp_path)
    assert (tmp_path / "report.txt").read_text() == text
    assert (tmp_path / "fam.csv").read_text().splitlines()[0].startswith("bound,family")
    assert "timing" not in text and (tmp_path / "timing.txt").exists()
