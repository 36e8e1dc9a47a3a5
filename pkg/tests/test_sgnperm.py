import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linfwidth import sgnperm
from linfwidth.errors import GroupSizeError
from linfwidth.sgnperm import SignedPermutation, Subspace


def brute_average(fn, n):
    """Independent oracle: explicit double loop over permutations and sign tuples."""
    total, count = 0.0, 0
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1, -1), repeat=n):
            total += fn(SignedPermutation(perm, signs))
            count += 1
    return total / count


@pytest.mark.parametrize("n, order", [(1, 2), (2, 8), (3, 48)])
def test_group_order(n, order):
    g = sgnperm.enumerate_group(n)
    assert len(g) == order
    elems = list(g)
    assert len(set(elems)) == order


def test_group_order_n1_elements():
    g = list(sgnperm.enumerate_group(1))
    assert g == [SignedPermutation((0,), (1,)), SignedPermutation((0,), (-1,))]


@pytest.mark.parametrize("n", [0, 9, -1])
def test_group_size_limit(n):
    with pytest.raises(GroupSizeError):
        sgnperm.enumerate_group(n)


def test_enumeration_is_lexicographic_and_indexable():
    g = sgnperm.enumerate_group(3)
    keys = [(s.perm, sum(1 << i for i, e in enumerate(s.signs) if e < 0)) for s in g]
    assert keys == sorted(keys)
    for k in (0, 7, 8, 25, 47):
        assert g.index(g[k]) == k


def test_apply_examples():
    assert np.array_equal(SignedPermutation.identity(2).apply([1, 2]), [1, 2])
    s = SignedPermutation((1, 0), (1, -1))
    assert np.array_equal(s.apply([3, 4]), [4, -3])


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        SignedPermutation.identity(3).apply([1.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_isometry_and_inverse(n, seed):
    rng = np.random.default_rng(seed)
    s = sgnperm.sample_group(n, 1, seed)[0]
    v = sgnperm.random_unit_vector(n, rng)
    w = s.apply(v)
    assert abs(np.linalg.norm(w) - 1.0) < 1e-14
    assert np.array_equal(s.inverse().apply(w), v)
    assert np.allclose(s.matrix() @ v, w, atol=0)


def test_group_closure():
    g = sgnperm.enumerate_group(4)
    rng = np.random.default_rng(11)
    v = rng.standard_normal(4)
    for i, j in rng.integers(0, len(g), size=(1000, 2)):
        a, b = g[int(i)], g[int(j)]
        c = a.compose(b)
        assert g[g.index(c)] == c
        assert np.array_equal(c.apply(v), a.apply(b.apply(v)))


def test_avg_abs_dot_examples():
    assert sgnperm.avg_abs_dot([1.0], [1.0]) == 1.0
    assert sgnperm.avg_abs_dot([1.0, 0.0], [1.0, 0.0]) == pytest.approx(0.5, abs=1e-15)
    r = 1 / np.sqrt(2)
    assert sgnperm.avg_abs_dot([r, r], [r, r]) == pytest.approx(0.5, abs=1e-15)


def test_avg_abs_dot_matches_brute_force():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4):
        a = sgnperm.random_unit_vector(n, rng)
        b = sgnperm.random_unit_vector(n, rng)
        expected = brute_average(lambda s: abs(a @ s.apply(b)), n)
        assert sgnperm.avg_abs_dot(a, b) == pytest.approx(expected, abs=1e-13)


def test_avg_sq_dot_examples():
    rng = np.random.default_rng(2)
    a, b = sgnperm.random_unit_vector(2, rng), sgnperm.random_unit_vector(2, rng)
    assert sgnperm.avg_sq_dot(a, b) == pytest.approx(0.5, abs=1e-9)
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert sgnperm.avg_sq_dot(e1, e2) == pytest.approx(1 / 3, abs=1e-15)
    assert brute_average(lambda s: (e1 @ s.apply(e2)) ** 2, 3) == pytest.approx(1 / 3)
    assert sgnperm.avg_sq_dot([-1.0], [1.0]) == 1.0


def test_non_unit_inputs_rejected():
    with pytest.raises(ValueError):
        sgnperm.avg_abs_dot([1.0, 1.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        sgnperm.avg_sq_dot([1.0, 0.0], [0.5, 0.0])


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_exact_identities_seeded(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(20):
        a, b = sgnperm.random_unit_vector(n, rng), sgnperm.random_unit_vector(n, rng)
        sq = sgnperm.avg_sq_dot(a, b)
        assert abs(sq - 1 / n) < 1e-9
        assert sgnperm.avg_abs_dot(a, b) <= np.sqrt(sq) + 1e-12 <= 1 / np.sqrt(n) + 2e-12
        m = int(rng.integers(1, n + 1))
        L = Subspace.random(n, m, rng)
        assert abs(sgnperm.avg_sq_projection_length(b, L) - m / n) < 1e-9
        assert sgnperm.avg_projection_length(b, L) <= np.sqrt(m / n) + 1e-12
        L2 = Subspace.random(n, m, rng)
        c = math.comb(n, m)
        assert abs(sgnperm.avg_sq_projection_jacobian(L, L2) - 1 / c) < 1e-9
        assert sgnperm.avg_projection_jacobian(L, L2) <= 1 / np.sqrt(c) + 1e-12


def test_projection_length_examples():
    rng = np.random.default_rng(0)
    b = sgnperm.random_unit_vector(3, rng)
    assert sgnperm.avg_projection_length(b, Subspace(np.eye(3))) == pytest.approx(1.0, abs=1e-14)
    a = sgnperm.random_unit_vector(3, rng)
    assert sgnperm.avg_projection_length(b, Subspace(a[None, :])) == pytest.approx(
        sgnperm.avg_abs_dot(a, b), abs=1e-14
    )
    assert sgnperm.avg_projection_length([1.0, 0.0], Subspace.coordinate(2, [0])) == pytest.approx(0.5)


def test_projection_length_brute_force():
    rng = np.random.default_rng(9)
    b = sgnperm.random_unit_vector(3, rng)
    L = Subspace.random(3, 2, rng)
    expected = brute_average(lambda s: np.linalg.norm(L.basis @ s.apply(b)), 3)
    assert sgnperm.avg_projection_length(b, L) == pytest.approx(expected, abs=1e-13)


def test_non_orthonormal_basis_rejected():
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0 + 1e-9, 0.0]]))


def test_jacobian_examples():
    rng = np.random.default_rng(1)
    L = Subspace.random(3, 3, rng)
    assert sgnperm.avg_projection_jacobian(L, L) == pytest.approx(1.0, abs=1e-12)
    e = Subspace.coordinate(2, [0])
    assert sgnperm.avg_projection_jacobian(e, e) == pytest.approx(0.5, abs=1e-15)
    p = Subspace.coordinate(3, [0, 1])
    assert sgnperm.avg_sq_projection_jacobian(p, p) == pytest.approx(1 / 3, abs=1e-15)


def test_jacobian_brute_force():
    rng = np.random.default_rng(4)
    L1, L2 = Subspace.random(3, 2, rng), Subspace.random(3, 2, rng)
    A, B = L1.basis, L2.basis.T

    def det_of(s):
        return abs(np.linalg.det(A @ s.apply(B.T).T))

    assert sgnperm.avg_projection_jacobian(L1, L2) == pytest.approx(brute_average(det_of, 3), abs=1e-13)


def test_jacobian_dimension_mismatch():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sgnperm.avg_projection_jacobian(Subspace.random(3, 1, rng), Subspace.random(3, 2, rng))


def test_sample_group_determinism_and_n1():
    a = sgnperm.sample_group(5, 50, 3)
    b = sgnperm.sample_group(5, 50, 3)
    assert a == b
    ones = sgnperm.sample_group(1, 200, 1)
    assert {s.perm for s in ones} == {(0,)}
    assert {s.signs for s in ones} == {(1,), (-1,)}


def test_sampled_average_large_n():
    rng = np.random.default_rng(20)
    a, b = sgnperm.random_unit_vector(20, rng), sgnperm.random_unit_vector(20, rng)
    mean, se = sgnperm.sampled_avg_sq_dot(a, b, 100_000, 7)
    assert abs(mean - 1 / 20) < 3 * se


def test_n8_exact_average():
    rng = np.random.default_rng(8)
    a, b = sgnperm.random_unit_vector(8, rng), sgnperm.random_unit_vector(8, rng)
    assert abs(sgnperm.avg_sq_dot(a, b) - 1 / 8) < 1e-9
