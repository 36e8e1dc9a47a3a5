"""Signed permutations: the point symmetry group of the l-infinity cube.

An element ``(perm, signs)`` acts on a vector by ``(s v)_i = signs[i] * v[perm[i]]``.
Group averages are computed by exact enumeration for ``N <= 8`` and by seeded
sampling beyond that.
"""
from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import GroupSizeError
from .tolerances import GEOM_TOL, UNIT_TOL

MAX_EXACT_N = 8
_CHUNK = 1 << 22


@dataclass(frozen=True)
class SignedPermutation:
    perm: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        signs = tuple(int(e) for e in self.signs)
        if len(perm) != len(signs):
            raise ValueError("perm and signs must have equal length")
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"{perm} is not a permutation of range({len(perm)})")
        if any(e not in (1, -1) for e in signs):
            raise ValueError("signs must be +1 or -1")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "signs", signs)

    @property
    def dim(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> SignedPermutation:
        return cls(tuple(range(n)), (1,) * n)

    def apply(self, v):
        """Act on a vector, or on the rows of an ``(k, N)`` array."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise ValueError(f"dimension mismatch: {v.shape[-1]} != {self.dim}")
        return v[..., list(self.perm)] * np.asarray(self.signs, dtype=float)

    def compose(self, other: SignedPermutation) -> SignedPermutation:
        """``self o other``: apply ``other`` first."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        p1 = np.asarray(self.perm)
        perm = np.asarray(other.perm)[p1]
        signs = np.asarray(self.signs) * np.asarray(other.signs)[p1]
        return SignedPermutation(tuple(perm), tuple(signs))

    def inverse(self) -> SignedPermutation:
        inv = np.argsort(self.perm)
        signs = np.asarray(self.signs)[inv]
        return SignedPermutation(tuple(inv), tuple(signs))

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        m[np.arange(self.dim), self.perm] = self.signs
        return m


def apply(s: SignedPermutation, v) -> np.ndarray:
    return s.apply(v)


def group_order(n: int) -> int:
    return (1 << n) * math.factorial(n)


def _check_exact(n: int):
    if not 1 <= n <= MAX_EXACT_N:
        raise GroupSizeError(
            f"exact enumeration supports 1 <= N <= {MAX_EXACT_N} "
            f"(N={n} would give {group_order(n) if n >= 1 else 0} elements)"
        )


def permutation_array(n: int) -> np.ndarray:
    """All permutations of ``range(n)`` in lexicographic order, shape ``(n!, n)``."""
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)


def sign_array(n: int) -> np.ndarray:
    """Sign vectors indexed by bitmask: bit ``i`` set means ``signs[i] = -1``."""
    masks = np.arange(1 << n)[:, None]
    bits = (masks >> np.arange(n)[None, :]) & 1
    return (1 - 2 * bits).astype(float)


class SignedPermutationGroup(Sequence):
    """Lazy, deterministically ordered enumeration of the whole group.

    Order is lexicographic in (permutation, sign bitmask).
    """

    def __init__(self, n: int):
        _check_exact(n)
        self.n = n
        self._perms = permutation_array(n)
        self._signs = sign_array(n).astype(int)

    def __len__(self):
        return group_order(self.n)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        p, mask = divmod(k, 1 << self.n)
        return SignedPermutation(tuple(self._perms[p]), tuple(self._signs[mask]))

    def __iter__(self):
        for p in self._perms:
            pt = tuple(p)
            for e in self._signs:
                yield SignedPermutation(pt, tuple(e))

    def index(self, s: SignedPermutation, *args) -> int:
        if s.dim != self.n:
            raise ValueError("dimension mismatch")
        p = 0
        remaining = list(range(self.n))
        for i, v in enumerate(s.perm):
            pos = remaining.index(v)
            p += pos * math.factorial(self.n - 1 - i)
            remaining.pop(pos)
        mask = sum(1 << i for i, e in enumerate(s.signs) if e < 0)
        return p * (1 << self.n) + mask

    def __contains__(self, s):
        return isinstance(s, SignedPermutation) and s.dim == self.n

    @property
    def arrays(self):
        return self._perms, self._signs.astype(float)


def enumerate_group(n: int) -> SignedPermutationGroup:
    return SignedPermutationGroup(n)


def sample_group_arrays(n: int, count: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """I.i.d. uniform group elements as ``(perms, signs)`` arrays."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(np.arange(n), (count, 1)), axis=1)
    signs = (1 - 2 * rng.integers(0, 2, size=(count, n))).astype(float)
    return perms, signs


def sample_group(n: int, count: int, seed) -> list[SignedPermutation]:
    perms, signs = sample_group_arrays(n, count, seed)
    return [SignedPermutation(tuple(p), tuple(e.astype(int))) for p, e in zip(perms, signs)]


# -- validation ------------------------------------------------------------


def _unit(v, name) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} is not a unit vector (norm {np.linalg.norm(v)!r})")
    return v


@dataclass(frozen=True)
class Subspace:
    """Linear subspace given by an orthonormal basis (rows of ``basis``)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        gram = b @ b.T
        if np.max(np.abs(gram - np.eye(len(b)))) > GEOM_TOL:
            raise ValueError("subspace basis is not orthonormal within 1e-12")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def random(cls, n: int, m: int, rng: np.random.Generator) -> Subspace:
        q, _ = np.linalg.qr(rng.standard_normal((n, m)))
        return cls(q.T.copy())

    @classmethod
    def coordinate(cls, n: int, axes) -> Subspace:
        return cls(np.eye(n)[list(axes)])


def random_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


# -- exact group averages --------------------------------------------------


def _perm_chunks(perms: np.ndarray, per_perm_cost: int):
    step = max(1, _CHUNK // max(per_perm_cost, 1))
    for i in range(0, len(perms), step):
        yield perms[i:i + step]


def _dots(a: np.ndarray, b: np.ndarray):
    """Yield blocks of ``a . (g b)`` over the whole group."""
    n = len(a)
    _check_exact(n)
    perms = permutation_array(n)
    signs = sign_array(n)
    for chunk in _perm_chunks(perms, len(signs)):
        yield (a[None, :] * b[chunk]) @ signs.T


def _dim_check(*vs):
    n = len(vs[0])
    if any(len(v) != n for v in vs):
        raise ValueError("dimension mismatch")


def avg_abs_dot(a, b) -> float:
    """Group average of ``|a . g b|`` for unit vectors; at most ``1/sqrt(N)``."""
    a, b = _unit(a, "a"), _unit(b, "b")
    _dim_check(a, b)
    total = sum(np.abs(d).sum() for d in _dots(a, b))
    return float(total / group_order(len(a)))


def avg_sq_dot(a, b) -> float:
    """Group average of ``(a . g b)^2``; exactly ``1/N``."""
    a, b = _unit(a, "a"), _unit(b, "b")
    _dim_check(a, b)
    total = sum((d * d).sum() for d in _dots(a, b))
    return float(total / group_order(len(a)))


def _proj_coords(b: np.ndarray, basis: np.ndarray):
    n = len(b)
    _check_exact(n)
    perms = permutation_array(n)
    signs = sign_array(n)
    m = basis.shape[0]
    for chunk in _perm_chunks(perms, m * len(signs)):
        # (p, m, s): coordinate j of the projection of g b
        yield np.einsum("jk,pk,sk->pjs", basis, b[chunk], signs, optimize=True)


def _as_subspace(L) -> Subspace:
    return L if isinstance(L, Subspace) else Subspace(L)


def avg_projection_length(b, L) -> float:
    """Group average of the length of the orthogonal projection of ``g b`` onto ``L``."""
    b = _unit(b, "b")
    L = _as_subspace(L)
    if L.ambient != len(b):
        raise ValueError("dimension mismatch")
    total = sum(np.sqrt((c * c).sum(axis=1)).sum() for c in _proj_coords(b, L.basis))
    return float(total / group_order(len(b)))


def avg_sq_projection_length(b, L) -> float:
    """Companion of :func:`avg_projection_length`; exactly ``m/N``."""
    b = _unit(b, "b")
    L = _as_subspace(L)
    if L.ambient != len(b):
        raise ValueError("dimension mismatch")
    total = sum((c * c).sum() for c in _proj_coords(b, L.basis))
    return float(total / group_order(len(b)))


def _dets(L1: Subspace, L2: Subspace):
    if L1.dim != L2.dim or L1.ambient != L2.ambient:
        raise ValueError("subspaces must share dimension and ambient space")
    n, m = L1.ambient, L1.dim
    _check_exact(n)
    perms = permutation_array(n)
    signs = sign_array(n)
    A = L1.basis          # rows a_i
    B = L2.basis.T        # columns b_j
    for chunk in _perm_chunks(perms, m * m * len(signs)):
        # A . (g B) = (A * signs) @ B[perm]
        mats = np.einsum("ik,sk,pkj->psij", A, signs, B[chunk], optimize=True)
        yield np.linalg.det(mats)  # LU with partial pivoting


def avg_projection_jacobian(L1, L2) -> float:
    """Group average of ``|det(A . g B)|``; at most ``1/sqrt(C(N, m))``."""
    L1, L2 = _as_subspace(L1), _as_subspace(L2)
    total = sum(np.abs(d).sum() for d in _dets(L1, L2))
    return float(total / group_order(L1.ambient))


def avg_sq_projection_jacobian(L1, L2) -> float:
    """Group average of ``det^2(A . g B)``; exactly ``1/C(N, m)``."""
    L1, L2 = _as_subspace(L1), _as_subspace(L2)
    total = sum((d * d).sum() for d in _dets(L1, L2))
    return float(total / group_order(L1.ambient))


def sampled_avg_sq_dot(a, b, count: int, seed):
    """Monte Carlo stand-in for :func:`avg_sq_dot` at large ``N``.

    Returns ``(mean, standard_error)``.
    """
    a, b = _unit(a, "a"), _unit(b, "b")
    _dim_check(a, b)
    perms, signs = sample_group_arrays(len(a), count, seed)
    d = np.einsum("k,pk,pk->p", a, b[perms], signs)
    sq = d * d
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(count)) if count > 1 else float("inf")
