"""Rigid motions ``y -> s(y) + x`` built from a signed permutation and a shift."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geom.mesh import TriMesh
from ..sgnperm import SignedPermutation, sample_group


@dataclass(frozen=True)
class Pose:
    s: SignedPermutation
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(c) for c in self.x))
        if len(self.x) != self.s.dim:
            raise ValueError("shift dimension does not match the signed permutation")

    @classmethod
    def identity(cls, n: int) -> Pose:
        return cls(SignedPermutation.identity(n), (0.0,) * n)

    @property
    def shift(self) -> np.ndarray:
        return np.asarray(self.x)

    def apply(self, y) -> np.ndarray:
        return self.s.apply(y) + self.shift

    def apply_inverse(self, y) -> np.ndarray:
        return self.s.inverse().apply(np.asarray(y, dtype=float) - self.shift)

    def inverse(self) -> Pose:
        si = self.s.inverse()
        return Pose(si, tuple(-si.apply(self.shift)))

    def compose(self, other: Pose) -> Pose:
        """``self o other``."""
        return Pose(self.s.compose(other.s), tuple(self.s.apply(other.shift) + self.shift))

    def mesh(self, m: TriMesh) -> TriMesh:
        return m.transformed(self.apply)

    def jittered(self, rng: np.random.Generator, size: float) -> Pose:
        return Pose(self.s, tuple(self.shift + rng.uniform(-size, size, len(self.x))))


def random_poses(n: int, count: int, seed) -> list[Pose]:
    """Uniform signed permutations with uniform shifts in ``[0,1)^N``."""
    rng = np.random.default_rng(seed)
    group = sample_group(n, count, rng.integers(2**63))
    shifts = rng.random((count, n))
    return [Pose(s, tuple(x)) for s, x in zip(group, shifts)]
