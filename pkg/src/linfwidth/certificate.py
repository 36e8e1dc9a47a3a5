"""Width certificates: sampled maps to low-dimensional complexes with measured displacement."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class WidthCertificate:
    target: object                 # NerveComplex, or a description of a lattice skeleton
    target_dim: int
    points: np.ndarray             # (K, N) sampled points x
    images: np.ndarray             # (K, N) their images phi(x)
    mesh_scale: float
    claimed_bound: float
    route: str = ""
    info: dict = field(default_factory=dict)

    @property
    def sup_displacement(self) -> float:
        if len(self.points) == 0:
            return 0.0
        return float(np.abs(self.images - self.points).max())

    @property
    def sample_map(self):
        return list(zip(self.points, self.images))

    def holds(self, strict: bool = True) -> bool:
        d = self.sup_displacement
        return d < self.claimed_bound if strict else d <= self.claimed_bound

    @classmethod
    def trivial(cls, dim: int, bound: float, route: str = "empty") -> WidthCertificate:
        z = np.zeros((0, dim))
        return cls(None, -1, z, z.copy(), 0.0, bound, route)
