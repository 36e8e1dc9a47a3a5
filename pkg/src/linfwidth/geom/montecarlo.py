"""Seeded Monte Carlo estimators for volumes and level-set areas on the unit cube."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

CHUNK = 1 << 16


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    samples: int
    flags: tuple[str, ...] = ()

    def within(self, target: float, sigmas: float = 4.0) -> bool:
        return abs(self.value - target) <= sigmas * self.se

    def __float__(self):
        return self.value


@dataclass
class ScalarField:
    """A periodic field on ``[0,1]^N`` with its gradient; both act on ``(..., N)`` arrays."""

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    vmin: float = 0.0
    vmax: float = 1.0
    laplacian: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))


def _seed_words(seed) -> list[int]:
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return [int(seed)]


def _chunks(samples: int, seed):
    """Uniform points in chunks; each chunk is seeded by ``(seed, start)``."""
    words = _seed_words(seed)
    for start in range(0, samples, CHUNK):
        k = min(CHUNK, samples - start)
        yield start, k, np.random.default_rng([*words, start])


def _moments(total: float, total_sq: float, n: int) -> tuple[float, float]:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, float(np.sqrt(var / n))


def mc_volume(indicator, samples: int, seed, dim: int | None = None) -> Estimate:
    """Fraction of ``[0,1]^N`` where ``indicator`` holds.

    ``indicator`` maps an ``(k, N)`` array to booleans. If ``dim`` is omitted it
    is read from ``indicator.dim``.
    """
    if samples < 100:
        raise ValueError("mc_volume needs at least 100 samples")
    n = dim if dim is not None else indicator.dim
    hits = 0
    for _, k, rng in _chunks(samples, seed):
        hits += int(np.count_nonzero(indicator(rng.random((k, n)))))
    p = hits / samples
    se = float(np.sqrt(p * (1 - p) / max(samples - 1, 1)))
    return Estimate(p, se, samples)


def level_set_area_mc(f: ScalarField, lam: float, band: float | None = None,
                      samples: int = 200_000, seed=0) -> Estimate:
    """Coarea band estimate of the ``(N-1)``-volume of ``{f = lam}`` in the unit cube.

    ``E[|grad f| 1{|f - lam| < band/2}] / band``. The default band is 2% of the
    range of ``f``.
    """
    if band is None:
        band = 0.02 * (f.vmax - f.vmin)
    if band <= 0:
        raise ValueError("band must be positive")
    total = total_sq = 0.0
    inband = 0
    for _, k, rng in _chunks(samples, seed):
        x = rng.random((k, f.dim))
        sel = np.abs(f.value(x) - lam) < band / 2
        if not sel.any():
            continue
        g = np.linalg.norm(f.gradient(x[sel]), axis=-1) / band
        inband += int(sel.sum())
        total += float(g.sum())
        total_sq += float((g * g).sum())
    if inband == 0:
        return Estimate(0.0, float("inf"), samples, ("empty-band",))
    mean, se = _moments(total, total_sq, samples)
    flags = ()
    if lam - band / 2 < f.vmin or lam + band / 2 > f.vmax:
        flags = ("degenerate-band",)
    return Estimate(mean, se, samples, flags)


def band_check(f: ScalarField, lam: float, band: float | None = None,
               samples: int = 200_000, seed=0) -> dict:
    """Compare the estimate at ``band`` and ``band / 2``; report-only self-check."""
    if band is None:
        band = 0.02 * (f.vmax - f.vmin)
    a = level_set_area_mc(f, lam, band, samples, seed)
    b = level_set_area_mc(f, lam, band / 2, samples, seed)
    se = float(np.hypot(a.se, b.se))
    return {"full": a, "half": b, "shift": abs(a.value - b.value), "se": se,
            "ok": abs(a.value - b.value) < 2 * se}


def mc_mean(fn, samples: int, seed, dim: int) -> Estimate:
    """Mean of a real function of uniform points in ``[0,1]^N``."""
    total = total_sq = 0.0
    for _, k, rng in _chunks(samples, seed):
        v = np.asarray(fn(rng.random((k, dim))), dtype=float)
        total += float(v.sum())
        total_sq += float((v * v).sum())
    mean, se = _moments(total, total_sq, samples)
    return Estimate(mean, se, samples)
