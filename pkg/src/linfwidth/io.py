"""Plain-text mesh and grid files.

Mesh: ``mesh V F``, then ``V`` vertex lines and ``F`` zero-based triangle
lines. Floats are written with ``repr`` (shortest round-trip form), so a
write/read cycle is exact. Grid: ``grid N R``, then one ``label count`` run
per line in row-major order. ``#`` starts a comment anywhere.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import PreconditionError
from .geom.mesh import TriMesh


def _lines(text: str):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def mesh_to_text(m: TriMesh) -> str:
    out = [f"mesh {len(m.vertices)} {len(m.triangles)}"]
    out += [" ".join(repr(float(c)) for c in v) for v in m.vertices]
    out += [" ".join(str(int(i)) for i in t) for t in m.triangles]
    return "\n".join(out) + "\n"


def mesh_from_text(text: str) -> TriMesh:
    lines = list(_lines(text))
    try:
        tag, nv, nf = lines[0].split()
        if tag != "mesh":
            raise ValueError(f"expected 'mesh' header, got {tag!r}")
        nv, nf = int(nv), int(nf)
        if len(lines) != 1 + nv + nf:
            raise ValueError(f"expected {nv + nf} body lines, got {len(lines) - 1}")
        V = np.array([[float(x) for x in ln.split()] for ln in lines[1:1 + nv]], dtype=float).reshape(nv, -1)
        F = np.array([[int(x) for x in ln.split()] for ln in lines[1 + nv:]], dtype=np.intp).reshape(nf, 3)
    except (IndexError, ValueError) as e:
        raise PreconditionError(f"unreadable mesh: {e}") from e
    if nv and V.shape[1] != 3:
        raise PreconditionError("mesh vertices must have three coordinates")
    if nf and (F.min() < 0 or F.max() >= nv):
        raise PreconditionError("triangle index out of range")
    return TriMesh(V if nv else np.zeros((0, 3)), F)


def write_mesh(path, m: TriMesh) -> None:
    Path(path).write_text(mesh_to_text(m))


def read_mesh(path) -> TriMesh:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise PreconditionError(f"unreadable mesh {path}: {e}") from e
    return mesh_from_text(text)


def grid_to_text(labels: np.ndarray) -> str:
    labels = np.asarray(labels)
    r = labels.shape[0]
    if any(s != r for s in labels.shape):
        raise ValueError("grid must be cubical")
    flat = labels.ravel()
    out = [f"grid {labels.ndim} {r}"]
    if len(flat):
        cut = np.flatnonzero(np.diff(flat)) + 1
        starts = np.concatenate([[0], cut])
        ends = np.concatenate([cut, [len(flat)]])
        out += [f"{int(flat[s])} {int(e - s)}" for s, e in zip(starts, ends)]
    return "\n".join(out) + "\n"


def grid_from_text(text: str) -> np.ndarray:
    lines = list(_lines(text))
    try:
        tag, n, r = lines[0].split()
        if tag != "grid":
            raise ValueError(f"expected 'grid' header, got {tag!r}")
        n, r = int(n), int(r)
        runs = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
        vals = np.concatenate([np.full(c, v, dtype=np.int64) for v, c in runs]) if runs else np.zeros(0, np.int64)
        if len(vals) != r ** n:
            raise ValueError(f"runs cover {len(vals)} cells, expected {r ** n}")
    except (IndexError, ValueError) as e:
        raise PreconditionError(f"unreadable grid: {e}") from e
    return vals.reshape((r,) * n)


def write_grid(path, labels) -> None:
    Path(path).write_text(grid_to_text(labels))


def read_grid(path) -> np.ndarray:
    return grid_from_text(Path(path).read_text())


def certificate_to_text(cert) -> str:
    """Header lines, then one ``x.. -> phi(x)..`` line per sampled point."""
    out = [f"certificate {len(cert.points)} {cert.points.shape[1]}",
           f"route {cert.route or 'none'}",
           f"target_dim {cert.target_dim}",
           f"claimed_bound {cert.claimed_bound!r}",
           f"sup_displacement {cert.sup_displacement!r}"]
    if isinstance(cert.target, dict):
        out += [f"target.{k} {' '.join(repr(float(x)) for x in np.ravel(v))}" for k, v in sorted(cert.target.items())]
    for p, q in zip(cert.points, cert.images):
        out.append(" ".join(repr(float(c)) for c in p) + " -> " + " ".join(repr(float(c)) for c in q))
    return "\n".join(out) + "\n"


def curve_to_text(points) -> str:
    pts = np.asarray(points, dtype=float)
    return "\n".join([f"curve {len(pts)}"] + [" ".join(repr(float(c)) for c in p) for p in pts]) + "\n"
