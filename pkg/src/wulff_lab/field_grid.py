"""Uniform cell-centered grids and the ball calculus built on them.

Fields live on an axis-aligned box Ω partitioned into a uniform lattice of
cells; every sample sits at a cell center.  The module provides the three
primitives the rest of the library is built from:

* averages ⨍_B f over metric balls B ⊆ Ω, by the cell-center inclusion
  rule (a cell belongs to B iff its center does),
* mean oscillations (⨍_B |f − ⟨f⟩_B|^q)^{1/q} with the Euclidean magnitude
  taken across field components,
* a co-located finite-difference gradient (centered in the interior,
  second-order one-sided at the boundary).

Balls are hard-rejected unless they fit inside Ω — the averaging operators
never see extension artifacts.  Fields are immutable after construction and
serialize to the self-describing ``WLF1`` binary format (text header plus
little-endian float64 blocks, one block per component, row-major).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BallBelowResolution,
    BallOutsideDomain,
    DimensionMismatch,
    GridTooCoarse,
    MalformedHeader,
    NonFiniteValue,
)

__all__ = [
    "GridGeometry",
    "GridField",
    "Ball",
    "ball_average",
    "ball_oscillation",
    "ball_cells",
    "gradient",
    "value_at",
    "read_field",
    "write_field",
]

_KINDS = ("scalar", "vector", "matrix")


@dataclass(frozen=True)
class GridGeometry:
    """Axis-aligned box with a uniform cell lattice.

    The cell centers along axis ``d`` are ``origin[d] + (i + 1/2) * spacing[d]``
    for ``i = 0 .. cells[d]-1``; ``spacing[d]`` is derived as
    ``extent[d] / cells[d]`` so the lattice tiles the box exactly.
    """

    cells: tuple[int, ...]
    extent: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.cells) == len(self.extent) == len(self.origin)):
            raise DimensionMismatch(
                f"cells/extent/origin arity disagree: "
                f"{len(self.cells)}/{len(self.extent)}/{len(self.origin)}"
            )
        if self.dim < 2:
            raise DimensionMismatch("grids are defined for dimension n >= 2")
        if any(int(c) != c or c < 1 for c in self.cells):
            raise GridTooCoarse(f"cell counts must be positive integers, got {self.cells}")
        if any(not (e > 0) for e in self.extent):
            raise ValueError(f"extents must be positive, got {self.extent}")
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extent, self.cells))

    @property
    def cell_measure(self) -> float:
        return math.prod(self.spacing)

    @property
    def cell_count(self) -> int:
        return math.prod(self.cells)

    def axis_centers(self, d: int) -> np.ndarray:
        h = self.spacing[d]
        return self.origin[d] + (np.arange(self.cells[d]) + 0.5) * h

    def center_mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, each of shape ``cells`` (cached)."""
        return _center_mesh(self)

    def contains_ball(self, ball: "Ball", rtol: float = 1e-12) -> bool:
        pad = rtol * max(self.extent)
        return all(
            ball.center[d] - ball.radius >= self.origin[d] - pad
            and ball.center[d] + ball.radius <= self.origin[d] + self.extent[d] + pad
            for d in range(self.dim)
        )

    def contains_point(self, x: Sequence[float]) -> bool:
        return all(
            self.origin[d] <= x[d] <= self.origin[d] + self.extent[d]
            for d in range(self.dim)
        )


@lru_cache(maxsize=32)
def _center_mesh(geom: GridGeometry) -> tuple[np.ndarray, ...]:
    axes = [geom.axis_centers(d) for d in range(geom.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    for m in mesh:
        m.flags.writeable = False
    return tuple(mesh)


@dataclass(frozen=True)
class Ball:
    """Closed metric ball; used only when contained in the grid domain."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0):
            raise ValueError(f"ball radius must be positive, got {self.radius}")


class GridField:
    """Immutable sampled field over a :class:`GridGeometry`.

    ``values`` has shape ``(ncomp, *cells)`` with one row-major block per
    component.  ``kind`` is ``"scalar"`` (one component), ``"vector"``
    (``N`` components) or ``"matrix"`` (``N × n`` components stored row-major,
    component ``i*n + d`` holding entry ``(i, d)``).
    """

    __slots__ = ("geometry", "kind", "codomain", "values")

    def __init__(self, geometry: GridGeometry, values: np.ndarray, kind: str = "scalar",
                 codomain: int = 1):
        if kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
        ncomp = self._ncomp_for(kind, codomain, geometry.dim)
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape == geometry.cells and ncomp == 1:
            arr = arr[np.newaxis]
        if arr.shape != (ncomp,) + geometry.cells:
            raise DimensionMismatch(
                f"values shape {arr.shape} does not match "
                f"({ncomp},) + cells {geometry.cells}"
            )
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("field contains non-finite samples")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "codomain", int(codomain))
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("GridField is immutable")

    @staticmethod
    def _ncomp_for(kind: str, codomain: int, dim: int) -> int:
        if kind == "scalar":
            if codomain != 1:
                raise ValueError("scalar fields have codomain 1")
            return 1
        if kind == "vector":
            return codomain
        return codomain * dim

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    @classmethod
    def constant(cls, geometry: GridGeometry, value, kind: str = "scalar",
                 codomain: int = 1) -> "GridField":
        ncomp = cls._ncomp_for(kind, codomain, geometry.dim)
        vals = np.broadcast_to(
            np.asarray(value, dtype=np.float64).reshape(-1, *([1] * geometry.dim)),
            (ncomp,) + geometry.cells,
        ).copy()
        return cls(geometry, vals, kind, codomain)

    @classmethod
    def from_function(cls, geometry: GridGeometry, fn: Callable, kind: str = "scalar",
                      codomain: int = 1) -> "GridField":
        """Sample ``fn`` at cell centers; ``fn`` receives the coordinate mesh
        arrays and must return an array of shape ``cells`` (scalar) or
        ``(ncomp, *cells)``."""
        out = np.asarray(fn(*geometry.center_mesh()), dtype=np.float64)
        return cls(geometry, out, kind, codomain)

    def magnitude(self) -> "GridField":
        """Pointwise Euclidean magnitude across components, as a scalar field."""
        mag = np.sqrt(np.einsum("c...,c...->...", self.values, self.values))
        return GridField(self.geometry, mag, "scalar")

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.geometry, values, self.kind, self.codomain)


# ---------------------------------------------------------------------------
# ball calculus


def _check_ball(geom: GridGeometry, ball: Ball) -> None:
    if len(ball.center) != geom.dim:
        raise DimensionMismatch(
            f"ball center has {len(ball.center)} coordinates on a {geom.dim}-d grid"
        )
    if ball.radius < max(geom.spacing):
        raise BallBelowResolution(
            f"radius {ball.radius:g} is below the grid spacing {max(geom.spacing):g}"
        )
    if not geom.contains_ball(ball):
        raise BallOutsideDomain(
            f"ball B_{ball.radius:g}({ball.center}) is not contained in the domain"
        )


def ball_cells(geom: GridGeometry, ball: Ball) -> tuple[tuple[slice, ...], np.ndarray]:
    """Bounding-box slices and an inclusion mask for the cells of a ball.

    A cell belongs to the ball iff its center lies within ``ball.radius`` of
    ``ball.center``.  Only cells in the per-axis bounding box are touched, so
    the cost is proportional to the ball volume.
    """
    _check_ball(geom, ball)
    slices = []
    for d in range(geom.dim):
        h = geom.spacing[d]
        lo = int(np.floor((ball.center[d] - ball.radius - geom.origin[d]) / h - 0.5))
        hi = int(np.ceil((ball.center[d] + ball.radius - geom.origin[d]) / h - 0.5))
        slices.append(slice(max(lo, 0), min(hi + 1, geom.cells[d])))
    slices = tuple(slices)
    dist2 = np.zeros(tuple(s.stop - s.start for s in slices))
    for d in range(geom.dim):
        ax = geom.axis_centers(d)[slices[d]] - ball.center[d]
        shape = [1] * geom.dim
        shape[d] = ax.size
        dist2 = dist2 + (ax.reshape(shape)) ** 2
    mask = dist2 <= ball.radius**2
    if not mask.any():
        raise BallBelowResolution(
            f"ball B_{ball.radius:g}({ball.center}) contains no cell centers"
        )
    return slices, mask


def ball_average(f: GridField, ball: Ball) -> np.ndarray:
    """Per-component mean ⨍_B f over the cells of ``ball``.

    Deterministic for a fixed grid: the uniform cell measure cancels, so this
    is the plain mean of the included samples, one entry per component.
    """
    slices, mask = ball_cells(f.geometry, ball)
    box = f.values[(slice(None),) + slices]
    return box[:, mask].mean(axis=1)


def ball_oscillation(f: GridField, ball: Ball, q: float = 1.0) -> float:
    """q-mean oscillation ``(⨍_B |f − ⟨f⟩_B|^q)^{1/q}``.

    The deviation magnitude is Euclidean across components, so vector and
    matrix fields oscillate as a whole rather than componentwise.
    """
    if not (q >= 1.0):
        raise ValueError(f"oscillation exponent must satisfy q >= 1, got {q}")
    slices, mask = ball_cells(f.geometry, ball)
    box = f.values[(slice(None),) + slices][:, mask]
    dev = box - box.mean(axis=1, keepdims=True)
    mag = np.sqrt(np.einsum("ck,ck->k", dev, dev))
    if q == 1.0:
        return float(mag.mean())
    return float((mag**q).mean() ** (1.0 / q))


def value_at(f: GridField, x: Sequence[float]) -> np.ndarray:
    """Sample values of the cell containing ``x`` (one entry per component)."""
    geom = f.geometry
    if not geom.contains_point(x):
        raise ValueError(f"point {tuple(x)} lies outside the domain")
    idx = tuple(
        min(int((x[d] - geom.origin[d]) / geom.spacing[d]), geom.cells[d] - 1)
        for d in range(geom.dim)
    )
    return f.values[(slice(None),) + idx]


# ---------------------------------------------------------------------------
# gradient


def gradient(f: GridField) -> GridField:
    """Discrete gradient of a scalar or vector field as a matrix field.

    Centered second-order differences in the interior and second-order
    one-sided stencils at the boundary; component ``i*n + d`` of the result
    holds ∂u_i/∂x_d.  Exact for affine fields including the boundary rows.
    """
    if f.kind == "matrix":
        raise ValueError("gradient is defined for scalar and vector fields")
    geom = f.geometry
    if min(geom.cells) < 3:
        raise GridTooCoarse("gradient needs at least 3 cells per axis")
    n = geom.dim
    N = f.ncomp
    out = np.empty((N * n,) + geom.cells)
    for c in range(N):
        for d in range(n):
            out[c * n + d] = np.gradient(
                f.values[c], geom.spacing[d], axis=d, edge_order=2
            )
    return GridField(geom, out, "matrix", codomain=N)


# ---------------------------------------------------------------------------
# WLF1 serialization


_MAGIC = "WLF1"


def write_field(f: GridField, path) -> None:
    """Write a field in the WLF1 format (text header + float64 LE payload)."""
    geom = f.geometry
    header = (
        f"{_MAGIC}\n"
        f"n={geom.dim} N={f.codomain} shape={f.kind}\n"
        f"cells={'x'.join(str(c) for c in geom.cells)}\n"
        f"extent={','.join(repr(e) for e in geom.extent)}\n"
        f"origin={','.join(repr(o) for o in geom.origin)}\n"
        f"\n"
    )
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)


def _header_fail(msg: str):
    raise MalformedHeader(msg)


def read_field(path) -> GridField:
    """Read a WLF1 field file; strict about header structure and payload size."""
    with open(path, "rb") as fh:
        raw = fh.read()
    # header: everything up to the first blank line
    sep = raw.find(b"\n\n")
    if sep < 0:
        _header_fail("missing blank line separating header from payload")
    try:
        lines = raw[:sep].decode("ascii").split("\n")
    except UnicodeDecodeError:
        _header_fail("header is not ASCII")
    if len(lines) != 5:
        _header_fail(f"expected 5 header lines, found {len(lines)}")
    if lines[0] != _MAGIC:
        _header_fail(f"bad magic {lines[0]!r}")

    fields = {}
    for token in lines[1].split():
        if "=" not in token:
            _header_fail(f"malformed token {token!r} on the shape line")
        k, v = token.split("=", 1)
        fields[k] = v
    for key in ("n", "N", "shape"):
        if key not in fields:
            _header_fail(f"shape line is missing {key!r}")
    try:
        n = int(fields["n"])
        N = int(fields["N"])
    except ValueError:
        _header_fail("n and N must be integers")
    kind = fields["shape"]
    if kind not in _KINDS:
        _header_fail(f"unknown shape {kind!r}")

    def _split(line: str, key: str, cast, sep_ch: str):
        if not line.startswith(key + "="):
            _header_fail(f"expected {key}= line, got {line!r}")
        body = line[len(key) + 1:]
        try:
            return tuple(cast(t) for t in body.split(sep_ch))
        except ValueError:
            _header_fail(f"cannot parse {key} entries from {body!r}")

    cells = _split(lines[2], "cells", int, "x")
    extent = _split(lines[3], "extent", float, ",")
    origin = _split(lines[4], "origin", float, ",")
    for name, tup in (("cells", cells), ("extent", extent), ("origin", origin)):
        if len(tup) != n:
            raise DimensionMismatch(
                f"header declares n={n} but {name} has {len(tup)} entries"
            )

    geom = GridGeometry(cells, extent, origin)
    ncomp = GridField._ncomp_for(kind, N, n)
    payload = raw[sep + 2:]
    expected = ncomp * geom.cell_count * 8
    if len(payload) != expected:
        _header_fail(
            f"payload holds {len(payload)} bytes, header implies {expected} "
            f"({ncomp} component blocks of {geom.cell_count} float64 samples)"
        )
    arr = np.frombuffer(payload, dtype="<f8").reshape((ncomp,) + geom.cells)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"field file {path} contains non-finite samples")
    return GridField(geom, arr.astype(np.float64), kind, codomain=N)
