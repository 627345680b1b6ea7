"""Rectangular node grids and sampled fields, plus their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np

from aniharnack.errors import UsageError


@dataclass(frozen=True)
class Grid:
    """Tensor grid of ``dims[i]`` nodes per axis, ``origin`` being node ``(0, ..., 0)``."""

    dims: Tuple[int, ...]
    spacing: Tuple[float, ...]
    origin: Tuple[float, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(h) for h in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if not (len(dims) == len(spacing) == len(origin)):
            raise UsageError("dims, spacing and origin must have equal length")
        if any(d < 3 for d in dims):
            raise UsageError(f"need at least 3 nodes per axis, got {dims}")
        if any(not h > 0 for h in spacing):
            raise UsageError(f"spacing must be positive, got {spacing}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float], nodes) -> "Grid":
        """Grid spanning ``[lo_i, hi_i]`` with ``nodes`` (int or per-axis) nodes."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        nodes = np.broadcast_to(np.asarray(nodes, dtype=int), lo.shape)
        spacing = (hi - lo) / (nodes - 1)
        return cls(tuple(nodes), tuple(spacing), tuple(lo))

    @classmethod
    def centered(cls, half_widths: Sequence[float], nodes) -> "Grid":
        hw = np.asarray(half_widths, dtype=float)
        return cls.box(-hw, hw, nodes)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def extents(self) -> Tuple[float, ...]:
        return tuple((d - 1) * h for d, h in zip(self.dims, self.spacing))

    @property
    def upper(self) -> Tuple[float, ...]:
        return tuple(o + e for o, e in zip(self.origin, self.extents))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self):
        return [o + h * np.arange(d) for o, h, d in zip(self.origin, self.spacing, self.dims)]

    def coords(self):
        """Coordinate arrays, one per axis, each of shape ``dims``."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        """All nodes as an ``(N, n)`` array in row-major order."""
        return np.stack([c.ravel() for c in self.coords()], axis=1)

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.dims, dtype=bool)
        for ax in range(self.ndim):
            idx = [slice(None)] * self.ndim
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    def nearest_index(self, x: Sequence[float]) -> Tuple[int, ...]:
        x = np.asarray(x, dtype=float)
        idx = np.rint((x - np.asarray(self.origin)) / np.asarray(self.spacing)).astype(int)
        return tuple(int(np.clip(i, 0, d - 1)) for i, d in zip(idx, self.dims))


@dataclass
class Field:
    """Real values on the nodes of a grid."""

    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.dims:
            v = v.reshape(self.grid.dims)
        if not np.all(np.isfinite(v)):
            raise UsageError("field values must be finite")
        self.values = v

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        """Sample ``fn(x1, ..., xn)`` (vectorized over coordinate arrays)."""
        vals = np.broadcast_to(fn(*grid.coords()), grid.dims).astype(float)
        return cls(grid, vals.copy())

    def value_at_node(self, x: Sequence[float]) -> float:
        return float(self.values[self.grid.nearest_index(x)])

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def write_field_csv(field: Field, path) -> None:
    """Write ``i1,...,in,value`` rows in row-major node order."""
    n = field.grid.ndim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{k + 1}" for k in range(n)] + ["value"])
        for idx in np.ndindex(*field.grid.dims):
            w.writerow([*idx, repr(float(field.values[idx]))])


def read_field_csv(path, lo: Sequence[float], hi: Sequence[float]) -> Field:
    """Read a field CSV; the grid geometry comes from the box ``[lo, hi]``.

    The node counts are inferred from the largest index seen on each axis.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = len(header) - 1
    if header[-1] != "value" or n < 1:
        raise UsageError(f"bad field header {header}")
    idx = np.array([[int(r[k]) for k in range(n)] for r in body], dtype=int)
    vals = np.array([float(r[n]) for r in body])
    dims = tuple(int(m) + 1 for m in idx.max(axis=0))
    out = np.full(dims, np.nan)
    out[tuple(idx.T)] = vals
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    return Field(Grid.box(lo, hi, dims), out)
