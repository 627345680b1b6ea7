"""Intrinsic cubes K_r(M, x0), the intrinsic scaling map, and Vitali selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from aniharnack.calculus import PointJet
from aniharnack.errors import DomainError, UsageError
from aniharnack.exponents import ExponentData, alpha_beta
from aniharnack.grid import Field, Grid

# closed-cube membership slack, relative to the half-width
CONTAIN_RTOL = 1e-12


def half_widths(e: ExponentData, r: float, M: float, a: float = 1.0) -> np.ndarray:
    """Per-axis half-widths ``a * r^{alpha_i} * M^{beta_i}``."""
    if not (r > 0 and M > 0 and a > 0):
        raise UsageError(f"need r, M, a > 0, got {r}, {M}, {a}")
    alpha, beta = alpha_beta(e)
    return a * np.asarray(r, dtype=float) ** np.array(alpha) * np.asarray(M, dtype=float) ** np.array(beta)


@dataclass(frozen=True)
class IntrinsicCube:
    exponents: ExponentData
    r: float
    M: float
    center: Tuple[float, ...] = None
    a: float = 1.0

    def __post_init__(self):
        c = self.center
        if c is None:
            c = (0.0,) * self.exponents.n
        c = tuple(float(v) for v in c)
        if len(c) != self.exponents.n:
            raise UsageError("center dimension does not match exponents")
        object.__setattr__(self, "center", c)
        half_widths(self.exponents, self.r, self.M, self.a)  # validates r, M, a

    @property
    def half_widths(self) -> np.ndarray:
        return half_widths(self.exponents, self.r, self.M, self.a)

    def dilate(self, factor: float) -> "IntrinsicCube":
        return IntrinsicCube(self.exponents, self.r, self.M, self.center, self.a * factor)

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * self.half_widths))

    def contains(self, x) -> bool:
        return bool(np.all(self.contains_points(np.atleast_2d(x))))

    def contains_points(self, pts) -> np.ndarray:
        """Vectorized closed-cube membership for an ``(N, n)`` array."""
        pts = np.asarray(pts, dtype=float)
        w = self.half_widths * (1.0 + CONTAIN_RTOL)
        return np.all(np.abs(pts - np.asarray(self.center)) <= w, axis=-1)

    def mask(self, grid: Grid) -> np.ndarray:
        """Boolean mask of the grid nodes inside the cube."""
        w = self.half_widths * (1.0 + CONTAIN_RTOL)
        out = np.ones(grid.dims, dtype=bool)
        for ax, (c, coord) in enumerate(zip(self.center, grid.coords())):
            out &= np.abs(coord - c) <= w[ax]
        return out

    def fits_in(self, grid: Grid) -> bool:
        lo = np.asarray(self.center) - self.half_widths
        hi = np.asarray(self.center) + self.half_widths
        tol = 1e-12 * np.maximum(1.0, np.abs(np.asarray(grid.upper)))
        return bool(np.all(lo >= np.asarray(grid.origin) - tol) and np.all(hi <= np.asarray(grid.upper) + tol))


def interiors_overlap(c1: IntrinsicCube, c2: IntrinsicCube) -> bool:
    d = np.abs(np.asarray(c1.center) - np.asarray(c2.center))
    return bool(np.all(d < c1.half_widths + c2.half_widths))


def cube_inside(inner: IntrinsicCube, outer: IntrinsicCube) -> bool:
    d = np.abs(np.asarray(inner.center) - np.asarray(outer.center))
    return bool(np.all(d + inner.half_widths <= outer.half_widths * (1.0 + CONTAIN_RTOL)))


@dataclass(frozen=True)
class ScalingMap:
    """``x_i -> r^{alpha_i} M^{beta_i} x_i`` together with ``v = u / M``."""

    exponents: ExponentData
    r: float
    M: float

    @property
    def factors(self) -> np.ndarray:
        return half_widths(self.exponents, self.r, self.M)

    def forward_point(self, x) -> np.ndarray:
        """Point of the original domain that ``x`` (in the rescaled domain) maps to."""
        return self.factors * np.asarray(x, dtype=float)

    def inverse_point(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) / self.factors

    def scale_jet(self, jet: PointJet) -> PointJet:
        """Jet of ``v`` at ``x`` from the jet of ``u`` at ``forward_point(x)``."""
        s = self.factors
        return PointJet(s * jet.gradient / self.M, np.outer(s, s) * jet.hessian / self.M)


def residual_scaling_factors(r: float, M: float, e: ExponentData):
    """Lower-order and source factors picked up by the rescaled inequality.

    Returns ``(gradient_factors, source_factor)`` with
    ``gradient_factors[i] = r^{1/p_i} / M^{(p_n - p_i)/p_i}`` and
    ``source_factor = r / M^{p_n - 1}``.
    """
    if not (r > 0 and M > 0):
        raise UsageError("need r, M > 0")
    p = np.asarray(e.p)
    grad = r ** (1.0 / p) / M ** ((e.pn - p) / p)
    return grad, r / M ** (e.pn - 1.0)


def _interpolate(u: Field, pts: np.ndarray) -> np.ndarray:
    lo = np.asarray(u.grid.origin)
    hi = np.asarray(u.grid.upper)
    tol = 1e-10 * np.maximum(1.0, np.abs(hi - lo))
    for ax in range(u.grid.ndim):
        if pts[:, ax].min() < lo[ax] - tol[ax] or pts[:, ax].max() > hi[ax] + tol[ax]:
            raise DomainError(f"target grid exits the source domain along axis {ax + 1}")
    pts = np.clip(pts, lo, hi)
    interp = RegularGridInterpolator(u.grid.axes(), u.values, method="linear")
    return interp(pts)


def scale_function(u: Field, smap: ScalingMap, direction: str = "forward", target: Optional[Grid] = None) -> Field:
    """Resample ``u`` through the intrinsic scaling.

    ``forward`` returns ``v(x) = u(s x) / M``; ``inverse`` returns
    ``w(y) = M u(y / s)``. Without ``target`` the output lives on the image of
    the input grid, so no interpolation error is incurred.
    """
    s = smap.factors
    if direction == "forward":
        to_source, value_scale = s, 1.0 / smap.M
    elif direction == "inverse":
        to_source, value_scale = 1.0 / s, smap.M
    else:
        raise UsageError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    if target is None:
        src = u.grid
        target = Grid(src.dims, tuple(np.asarray(src.spacing) / to_source), tuple(np.asarray(src.origin) / to_source))
        return Field(target, u.values * value_scale)
    pts = target.points() * to_source
    vals = _interpolate(u, pts).reshape(target.dims)
    return Field(target, vals * value_scale)


def _generation(r: float) -> int:
    k = 0
    while r <= 2.0 ** (-k - 1):
        k += 1
    return k


def vitali_cover(family: Sequence[IntrinsicCube]) -> List[int]:
    """Indices of a pairwise interior-disjoint subfamily whose 5-dilations cover the family.

    Cubes are grouped into dyadic generations ``2^{-k-1} < r <= 2^{-k}``;
    each generation contributes a greedy maximal disjoint subfamily (input
    order) among cubes not meeting earlier selections.
    """
    if not family:
        return []
    M0, e0 = family[0].M, family[0].exponents
    for c in family:
        if c.M != M0 or c.exponents != e0:
            raise UsageError("all cubes must share M and exponents")
        if not (0 < c.r <= 1):
            raise UsageError(f"radii must lie in (0, 1], got {c.r}")
    by_gen = {}
    for i, c in enumerate(family):
        by_gen.setdefault(_generation(c.r), []).append(i)
    chosen: List[int] = []
    for k in sorted(by_gen):
        for i in by_gen[k]:
            if all(not interiors_overlap(family[i], family[j]) for j in chosen):
                chosen.append(i)
    return chosen
