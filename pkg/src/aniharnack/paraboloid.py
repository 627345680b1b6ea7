"""Anisotropic sliding paraboloids on grid functions: touching sets, the
vertex-to-touch map and the empirical basic measure estimate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from aniharnack.errors import ExperimentError, UsageError
from aniharnack.exponents import ExponentData
from aniharnack.geometry import IntrinsicCube
from aniharnack.grid import Field, Grid


@dataclass(frozen=True)
class ParaboloidSpec:
    K: float
    exponents: ExponentData

    def __post_init__(self):
        if not self.K > 0:
            raise UsageError(f"opening K must be positive, got {self.K}")

    @property
    def coefficients(self) -> np.ndarray:
        """``c_i = (K (p_i - 1))^{1/(p_i-1)} (p_i - 1) / p_i``."""
        p = np.asarray(self.exponents.p)
        return (self.K * (p - 1.0)) ** (1.0 / (p - 1.0)) * (p - 1.0) / p

    @property
    def powers(self) -> np.ndarray:
        p = np.asarray(self.exponents.p)
        return p / (p - 1.0)


def eval_paraboloid(x, spec: ParaboloidSpec):
    """``-sum_i c_i |x_i|^{p_i/(p_i-1)}``; vectorized over leading axes of ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.exponents.n:
        raise UsageError("point dimension does not match exponents")
    out = -np.sum(spec.coefficients * np.abs(x) ** spec.powers, axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass
class TouchReport:
    """Result of sliding one paraboloid per vertex under ``u``.

    ``touch_index[j]`` is the flat (row-major) node index where the
    paraboloid with vertex ``vertices[j]`` first touches; ``interior[j]``
    tells whether that node is off the grid boundary.
    """

    grid: Grid
    vertices: np.ndarray
    touch_index: np.ndarray
    interior: np.ndarray

    @property
    def touch_points(self) -> np.ndarray:
        return self.grid.points()[self.touch_index]

    @property
    def touch_mask(self) -> np.ndarray:
        mask = np.zeros(int(np.prod(self.grid.dims)), dtype=bool)
        mask[self.touch_index[self.interior]] = True
        return mask.reshape(self.grid.dims)

    @property
    def vertex_of(self) -> Dict[int, List[int]]:
        """Interior touch node -> indices of the vertices touching there."""
        out: Dict[int, List[int]] = {}
        for j in np.flatnonzero(self.interior):
            out.setdefault(int(self.touch_index[j]), []).append(int(j))
        return out

    @property
    def touch_count(self) -> int:
        return int(self.touch_mask.sum())

    @property
    def measure_fraction(self) -> float:
        vol = float(np.prod(self.grid.extents))
        return min(1.0, self.touch_count * self.grid.cell_volume / vol)


def slide_touch(u: Field, vertices, spec: ParaboloidSpec, chunk: int = 256) -> TouchReport:
    """For each vertex ``y`` find ``argmin_z u(z) - phi(z - y)`` over all nodes.

    Ties go to the lexicographically smallest node, which is the first one in
    row-major order.
    """
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    if V.shape[1] != u.grid.ndim:
        raise UsageError("vertex dimension does not match the grid")
    lo, hi = np.asarray(u.grid.origin), np.asarray(u.grid.upper)
    if np.any(V < lo - 1e-12) or np.any(V > hi + 1e-12):
        raise UsageError("vertices must lie inside the search cube")
    Z = u.grid.points()
    uz = u.values.ravel()
    idx = np.empty(len(V), dtype=int)
    for s in range(0, len(V), chunk):
        Y = V[s:s + chunk]
        vals = uz[None, :] - eval_paraboloid(Z[None, :, :] - Y[:, None, :], spec)
        idx[s:s + chunk] = np.argmin(vals, axis=1)
    interior = ~u.grid.boundary_mask().ravel()[idx]
    return TouchReport(u.grid, V, idx, interior)


def default_A(n: int) -> float:
    return float(max(64 * n + 1, 2))


def jacobian_bound(e: ExponentData, K: float, eps: float) -> float:
    """Explicit bound on the vertex-map Jacobian on interior touch points,
    ``((n Lam + eps/K + 2 Lam sum_i (p_i - 1)) / (n lam))^n``."""
    n = e.n
    return ((n * e.Lam + eps / K + 2.0 * e.Lam * sum(pi - 1.0 for pi in e.p)) / (n * e.lam)) ** n


@dataclass
class BasicMeasureResult:
    delta_observed: float
    r0: float
    K: float
    touch_count: int
    vertex_count: int
    contained: bool
    jacobian_bound: float
    report: TouchReport

    @property
    def vertex_touch_ratio(self) -> float:
        """Empirical ``|V| / |T|`` in node counts."""
        return self.vertex_count / self.touch_count if self.touch_count else float("inf")

    def as_csv(self) -> str:
        return f"{self.delta_observed!r},{self.r0!r},{self.K!r},{self.touch_count}"


def _subgrid(u: Field, cube: IntrinsicCube) -> Field:
    mask = cube.mask(u.grid)
    if not mask.any():
        raise ExperimentError("search cube contains no grid nodes")
    sl = []
    for ax in range(u.grid.ndim):
        other = tuple(a for a in range(u.grid.ndim) if a != ax)
        hits = np.flatnonzero(mask.any(axis=other))
        sl.append(slice(hits[0], hits[-1] + 1))
    sl = tuple(sl)
    origin = tuple(ax[s.start] for ax, s in zip(u.grid.axes(), sl))
    dims = tuple(s.stop - s.start for s in sl)
    return Field(Grid(dims, u.grid.spacing, origin), u.values[sl])


def basic_measure_experiment(u: Field, eps: float, M0: float, A: Optional[float] = None,
                             exponents: Optional[ExponentData] = None) -> BasicMeasureResult:
    """Slide paraboloids of opening ``K = M0^{p_n-1}`` with vertices on the
    nodes of ``K_{r0}(1)``, ``r0 = M0^{-(p_n-p_1)} A^{-p_n}``, under ``u``
    restricted to ``K_1(M0)``.

    ``delta_observed`` is the cell-counted measure of the interior touching
    set inside ``{u < M0}``, relative to ``|K_1(M0)|``.  ``contained``
    records whether every interior touch point satisfies ``u < M0``.
    """
    e = exponents if exponents is not None else ExponentData((2.0,) * u.grid.ndim)
    if e.n != u.grid.ndim:
        raise UsageError("exponents do not match the grid dimension")
    if not (eps > 0 and M0 > 0):
        raise UsageError("need eps, M0 > 0")
    A = default_A(e.n) if A is None else float(A)
    K = M0 ** (e.pn - 1.0)
    r0 = M0 ** (-(e.pn - e.p1)) * A ** (-e.pn)
    outer = IntrinsicCube(e, 1.0, M0)
    if not outer.fits_in(u.grid):
        raise ExperimentError("grid does not cover K_1(M0)")
    if np.any(u.values < 0):
        raise ExperimentError("u must be nonnegative")
    search = _subgrid(u, outer)
    vmask = IntrinsicCube(e, r0, 1.0).mask(search.grid)
    V = search.grid.points()[vmask.ravel()]
    if len(V) == 0:
        raise ExperimentError(f"K_r0(1) with r0={r0:.3g} contains no grid nodes; refine the grid or lower A")
    if float(search.values[vmask].min()) > 1.0:
        raise ExperimentError("inf of u over K_r0(1) exceeds 1")
    spec = ParaboloidSpec(K, e)
    rep = slide_touch(search, V, spec)
    tm = rep.touch_mask
    below = search.values < M0
    contained = bool(np.all(below[tm]))
    count = int(np.sum(tm & below))
    delta = count * search.grid.cell_volume / outer.volume
    return BasicMeasureResult(delta, r0, K, int(tm.sum()), len(V), contained,
                              jacobian_bound(e, K, eps), rep)
