"""Finite-difference residuals and an explicit relaxation solver for Dirichlet
problems of the anisotropic (p_i)-Laplacian and its Pucci envelopes, plus the
closed-form counterexample of Harnack failure for a wide exponent gap."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from aniharnack.calculus import PointJet
from aniharnack.errors import DomainError, NonConvergenceError, UsageError
from aniharnack.exponents import ExponentData
from aniharnack.grid import Field, Grid

OPERATORS = ("pi_laplacian", "pucci_minus_branch", "pucci_plus_branch")
EPS_REG = 1e-8
CFL = 0.9


@dataclass
class ProblemSpec:
    """Dirichlet problem ``operator(u) = rhs``.

    ``boundary`` supplies values at the grid boundary and at any node flagged
    in ``fixed`` (interior Dirichlet nodes); its other values are ignored.
    The lower-order ``mu`` term of the exponent data is not part of the
    discrete operator.
    """

    exponents: ExponentData
    boundary: Field
    rhs: Union[float, np.ndarray] = 0.0
    operator: str = "pi_laplacian"
    fixed: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise UsageError(f"operator must be one of {OPERATORS}, got {self.operator!r}")
        if self.boundary.grid.ndim != self.exponents.n:
            raise UsageError("grid dimension does not match exponents")
        rhs = np.asarray(self.rhs, dtype=float)
        if not np.all(np.isfinite(rhs)):
            raise UsageError("rhs must be finite")
        if rhs.ndim and rhs.shape != self.boundary.grid.dims:
            raise UsageError("rhs array must match the grid")

    @property
    def grid(self) -> Grid:
        return self.boundary.grid

    def dirichlet_mask(self) -> np.ndarray:
        mask = self.grid.boundary_mask()
        if self.fixed is not None:
            mask = mask | np.asarray(self.fixed, dtype=bool)
        return mask

    def shifted(self, c: float) -> "ProblemSpec":
        return ProblemSpec(self.exponents, Field(self.grid, self.boundary.values + c), self.rhs,
                           self.operator, self.fixed)


def _shift(a: np.ndarray, ax: int, step: int) -> np.ndarray:
    """Interior-aligned view of ``a`` moved by ``step`` along ``ax``."""
    idx = [slice(1, -1)] * a.ndim
    n = a.shape[ax]
    idx[ax] = slice(1 + step, n - 1 + step)
    return a[tuple(idx)]


def discrete_jets(u: Field):
    """Centered first differences, 3-point second differences and mixed differences
    at interior nodes.  Returns ``(grad, hess)`` with shapes ``(n, *interior)`` and
    ``(n, n, *interior)``."""
    v = u.values
    h = u.grid.spacing
    n = u.grid.ndim
    inner = tuple(d - 2 for d in u.grid.dims)
    grad = np.empty((n,) + inner)
    hess = np.empty((n, n) + inner)
    c = v[tuple([slice(1, -1)] * n)]
    for i in range(n):
        up, dn = _shift(v, i, 1), _shift(v, i, -1)
        grad[i] = (up - dn) / (2.0 * h[i])
        hess[i, i] = (up - 2.0 * c + dn) / h[i] ** 2
        for j in range(i + 1, n):
            def corner(si, sj):
                idx = [slice(1, -1)] * n
                idx[i] = slice(1 + si, v.shape[i] - 1 + si)
                idx[j] = slice(1 + sj, v.shape[j] - 1 + sj)
                return v[tuple(idx)]
            mixed = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * h[i] * h[j])
            hess[i, j] = mixed
            hess[j, i] = mixed
    return grad, hess


def _operator_values(grad, hess, spec: ProblemSpec) -> np.ndarray:
    e = spec.exponents
    p = np.asarray(e.p).reshape((-1,) + (1,) * (grad.ndim - 1))
    n = e.n
    if spec.operator == "pi_laplacian":
        diag = np.stack([hess[i, i] for i in range(n)])
        return np.sum(np.abs(grad) ** (p - 2.0) * diag, axis=0)
    d = np.abs(grad) ** ((p - 2.0) / 2.0)
    X = d[:, None] * hess * d[None, :]
    X = np.moveaxis(X, (0, 1), (-2, -1))
    X = 0.5 * (X + np.swapaxes(X, -1, -2))
    if e.lam == e.Lam:
        return e.lam * np.trace(X, axis1=-2, axis2=-1)
    ev = np.linalg.eigvalsh(X)
    cut = 1e-14 * np.max(np.abs(ev), axis=-1, keepdims=True)
    pos = np.where(ev > cut, ev, 0.0).sum(axis=-1)
    neg = np.where(ev < -cut, ev, 0.0).sum(axis=-1)
    if spec.operator == "pucci_minus_branch":
        return e.lam * pos + e.Lam * neg
    return e.Lam * pos + e.lam * neg


def _interior_rhs(spec: ProblemSpec) -> Union[float, np.ndarray]:
    rhs = np.asarray(spec.rhs, dtype=float)
    if rhs.ndim == 0:
        return float(rhs)
    return rhs[tuple([slice(1, -1)] * rhs.ndim)]


def _residual_and_grad(u: Field, spec: ProblemSpec):
    grad, hess = discrete_jets(u)
    res = np.zeros(u.grid.dims)
    inner = tuple([slice(1, -1)] * u.grid.ndim)
    res[inner] = _operator_values(grad, hess, spec) - _interior_rhs(spec)
    if spec.fixed is not None:
        res[np.asarray(spec.fixed, dtype=bool)] = 0.0
    return res, grad


def residual_field(u: Field, spec: ProblemSpec) -> Field:
    """``operator(discrete jet) - rhs`` at interior nodes, 0 on Dirichlet nodes."""
    if u.grid != spec.grid:
        raise UsageError("field and problem live on different grids")
    return Field(u.grid, _residual_and_grad(u, spec)[0])


def harmonic_extension(spec: ProblemSpec) -> Field:
    """Discrete Laplace solution with the problem's Dirichlet data (used as a start)."""
    grid = spec.grid
    dims = grid.dims
    N = int(np.prod(dims))
    mask = spec.dirichlet_mask().ravel()
    rows, cols, vals = [], [], []
    idx = np.arange(N).reshape(dims)
    interior = np.flatnonzero(~mask)
    diag = np.zeros(N)
    for ax, h in enumerate(grid.spacing):
        for step in (-1, 1):
            nb = np.roll(idx, -step, axis=ax).ravel()
            rows.append(interior)
            cols.append(nb[interior])
            vals.append(np.full(interior.size, 1.0 / h ** 2))
            diag[interior] -= 1.0 / h ** 2
    rows.append(interior)
    cols.append(interior)
    vals.append(diag[interior])
    bnd = np.flatnonzero(mask)
    rows.append(bnd)
    cols.append(bnd)
    vals.append(np.ones(bnd.size))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    rhs = np.zeros(N)
    rhs[bnd] = spec.boundary.values.ravel()[bnd]
    return Field(grid, spla.spsolve(A.tocsc(), rhs).reshape(dims))


def _timestep(grad: np.ndarray, spec: ProblemSpec) -> float:
    e = spec.exponents
    h = np.asarray(spec.grid.spacing)
    # (p_i - 1) is the diffusion coefficient of the linearized operator
    coef = np.array([
        (e.p[i] - 1.0) * max(float(np.max(np.abs(grad[i]))) if grad[i].size else 0.0, EPS_REG) ** (e.p[i] - 2.0)
        for i in range(e.n)
    ])
    denom = float(np.sum(2.0 * coef / h ** 2))
    if spec.operator != "pi_laplacian":
        root = np.sqrt(coef) / h
        denom = e.Lam * (denom + float(root.sum() ** 2 - np.sum(root ** 2)))
    return CFL / denom


def relax_solve(spec: ProblemSpec, tol: float = 1e-8, max_iter: int = 2_000_000,
                initial: Optional[Field] = None) -> Field:
    """Explicit pseudo-time relaxation ``u <- u + dt * residual(u)``.

    ``dt = 0.9 / sum_i (2 (p_i - 1) max(|D_i u|, 1e-8)^{p_i-2} / h_i^2)`` is
    recomputed every sweep (with extra Lambda and mixed-term factors for the Pucci
    operators).  Stops when ``max |update| < tol * dt``, i.e. when the
    interior residual drops below ``tol``.  The start is ``initial`` or the
    discrete harmonic extension of the Dirichlet data.

    The returned field's ``meta`` holds ``iterations`` and ``residual``.
    """
    if not tol > 0:
        raise UsageError("tol must be positive")
    grid = spec.grid
    mask = spec.dirichlet_mask()
    u = harmonic_extension(spec) if initial is None else initial.copy()
    if u.grid != grid:
        raise UsageError("initial field lives on a different grid")
    vals = u.values
    vals[mask] = spec.boundary.values[mask]
    res_norm = math.inf
    for it in range(1, max_iter + 1):
        res, grad = _residual_and_grad(u, spec)
        dt = _timestep(grad, spec)
        res_norm = float(np.max(np.abs(res)))
        if res_norm < tol:
            u.meta = {"iterations": it - 1, "residual": res_norm}
            return u
        vals += dt * res
    raise NonConvergenceError(f"no convergence after {max_iter} sweeps, residual {res_norm:.3e}", res_norm)


def comparison_check(spec_lo: ProblemSpec, spec_hi: ProblemSpec, tol: float = 1e-6,
                     solve_tol: float = 1e-9, max_iter: int = 2_000_000) -> bool:
    """Solve both problems and test ``u_lo <= u_hi + tol`` at every node."""
    if spec_lo.grid != spec_hi.grid or spec_lo.operator != spec_hi.operator:
        raise UsageError("specs must share grid and operator")
    mask = spec_lo.dirichlet_mask()
    if np.any(spec_lo.boundary.values[mask] > spec_hi.boundary.values[mask]):
        raise UsageError("boundary_lo must not exceed boundary_hi")
    lo = relax_solve(spec_lo, solve_tol, max_iter)
    hi = relax_solve(spec_hi, solve_tol, max_iter)
    return bool(np.all(lo.values <= hi.values + tol))


def counterexample_value(x) -> float:
    """``sqrt((n-4)/8) x_n^2 / |x'|`` with ``x' = (x_1, ..., x_{n-1})``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    rho = np.sqrt(np.sum(x[..., :-1] ** 2, axis=-1))
    return math.sqrt((n - 4) / 8.0) * x[..., -1] ** 2 / rho


def counterexample_jet(n: int, x) -> Tuple[PointJet, float]:
    """Analytic jet of the counterexample and the residual
    ``sum_{i<n} D_ii u + |D_n u|^2 D_nn u`` (identically zero)."""
    if n < 6:
        raise UsageError("the counterexample needs n >= 6")
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise UsageError(f"expected a point in R^{n}")
    xp, xn = x[:-1], x[-1]
    rho2 = float(np.sum(xp ** 2))
    if rho2 == 0:
        raise DomainError("x lies on the singular set x_1 = ... = x_{n-1} = 0")
    rho = math.sqrt(rho2)
    c = math.sqrt((n - 4) / 8.0)
    g = np.empty(n)
    g[:-1] = -c * xn ** 2 * xp / rho ** 3
    g[-1] = 2.0 * c * xn / rho
    H = np.empty((n, n))
    # d/dx_j (-c xn^2 x_i rho^-3) = -c xn^2 (delta_ij rho^-3 - 3 x_i x_j rho^-5)
    H[:-1, :-1] = -c * xn ** 2 * (np.eye(n - 1) / rho ** 3 - 3.0 * np.outer(xp, xp) / rho ** 5)
    H[:-1, -1] = -2.0 * c * xn * xp / rho ** 3
    H[-1, :-1] = H[:-1, -1]
    H[-1, -1] = 2.0 * c / rho
    residual = float(np.trace(H[:-1, :-1]) + g[-1] ** 2 * H[-1, -1])
    return PointJet(g, H), residual
