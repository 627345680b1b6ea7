"""Pointwise operator calculus: Pucci extremal operators, anisotropic conjugation,
extremal residuals and the anisotropic (p_i)-Laplacian."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from aniharnack.errors import UsageError, NumericalError
from aniharnack.exponents import ExponentData

SIGN_THRESHOLD = 1e-14


def as_symmetric(M) -> np.ndarray:
    """Return ``M`` as a float array, rejecting non-square or asymmetric input."""
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise UsageError("matrix is not symmetric")
    return A


@dataclass(frozen=True)
class PointJet:
    """First and second derivatives of a function at one point."""

    gradient: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gradient, dtype=float))
        H = as_symmetric(self.hessian)
        if H.shape[0] != g.shape[0]:
            raise UsageError(f"hessian order {H.shape[0]} != gradient length {g.shape[0]}")
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", H)

    @property
    def order(self) -> int:
        return self.gradient.shape[0]


def eigenvalues(M) -> np.ndarray:
    A = as_symmetric(M)
    try:
        return np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed for matrix\n{A!r}") from exc


def pucci(sign: str, M, lam: float, Lam: float) -> float:
    """Pucci extremal operator of a symmetric matrix.

    ``plus`` weights positive eigenvalues by ``Lam`` and negative ones by
    ``lam``; ``minus`` does the opposite. Eigenvalues below
    ``1e-14 * ||M||`` in magnitude count as zero.
    """
    if not (0 < lam <= Lam):
        raise UsageError(f"need 0 < lambda <= Lambda, got {lam}, {Lam}")
    if sign not in ("plus", "minus"):
        raise UsageError(f"sign must be 'plus' or 'minus', got {sign!r}")
    if lam == Lam:
        return float(lam * np.trace(as_symmetric(M)))
    e = eigenvalues(M)
    cut = SIGN_THRESHOLD * (np.abs(e).max() if e.size else 0.0)
    pos = e[e > cut].sum()
    neg = e[e < -cut].sum()
    if sign == "plus":
        return float(Lam * pos + lam * neg)
    return float(lam * pos + Lam * neg)


def _scaling_diag(gradient: np.ndarray, p: np.ndarray) -> np.ndarray:
    # 0**0 == 1 in numpy, so p_i = 2 directions never degenerate
    return np.abs(gradient) ** ((p - 2.0) / 2.0)


def conjugate(jet: PointJet, p: Sequence[float]) -> np.ndarray:
    """``D H D`` with ``D = diag(|g_i|^{(p_i-2)/2})``."""
    p = np.asarray(p, dtype=float)
    if p.shape[0] != jet.order:
        raise UsageError("exponent count does not match jet order")
    d = _scaling_diag(jet.gradient, p)
    X = d[:, None] * jet.hessian * d[None, :]
    # product order differs across the diagonal; restore exact symmetry
    return 0.5 * (X + X.T)


def lower_order(jet: PointJet, p: Sequence[float]) -> float:
    """``sum_i |g_i|^{p_i - 1}``."""
    p = np.asarray(p, dtype=float)
    return float(np.sum(np.abs(jet.gradient) ** (p - 1.0)))


def extremal_residual(jet: PointJet, e: ExponentData, branch: str) -> float:
    """Left side of the super- (``M^- - mu*sum - c0``) or sub-solution inequality.

    A supersolution has ``super`` residual ``<= 0``; a subsolution has ``sub``
    residual ``>= 0``.
    """
    X = conjugate(jet, e.p)
    lot = lower_order(jet, e.p)
    if branch == "super":
        return pucci("minus", X, e.lam, e.Lam) - e.mu * lot - e.c0
    if branch == "sub":
        return pucci("plus", X, e.lam, e.Lam) + e.mu * lot + e.c0
    raise UsageError(f"branch must be 'sub' or 'super', got {branch!r}")


def pi_laplacian(jet: PointJet, p: Sequence[float]) -> float:
    """``sum_i |g_i|^{p_i-2} H_ii``."""
    p = np.asarray(p, dtype=float)
    return float(np.sum(np.abs(jet.gradient) ** (p - 2.0) * np.diag(jet.hessian)))


def parse_matrix(text: str) -> np.ndarray:
    """Parse ``"2,0;0,-1"`` (rows separated by ``;``)."""
    try:
        rows = [[float(v) for v in r.split(",")] for r in text.split(";")]
    except ValueError as exc:
        raise UsageError(f"cannot parse matrix {text!r}") from exc
    return as_symmetric(rows)
