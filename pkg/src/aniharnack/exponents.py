"""Exponent data (n, p_i, lambda, Lambda, mu, c0) and the structural conditions on p_i."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from aniharnack.errors import UsageError

EQUALITY_TOL = 1e-12

CONDITION_NAMES = (
    "harnack-pcond",
    "boundedness-optpcond",
    "parabolic-ppcond",
    "gap-pwcond",
)

_ALIASES = {
    "pcond": "harnack-pcond",
    "optpcond": "boundedness-optpcond",
    "ppcond": "parabolic-ppcond",
    "pwcond": "gap-pwcond",
}


@dataclass(frozen=True)
class ExponentData:
    """Operator class data.

    ``p`` must be ascending with ``p[0] >= 2`` (degenerate range). ``n`` is
    inferred from ``p`` when omitted. One-dimensional data is accepted so that
    single-coordinate reductions can be exercised; the Harnack theory itself
    is stated for ``n >= 2``.
    """

    p: Tuple[float, ...]
    lam: float = 1.0
    Lam: float = 1.0
    mu: float = 0.0
    c0: float = 0.0
    n: Optional[int] = None

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        object.__setattr__(self, "p", p)
        if self.n is None:
            object.__setattr__(self, "n", len(p))
        if self.n != len(p) or self.n < 1:
            raise UsageError(f"n={self.n} does not match {len(p)} exponents")
        if not all(math.isfinite(v) for v in p):
            raise UsageError(f"non-finite exponent in {p}")
        if p[0] < 2:
            raise UsageError(f"p_1={p[0]} < 2 lies in the singular range")
        if any(b < a for a, b in zip(p, p[1:])):
            raise UsageError(f"exponents must be ascending, got {p}")
        if not (0 < self.lam <= self.Lam):
            raise UsageError(f"need 0 < lambda <= Lambda, got {self.lam}, {self.Lam}")
        if self.mu < 0 or self.c0 < 0:
            raise UsageError("mu and c0 must be nonnegative")

    @property
    def p1(self) -> float:
        return self.p[0]

    @property
    def pn(self) -> float:
        return self.p[-1]

    @property
    def ellipticity_ratio(self) -> float:
        return self.lam / self.Lam


@dataclass(frozen=True)
class ConditionReport:
    name: str
    lhs: float
    rhs: float
    verdict: str  # "strict" | "equality" | "fails"

    def as_csv(self) -> str:
        return f"{self.name},{self.lhs!r},{self.rhs!r},{self.verdict}"


def harmonic_mean(e: ExponentData) -> float:
    """Harmonic mean ``((1/n) sum 1/p_i)^{-1}`` of the exponents."""
    return e.n / math.fsum(1.0 / v for v in e.p)


def alpha_beta(e: ExponentData) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Intrinsic scaling exponents ``alpha_i = 1/p_i`` and ``beta_i = -(p_n - p_i)/p_i``."""
    alpha = tuple(1.0 / v for v in e.p)
    beta = tuple(-(e.pn - v) / v for v in e.p)
    return alpha, beta


def _verdict(lhs: float, rhs: float) -> str:
    if math.isfinite(lhs) and math.isfinite(rhs) and abs(lhs - rhs) <= EQUALITY_TOL:
        return "equality"
    return "strict" if lhs < rhs else "fails"


def _ratio(num: float, den: float) -> float:
    return math.inf if den <= 0 else num / den


def check_condition(e: ExponentData, which: str, q: Optional[float] = None) -> ConditionReport:
    """Evaluate one exponent condition as ``lhs`` versus ``rhs``.

    ``which`` accepts the full names in ``CONDITION_NAMES`` or the short forms
    ``pcond``, ``optpcond``, ``ppcond``, ``pwcond``. The gap condition needs
    the caller's ``q``.
    """
    name = _ALIASES.get(which, which)
    if name not in CONDITION_NAMES:
        raise UsageError(f"unknown condition {which!r}")
    pbar = harmonic_mean(e)
    n = e.n
    if name == "harnack-pcond":
        lhs = _ratio(e.pn - 1.0, e.p1 - 1.0)
        rhs = (e.pn / pbar) * _ratio(n, n - e.ellipticity_ratio)
        return ConditionReport(name, lhs, rhs, _verdict(lhs, rhs))
    if name == "boundedness-optpcond":
        lhs = e.pn
        rhs = _ratio(n * pbar, n - pbar)
        return ConditionReport(name, lhs, rhs, _verdict(lhs, rhs))
    if name == "parabolic-ppcond":
        lhs = e.pn
        rhs = pbar * (1.0 + 1.0 / n)
        verdict = _verdict(lhs, rhs)
        if e.p1 <= 2.0:
            # the companion requirement 2 < p_1 is strict
            verdict = "fails"
        return ConditionReport(name, lhs, rhs, verdict)
    if q is None or not q > 0:
        raise UsageError("gap-pwcond needs a caller-supplied q > 0")
    lhs = e.pn - e.p1
    rhs = 1.0 / q
    return ConditionReport(name, lhs, rhs, _verdict(lhs, rhs))


def parse_exponents(text: str) -> Tuple[float, ...]:
    """Parse ``"2,2,2.5"`` into a tuple of floats."""
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"cannot parse exponent list {text!r}") from exc


def make(p: Sequence[float], lam: float = 1.0, Lam: float = 1.0, mu: float = 0.0, c0: float = 0.0) -> ExponentData:
    return ExponentData(tuple(p), lam, Lam, mu, c0)
