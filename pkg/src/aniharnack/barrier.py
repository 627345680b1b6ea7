"""Explicit anisotropic barrier ``Phi(x) = |bx|_a^{-gamma} / gamma``.

The parameter system (gamma, delta, d, a_i, k_i, h_i, b_i, kappa) is solved in
closed form, Phi and its derivatives are evaluated analytically, and the
subsolution inequality

    M^-(D Hess(Phi) D) - mu * sum |D_i Phi|^{p_i-1} > Phi^{d0}

is certified numerically on samples of ``Q_R`` (``D`` is the gradient-power
conjugation).  A multiprecision spot check replays the chain of lower bounds
that makes the inequality hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import mpmath
import numpy as np

from aniharnack.calculus import PointJet, conjugate, pucci
from aniharnack.errors import DomainError, InfeasibleError, NumericalError, UsageError
from aniharnack.exponents import ExponentData, alpha_beta, check_condition, harmonic_mean

DELTA_MAX_HALVINGS = 60
MIN_RELATIVE_WIDTH = 1e-3
KAPPA_SAFETY = 2.0
HYPERPLANE_GUARD = 1e-6


@dataclass(frozen=True)
class FeasibilityWindow:
    gamma_lo: float
    gamma_hi: float
    delta: float
    d_lo: float = math.nan
    d_hi: float = math.nan

    @property
    def gamma_nonempty(self) -> bool:
        return self.gamma_lo < self.gamma_hi

    @property
    def relative_width(self) -> float:
        if math.isinf(self.gamma_hi):
            return math.inf
        return (self.gamma_hi - self.gamma_lo) / self.gamma_hi


@dataclass(frozen=True)
class BarrierParams:
    exponents: ExponentData
    gamma: float
    delta: float
    d: float
    d0: float
    a: np.ndarray
    k: np.ndarray
    h: np.ndarray
    b: np.ndarray
    kappa: float

    @property
    def n(self) -> int:
        return self.exponents.n

    def as_rows(self) -> List[Tuple[str, float]]:
        rows = [("gamma", self.gamma), ("delta", self.delta), ("d", self.d), ("d0", self.d0)]
        for name in ("a", "k", "h", "b"):
            rows += [(f"{name}_{i + 1}", float(v)) for i, v in enumerate(getattr(self, name))]
        rows.append(("kappa", self.kappa))
        return rows

    @classmethod
    def from_rows(cls, rows, exponents: ExponentData) -> "BarrierParams":
        table = {k: float(v) for k, v in rows}
        n = exponents.n
        vec = lambda name: np.array([table[f"{name}_{i + 1}"] for i in range(n)])
        return cls(exponents, table["gamma"], table["delta"], table["d"], table["d0"],
                   vec("a"), vec("k"), vec("h"), vec("b"), table["kappa"])


def feasibility_window(e: ExponentData, delta: float, gamma: Optional[float] = None) -> FeasibilityWindow:
    """Gamma window at the given delta, and the d window at ``gamma`` if supplied."""
    t = e.ellipticity_ratio
    pbar = harmonic_mean(e)
    n = e.n
    gamma_lo = (n - t) / (t + n * (1.0 - delta) * (e.pn / pbar - 1.0))
    gamma_hi = math.inf if e.pn == e.p1 else (e.p1 - 1.0) / (e.pn - e.p1)
    if gamma is None:
        return FeasibilityWindow(gamma_lo, gamma_hi, delta)
    return FeasibilityWindow(gamma_lo, gamma_hi, delta,
                             gamma * (e.pn - 2.0) - 1.0, (gamma + 1.0) * (e.p1 - 2.0))


def params_from_choice(e: ExponentData, gamma: float, delta: float, d: float,
                       kappa: Optional[float] = None) -> BarrierParams:
    """Complete the parameter set from a choice of (gamma, delta, d).

    ``kappa`` defaults to twice the smallest value for which the subsolution
    bound closes.
    """
    p = np.asarray(e.p)
    a = p / (d + 1.0 - gamma * (p - 2.0))
    k = (gamma + 1.0) * (p - 2.0) - d
    h = (e.Lam / ((1.0 + gamma) * e.lam)) * (1.0 - (1.0 - delta) / a)
    d0 = 1.0 + (d + 1.0) / gamma
    slack = 1.0 - h.sum()
    if kappa is None:
        if not slack > 0:
            raise InfeasibleError(f"sum of h_i = {h.sum()} >= 1", feasibility_window(e, delta, gamma))
        # the chain needs kappa > gamma^{-d0} / (...); gamma^{d0} is also kept so both readings hold
        kappa = KAPPA_SAFETY * max(gamma ** d0, gamma ** (-d0)) / (e.lam * (gamma + 1.0) * slack)
    b = kappa ** (1.0 / p) / (a * h ** (k / p))
    return BarrierParams(e, float(gamma), float(delta), float(d), float(d0), a, k, h, b, float(kappa))


def solve_barrier_params(e: ExponentData) -> BarrierParams:
    """Solve the barrier parameter system.

    delta runs over ``1/2, 1/4, ...`` until the gamma window has relative
    width at least ``1e-3``; gamma and d are the midpoints of their windows
    (gamma = gamma_lo + 1 when the window is unbounded).
    """
    rep = check_condition(e, "pcond")
    if rep.verdict != "strict":
        raise InfeasibleError(
            f"pcond verdict {rep.verdict!r} (lhs={rep.lhs}, rhs={rep.rhs}); no barrier window",
            feasibility_window(e, 0.0))
    win = None
    for j in range(1, DELTA_MAX_HALVINGS + 1):
        win = feasibility_window(e, 2.0 ** (-j))
        if win.gamma_nonempty and win.relative_width >= MIN_RELATIVE_WIDTH:
            break
    else:
        raise InfeasibleError("gamma window stays too narrow for every delta", win)
    if math.isinf(win.gamma_hi):
        gamma = win.gamma_lo + 1.0
    else:
        gamma = 0.5 * (win.gamma_lo + win.gamma_hi)
    dwin = feasibility_window(e, win.delta, gamma)
    d = 0.5 * (dwin.d_lo + dwin.d_hi)
    params = params_from_choice(e, gamma, win.delta, d)
    bad = invariant_violations(params)
    if bad:
        raise NumericalError("solved barrier parameters violate: " + "; ".join(bad))
    return params


def invariant_violations(P: BarrierParams, tol: float = 1e-12) -> List[str]:
    """Every BarrierParams invariant that fails, as readable strings."""
    e = P.exponents
    p = np.asarray(e.p)
    out = []
    win = feasibility_window(e, P.delta, P.gamma)
    if not P.gamma > 0:
        out.append("gamma <= 0")
    if not 0 <= P.delta < 1:
        out.append("delta outside [0, 1)")
    if not win.d_lo < P.d < win.d_hi:
        out.append(f"d={P.d} outside ({win.d_lo}, {win.d_hi})")
    if not P.gamma < win.gamma_hi:
        out.append("gamma above (p1-1)/(pn-p1)")
    if not np.allclose(P.a, p / (P.d + 1.0 - P.gamma * (p - 2.0)), rtol=tol, atol=0):
        out.append("a_i formula")
    if not np.all(P.a > p / (p - 1.0)) or not np.all(P.a > 1):
        out.append("a_i <= p_i/(p_i-1)")
    if not np.all(P.k > 0):
        out.append("k_i <= 0")
    collapse = -(P.gamma + 1.0) * (p - 2.0) + (1.0 - 1.0 / P.a) * p - 1.0 + P.d
    if np.max(np.abs(collapse)) > tol * max(1.0, abs(P.d)):
        out.append(f"exponent collapse off by {np.max(np.abs(collapse))}")
    if np.max(np.abs((P.a - 1.0) * p - P.a - P.a * P.k)) > tol * max(1.0, float(np.max(P.a * P.k))):
        out.append("(a_i-1)p_i - a_i != a_i k_i")
    h_ref = (e.Lam / ((1.0 + P.gamma) * e.lam)) * (1.0 - (1.0 - P.delta) / P.a)
    if not np.allclose(P.h, h_ref, rtol=tol, atol=0) or not np.all(P.h > 0):
        out.append("h_i formula")
    if not P.h.sum() < 1:
        out.append(f"sum h_i = {P.h.sum()} >= 1")
    b_ref = P.kappa ** (1.0 / p) / (P.a * P.h ** (P.k / p))
    if not np.allclose(P.b, b_ref, rtol=1e-10, atol=0) or not np.all(P.b > 0):
        out.append("b_i formula")
    if not math.isclose(P.d0, 1.0 + (P.d + 1.0) / P.gamma, rel_tol=tol):
        out.append("d0 formula")
    if not P.d0 > e.pn - 1.0:
        out.append("d0 <= pn - 1")
    need = P.gamma ** (-P.d0) / (e.lam * (P.gamma + 1.0) * (1.0 - P.h.sum()))
    if not P.kappa > need:
        out.append("kappa below the closing bound")
    return out


class BxaEval(NamedTuple):
    value: float
    gradient: np.ndarray
    hessian_diag: np.ndarray
    hessian_undefined: np.ndarray


def eval_bxa(x, P: BarrierParams) -> BxaEval:
    """``|bx|_a = sum |b_i x_i|^{a_i}`` with gradient and diagonal Hessian.

    Second derivatives along axes where ``x_i = 0`` and ``a_i < 2`` are
    returned as NaN and flagged in ``hessian_undefined``.
    """
    x = np.asarray(x, dtype=float)
    bx = np.abs(P.b * x)
    value = float(np.sum(bx ** P.a))
    grad = P.a * P.b * bx ** (P.a - 1.0) * np.sign(x)
    undefined = (x == 0) & (P.a < 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        hd = P.a * (P.a - 1.0) * P.b ** 2 * bx ** (P.a - 2.0)
    hd = np.where(undefined, np.nan, hd)
    return BxaEval(value, grad, hd, undefined)


def phi_jets(X: np.ndarray, P: BarrierParams):
    """Vectorized value, gradient and Hessian of Phi at the rows of ``X``."""
    bx = np.abs(P.b * X)
    s = np.sum(bx ** P.a, axis=1)
    ds = P.a * P.b * bx ** (P.a - 1.0) * np.sign(X)
    d2s = P.a * (P.a - 1.0) * P.b ** 2 * bx ** (P.a - 2.0)
    g = P.gamma
    value = s ** (-g) / g
    grad = -(s ** (-(g + 1.0)))[:, None] * ds
    # outer product first so the result is bitwise symmetric
    hess = ((g + 1.0) * s ** (-(g + 2.0)))[:, None, None] * (ds[:, :, None] * ds[:, None, :])
    idx = np.arange(X.shape[1])
    hess[:, idx, idx] -= (s ** (-(g + 1.0)))[:, None] * d2s
    return value, grad, hess


def eval_phi(x, P: BarrierParams):
    """Value, gradient and Hessian of the barrier at ``x != 0``."""
    x = np.asarray(x, dtype=float)
    if not np.any(x != 0):
        raise DomainError("the barrier has a pole at the origin")
    v, g, H = phi_jets(x[None, :], P)
    return float(v[0]), g[0], H[0]


def margins(X: np.ndarray, P: BarrierParams, mu: float) -> np.ndarray:
    """Subsolution margin at each row of ``X`` (all coordinates nonzero)."""
    e = P.exponents
    p = np.asarray(e.p)
    value, grad, hess = phi_jets(X, P)
    dscale = np.abs(grad) ** ((p - 2.0) / 2.0)
    conj = dscale[:, :, None] * hess * dscale[:, None, :]
    conj = 0.5 * (conj + np.swapaxes(conj, 1, 2))
    try:
        ev = np.linalg.eigvalsh(conj)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigenvalue iteration failed on a barrier Hessian") from exc
    cut = 1e-14 * np.max(np.abs(ev), axis=1, keepdims=True)
    pos = np.where(ev > cut, ev, 0.0).sum(axis=1)
    neg = np.where(ev < -cut, ev, 0.0).sum(axis=1)
    m_minus = e.lam * pos + e.Lam * neg
    lot = np.sum(np.abs(grad) ** (p - 1.0), axis=1)
    return m_minus - mu * lot - value ** P.d0


def margin_at(x, P: BarrierParams, mu: float) -> float:
    """Scalar margin through the generic pointwise calculus (used as a cross-check)."""
    e = P.exponents
    v, g, H = eval_phi(x, P)
    X = conjugate(PointJet(g, H), e.p)
    lot = float(np.sum(np.abs(g) ** (np.asarray(e.p) - 1.0)))
    return pucci("minus", X, e.lam, e.Lam) - mu * lot - v ** P.d0


@dataclass
class Certificate:
    passed: bool
    min_margin: float
    argmin: np.ndarray
    min_relative_margin: float
    count: int
    R: float
    mu: float
    spot_checks: list = field(default_factory=list)

    def summary(self) -> str:
        return (f"passed={self.passed} samples={self.count} R={self.R} mu={self.mu} "
                f"min_margin={self.min_margin:.6e} min_relative_margin={self.min_relative_margin:.6e} "
                f"argmin={np.array2string(self.argmin, precision=6)}")


def sample_points(n: int, R: float, sampler: str, count: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Points of the open cube ``Q_R`` at least ``1e-6 R`` from every coordinate hyperplane."""
    if sampler == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        X = rng.uniform(-R, R, size=(count, n))
    elif sampler == "grid":
        m = max(1, int(math.ceil(count ** (1.0 / n))))
        ax = -R + (np.arange(m) + 0.5) * (2.0 * R / m)
        X = np.stack([c.ravel() for c in np.meshgrid(*([ax] * n), indexing="ij")], axis=1)
    else:
        raise UsageError(f"sampler must be 'grid' or 'random', got {sampler!r}")
    keep = np.min(np.abs(X), axis=1) >= HYPERPLANE_GUARD * R
    return X[keep]


def certify_subsolution(P: BarrierParams, R: float, mu: float, sampler: str = "random", count: int = 10_000,
                        seed: int = 0, spot_checks: int = 0, chunk: int = 4096) -> Certificate:
    """Sample the subsolution margin on ``Q_R`` and report the minimum.

    ``mu`` must not exceed ``delta * Lambda / R``. With ``spot_checks > 0``
    that many sampled points are replayed in multiprecision (see
    :func:`mp_spot_check`).
    """
    if not R > 0:
        raise UsageError("R must be positive")
    limit = P.delta * P.exponents.Lam / R
    if mu < 0 or mu > limit:
        raise UsageError(f"mu={mu} exceeds the admissible delta*Lambda/R = {limit}")
    rng = np.random.default_rng(seed)
    X = sample_points(P.n, R, sampler, count, rng)
    if X.shape[0] == 0:
        raise UsageError("sampler produced no admissible points")
    m = np.concatenate([margins(X[i:i + chunk], P, mu) for i in range(0, X.shape[0], chunk)])
    phi_d0 = (phi_jets(X, P)[0]) ** P.d0
    rel = m / phi_d0
    # deterministic arg-min: smallest value, ties broken lexicographically on the point
    order = np.lexsort(tuple(X[:, j] for j in reversed(range(P.n))) + (m,))
    i = int(order[0])
    cert = Certificate(bool(m[i] > 0), float(m[i]), X[i].copy(), float(rel.min()), int(X.shape[0]), R, mu)
    if spot_checks:
        pick = rng.choice(X.shape[0], size=min(spot_checks, X.shape[0]), replace=False)
        cert.spot_checks = [mp_spot_check(X[j], P, mu) for j in pick]
        if not all(sc["chain_holds"] for sc in cert.spot_checks):
            cert.passed = False
    return cert


def mp_spot_check(x, P: BarrierParams, mu: float, dps: int = 50) -> dict:
    """Replay the barrier's chain of lower bounds in multiprecision at ``x``.

    The links checked are

        exact margin + Phi^{d0}  >=  sum_i w_i (lam (gamma+1) tau_i - Lam (1 - (1 - mu|x_i|/Lam)/a_i))
                                 >=  |bx|_a^{-(d+gamma+1)} lam (gamma+1) sum_i (a_i b_i)^{p_i} tau_i^{k_i} (tau_i - h_i)
                                 >=  kappa lam (gamma+1) gamma^{d0} (1 - sum h_i) Phi^{d0}
                                 >   Phi^{d0}

    where ``tau_i = |b_i x_i|^{a_i} / |bx|_a`` and the weights ``w_i`` are the
    common coordinate factors.  The exact margin uses the multiprecision
    symmetric eigensolver.
    """
    e = P.exponents
    with mpmath.workdps(dps):
        mpf = mpmath.mpf
        n = P.n
        x = [mpf(float(v)) for v in x]
        a = [mpf(float(v)) for v in P.a]
        b = [mpf(float(v)) for v in P.b]
        k = [mpf(float(v)) for v in P.k]
        h = [mpf(float(v)) for v in P.h]
        p = [mpf(v) for v in e.p]
        g = mpf(P.gamma)
        lam, Lam, mu_ = mpf(e.lam), mpf(e.Lam), mpf(mu)
        bx = [abs(b[i] * x[i]) for i in range(n)]
        s = mpmath.fsum(bx[i] ** a[i] for i in range(n))
        ds = [a[i] * b[i] * bx[i] ** (a[i] - 1) * mpmath.sign(x[i]) for i in range(n)]
        d2s = [a[i] * (a[i] - 1) * b[i] ** 2 * bx[i] ** (a[i] - 2) for i in range(n)]
        phi = s ** (-g) / g
        grad = [-(s ** (-(g + 1))) * ds[i] for i in range(n)]
        H = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                H[i, j] = (g + 1) * s ** (-(g + 2)) * ds[i] * ds[j]
            H[i, i] -= s ** (-(g + 1)) * d2s[i]
        dsc = [abs(grad[i]) ** ((p[i] - 2) / 2) for i in range(n)]
        C = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                C[i, j] = dsc[i] * H[i, j] * dsc[j]
        ev = mpmath.eigsy(C, eigvals_only=True)
        m_minus = mpmath.fsum(lam * v if v > 0 else Lam * v for v in ev)
        lot = mpmath.fsum(abs(grad[i]) ** (p[i] - 1) for i in range(n))
        phi_d0 = phi ** mpf(P.d0)
        exact = m_minus - mu_ * lot
        tau = [bx[i] ** a[i] / s for i in range(n)]
        first = mpmath.fsum(
            s ** (-(g + 1)) * (a[i] * b[i]) ** p[i] * s ** (-(g + 1) * (p[i] - 2))
            * bx[i] ** ((a[i] - 1) * p[i] - a[i])
            * (lam * (g + 1) * tau[i] - Lam * (1 - (1 - (mu_ / Lam) * abs(x[i])) / a[i]))
            for i in range(n))
        d = mpf(P.d)
        second = s ** (-(d + g + 1)) * lam * (g + 1) * mpmath.fsum(
            (a[i] * b[i]) ** p[i] * tau[i] ** k[i] * (tau[i] - h[i]) for i in range(n))
        third = mpf(P.kappa) * lam * (g + 1) * g ** mpf(P.d0) * (1 - mpmath.fsum(h)) * phi_d0
        # each link is an inequality between quantities of equal magnitude; allow dps-level rounding
        slack = mpf(10) ** (-(dps - 10)) * (abs(exact) + abs(first) + phi_d0)
        links = [exact >= first - slack, first >= second - slack, second >= third - slack, third > phi_d0]
        return {
            "point": [float(v) for v in x],
            "margin": float(exact - phi_d0),
            "relative_margin": float((exact - phi_d0) / phi_d0),
            "links": [bool(v) for v in links],
            "chain_holds": all(links),
        }


def coordinate_brackets(x, P: BarrierParams, mu: float) -> Tuple[np.ndarray, np.ndarray]:
    """``tau_i`` and the per-coordinate bracket ``lam(gamma+1) tau_i - Lam(1 - (1 - mu|x_i|/Lam)/a_i)``."""
    e = P.exponents
    x = np.asarray(x, dtype=float)
    bx = np.abs(P.b * x) ** P.a
    tau = bx / bx.sum()
    bracket = e.lam * (P.gamma + 1.0) * tau - e.Lam * (1.0 - (1.0 - (mu / e.Lam) * np.abs(x)) / P.a)
    return tau, bracket


def phi_extremes(P: BarrierParams, r: float, level: float, side: str) -> float:
    """Closed-form extremes of Phi relative to the intrinsic cube ``K_r(level)``.

    ``sup_outside`` is the supremum over the complement of the cube, reached
    at the face centres.  ``inf_inside`` is the infimum over the cube, reached
    at a corner.
    """
    if not (r > 0 and level > 0):
        raise UsageError("r and level must be positive")
    alpha, beta = alpha_beta(P.exponents)
    w = r ** np.array(alpha) * level ** np.array(beta)
    terms = (P.b * w) ** P.a
    if side == "sup_outside":
        return float(terms.min() ** (-P.gamma) / P.gamma)
    if side == "inf_inside":
        return float(terms.sum() ** (-P.gamma) / P.gamma)
    raise UsageError(f"side must be 'sup_outside' or 'inf_inside', got {side!r}")


def simple_inequality(k, h, tau) -> Tuple[float, float]:
    """``(sum h_i^{-k_i} tau_i^{k_i} (tau_i - h_i), 1 - sum h_i)``; the first is never below the second."""
    k = np.asarray(k, dtype=float)
    h = np.asarray(h, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(k <= 0) or np.any(h <= 0) or np.any(tau < 0):
        raise UsageError("need k > 0, h > 0, tau >= 0")
    if abs(tau.sum() - 1.0) > 1e-12:
        raise UsageError(f"tau must sum to 1, sums to {tau.sum()!r}")
    lhs = float(np.sum(h ** (-k) * tau ** k * (tau - h)))
    return lhs, float(1.0 - h.sum())


@dataclass(frozen=True)
class DoublingConstants:
    m0: float
    R1: float
    L0: float
    eps0: float
    mu0: float
    r0: float


def _find_m0(P: BarrierParams, max_halvings: int = 400, iters: int = 80) -> float:
    ratio = lambda m: phi_extremes(P, 1.0, m, "inf_inside") / m
    j = 1
    while not ratio(2.0 ** (-j)) > 2.0:
        j += 1
        if j > max_halvings:
            raise NumericalError("could not bracket m0: inf_inside(1, m)/m stays <= 2")
    lo = 2.0 ** (-j)
    if j == 1:
        return lo
    hi = 2.0 * lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ratio(mid) > 2.0:
            lo = mid
        else:
            hi = mid
    return lo


def doubling_constants(P: BarrierParams, r0: float, max_doublings: int = 1000) -> DoublingConstants:
    """Constants m0, R1, L0, eps0 = m0^{d0}, mu0 for the doubling estimate.

    ``r0`` is the vertex-cube radius of the measure estimate; ``L0`` depends
    on it.  ``mu0`` is ``delta * Lambda`` divided by the larger of ``R1`` and
    the widest half-width of ``K_{R1}(m0)``, so the certified region covers
    the whole annulus.
    """
    if not 0 < r0 < 1:
        raise UsageError("r0 must lie in (0, 1)")
    m0 = _find_m0(P)
    R1 = 2.0
    while not phi_extremes(P, R1, m0, "sup_outside") < m0:
        R1 *= 2.0
        if R1 > 2.0 ** max_doublings:
            raise NumericalError("no dyadic R1 found")
    L0 = 2.0 ** math.ceil(math.log2(1.0 / m0))
    if L0 <= 1.0 / m0:
        L0 *= 2.0
    while not phi_extremes(P, r0, L0 * m0, "sup_outside") / (L0 * m0) < 1.0:
        L0 *= 2.0
        if L0 > 2.0 ** max_doublings:
            raise NumericalError("no dyadic L0 found")
    alpha, beta = alpha_beta(P.exponents)
    widest = float(np.max(R1 ** np.array(alpha) * m0 ** np.array(beta)))
    mu0 = P.delta * P.exponents.Lam / max(R1, widest)
    return DoublingConstants(m0, R1, L0, m0 ** P.d0, mu0, r0)
