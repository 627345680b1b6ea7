"""Experiments on solved fields: barrier doubling, level-set decay, observed
Harnack constants and Hoelder exponents, plus the scenario battery that
produces the fields."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from aniharnack.barrier import BarrierParams, phi_jets
from aniharnack.errors import ExperimentError, HypothesisNotMet, UsageError
from aniharnack.exponents import ExponentData
from aniharnack.geometry import IntrinsicCube
from aniharnack.grid import Field, Grid
from aniharnack.solver import ProblemSpec, counterexample_value, relax_solve

SCENARIOS = ("constant", "linear", "spike", "checkerboard", "random-positive")
MIN_RESOLUTION = 33
SPIKE_OFFSET = 0.5
RANDOM_MODES = 6


@dataclass
class ConstantsLedger:
    """Observable constants gathered across experiments (``None`` = not measured)."""

    m0: Optional[float] = None
    L0: Optional[float] = None
    R1: Optional[float] = None
    eps0: Optional[float] = None
    mu0: Optional[float] = None
    delta_observed: Optional[float] = None
    C0_observed: Optional[float] = None
    decay_ratios: List[float] = field(default_factory=list)
    holder_alpha_observed: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def update_doubling(self, dc) -> None:
        self.m0, self.R1, self.L0, self.eps0, self.mu0 = dc.m0, dc.R1, dc.L0, dc.eps0, dc.mu0

    def violations(self) -> List[str]:
        out = []
        for name in ("m0", "L0", "R1", "eps0", "mu0", "delta_observed", "C0_observed", "holder_alpha_observed"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                out.append(f"{name} = {v!r} is not a positive finite number")
        if any(not (0.0 <= r <= 1.0) for r in self.decay_ratios):
            out.append("decay ratio outside [0, 1]")
        return out

    def as_rows(self) -> List[Tuple[str, str]]:
        rows = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "decay_ratios":
                rows.append((f.name, ";".join(repr(r) for r in v)))
            elif f.name == "notes":
                rows.append((f.name, " | ".join(v)))
            else:
                rows.append((f.name, "" if v is None else repr(v)))
        return rows


@dataclass
class ExperimentConfig:
    exponents: ExponentData
    resolution: int = 65
    scenario: str = "spike"
    seed: int = 0
    output: Optional[str] = None
    r: float = 0.5
    half_width: float = 1.0
    tol: float = 1e-8
    max_iter: int = 2_000_000

    def __post_init__(self):
        if self.resolution < MIN_RESOLUTION:
            raise UsageError(f"resolution must be at least {MIN_RESOLUTION}")
        if self.resolution % 2 == 0:
            raise UsageError("resolution must be odd so the origin is a node")
        if self.scenario not in SCENARIOS:
            raise UsageError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if not (self.r > 0 and self.half_width > 0):
            raise UsageError("r and half_width must be positive")


# -- scenarios --------------------------------------------------------------

def scenario_problem(cfg: ExperimentConfig) -> ProblemSpec:
    """Dirichlet problem on ``[-w, w]^n`` for one of the boundary archetypes.

    ``spike`` has zero outer data and a unit interior Dirichlet node at
    ``0.5 w e_1``; the others are positive data on the outer boundary only.
    """
    e = cfg.exponents
    w = cfg.half_width
    grid = Grid.centered([w] * e.n, cfg.resolution)
    X = grid.coords()
    fixed = None
    if cfg.scenario == "constant":
        vals = np.ones(grid.dims)
    elif cfg.scenario == "linear":
        vals = 1.0 + X[0] / w
    elif cfg.scenario == "checkerboard":
        cells = sum(np.floor(2.0 * (x / w + 1.0)) for x in X)
        vals = 1.0 + 0.5 * (-1.0) ** np.mod(cells, 2.0)
    elif cfg.scenario == "random-positive":
        # seeded low-frequency modes; node-wise noise is not resolvable by the
        # centered degenerate scheme
        rng = np.random.default_rng(cfg.seed)
        acc = np.zeros(grid.dims)
        for _ in range(RANDOM_MODES):
            k = rng.integers(1, 4, size=e.n)
            ph = rng.uniform(0.0, 2.0 * np.pi, size=e.n)
            amp = rng.uniform(-1.0, 1.0)
            acc += amp * np.prod([np.cos(ki * np.pi * x / w + pi) for ki, pi, x in zip(k, ph, X)], axis=0)
        vals = 1.0 + 0.4 * np.tanh(acc)
    else:
        vals = np.zeros(grid.dims)
        fixed = np.zeros(grid.dims, dtype=bool)
        pt = np.zeros(e.n)
        pt[0] = SPIKE_OFFSET * w
        idx = grid.nearest_index(pt)
        fixed[idx] = True
        vals[idx] = 1.0
    vals = np.where(grid.boundary_mask() | (fixed if fixed is not None else False), vals, 0.0)
    return ProblemSpec(e, Field(grid, vals), 0.0, "pi_laplacian", fixed)


def solve_scenario(cfg: ExperimentConfig) -> Field:
    return relax_solve(scenario_problem(cfg), cfg.tol, cfg.max_iter)


def spike_problem(e: ExponentData, half_widths: Sequence[float], resolution, inner: IntrinsicCube,
                  height: float) -> ProblemSpec:
    """Zero data on the outer box, ``height`` on every node of ``inner``."""
    grid = Grid.centered(half_widths, resolution)
    fixed = inner.mask(grid) & ~grid.boundary_mask()
    if not fixed.any():
        raise ExperimentError("inner cube contains no interior grid nodes")
    vals = np.where(fixed, height, 0.0)
    return ProblemSpec(e, Field(grid, vals), 0.0, "pi_laplacian", fixed)


# -- doubling ---------------------------------------------------------------

@dataclass
class DoublingReport:
    barrier_slack: float
    conclusion_slack: float
    comparison_holds: bool
    conclusion_holds: bool
    annulus_nodes: int
    worst_node: Tuple[float, ...]

    @property
    def implication_holds(self) -> bool:
        """A passing barrier comparison must force the conclusion."""
        return self.conclusion_holds or not self.comparison_holds


def doubling_experiment(u: Field, params: BarrierParams, ledger: ConstantsLedger, r0: float) -> DoublingReport:
    """Compare ``u`` with ``Psi = Phi - m0`` on ``K_{R1}(m0)`` minus ``K_{r0}(L0 m0)``.

    Raises ``HypothesisNotMet`` unless ``u > L0 m0`` on every node of the
    small cube.
    """
    e = params.exponents
    m0, L0, R1 = ledger.m0, ledger.L0, ledger.R1
    if None in (m0, L0, R1):
        raise UsageError("ledger lacks doubling constants")
    outer = IntrinsicCube(e, R1, m0)
    inner = IntrinsicCube(e, r0, L0 * m0)
    unit = IntrinsicCube(e, 1.0, m0)
    if not outer.fits_in(u.grid):
        raise ExperimentError("grid does not cover K_R1(m0)")
    in_mask = inner.mask(u.grid)
    if not in_mask.any():
        raise ExperimentError("K_r0(L0 m0) contains no grid nodes")
    if np.any(u.values < 0):
        raise HypothesisNotMet("u must be nonnegative")
    if not np.all(u.values[in_mask] > L0 * m0):
        raise HypothesisNotMet("u > L0 m0 fails on K_r0(L0 m0)")
    ann = outer.mask(u.grid) & ~in_mask
    X = u.grid.points()[ann.ravel()]
    phi, _, _ = phi_jets(X, params)
    slack = u.values[ann] - (phi - m0)
    k = int(np.argmin(slack))
    c_slack = float(np.min(u.values[unit.mask(u.grid)]) - m0)
    return DoublingReport(float(slack[k]), c_slack, bool(slack[k] >= 0), bool(c_slack > 0),
                          int(ann.sum()), tuple(float(v) for v in X[k]))


# -- level sets -------------------------------------------------------------

def levelset_decay_experiment(u: Field, m0: float, L1: float, k_max: int,
                              exponents: Optional[ExponentData] = None) -> List[float]:
    """``|{u >= L1^k m0} cap (2/3)K_1(m0)| / |(2/3)K_1(m0)|`` for ``k = 1..k_max`` (node counts)."""
    e = exponents if exponents is not None else ExponentData((2.0,) * u.grid.ndim)
    if not (m0 > 0 and L1 > 1 and k_max >= 1):
        raise UsageError("need m0 > 0, L1 > 1, k_max >= 1")
    if np.any(u.values < 0):
        raise HypothesisNotMet("u must be nonnegative")
    if u.value_at_node(np.zeros(e.n)) > m0 * (1 + 1e-12):
        raise HypothesisNotMet("u(0) exceeds m0")
    region = IntrinsicCube(e, 1.0, m0, a=2.0 / 3.0)
    if not region.fits_in(u.grid):
        raise ExperimentError("grid does not cover (2/3)K_1(m0)")
    vals = u.values[region.mask(u.grid)]
    return [float(np.mean(vals >= L1 ** k * m0)) for k in range(1, k_max + 1)]


def decay_fit(fractions: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope and R^2 of ``log(fraction_k)`` against ``k`` (positive entries only)."""
    k = np.arange(1, len(fractions) + 1, dtype=float)
    f = np.asarray(fractions, dtype=float)
    keep = f > 0
    if keep.sum() < 2:
        raise ExperimentError("fewer than two positive fractions to fit")
    k, y = k[keep], np.log(f[keep])
    slope, icpt = np.polyfit(k, y, 1)
    resid = y - (slope * k + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


# -- Harnack and Hoelder ----------------------------------------------------

@dataclass
class HarnackResult:
    u0: float
    sup_value: float
    inf_value: float
    C_upper: float
    C_lower: float
    clipped: bool

    @property
    def C0(self) -> float:
        return max(self.C_upper, self.C_lower)


def _clipped_mask(cube: IntrinsicCube, grid: Grid) -> Tuple[np.ndarray, bool]:
    return cube.mask(grid), not cube.fits_in(grid)


def harnack_ratio(u: Field, e: ExponentData, r: float) -> HarnackResult:
    """``S = sup_{K_r(u(0))} u`` and ``I = inf_{K_r(C u(0))} u`` with ``C = S/u(0)``.

    Cubes that outgrow the grid are clipped to it (flagged in ``clipped``).
    """
    u0 = u.value_at_node(np.zeros(e.n))
    if not u0 > 0:
        raise HypothesisNotMet("u(0) must be positive")
    m1, c1 = _clipped_mask(IntrinsicCube(e, r, u0), u.grid)
    S = float(u.values[m1].max())
    C = S / u0
    m2, c2 = _clipped_mask(IntrinsicCube(e, r, C * u0), u.grid)
    I = float(u.values[m2].min())
    lower = u0 / I if I > 0 else math.inf
    return HarnackResult(u0, S, I, C, lower, c1 or c2)


def harnack_experiment(cfg: ExperimentConfig, ledger: Optional[ConstantsLedger] = None,
                       u: Optional[Field] = None) -> Tuple[HarnackResult, Field]:
    """Solve the configured scenario and record ``C0_observed`` in ``ledger``
    (keeping the largest value seen across calls)."""
    if u is None:
        u = solve_scenario(cfg)
    res = harnack_ratio(u, cfg.exponents, cfg.r)
    if not math.isfinite(res.C0):
        raise ExperimentError(f"non-finite Harnack ratio in scenario {cfg.scenario}")
    if ledger is not None:
        prev = ledger.C0_observed or 0.0
        ledger.C0_observed = max(prev, res.C0)
        if res.clipped:
            ledger.notes.append(f"{cfg.scenario}: intrinsic cube clipped to the grid")
    return res, u


def harnack_battery(e: ExponentData, resolution: int = 65, r: float = 0.5, seed: int = 0,
                    ledger: Optional[ConstantsLedger] = None) -> Dict[str, HarnackResult]:
    ledger = ledger if ledger is not None else ConstantsLedger()
    out = {}
    for sc in SCENARIOS:
        cfg = ExperimentConfig(e, resolution, sc, seed, r=r)
        out[sc], _ = harnack_experiment(cfg, ledger)
    return out


def holder_estimate(u: Field, x0, radii: Sequence[float]) -> float:
    """Exponent of ``osc_{Q_r(x0)} u ~ C r^alpha`` fitted by least squares in log-log."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise UsageError("need at least 3 radii")
    if np.any(radii <= 0):
        raise UsageError("radii must be positive")
    x0 = np.asarray(x0, dtype=float)
    coords = u.grid.coords()
    oscs = []
    for r in radii:
        mask = np.ones(u.grid.dims, dtype=bool)
        for c, xc in zip(coords, x0):
            mask &= np.abs(c - xc) <= r * (1 + 1e-12)
        vals = u.values[mask]
        if vals.size < 2:
            raise ExperimentError(f"Q_{r:g} holds fewer than two nodes")
        oscs.append(float(vals.max() - vals.min()))
    oscs = np.asarray(oscs)
    if np.any(oscs <= 0):
        raise ExperimentError("zero oscillation on some cube; exponent undefined")
    alpha, _ = np.polyfit(np.log(radii), np.log(oscs), 1)
    return float(alpha)


def counterexample_ratios(resolutions: Sequence[int], n: int = 6) -> List[Tuple[int, float, float, float]]:
    """Harnack ratio ``sup/inf`` of the counterexample on the section
    ``x = (s, 0, ..., 0, t)``, ``s, t`` on a grid of ``[-1, 1]`` shifted by half a
    cell so the singular line ``s = 0`` is avoided.  The ratio blows up
    under refinement because the inf tends to the zero set ``t = 0``."""
    out = []
    for N in resolutions:
        if N < 2 or N % 2:
            raise UsageError("counterexample resolutions must be even so no node sits on s = 0")
        h = 2.0 / N
        s = -1.0 + h * (np.arange(N) + 0.5)
        S, T = np.meshgrid(s, s, indexing="ij")
        X = np.zeros(S.shape + (n,))
        X[..., 0], X[..., -1] = S, T
        vals = counterexample_value(X)
        sup, inf = float(vals.max()), float(vals.min())
        out.append((int(N), sup, inf, sup / inf if inf > 0 else math.inf))
    return out


# -- run directories --------------------------------------------------------

def write_run(out_dir: str, files: Dict[str, str]) -> None:
    """Write ``files`` (name -> text) into ``out_dir``, each via temp file + rename."""
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, os.path.join(out_dir, name))
