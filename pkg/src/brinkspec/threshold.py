"""Zero-energy threshold analysis built on the grid solver.

Pointwise criterion certificates, critical coupling constants, the small-
coupling sweep that separates critical from subcritical potentials, the
resonance / bound-state classifier, the Agmon comparison check and the
ground-state representation identity.

A negative eigenvalue only counts as a bound state when it lies below
``-finite_size_floor(grid)``, the energy scale of the free box.
"""
from __future__ import annotations

import enum
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special

from . import iterlog
from .eigensolve import count_below, eigenvector, lowest_eigs
from .errors import BracketError, ConvergenceError, ParamError
from .iterlog import ComparisonOrder
from .potentials import (Bump, Potential, exact_zero_mode, is_compactly_supported_nonnegative,
                         v_alpha_d)
from .radialgrid import RadialGrid, TridiagOperator, assemble, make_grid, potential_on_grid, to_nodal

DEFAULT_LAMBDAS = (0.4, 0.2, 0.1, 0.05, 0.025)
DEFAULT_RHO = 1.5
DEFAULT_MASS_FLOOR = 0.05
DEFAULT_SLACK = 0.1
DYADIC_EPS = tuple(2.0**k for k in range(4, -11, -1))


def default_perturbation() -> Bump:
    return Bump(0.5, 0.5, 1.0)


def finite_size_floor(grid: RadialGrid) -> float:
    """3 (pi / (r_max - r_min))^2, the free-box ground energy scale."""
    return 3.0 * (math.pi / (grid.r_max - grid.r_min)) ** 2


def sweep_grids(d: int, n: Sequence[int] = (12000, 24000), r_max: float = 1e100,
                r_min: float = 1e-8) -> list:
    """Geometric grids reaching far enough out for logarithmically slow binding."""
    return [make_grid(d, r_min, r_max, k, "geometric") for k in n]


def coupling_grids(d: int) -> list:
    return [make_grid(d, 1e-6, 1e4, 10000, "geometric"), make_grid(d, 1e-6, 1e4, 20000, "geometric")]


# ---------------------------------------------------------------------------
# criterion certificates

class Regime(enum.Enum):
    NonExistence = "NonExistence"
    Existence = "Existence"
    Inconclusive = "Inconclusive"


@dataclass(frozen=True)
class CriterionCertificate:
    regime: Regime
    m: Optional[int]
    eps: Optional[float]
    tail_window: tuple
    margin: float
    samples: int = 0

    def to_dict(self):
        return {"regime": self.regime.value, "m": self.m, "eps": self.eps,
                "tail_window": list(self.tail_window), "margin": self.margin, "samples": self.samples}


def criterion_check(p: Potential, d: int, m_max: int = 2, window: tuple = (1e3, 1e6),
                    samples: int = 200) -> CriterionCertificate:
    """Test the pointwise absence / existence bounds on log-spaced radii.

    The smallest m whose absence bound ``p <= rhs_threshold(m, 0)`` holds on
    every sample gives NonExistence(m).  Otherwise the smallest m admitting
    some dyadic eps in 2^-10..2^4 with ``p >= rhs_threshold(m, eps)`` gives
    Existence(m, eps), with the largest such eps.  ``margin`` is the minimal
    slack times r^2.
    """
    if int(m_max) != m_max or m_max < 0 or m_max > iterlog.N_MAX:
        raise ParamError(f"m_max must be an integer in [0, {iterlog.N_MAX}], got {m_max!r}")
    R, R_max = float(window[0]), float(window[1])
    if not R > iterlog.tower(m_max):
        raise ParamError(f"window start R = {R} must exceed e_{m_max} = {iterlog.tower(m_max)}")
    if not R < R_max:
        raise ParamError("window needs R < R_max")
    if int(samples) != samples or samples < 2:
        raise ParamError("samples must be an integer >= 2")
    rs = np.geomspace(R, R_max, int(samples))
    v = np.asarray(p(rs), dtype=float)
    r2 = rs * rs
    window = (R, R_max)
    worst = -math.inf
    for m in range(int(m_max) + 1):
        slack = float(np.min((iterlog.rhs_threshold(ComparisonOrder(m, 0.0), d, rs) - v) * r2))
        if slack >= 0:
            return CriterionCertificate(Regime.NonExistence, m, None, window, slack, int(samples))
        worst = max(worst, slack)
    for m in range(int(m_max) + 1):
        for eps in DYADIC_EPS:
            slack = float(np.min((v - iterlog.rhs_threshold(ComparisonOrder(m, eps), d, rs)) * r2))
            if slack >= 0:
                return CriterionCertificate(Regime.Existence, m, eps, window, slack, int(samples))
    return CriterionCertificate(Regime.Inconclusive, None, None, window, worst, int(samples))


# ---------------------------------------------------------------------------
# energies on grids

def _operator(grid: RadialGrid, values: np.ndarray) -> TridiagOperator:
    return assemble(None, grid, potential_values=values)


def ground_energy(T: TridiagOperator, floor: float) -> float:
    """Lowest eigenvalue, resolved relative to itself even when far below ``floor``."""
    tol = max(floor * 1e-6, 1e-300)
    return float(lowest_eigs(T, 1, tol=tol, rtol=1e-9).eigenvalues[0])


def richardson(energies: Sequence[float], grids: Sequence[RadialGrid]) -> float:
    """Combine the last two grid energies when they form an h-refinement pair.

    Second-order extrapolation (4 E_fine - E_coarse) / 3 is applied only when
    both grids share the box, the finer one doubles the node count, and the
    two values already agree to 25%; otherwise the finest value is returned.
    """
    if len(energies) < 2:
        return float(energies[-1])
    e1, e2 = energies[-2], energies[-1]
    g1, g2 = grids[-2], grids[-1]
    same_box = (g1.r_min, g1.r_max, g1.placement, g1.d) == (g2.r_min, g2.r_max, g2.placement, g2.d)
    if same_box and g2.n == 2 * g1.n and e1 * e2 > 0 and abs(e2 - e1) <= 0.25 * abs(e2):
        return float((4.0 * e2 - e1) / 3.0)
    return float(e2)


# ---------------------------------------------------------------------------
# critical coupling

@dataclass
class CouplingResult:
    beta0: float
    bracket: tuple
    energies: tuple  # E0 on the finest grid at the bracket ends
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {"beta0": self.beta0, "bracket": list(self.bracket), "energies": list(self.energies),
                "trace": [list(t) for t in self.trace]}


def critical_coupling_search(V: Potential, d: int, beta_range: tuple = (0.0, 10.0),
                             grid_schedule: Optional[Sequence[RadialGrid]] = None,
                             tol: float = 1e-4, scan: int = 8) -> CouplingResult:
    """Bisection for the coupling where -Laplacian + beta V first binds.

    The predicate is "the finest grid has an eigenvalue below -floor".  A
    coarse scan of ``scan`` couplings checks that the predicate switches on
    exactly once before bisecting; otherwise BracketError carries the trace.
    """
    lo, hi = float(beta_range[0]), float(beta_range[1])
    if not (lo < hi) or not tol > 0:
        raise ParamError("beta_range needs lo < hi and tol > 0")
    grids = list(grid_schedule) if grid_schedule else coupling_grids(d)
    grid = grids[-1]
    floor = finite_size_floor(grid)
    v = potential_on_grid(V, grid)
    trace = []

    def binds(beta):
        hit = count_below(_operator(grid, beta * v), -floor) >= 1
        trace.append((beta, hit))
        return hit

    flags = [binds(b) for b in np.linspace(lo, hi, max(int(scan), 2))]
    if not flags[-1]:
        raise BracketError(f"no bound state below -{floor:.3g} at beta = {hi}", trace)
    if flags[0]:
        raise BracketError(f"already bound at beta = {lo}", trace)
    first = flags.index(True)
    if not all(flags[first:]):
        raise BracketError("bound-state predicate is not monotone in beta", trace)
    betas = np.linspace(lo, hi, max(int(scan), 2))
    a, b = float(betas[first - 1]), float(betas[first])
    while b - a > tol:
        mid = 0.5 * (a + b)
        if binds(mid):
            b = mid
        else:
            a = mid
    ea = ground_energy(_operator(grid, a * v), floor)
    eb = ground_energy(_operator(grid, b * v), floor)
    if not (eb < -floor <= ea):
        raise BracketError("final bracket does not straddle -floor", trace)
    return CouplingResult(0.5 * (a + b), (a, b), (ea, eb), trace)


def critical_coupling(V: Potential, d: int, beta_range: tuple = (0.0, 10.0),
                      grid_schedule: Optional[Sequence[RadialGrid]] = None, tol: float = 1e-4) -> float:
    """Coupling constant beta_0 at which the ground energy of -Laplacian + beta V reaches zero."""
    return critical_coupling_search(V, d, beta_range, grid_schedule, tol).beta0


# ---------------------------------------------------------------------------
# small-coupling sweep

class Status(enum.Enum):
    Subcritical = "Subcritical"
    Critical = "Critical"
    CriticalResonance = "CriticalResonance"
    CriticalBoundState = "CriticalBoundState"
    Inconclusive = "Inconclusive"


@dataclass
class TracePoint:
    lam: float
    E0: float
    inner_mass: Optional[float] = None
    gamma_eff: Optional[float] = None
    grid_energies: tuple = ()
    bound: bool = False

    def to_dict(self):
        return {"lambda": self.lam, "E0": self.E0, "inner_mass": self.inner_mass,
                "gamma_eff": self.gamma_eff, "grid_energies": list(self.grid_energies), "bound": self.bound}


@dataclass
class ThresholdVerdict:
    status: Status
    lambda_trace: list
    beta0: Optional[float] = None
    envelope_fit: Optional[tuple] = None
    sign_change: Optional[tuple] = None
    floor: float = 0.0
    decay_fit: Optional[dict] = None  # fit points for the smallest bound lambda
    note: Optional[str] = None

    def to_dict(self):
        return {"status": self.status.value, "beta0": self.beta0, "note": self.note,
                "lambda_trace": [t.to_dict() for t in self.lambda_trace],
                "envelope_fit": None if self.envelope_fit is None else list(self.envelope_fit),
                "sign_change": None if self.sign_change is None else list(self.sign_change),
                "floor": self.floor, "decay_fit": self.decay_fit}


def _check_lambdas(lambdas, minimum=4):
    lam = [float(x) for x in lambdas]
    if len(lam) < minimum:
        raise ParamError(f"lambda schedule needs at least {minimum} values")
    if any(x <= 0 for x in lam) or any(b >= a for a, b in zip(lam, lam[1:])):
        raise ParamError("lambda schedule must be positive and strictly decreasing")
    return lam


def _check_perturbation(W):
    if is_compactly_supported_nonnegative(W) is None:
        raise ParamError("perturbation W must be a nonnegative compactly supported bump")


def _energy_task(args):
    V, W, lam, grid = args
    vals = potential_on_grid(V, grid) - lam * potential_on_grid(W, grid)
    T = _operator(grid, vals)
    floor = finite_size_floor(grid)
    return ground_energy(T, floor), count_below(T, -floor) >= 1


def _run_tasks(tasks, workers):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(tasks) <= 1:
        return [_energy_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_energy_task, tasks))


def _below_resolution(bound, lam, floor):
    """Would the trend of the smallest bound couplings put E0(lam) above -floor?

    ln|E0| is extrapolated linearly in 1/lambda from the two smallest bound
    couplings, the form of binding energies that vanish faster than any power.
    """
    if len(bound) < 2:
        return False
    a, b = sorted(bound, key=lambda t: t.lam)[:2]
    if not (a.E0 < 0 and b.E0 < 0):
        return False
    slope = (math.log(-a.E0) - math.log(-b.E0)) / (1.0 / a.lam - 1.0 / b.lam)
    if slope >= 0:
        return False
    predicted = math.log(-a.E0) + slope * (1.0 / lam - 1.0 / a.lam)
    return predicted < math.log(floor)


def criticality_sweep(V: Potential, W: Optional[Potential] = None, d: int = 3,
                      lambdas: Sequence[float] = DEFAULT_LAMBDAS,
                      grid_schedule: Optional[Sequence[RadialGrid]] = None,
                      workers: Optional[int] = 1, probe: int = 8) -> ThresholdVerdict:
    """Does -Laplacian + V - lambda W bind for every lambda in the schedule?

    E0(lambda) is computed on every grid and combined by :func:`richardson`.
    Critical when every lambda binds below -floor on the finest grid with a
    negative extrapolated energy; Subcritical when the smallest lambda does
    not bind.  A smallest lambda that fails to bind only because its level is
    predicted to lie below the grid floor gives Inconclusive instead.  For the
    subcritical case the coupling is doubled up to
    ``probe`` times past the schedule to bracket where binding starts,
    reported in ``sign_change``.
    """
    W = default_perturbation() if W is None else W
    _check_perturbation(W)
    lam = _check_lambdas(lambdas)
    grids = list(grid_schedule) if grid_schedule else sweep_grids(d)
    if any(g.d != d for g in grids):
        raise ParamError("grid dimension does not match d")
    floor = finite_size_floor(grids[-1])
    tasks = [(V, W, x, g) for x in lam for g in grids]
    results = _run_tasks(tasks, workers)
    trace = []
    for i, x in enumerate(lam):
        rows = results[i * len(grids):(i + 1) * len(grids)]
        energies = [e for e, _ in rows]
        e0 = richardson(energies, grids)
        bound = rows[-1][1] and e0 < -floor
        trace.append(TracePoint(x, e0, grid_energies=tuple(energies), bound=bool(bound)))
    if all(t.bound for t in trace):
        return ThresholdVerdict(Status.Critical, trace, floor=floor)
    if not trace[-1].bound:
        bound = [t for t in trace if t.bound]
        if bound:
            above = min(t.lam for t in bound)
            below = max(t.lam for t in trace if not t.bound and t.lam < above)
            if _below_resolution(bound, below, floor):
                return ThresholdVerdict(Status.Inconclusive, trace, floor=floor,
                                        note=f"binding at lambda = {below} is predicted below the grid floor "
                                             f"{floor:.3g}; enlarge the box or drop that lambda")
            return ThresholdVerdict(Status.Subcritical, trace, sign_change=(below, above), floor=floor)
        below = lam[0]
        for k in range(1, int(probe) + 1):
            x = lam[0] * 2.0**k
            e, hit = _energy_task((V, W, x, grids[-1]))
            if hit and e < -floor:
                return ThresholdVerdict(Status.Subcritical, trace, sign_change=(below, x), floor=floor)
            below = x
        return ThresholdVerdict(Status.Inconclusive, trace, floor=floor)
    return ThresholdVerdict(Status.Inconclusive, trace, floor=floor)


# ---------------------------------------------------------------------------
# resonance versus bound state

def _fit_nu(r, log_psi, d, kappa):
    """Fit nu in ln psi = c - (d-2)/2 ln r + ln K_nu(kappa r); returns (nu, c)."""
    z = kappa * r
    base = log_psi + 0.5 * (d - 2.0) * np.log(r) + z  # kve = K e^z

    def rss(nu):
        resid = base - np.log(special.kve(nu, z))
        return float(np.sum((resid - resid.mean()) ** 2))

    res = optimize.minimize_scalar(rss, bounds=(0.0, 12.0), method="bounded",
                                   options={"xatol": 1e-8})
    nu = float(res.x)
    return nu, float(np.mean(base - np.log(special.kve(nu, z))))


def decay_model(r, d, nu, kappa, c):
    """ln psi of the fitted tail c r^(-(d-2)/2) K_nu(kappa r)."""
    z = kappa * np.asarray(r, dtype=float)
    return c - 0.5 * (d - 2.0) * np.log(r) + np.log(special.kve(nu, z)) - z


def decay_window(grid: RadialGrid, kappa: float, inner_radius: float):
    """Radii used for the decay fit: outside the potential, before the box edge."""
    r1 = 10.0 * inner_radius
    r2 = min(0.5 * grid.r_max, 10.0 / kappa)
    return r1, r2


def _envelope_fit(r, log_psi, d, nu, kappa):
    """Closest comparison profile to the zero-energy tail, by log-log RMS."""
    # remove the exponential cut-off so the zero-energy power law remains
    z = kappa * r
    if nu > 0:
        corr = np.log(special.kve(nu, z)) - z - (special.gammaln(nu) + (nu - 1.0) * math.log(2.0) - nu * np.log(z))
    else:
        corr = np.log(special.kve(0.0, z)) - z - np.log(-np.log(z / 2.0) - np.euler_gamma)
    tail = log_psi - corr
    best = None
    for m in range(3):
        keep = r > 1.5 * iterlog.tower(m) + 1.0
        if np.count_nonzero(keep) < 8:
            continue
        rr, tt = r[keep], tail[keep]
        for eps in (0.0,) + tuple(2.0**k for k in range(-4, 4)):
            prof = np.log(iterlog.psi_upper(ComparisonOrder(m, eps), d, rr))
            resid = tt - prof
            rms = float(np.sqrt(np.mean((resid - resid.mean()) ** 2)))
            side = "lower" if eps == 0.0 else "upper"
            if best is None or rms < best[3] - 1e-12:
                best = (m, eps, side, rms)
    return None if best is None else best[:3]


def ground_state(V: Potential, W: Potential, lam: float, grid: RadialGrid):
    """E0, unit standard-form eigenvector (None unless bound) and the operator for V - lam W."""
    vals = potential_on_grid(V, grid) - lam * potential_on_grid(W, grid)
    T = _operator(grid, vals)
    e0 = ground_energy(T, finite_size_floor(grid))
    if not e0 < -finite_size_floor(grid):
        return e0, None, T
    vec = eigenvector(T, e0, tol=max(abs(e0) * 1e-10, 1e-300))
    return e0, vec, T


def classify_zero_mode(V: Potential, W: Optional[Potential] = None, d: int = 3,
                       lambdas: Sequence[float] = DEFAULT_LAMBDAS,
                       grid_schedule: Optional[Sequence[RadialGrid]] = None,
                       inner_radius: float = 1.0, mass_floor: float = DEFAULT_MASS_FLOOR,
                       rho: float = DEFAULT_RHO, slack: float = DEFAULT_SLACK) -> ThresholdVerdict:
    """Separate zero-energy resonances from zero-energy bound states.

    For each lambda the normalized ground state u of -Laplacian + V - lambda W
    on the finest grid gives ``inner_mass``, the fraction of the norm inside
    ``inner_radius``, and ``gamma_eff``: psi = u r^(-(d-1)/2) is fitted to
    c r^(-(d-2)/2) K_nu(kappa r), kappa = sqrt(-E0), and gamma_eff = (d-2)/2 + nu
    is the power-law decay rate of the zero-energy limit.

    CriticalBoundState when inner_mass >= mass_floor throughout and
    gamma_eff > d/2 + slack; CriticalResonance when inner_mass drops by at
    least ``rho`` per halving of lambda or gamma_eff <= d/2 + slack.
    """
    W = default_perturbation() if W is None else W
    _check_perturbation(W)
    lam = _check_lambdas(lambdas)
    if not inner_radius > 0:
        raise ParamError("inner_radius must be positive")
    grids = list(grid_schedule) if grid_schedule else sweep_grids(d)
    grid = grids[-1]
    floor = finite_size_floor(grid)
    x = grid.nodes
    trace = []
    fit_data = None
    for lv in lam:
        e0, vec, T = ground_state(V, W, lv, grid)
        if vec is None:
            trace.append(TracePoint(lv, e0, grid_energies=(e0,)))
            continue
        inner = float(np.sum(vec[x < inner_radius] ** 2))
        kappa = math.sqrt(-e0)
        r1, r2 = decay_window(grid, kappa, inner_radius)
        u = to_nodal(T, vec)
        sel = (x >= r1) & (x <= r2) & (u > 0)
        gamma = None
        if np.count_nonzero(sel) >= 8 and r2 > 2.0 * r1:
            rr = x[sel]
            log_psi = np.log(u[sel]) - 0.5 * (d - 1.0) * np.log(rr)
            nu, c = _fit_nu(rr, log_psi, d, kappa)
            gamma = 0.5 * (d - 2.0) + nu
            fit_data = (lv, rr, log_psi, nu, kappa, c)
        trace.append(TracePoint(lv, e0, inner, gamma, (e0,), True))
    envelope = decay = None
    if fit_data is not None:
        lv, rr, log_psi, nu, kappa, c = fit_data
        envelope = _envelope_fit(rr, log_psi, d, nu, kappa)
        pick = np.unique(np.linspace(0, len(rr) - 1, min(len(rr), 200)).astype(int))
        decay = {"lambda": lv, "nu": nu, "kappa": kappa, "c": c, "r": rr[pick].tolist(),
                 "log_psi": log_psi[pick].tolist(),
                 "model": decay_model(rr[pick], d, nu, kappa, c).tolist()}
    status = _verdict(trace, d, mass_floor, rho, slack)
    return ThresholdVerdict(status, trace, envelope_fit=envelope, floor=floor, decay_fit=decay)


def _verdict(trace, d, mass_floor, rho, slack):
    if not all(t.bound for t in trace):
        return Status.Inconclusive
    gamma = trace[-1].gamma_eff
    masses = [t.inner_mass for t in trace]
    decaying = True
    for a, b in zip(trace, trace[1:]):
        halvings = math.log2(a.lam / b.lam)
        if not (b.inner_mass > 0 and a.inner_mass / b.inner_mass >= rho ** halvings):
            decaying = False
            break
    if gamma is not None and min(masses) >= mass_floor and gamma > d / 2.0 + slack:
        return Status.CriticalBoundState
    if decaying or (gamma is not None and gamma <= d / 2.0 + slack):
        return Status.CriticalResonance
    return Status.Inconclusive


# ---------------------------------------------------------------------------
# Agmon comparison

@dataclass(frozen=True)
class ComparisonReport:
    constant_C: float
    holds: bool
    first_violation: Optional[float]
    annulus: tuple

    def to_dict(self):
        return {"constant_C": self.constant_C, "holds": self.holds,
                "first_violation": self.first_violation, "annulus": list(self.annulus)}


def agmon_check(v, w, grid: RadialGrid, R: float, delta: float) -> ComparisonReport:
    """Pointwise comparison v <= C w beyond R, with C calibrated on [R, R + delta].

    ``v`` and ``w`` are samples on ``grid.nodes``.  Only the pointwise
    conclusion is checked; growth conditions at infinity cannot be read off
    a finite grid.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    x = grid.nodes
    if v.shape != x.shape or w.shape != x.shape:
        raise ParamError("v and w must be sampled on the grid nodes")
    if not (R > 0 and delta > 0 and R + delta < grid.r_max):
        raise ParamError("annulus [R, R + delta] must lie inside the grid")
    beyond = x >= R
    if np.any(w[beyond] <= 0):
        raise ParamError("w must be positive on every node at or beyond R")
    ann = beyond & (x <= R + delta)
    if not np.any(ann):
        raise ParamError("annulus contains no grid nodes")
    C = float(np.max(v[ann] / w[ann]))
    if not C > 0:
        raise ParamError("v must be positive somewhere on the annulus")
    outer = x > R
    bad = outer & (v > C * w * (1.0 + 1e-12))
    first = float(x[np.argmax(bad)]) if np.any(bad) else None
    return ComparisonReport(C, first is None, first, (float(R), float(R + delta)))


# ---------------------------------------------------------------------------
# ground-state representation

def gaussian_test_function(scale: float = 1.0):
    """phi(r) = exp(-r^2 / scale) and its derivative."""
    if not scale > 0:
        raise ParamError("scale must be positive")
    return (lambda r: np.exp(-r * r / scale)), (lambda r: -2.0 * r / scale * np.exp(-r * r / scale))


def _quad(f, tol):
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in ((0.0, 1.0), (1.0, 10.0), (10.0, math.inf)):
            try:
                val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=tol, limit=400)
            except integrate.IntegrationWarning as exc:
                raise ConvergenceError(f"quadrature on [{a}, {b}] did not converge: {exc}") from None
            total += val
    return total


def gsr_identity_check(alpha: float, d: int, phi: Callable, dphi: Callable, quad_tol: float = 1e-10) -> float:
    """Relative gap in <grad u, grad u> + <u, V u> = int |grad phi|^2 psi^2 for u = psi phi.

    psi is the exact zero mode of V_{alpha,d}; both sides are radial
    integrals against r^(d-1) dr with exact derivatives.
    """
    if not quad_tol > 0:
        raise ParamError("quad_tol must be positive")
    g = 0.5 * (d - 2.0) + alpha

    def psi(r):
        return exact_zero_mode(alpha, d, r)

    def dpsi(r):
        return -g * r * (1.0 + r * r) ** (-0.5 * g - 1.0)

    def lhs(r):
        du = dpsi(r) * phi(r) + psi(r) * dphi(r)
        u = psi(r) * phi(r)
        return (du * du + v_alpha_d(alpha, d, r) * u * u) * r ** (d - 1)

    def rhs(r):
        return dphi(r) ** 2 * psi(r) ** 2 * r ** (d - 1)

    left, right = _quad(lhs, quad_tol), _quad(rhs, quad_tol)
    return abs(left - right) / abs(right)
