"""Iterated logarithms, comparison profiles and their partner potentials.

All radial functions accept a float or a numpy array for ``r`` and return the
same kind.  Profiles live on ``r > e_m`` where ``e_0 = 0`` and
``e_{n+1} = exp(e_n)``; anything at or below that bound raises
:class:`DomainError`.

Notation used in the code: ``P_j(r) = prod_{k=1..j} 1/ln_k(r)`` (``P_0 = 1``),
``S_m = sum_{j=1..m} P_j`` and ``D_m = sum_{j=1..m} sum_{l=1..j} P_l P_j``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParamError

#: Largest tower index whose value is a finite double (e_4 ~ 3.8e6, e_5 = inf).
N_MAX = 4


@dataclass(frozen=True)
class ComparisonOrder:
    """Correction depth ``m`` and tail exponent ``eps`` of a comparison profile."""

    m: int = 0
    eps: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ParamError(f"m must be a non-negative integer, got {self.m!r}")
        if not self.eps >= 0:
            raise ParamError(f"eps must be non-negative, got {self.eps!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "eps", float(self.eps))


class TailClass(enum.Enum):
    SquareIntegrableAtInfinity = "SquareIntegrableAtInfinity"
    NotSquareIntegrable = "NotSquareIntegrable"
    EdgeCase = "EdgeCase"


def tower(n: int) -> float:
    """Return e_n with e_0 = 0 and e_{n+1} = exp(e_n).

    Raises OverflowError for n > N_MAX, where e_n is no longer a finite double.
    """
    if int(n) != n or n < 0:
        raise ParamError(f"tower index must be a non-negative integer, got {n!r}")
    if n > N_MAX:
        raise OverflowError(f"e_{n} exceeds the double range (n_max = {N_MAX})")
    e = 0.0
    for _ in range(int(n)):
        e = math.exp(e)
    return e


def _domain_floor(n: int) -> float:
    return tower(n) if n <= N_MAX else math.inf


def _as_radius(r, floor, what):
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > floor)):
        bad = arr[~(arr > floor)].ravel()[0]
        raise DomainError(f"{what} requires r > {floor!r}, got r = {bad!r}")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def iter_log(n: int, r):
    """n-fold logarithm ln_n(r); ln_0(r) = r by convention."""
    if int(n) != n or n < 0:
        raise ParamError(f"iter_log order must be a non-negative integer, got {n!r}")
    x = _as_radius(r, _domain_floor(n), f"ln_{n}")
    for _ in range(int(n)):
        x = np.log(x)
    return _out(x, r)


def _log_stack(m, x):
    """Return [ln_1(x), ..., ln_m(x)] and [P_1(x), ..., P_m(x)]."""
    logs, prods = [], []
    cur = x
    p = np.ones_like(x)
    for _ in range(m):
        cur = np.log(cur)
        logs.append(cur)
        p = p / cur
        prods.append(p)
    return logs, prods


def psi_gamma(gamma: float, r):
    """Power profile r^(-gamma)."""
    x = _as_radius(r, 0.0, "psi_gamma")
    return _out(x ** (-float(gamma)), r)


def psi_lower(order, d: int, r):
    """Profile at the edge of square integrability: r^(-d/2) prod_j ln_j^(-1/2)(r)."""
    m = _order_m(order)
    x = _as_radius(r, _domain_floor(m), f"psi_lower(m={m})")
    _, prods = _log_stack(m, x)
    val = x ** (-d / 2.0)
    if m:
        val = val * np.sqrt(prods[-1])
    return _out(val, r)


def psi_upper(order: ComparisonOrder, d: int, r):
    """psi_lower times ln_m(r)^(-eps/2); for m = 0 the extra factor is r^(-eps/2)."""
    x = _as_radius(r, _domain_floor(order.m), f"psi_upper(m={order.m})")
    base = psi_lower(order.m, d, x)
    if order.eps == 0.0:
        return _out(base, r)
    return _out(base * iter_log(order.m, x) ** (-order.eps / 2.0), r)


def w_gamma(gamma: float, d: int, r):
    """gamma (gamma + 2 - d) / r^2, the potential that annihilates r^(-gamma)."""
    x = _as_radius(r, 0.0, "w_gamma")
    return _out(gamma * (gamma + 2.0 - d) / x**2, r)


def _order_m(order):
    return order.m if isinstance(order, ComparisonOrder) else int(order)


def w_m_closed(m: int, d: int, r):
    """Closed four-term form of the potential W_m annihilating psi_lower(m)."""
    x = _as_radius(r, _domain_floor(m), f"W_{m}")
    _, prods = _log_stack(m, x)
    s = np.zeros_like(x)
    dbl = np.zeros_like(x)
    for j, pj in enumerate(prods):
        s = s + pj
        for pl in prods[: j + 1]:
            dbl = dbl + pl * pj
    val = (d * (4.0 - d) / 4.0 + s + s * s / 4.0 + dbl / 2.0) / x**2
    return _out(val, r)


def w_m_recursive(m: int, d: int, r):
    """W_m built up one logarithm at a time from W_0 = d(4-d)/(4r^2).

    Kept on a separate code path from :func:`w_m_closed` so the two can check
    each other.
    """
    x = _as_radius(r, _domain_floor(m), f"W_{m}")
    r2 = x * x
    w = d * (4.0 - d) / (4.0 * r2)
    p = np.ones_like(x)
    partial = np.zeros_like(x)  # sum_{j<=k} P_j
    cur = x
    for _ in range(m):
        cur = np.log(cur)
        p = p / cur
        w = w + (0.75 * p * p + p + p * partial) / r2
        partial = partial + p
    return _out(w, r)


def y_m_eps(order: ComparisonOrder, d: int, r):
    """Potential Y_{m,eps} annihilating psi_upper(m, eps)."""
    m, eps = order.m, order.eps
    x = _as_radius(r, _domain_floor(m), f"Y_{m},eps")
    w = w_m_closed(m, d, x)
    if eps == 0.0:
        return _out(w, r)
    _, prods = _log_stack(m, x)
    pm = prods[-1] if m else np.ones_like(x)
    s = sum(prods) if m else np.zeros_like(x)
    val = w + (eps * eps / 4.0 * pm * pm + eps * pm + eps * pm * s) / x**2
    return _out(val, r)


def rhs_threshold(order: ComparisonOrder, d: int, r):
    """Right-hand side of the pointwise absence (eps = 0) or existence (eps > 0) bound.

    d(4-d)/(4r^2) + S_m/r^2 + eps P_m / r^2.
    """
    m, eps = order.m, order.eps
    x = _as_radius(r, _domain_floor(m), f"threshold(m={m})")
    _, prods = _log_stack(m, x)
    s = sum(prods) if m else np.zeros_like(x)
    pm = prods[-1] if m else np.ones_like(x)
    return _out((d * (4.0 - d) / 4.0 + s + eps * pm) / x**2, r)


def hardy_log_weight(m: int, d: int, r):
    """Hardy weight with logarithmic corrections: ((d-2)^2 + S_m) / (4 r^2)."""
    x = _as_radius(r, _domain_floor(m), f"hardy weight(m={m})")
    _, prods = _log_stack(m, x)
    s = sum(prods) if m else np.zeros_like(x)
    return _out(((d - 2.0) ** 2 + s) / (4.0 * x**2), r)


@dataclass(frozen=True)
class PsiGamma:
    gamma: float


@dataclass(frozen=True)
class PsiLower:
    m: int


@dataclass(frozen=True)
class PsiUpper:
    m: int
    eps: float


def tail_l2_class(family, d: int) -> TailClass:
    """Whether a comparison profile is square integrable near infinity in R^d."""
    if isinstance(family, PsiGamma):
        if family.gamma <= 0:
            raise ParamError(f"gamma must be positive, got {family.gamma!r}")
        if family.gamma <= d / 2.0:
            return TailClass.NotSquareIntegrable
        return TailClass.SquareIntegrableAtInfinity
    if isinstance(family, PsiLower):
        ComparisonOrder(family.m)
        return TailClass.NotSquareIntegrable
    if isinstance(family, PsiUpper):
        order = ComparisonOrder(family.m, family.eps)
        if order.eps == 0.0:
            return TailClass.NotSquareIntegrable
        return TailClass.SquareIntegrableAtInfinity
    raise ParamError(f"unknown profile family {family!r}")
