"""Radial potentials: analytic families, sampled data and affine combinations.

Every potential is an immutable object callable on radii (float or array) and
carries ``floor``, the radius at or below which it is undefined.  Potentials
combine with ``+``, ``-`` and scalar ``*`` into flattened :class:`Affine` sums.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from . import iterlog
from .errors import ConvergenceError, DomainError, ParamError, UnsupportedError
from .iterlog import ComparisonOrder


class ExtrapolationWarning(UserWarning):
    """A sampled potential was evaluated outside its sample range."""


class Potential:
    floor = 0.0

    def _value(self, x):
        raise NotImplementedError

    def __call__(self, r):
        x = np.asarray(r, dtype=float)
        if np.any(~(x > self.floor)) and not (self.floor == 0.0 and self._defined_at_zero and np.all(x >= 0)):
            raise DomainError(f"{type(self).__name__} is defined for r > {self.floor}")
        val = self._value(x)
        return float(val) if np.ndim(r) == 0 else val

    _defined_at_zero = False

    # algebra -------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Potential):
            return NotImplemented
        return Affine(((1.0, self), (1.0, other)))

    def __sub__(self, other):
        if not isinstance(other, Potential):
            return NotImplemented
        return Affine(((1.0, self), (-1.0, other)))

    def __mul__(self, c):
        if not isinstance(c, (int, float, np.floating, np.integer)):
            return NotImplemented
        return Affine(((float(c), self),))

    __rmul__ = __mul__

    def __neg__(self):
        return Affine(((-1.0, self),))

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class AlphaFamily(Potential):
    """(4a^2 - (d-2)^2) / (4(1+r^2)) + (1 - (a + d/2)^2) / (1+r^2)^2 with a = alpha."""

    alpha: float
    d: int
    _defined_at_zero = True

    def _value(self, x):
        return v_alpha_d(self.alpha, self.d, x)

    def to_dict(self):
        return {"kind": "alpha", "alpha": self.alpha, "d": self.d}


@dataclass(frozen=True)
class SquareWell(Potential):
    depth: float
    radius: float
    _defined_at_zero = True

    def __post_init__(self):
        if not (self.depth > 0 and self.radius > 0):
            raise ParamError("square well needs positive depth and radius")

    def _value(self, x):
        return np.where(x < self.radius, -self.depth, 0.0)

    def to_dict(self):
        return {"kind": "square_well", "depth": self.depth, "radius": self.radius}


@dataclass(frozen=True)
class Bump(Potential):
    """Nonnegative cos^2 cap of the given height on |r - center| < radius."""

    center: float = 0.5
    radius: float = 0.5
    height: float = 1.0
    _defined_at_zero = True

    def __post_init__(self):
        if not (self.center >= 0 and self.radius > 0 and self.height > 0):
            raise ParamError("bump needs center >= 0, radius > 0 and height > 0")

    def _value(self, x):
        z = (x - self.center) / self.radius
        return np.where(np.abs(z) < 1.0, self.height * np.cos(0.5 * np.pi * z) ** 2, 0.0)

    @property
    def support(self):
        return max(0.0, self.center - self.radius), self.center + self.radius

    def to_dict(self):
        return {"kind": "bump", "center": self.center, "radius": self.radius, "height": self.height}


class ThresholdKind(enum.Enum):
    Wm = "Wm"
    Ym = "Ym"
    RhsThreshold = "RhsThreshold"


@dataclass(frozen=True)
class ThresholdFamily(Potential):
    order: ComparisonOrder
    which: ThresholdKind
    d: int

    @property
    def floor(self):
        return iterlog.tower(self.order.m)

    def _value(self, x):
        if self.which is ThresholdKind.Wm:
            return iterlog.w_m_closed(self.order.m, self.d, x)
        if self.which is ThresholdKind.Ym:
            return iterlog.y_m_eps(self.order, self.d, x)
        return iterlog.rhs_threshold(self.order, self.d, x)

    def to_dict(self):
        return {"kind": "threshold", "which": self.which.value, "m": self.order.m,
                "eps": self.order.eps, "d": self.d}


@dataclass(frozen=True)
class HardyTail(Potential):
    """coefficient / r^2 for r >= cutoff, held at its cutoff value inside."""

    coefficient: float
    cutoff: float
    _defined_at_zero = True

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ParamError("HardyTail cutoff must be positive")

    def _value(self, x):
        return self.coefficient / np.maximum(x, self.cutoff) ** 2

    def to_dict(self):
        return {"kind": "hardy_tail", "coefficient": self.coefficient, "cutoff": self.cutoff}


@dataclass(frozen=True, eq=False)
class GridSampled(Potential):
    """Samples on increasing radii, read back with monotone cubic interpolation.

    Outside the sample range the end values are held constant and an
    :class:`ExtrapolationWarning` is emitted.
    """

    radii: tuple
    values: tuple
    _defined_at_zero = True

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ParamError("GridSampled needs matching 1-d radii and values (>= 2 points)")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ParamError("GridSampled radii must be non-negative and strictly increasing")
        object.__setattr__(self, "radii", tuple(r.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_interp", PchipInterpolator(r, v, extrapolate=False))

    def _value(self, x):
        lo, hi = self.radii[0], self.radii[-1]
        outside = (x < lo) | (x > hi)
        if np.any(outside):
            warnings.warn("GridSampled potential evaluated outside its samples; "
                          "holding end values", ExtrapolationWarning, stacklevel=3)
        xc = np.clip(x, lo, hi)
        return np.asarray(self._interp(xc), dtype=float)

    def __eq__(self, other):
        return isinstance(other, GridSampled) and self.radii == other.radii and self.values == other.values

    def __hash__(self):
        return hash((self.radii, self.values))

    def to_dict(self):
        return {"kind": "grid", "radii": list(self.radii), "values": list(self.values)}


@dataclass(frozen=True)
class Affine(Potential):
    """Signed sum of coefficient * potential; nested sums are flattened."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        flat = []
        for c, p in self.terms:
            if isinstance(p, Affine):
                flat.extend((float(c) * c2, p2) for c2, p2 in p.terms)
            else:
                flat.append((float(c), p))
        object.__setattr__(self, "terms", tuple(flat))

    @property
    def floor(self):
        return max((p.floor for _, p in self.terms), default=0.0)

    @property
    def _defined_at_zero(self):
        return all(p._defined_at_zero for _, p in self.terms)

    def _value(self, x):
        total = np.zeros_like(x)
        for c, p in self.terms:
            total = total + c * p._value(x)
        return total

    def to_dict(self):
        return {"kind": "affine", "terms": [{"coefficient": c, "potential": p.to_dict()}
                                            for c, p in self.terms]}


@dataclass(frozen=True)
class Zero(Potential):
    _defined_at_zero = True

    def _value(self, x):
        return np.zeros_like(x)

    def to_dict(self):
        return {"kind": "zero"}


def evaluate(p: Potential, r):
    """Pointwise value of ``p``; DomainError below its floor."""
    return p(r)


def v_alpha_d(alpha: float, d: int, r):
    """The bounded family with exact zero-energy solution (1+r^2)^((2-d)/4 - alpha/2)."""
    x = np.asarray(r, dtype=float)
    a = alpha * alpha - (d - 2.0) ** 2 / 4.0
    b = 1.0 - (alpha + d / 2.0) ** 2
    with np.errstate(over="ignore"):  # 1 + r^2 = inf beyond 1e154 gives the right limit 0
        q = 1.0 + x * x
        val = a / q + b / q / q
    return float(val) if np.ndim(r) == 0 else val


def exact_zero_mode(alpha: float, d: int, r):
    """(1+r^2)^((2-d)/4 - alpha/2), annihilated by -Laplacian + V_{alpha,d}."""
    x = np.asarray(r, dtype=float)
    with np.errstate(over="ignore"):
        val = (1.0 + x * x) ** ((2.0 - d) / 4.0 - alpha / 2.0)
    return float(val) if np.ndim(r) == 0 else val


def zero_mode_exponent(alpha: float, d: int) -> float:
    """Power-law decay rate of exact_zero_mode at infinity."""
    return (d - 2.0) / 2.0 + alpha


def mirror_relation_check(alpha: float, d: int, r):
    """V_{-a,d} - V_{a,d} - 2ad/(1+r^2)^2; identically zero."""
    if not alpha > 0:
        raise ParamError("mirror relation is stated for alpha > 0")
    x = np.asarray(r, dtype=float)
    val = v_alpha_d(-alpha, d, x) - v_alpha_d(alpha, d, x) - 2.0 * alpha * d / (1.0 + x * x) ** 2
    return float(val) if np.ndim(r) == 0 else val


class Sign(enum.Enum):
    Positive = "Positive"
    Negative = "Negative"
    Zero = "Zero"
    DecayingFaster = "Decaying-faster"


@dataclass(frozen=True)
class TailReport:
    leading_coefficient: float
    sign_at_zero: Sign
    sign_at_infinity: Sign
    sign_changes: tuple


def leading_tail_coefficient(p: Potential) -> float:
    """lim r^2 p(r) as r -> infinity, computed from the family parameters."""
    if isinstance(p, AlphaFamily):
        return p.alpha**2 - (p.d - 2.0) ** 2 / 4.0
    if isinstance(p, (SquareWell, Bump, Zero)):
        return 0.0
    if isinstance(p, HardyTail):
        return float(p.coefficient)
    if isinstance(p, ThresholdFamily):
        base = p.d * (4.0 - p.d) / 4.0
        if p.order.m > 0 or p.which is ThresholdKind.Wm:
            return base
        eps = p.order.eps
        if p.which is ThresholdKind.Ym:
            return base + eps + eps * eps / 4.0
        return base + eps
    if isinstance(p, Affine):
        return sum(c * leading_tail_coefficient(q) for c, q in p.terms)
    raise UnsupportedError(f"no analytic tail for {type(p).__name__}")


def _sign(v, tiny=0.0):
    if v > tiny:
        return Sign.Positive
    if v < -tiny:
        return Sign.Negative
    return Sign.Zero


def tail_analysis(p: Potential, r_lo: float = 1e-3, r_hi: float = 1e6, samples: int = 2000) -> TailReport:
    """Sign structure and r^-2 tail coefficient of an analytic potential."""
    if isinstance(p, GridSampled) or (isinstance(p, Affine) and any(isinstance(q, GridSampled) for _, q in p.terms)):
        raise UnsupportedError("tail analysis needs an analytic potential")
    lead = leading_tail_coefficient(p)
    start = max(r_lo, p.floor * (1.0 + 1e-9)) if p.floor > 0 else 0.0
    v0 = p(start)
    sign_inf = _sign(lead, 1e-14) if abs(lead) > 1e-14 else Sign.DecayingFaster
    lo = max(r_lo, p.floor * (1.0 + 1e-9)) if p.floor > 0 else r_lo
    rs = np.geomspace(lo, r_hi, samples)
    vals = p(rs)
    changes = []
    sg = np.sign(vals)
    for i in range(len(rs) - 1):
        if sg[i] != 0 and sg[i + 1] != 0 and sg[i] != sg[i + 1]:
            try:
                changes.append(optimize.brentq(lambda t: p(t), rs[i], rs[i + 1], xtol=1e-14, rtol=1e-12))
            except ValueError:  # jump discontinuity
                changes.append(0.5 * (rs[i] + rs[i + 1]))
    return TailReport(lead, _sign(v0), sign_inf, tuple(changes))


def breakpoints(p: Potential) -> list:
    """Radii where ``p`` or its derivative jumps."""
    if isinstance(p, SquareWell):
        return [p.radius]
    if isinstance(p, Bump):
        return [p.center - p.radius, p.center + p.radius]
    if isinstance(p, HardyTail):
        return [p.cutoff]
    if isinstance(p, Affine):
        return [b for _, q in p.terms for b in breakpoints(q)]
    return []


def quadrature(p: Potential, a: float, b: float, tol: float = 1e-10, limit: int = 500) -> float:
    """Adaptive integral of p(|x|) over [a, b] to absolute tolerance ``tol``.

    Infinite endpoints are allowed.  Raises ConvergenceError when the
    subdivision budget ``limit`` is exhausted.
    """
    if not a < b:
        raise ParamError("quadrature needs a < b")

    def f(x):
        return p(abs(x))

    cuts = sorted({s * x for x in breakpoints(p) for s in (-1.0, 1.0) if a < s * x < b} |
                  ({0.0} if a < 0.0 < b else set()))
    edges = [a, *cuts, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(f, lo, hi, epsabs=tol / len(edges), epsrel=0.0, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise ConvergenceError(f"quadrature on [{lo}, {hi}] did not converge: {exc}") from None
        total += val
    return total


def line_integral(p: Potential, tol: float = 1e-8) -> float:
    """Integral of p(|x|) over the whole real line.

    The range is cut at |x| = L with the analytic r^-2 tail 2c/L added back;
    L is chosen so the next-order remainder sits well below ``tol``.
    """
    c = leading_tail_coefficient(p)
    length = max(10.0, (1.0 / tol) ** (1.0 / 3.0) * 10.0)
    body = quadrature(p, -length, length, tol=tol / 2.0)
    return body + 2.0 * c / length


def potential_from_dict(doc: dict) -> Potential:
    """Build a potential from its document form (see the README for the schema)."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ParamError("potential: expected an object with a 'kind' field")
    kind = doc["kind"]

    def need(name, cast=float):
        if name not in doc:
            raise ParamError(f"potential.{name}: required for kind '{kind}'")
        try:
            return cast(doc[name])
        except (TypeError, ValueError):
            raise ParamError(f"potential.{name}: invalid value {doc[name]!r}") from None

    if kind == "alpha":
        return AlphaFamily(need("alpha"), need("d", int))
    if kind == "square_well":
        return SquareWell(need("depth"), need("radius"))
    if kind == "bump":
        return Bump(float(doc.get("center", 0.5)), float(doc.get("radius", 0.5)), float(doc.get("height", 1.0)))
    if kind == "threshold":
        try:
            which = ThresholdKind(doc.get("which", "Wm"))
        except ValueError:
            raise ParamError(f"potential.which: invalid value {doc.get('which')!r}") from None
        return ThresholdFamily(ComparisonOrder(need("m", int), float(doc.get("eps", 0.0))), which, need("d", int))
    if kind == "hardy_tail":
        return HardyTail(need("coefficient"), need("cutoff"))
    if kind == "grid":
        return GridSampled(tuple(need("radii", list)), tuple(need("values", list)))
    if kind == "zero":
        return Zero()
    if kind == "affine":
        terms = doc.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ParamError("potential.terms: affine potential needs a non-empty list")
        out = []
        for i, t in enumerate(terms):
            if not isinstance(t, dict) or "potential" not in t:
                raise ParamError(f"potential.terms[{i}]: expected {{coefficient, potential}}")
            out.append((float(t.get("coefficient", 1.0)), potential_from_dict(t["potential"])))
        return Affine(tuple(out))
    raise ParamError(f"potential.kind: unknown kind {kind!r}")


def is_compactly_supported_nonnegative(p: Potential) -> Optional[float]:
    """Return the support radius of a nonnegative compact perturbation, else None."""
    if isinstance(p, Bump):
        return p.center + p.radius
    if isinstance(p, Affine) and p.terms and all(c > 0 and isinstance(q, Bump) for c, q in p.terms):
        return max(q.center + q.radius for _, q in p.terms)
    return None
