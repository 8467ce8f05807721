"""Half-line reduction of radial -Laplacian + V and its three-point discretization.

With u(r) = r^((d-1)/2) psi(r) the s-wave problem becomes

    -u'' + (V(r) + c_d / r^2) u = E u,    c_d = (d-1)(d-3)/4,

on (r_min, r_max).  Nodes may be uniform or geometric.  The discretization is
the vertex-centred scheme

    (K u)_i = (u_i - u_{i-1}) / h_{i-1/2} - (u_{i+1} - u_i) / h_{i+1/2} + m_i q_i u_i,
    m_i = (h_{i-1/2} + h_{i+1/2}) / 2,

giving the pencil K - E M with M = diag(m).  The standard symmetric
tridiagonal form is T = M^(-1/2) K M^(-1/2); on a uniform grid it reduces to
diag 2/h^2 + q_i and off-diagonal -1/h^2.  Eigen-solvers work on the pencil
directly, which stays well scaled on geometric grids spanning many decades.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ParamError, ShapeError
from .potentials import Potential, breakpoints


class Placement(enum.Enum):
    Uniform = "uniform"
    Geometric = "geometric"


class Boundary(enum.Enum):
    Dirichlet = "dirichlet"
    Neumann = "neumann"


class GridWarning(UserWarning):
    pass


def reduce_dimension(d: int) -> float:
    """Centrifugal coefficient c_d = (d-1)(d-3)/4 of the reduced s-wave operator."""
    if int(d) != d or d < 1:
        raise ParamError(f"dimension must be a positive integer, got {d!r}")
    return (d - 1) * (d - 3) / 4.0


@dataclass(frozen=True)
class RadialGrid:
    """Nodes on (r_min, r_max) with Dirichlet data at r_max.

    ``left`` is the condition at r_min.  Dirichlet keeps the ``n`` interior
    nodes as unknowns.  Neumann (default for d = 1, where radial functions
    are even) adds r_min itself as an unknown with a half cell, so the grid
    then carries n + 1 unknowns.
    """

    d: int
    r_min: float
    r_max: float
    n: int
    placement: Placement = Placement.Uniform
    ratio: Optional[float] = None
    left: Boundary = Boundary.Dirichlet

    @property
    def h(self) -> float:
        if self.placement is not Placement.Uniform:
            raise ParamError("h is only defined for uniform grids")
        return (self.r_max - self.r_min) / (self.n + 1)

    @property
    def points(self) -> np.ndarray:
        """All node positions including both boundary points."""
        if self.placement is Placement.Uniform:
            pts = self.r_min + (self.r_max - self.r_min) * np.arange(self.n + 2) / (self.n + 1)
        else:
            k = np.arange(1, self.n + 1)
            inner = self.r_min * np.exp(k * math.log(self.ratio))
            inner = inner[inner < self.r_max]
            pts = np.concatenate(([self.r_min], inner, [self.r_max]))
        pts[0], pts[-1] = self.r_min, self.r_max
        return pts

    @property
    def nodes(self) -> np.ndarray:
        """Positions of the unknowns."""
        pts = self.points
        return pts[:-1] if self.left is Boundary.Neumann else pts[1:-1]

    @property
    def size(self) -> int:
        return len(self.nodes)

    def to_dict(self) -> dict:
        return {"d": self.d, "r_min": self.r_min, "r_max": self.r_max, "n": self.n,
                "placement": self.placement.value, "ratio": self.ratio, "left": self.left.value}


def make_grid(d: int, r_min: Optional[float], r_max: float, n: int,
              placement="uniform", ratio: Optional[float] = None, left=None) -> RadialGrid:
    """Validate parameters and build a grid.

    ``r_min`` is the left boundary point, never a Dirichlet node itself, so
    uniform grids may use r_min = 0 and then start their nodes at r = h.
    ``r_min=None`` picks 0 for uniform grids and 1e-6 for geometric ones.
    Geometric grids use ``ratio = (r_max/r_min)^(1/(n+1))`` unless given.
    """
    placement = Placement(placement) if not isinstance(placement, Placement) else placement
    reduce_dimension(d)
    if int(n) != n or n < 3:
        raise ParamError(f"grid needs n >= 3 interior nodes, got {n!r}")
    if r_min is None:
        r_min = 1e-6 if placement is Placement.Geometric else 0.0
    if not (0 <= r_min < r_max) or not math.isfinite(r_max):
        raise ParamError(f"grid needs 0 <= r_min < r_max, got r_min={r_min!r}, r_max={r_max!r}")
    if placement is Placement.Geometric:
        if not r_min > 0:
            raise ParamError("geometric grids need r_min > 0")
        if ratio is None:
            ratio = (r_max / r_min) ** (1.0 / (n + 1))
        if not ratio > 1:
            raise ParamError(f"geometric ratio must exceed 1, got {ratio!r}")
    elif ratio is not None:
        raise ParamError("ratio applies to geometric grids only")
    if left is None:
        left = Boundary.Neumann if d == 1 else Boundary.Dirichlet
    left = Boundary(left) if not isinstance(left, Boundary) else left
    if left is Boundary.Neumann and r_min == 0 and d != 1:
        raise ParamError("a Neumann node at r = 0 is only allowed for d = 1")
    if d == 2 and placement is Placement.Uniform and r_min * math.sqrt(n) > 1.0:
        warnings.warn("d = 2 grid with r_min*sqrt(n) > 1: the -1/(4r^2) term is poorly resolved",
                      GridWarning, stacklevel=2)
    return RadialGrid(int(d), float(r_min), float(r_max), int(n), placement,
                      None if ratio is None else float(ratio), left)


@dataclass(frozen=True, eq=False)
class TridiagOperator:
    """Discretized reduced operator stored as the pencil (K, M).

    ``diag`` and ``offdiag`` expose the equivalent standard symmetric form.
    """

    kdiag: np.ndarray
    koff: np.ndarray
    mass: np.ndarray
    grid: Optional[RadialGrid] = None

    def __post_init__(self):
        n = len(self.kdiag)
        if len(self.mass) != n or len(self.koff) != max(n - 1, 0):
            raise ShapeError("pencil arrays have inconsistent lengths")
        for name in ("kdiag", "koff", "mass"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.mass <= 0):
            raise ParamError("mass entries must be positive")

    @classmethod
    def from_standard(cls, diag, offdiag, grid=None):
        diag = np.asarray(diag, dtype=float)
        return cls(diag, np.asarray(offdiag, dtype=float), np.ones_like(diag), grid)

    @property
    def size(self) -> int:
        return len(self.kdiag)

    @property
    def diag(self) -> np.ndarray:
        return self.kdiag / self.mass

    @property
    def offdiag(self) -> np.ndarray:
        return self.koff / np.sqrt(self.mass[:-1] * self.mass[1:])

    def gershgorin(self):
        d, e = self.diag, np.abs(self.offdiag)
        rad = np.zeros_like(d)
        rad[:-1] += e
        rad[1:] += e
        return float(np.min(d - rad)), float(np.max(d + rad))

    def scale(self) -> float:
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi))

    def to_dense(self) -> np.ndarray:
        t = np.diag(self.diag)
        if self.size > 1:
            t += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return t


def _spacings(grid: RadialGrid):
    pts = grid.points
    h = np.diff(pts)
    if grid.left is Boundary.Neumann:
        left_h = np.concatenate(([np.inf], h[:-1]))
    else:
        left_h = h[:-1]
    right_h = h[1:] if grid.left is Boundary.Dirichlet else h
    return left_h, right_h


def assemble(p: Potential, grid: RadialGrid, potential_values: Optional[np.ndarray] = None) -> TridiagOperator:
    """Discretize -d^2/dr^2 + p(r) + c_d/r^2 on ``grid`` with the pencil scheme.

    ``potential_values`` may supply p at the nodes directly (used when the
    same grid is re-assembled for many coupling constants).
    """
    x = grid.nodes
    if potential_values is None:
        vals = potential_on_grid(p, grid)
    else:
        vals = np.asarray(potential_values, dtype=float)
        if vals.shape != x.shape:
            raise ShapeError("potential_values does not match the grid nodes")
    if not np.all(np.isfinite(vals)):
        raise DomainError("potential is not finite on the grid")
    left_h, right_h = _spacings(grid)
    inv_l = np.where(np.isinf(left_h), 0.0, 1.0 / left_h)
    inv_r = 1.0 / right_h
    mass = 0.5 * (np.where(np.isinf(left_h), 0.0, left_h) + right_h)
    cd = reduce_dimension(grid.d)
    q = vals + cd / (x * x) if cd else vals
    kdiag = inv_l + inv_r + mass * q
    koff = -inv_r[:-1]
    return TridiagOperator(kdiag, koff, mass, grid)


def potential_on_grid(p: Potential, grid: RadialGrid) -> np.ndarray:
    """Nodal values of ``p``, averaged over the dual cell where ``p`` jumps.

    Point samples of a discontinuous potential shift eigenvalues by O(h)
    depending on where the jump falls between nodes; cell averages remove
    that sensitivity.
    """
    x = grid.nodes
    vals = np.array(p(x), dtype=float)
    jumps = [b for b in breakpoints(p) if grid.r_min < b < grid.r_max]
    if not jumps:
        return vals
    left_h, right_h = _spacings(grid)
    lo = x - 0.5 * np.where(np.isinf(left_h), 0.0, left_h)
    hi = x + 0.5 * right_h
    for b in jumps:
        i = int(np.searchsorted(hi, b))
        if i >= len(x) or not lo[i] < b:
            continue
        a, c = lo[i], hi[i]
        # piecewise smooth on each side of the jump: two-point Gauss per side
        total = 0.0
        for s, t in ((a, b), (b, c)):
            mid, half = 0.5 * (s + t), 0.5 * (t - s)
            nodes = mid + half * np.array([-1.0, 1.0]) / math.sqrt(3.0)
            total += half * float(np.sum(p(nodes)))
        vals[i] = total / (c - a)
    return vals


def apply(T: TridiagOperator, u) -> np.ndarray:
    """Standard-form product T u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (T.size,):
        raise ShapeError(f"vector of length {u.shape} does not match operator size {T.size}")
    s = np.sqrt(T.mass)
    w = u / s
    y = T.kdiag * w
    y[:-1] += T.koff * w[1:]
    y[1:] += T.koff * w[:-1]
    return y / s


def nodal_apply(T: TridiagOperator, u) -> np.ndarray:
    """M^(-1) K u: the discrete differential operator acting on nodal values."""
    u = np.asarray(u, dtype=float)
    if u.shape != (T.size,):
        raise ShapeError(f"vector of length {u.shape} does not match operator size {T.size}")
    y = T.kdiag * u
    y[:-1] += T.koff * u[1:]
    y[1:] += T.koff * u[:-1]
    return y / T.mass


def to_standard(T: TridiagOperator, values) -> np.ndarray:
    """Nodal values -> standard-form vector (multiply by sqrt(mass))."""
    return np.asarray(values, dtype=float) * np.sqrt(T.mass)


def to_nodal(T: TridiagOperator, vector) -> np.ndarray:
    return np.asarray(vector, dtype=float) / np.sqrt(T.mass)


def residual(p: Potential, f: Callable, grid: RadialGrid, transform: str = "reduced",
             skip: int = 5, energy: float = 0.0) -> float:
    """Max-norm of the discrete (operator - energy) applied to samples of ``f``.

    ``transform='reduced'`` samples u = r^((d-1)/2) f(r); ``'none'`` samples f
    as is.  ``skip`` nodes at each end are excluded from the norm.
    """
    T = assemble(p, grid)
    x = grid.nodes
    vals = np.asarray(f(x), dtype=float)
    if transform == "reduced":
        vals = vals * x ** ((grid.d - 1) / 2.0)
    elif transform != "none":
        raise ParamError(f"unknown transform {transform!r}")
    res = nodal_apply(T, vals) - energy * vals
    if 2 * skip >= len(res):
        raise ParamError("boundary skip removes every node")
    inner = res[skip:len(res) - skip]
    return float(np.max(np.abs(inner)))
