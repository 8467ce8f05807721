"""Lowest eigenpairs of symmetric tridiagonal pencils by Sturm bisection.

Counts come from the LDL^T pivots of K - E M, which by Sylvester's law have
the same inertia as T - E with T = M^(-1/2) K M^(-1/2).  Every reported
eigenvalue carries a bracket (lo, hi) with count_below(lo) < k <= count_below(hi).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, ParamError
from .radialgrid import TridiagOperator, apply

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


class DegenerateEigenvalueWarning(UserWarning):
    pass


class ReducibleOperatorWarning(UserWarning):
    pass


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    brackets: np.ndarray  # shape (k, 2)
    eigenvectors: Optional[list] = None
    residual_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _pencil_lists(T: TridiagOperator):
    cache = T.__dict__.get("_lists")
    if cache is None:
        koff = T.koff
        if koff.size and np.any(koff == 0.0):
            warnings.warn("zero off-diagonal entry perturbed to keep the operator irreducible",
                          ReducibleOperatorWarning, stacklevel=3)
            scale = np.max(np.abs(T.kdiag)) if T.size else 1.0
            koff = np.where(koff == 0.0, _EPS * scale, koff)
        e2 = (koff * koff).tolist()
        cache = (T.kdiag.tolist(), T.mass.tolist(), e2, _row_pivmin(T).tolist())
        object.__setattr__(T, "_lists", cache)
    return cache


def _row_pivmin(T):
    # pivot floor relative to each row: rows of a geometric grid span many decades
    rows = np.abs(T.kdiag).copy()
    rows[:-1] = np.maximum(rows[:-1], np.abs(T.koff))
    rows[1:] = np.maximum(rows[1:], np.abs(T.koff))
    return np.maximum(rows * _EPS * _EPS, _TINY)


def count_below(T: TridiagOperator, E: float) -> int:
    """Number of eigenvalues of T strictly below E (Sturm sign count)."""
    kd, ms, e2, pm = _pencil_lists(T)
    n = len(kd)
    if n == 0:
        return 0
    count = 0
    q = kd[0] - E * ms[0]
    if abs(q) < pm[0]:
        q = -pm[0]
    if q < 0:
        count += 1
    for i in range(1, n):
        q = kd[i] - E * ms[i] - e2[i - 1] / q
        if abs(q) < pm[i]:
            q = -pm[i]
        if q < 0:
            count += 1
    return count


def _midpoint(lo, hi, tau):
    # bisect in asinh(E/tau): geometric for |E| >> tau, arithmetic near zero
    a, b = math.asinh(lo / tau), math.asinh(hi / tau)
    mid = tau * math.sinh(0.5 * (a + b))
    if not lo < mid < hi:
        mid = lo + 0.5 * (hi - lo)
    return mid


def _bisect_eig(T, k, lo, hi, tol, rtol, clo=None):
    """Shrink [lo, hi] around the k-th eigenvalue (1-based)."""
    tau = max(tol, _TINY * 1e10)
    for _ in range(5000):
        width = hi - lo
        if width <= tol:
            break
        if rtol > 0 and lo * hi > 0 and width <= rtol * min(abs(lo), abs(hi)):
            break
        mid = _midpoint(lo, hi, tau)
        if mid <= lo or mid >= hi:
            break
        if count_below(T, mid) >= k:
            hi = mid
        else:
            lo = mid
    return lo, hi


def lowest_eigs(T: TridiagOperator, k: int = 1, tol: float = 1e-12, rtol: float = 0.0) -> Spectrum:
    """The k smallest eigenvalues, each bracketed to width <= tol.

    With ``rtol > 0`` bisection also stops once the bracket is narrower than
    rtol times its distance from zero, which resolves eigenvalues many decades
    below ``tol``.
    """
    if int(k) != k or k < 1:
        raise ParamError(f"k must be a positive integer, got {k!r}")
    if k > T.size:
        raise ParamError(f"asked for {k} eigenvalues of a {T.size}x{T.size} operator")
    if not tol > 0:
        raise ParamError("tol must be positive")
    glo, ghi = T.gershgorin()
    pad = max(abs(glo), abs(ghi), 1.0) * 1e-12
    glo, ghi = glo - pad, ghi + pad
    vals, brackets = [], []
    lo_start = glo
    for j in range(1, int(k) + 1):
        lo, hi = _bisect_eig(T, j, lo_start, ghi, tol, rtol)
        vals.append(0.5 * (lo + hi))
        brackets.append((lo, hi))
        lo_start = lo
    return Spectrum(np.array(vals), np.array(brackets))


def bracket_certificate(T: TridiagOperator, spectrum: Spectrum) -> bool:
    """Re-check count_below(lo) < k <= count_below(hi) for every bracket."""
    for k, (lo, hi) in enumerate(spectrum.brackets, start=1):
        if not (count_below(T, lo) <= k - 1 and count_below(T, hi) >= k):
            return False
    return True


def _solve_shifted(kd, ms, koff, sigma, rhs, pm):
    """Solve (K - sigma M) x = rhs by LDL^T with tiny-pivot replacement."""
    n = len(kd)
    rhs = rhs.tolist()
    piv = [0.0] * n
    ell = [0.0] * max(n - 1, 0)
    p = kd[0] - sigma * ms[0]
    if abs(p) < pm[0]:
        p = pm[0]
    piv[0] = p
    for i in range(1, n):
        li = koff[i - 1] / piv[i - 1]
        ell[i - 1] = li
        p = kd[i] - sigma * ms[i] - li * koff[i - 1]
        if abs(p) < pm[i]:
            p = pm[i]
        piv[i] = p
    y = [0.0] * n
    y[0] = rhs[0]
    for i in range(1, n):
        y[i] = rhs[i] - ell[i - 1] * y[i - 1]
    x = [0.0] * n
    x[n - 1] = y[n - 1] / piv[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = y[i] / piv[i] - ell[i] * x[i + 1]
    return np.array(x)


def _fix_sign(v):
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def eigenvector(T: TridiagOperator, lam: float, tol: float = 1e-10, max_iter: int = 50) -> np.ndarray:
    """Unit standard-form eigenvector for an eigenvalue approximated by ``lam``.

    Inverse iteration on the pencil from the normalized constant vector.  The
    sign is fixed so the first nonzero entry is positive.
    """
    n = T.size
    kd = T.kdiag.tolist()
    ms = T.mass.tolist()
    koff = T.koff.tolist()
    sqm = np.sqrt(T.mass)
    scale = T.scale()
    pivmin = _row_pivmin(T).tolist()
    width = count_below(T, lam + max(tol, abs(lam) * 1e-12)) - count_below(T, lam - max(tol, abs(lam) * 1e-12))
    if width > 1:
        warnings.warn(f"eigenvalue near {lam} looks degenerate ({width} in the bracket)",
                      DegenerateEigenvalueWarning, stacklevel=2)
    s = np.full(n, 1.0 / math.sqrt(n))
    for attempt in range(2):
        for _ in range(max_iter):
            x = _solve_shifted(kd, ms, koff, lam, sqm * s, pivmin)
            y = sqm * x
            norm = float(np.linalg.norm(y))
            if not np.isfinite(norm) or norm == 0.0:
                break
            y = _fix_sign(y / norm)
            res = float(np.linalg.norm(apply(T, y) - lam * y))
            converged = res <= 10.0 * tol * max(scale, 1.0) or abs(float(y @ s)) >= 1.0 - 4 * _EPS
            s = y
            if converged:
                return s
        # breakdown or stagnation: restart from a fixed perturbed vector
        s = np.full(n, 1.0) + 0.5 * np.cos(np.arange(n) * 1.618)
        s /= np.linalg.norm(s)
    raise ConvergenceError(f"inverse iteration did not converge near lambda = {lam}")


def eigenpairs(T: TridiagOperator, k: int = 1, tol: float = 1e-12, rtol: float = 0.0) -> Spectrum:
    """lowest_eigs plus eigenvectors and their residual norms."""
    spec = lowest_eigs(T, k, tol, rtol)
    vecs, res = [], []
    for lam in spec.eigenvalues:
        v = eigenvector(T, lam, tol)
        vecs.append(v)
        res.append(float(np.linalg.norm(apply(T, v) - lam * v)))
    spec.eigenvectors = vecs
    spec.residual_norms = np.array(res)
    return spec
