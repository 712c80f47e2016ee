"""Ferrers (associated Legendre) functions of integer order and real degree.

Convention: Condon-Shortley phase included, so ``P^1_1(x) = -sqrt(1 - x^2)``.

Evaluation uses the Gauss hypergeometric representation

    P^m_nu(x) = (-1)^m (nu-m+1)_{2m} / (2^m m!) (1-x^2)^{m/2}
                * 2F1(m-nu, nu+m+1; m+1; (1-x)/2)

only at a base degree ``nu0`` in ``[m, m+1)`` (and ``nu0 + 1``), where the
series has terms of one sign and cannot cancel.  Higher degrees are reached by
the upward three-term recurrence in the degree, which is stable for the
first-kind function on ``(-1, 1]``.  Summing the series directly at large
degree loses up to ten digits to cancellation near the cap boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ConvergenceError, DomainError

SERIES_RTOL = 1e-16
SERIES_MAXITER = 100_000


@dataclass(frozen=True)
class FdSteps:
    """Finite-difference steps for derivatives in degree (h1) and slow time (h2)."""

    h1: float = 1e-5
    h2: float = 1e-5

    def __post_init__(self):
        for name in ("h1", "h2"):
            v = getattr(self, name)
            if not (0.0 < v <= 1e-4):
                raise DomainError(f"{name} must lie in (0, 1e-4], got {v!r}")


@dataclass(frozen=True)
class DegreeRoot:
    m: int
    n: int
    gamma: float
    lambda_mn: float
    residual: float


def _check_args(m, lam, x, *, open_right=False):
    if int(m) != m or m < 0:
        raise DomainError(f"order m must be a nonnegative integer, got {m!r}")
    if not np.isfinite(lam) or lam < 0:
        raise DomainError(f"degree must be real and >= 0, got {lam!r}")
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa <= -1.0) or np.any(xa > 1.0):
        raise DomainError("argument must satisfy -1 < x <= 1")
    if open_right and np.any(xa >= 1.0):
        raise DomainError("argument must satisfy -1 < x < 1")
    return int(m), float(lam), xa


def _hyp2f1_series(a, b, c, z):
    """Sum 2F1(a, b; c; z) for an array ``z`` in [0, 1)."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        return np.asarray(_hyp2f1_scalar(a, b, c, float(z)))
    total = np.ones_like(z)
    term = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(SERIES_MAXITER):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + np.where(active, term, 0.0)
        active &= np.abs(term) > SERIES_RTOL * np.abs(total)
        if not active.any():
            return total
    raise ConvergenceError(f"2F1({a}, {b}; {c}; z) did not converge in {SERIES_MAXITER} terms")


def _hyp2f1_scalar(a, b, c, z):
    total = term = 1.0
    for k in range(SERIES_MAXITER):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if abs(term) <= SERIES_RTOL * abs(total):
            return total
    raise ConvergenceError(f"2F1({a}, {b}; {c}; {z}) did not converge in {SERIES_MAXITER} terms")


def _rising(x, n):
    out = 1.0
    for j in range(n):
        out *= x + j
    return out


def _p_series(m, nu, x):
    z = 0.5 * (1.0 - x)
    pref = (-1) ** m * _rising(nu - m + 1.0, 2 * m) / (2.0**m * math.factorial(m))
    return pref * (1.0 - x * x) ** (0.5 * m) * _hyp2f1_series(m - nu, nu + m + 1.0, m + 1.0, z)


def _p_eval(m, lam, x):
    if lam < m + 1.0:
        return _p_series(m, lam, x)
    steps = int(math.floor(lam - m))
    nu0 = lam - steps
    p_prev = _p_series(m, nu0, x)
    p_cur = _p_series(m, nu0 + 1.0, x)
    nu = nu0 + 1.0
    for _ in range(steps - 1):
        p_next = ((2.0 * nu + 1.0) * x * p_cur - (nu + m) * p_prev) / (nu - m + 1.0)
        p_prev, p_cur = p_cur, p_next
        nu += 1.0
    return p_cur


def legendre_p(m, lam, x):
    """Ferrers function P^m_lam(x) for -1 < x <= 1; vectorised over ``x``."""
    m, lam, xa = _check_args(m, lam, x)
    out = _p_eval(m, lam, xa)
    return float(out) if out.ndim == 0 else out


def legendre_dx(m, lam, x):
    """dP^m_lam/dx from the degree-lowering identity; requires |x| < 1."""
    m, lam, xa = _check_args(m, lam, x, open_right=True)
    p = _p_eval(m, lam, xa)
    # P^m_{lam-1} with lam-1 < 0 is P^m_{-lam} by the nu -> -nu-1 symmetry
    lower = lam - 1.0 if lam >= 1.0 else -lam
    q = _p_eval(m, lower, xa)
    out = (lam * xa * p - (lam + m) * q) / (xa * xa - 1.0)
    return float(out) if out.ndim == 0 else out


def legendre_dlambda(m, lam, x, steps: FdSteps | None = None):
    """Central difference of P^m_lam(x) in the degree."""
    h = (steps or FdSteps()).h1
    if lam - h < 0:
        raise DomainError("lam - h1 must be >= 0")
    hi = legendre_p(m, lam + h, x)
    lo = legendre_p(m, lam - h, x)
    return (np.asarray(hi) - np.asarray(lo)) / (2.0 * h) if np.ndim(hi) else (hi - lo) / (2.0 * h)


SCAN_STEP = 0.25
SCAN_MAX = 400.0


def _scan_values(m, x, lam_max):
    """P^m_lam(x) on the grid lam = m + j*SCAN_STEP up to ``lam_max``.

    Grid points sharing a fractional part lie on one degree recurrence, so the
    whole grid costs a handful of series sums.
    """
    per = int(round(1.0 / SCAN_STEP))
    count = int(math.floor((lam_max - m) / SCAN_STEP)) + 1
    grid = m + SCAN_STEP * np.arange(count)
    vals = np.empty(count)
    xa = np.asarray(x, dtype=float)
    for off in range(per):
        idx = np.arange(off, count, per)
        if idx.size == 0:
            continue
        nu = float(grid[idx[0]])
        p_prev = float(_p_series(m, nu, xa))
        vals[idx[0]] = p_prev
        if idx.size == 1:
            continue
        p_cur = float(_p_series(m, nu + 1.0, xa))
        vals[idx[1]] = p_cur
        nu += 1.0
        for j in idx[2:]:
            p_prev, p_cur = p_cur, ((2.0 * nu + 1.0) * x * p_cur - (nu + m) * p_prev) / (nu - m + 1.0)
            vals[j] = p_cur
            nu += 1.0
    return grid, vals


@lru_cache(maxsize=8192)
def _degree_roots(m, count, gamma, tol):
    x = math.sqrt(max(0.0, 1.0 - gamma * gamma))
    f = lambda lam: float(_p_eval(m, lam, np.asarray(x)))
    lam_max = min(m + 32.0, SCAN_MAX)
    while True:
        grid, vals = _scan_values(m, x, lam_max)
        roots = []
        for j in range(len(grid) - 1):
            if len(roots) == count:
                return tuple(roots)
            flo, fhi = vals[j], vals[j + 1]
            if flo == 0.0:
                roots.append(float(grid[j]))
            elif flo * fhi < 0.0:
                # refine well past tol: the curvature derivative of a root is a
                # finite difference of two nearby roots
                roots.append(brentq(f, grid[j], grid[j + 1], xtol=tol * 1e-4,
                                    rtol=4 * np.finfo(float).eps, maxiter=500))
        if len(roots) >= count:
            return tuple(roots[:count])
        if lam_max >= SCAN_MAX:
            raise BracketError(
                f"found {len(roots)} of {count} degree roots for m={m}, gamma={gamma} below {SCAN_MAX}"
            )
        lam_max = min(2.0 * lam_max, SCAN_MAX)


def degree_roots(m, count, gamma, tol=1e-10):
    """First ``count`` positive roots in lam of P^m_lam(sqrt(1-gamma^2)), increasing."""
    if not (0.0 < gamma <= 1.0):
        raise DomainError(f"curvature must lie in (0, 1], got {gamma!r}")
    if count < 1:
        raise DomainError("need at least one root")
    if int(m) != m or m < 0:
        raise DomainError(f"order m must be a nonnegative integer, got {m!r}")
    return _degree_roots(int(m), int(count), float(gamma), float(tol))


def find_degree(m, n, gamma, tol=1e-10) -> DegreeRoot:
    """The n-th degree root, with |P| at the boundary argument as residual."""
    if n < 1:
        raise DomainError("root index n starts at 1")
    lam = degree_roots(m, n, gamma, tol)[n - 1]
    x = math.sqrt(max(0.0, 1.0 - gamma * gamma))
    return DegreeRoot(int(m), int(n), float(gamma), lam, abs(legendre_p(m, lam, x)))
