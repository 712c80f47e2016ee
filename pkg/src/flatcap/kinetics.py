"""Brusselator kinetics, Taylor tensors about the patternless state and
per-mode linear stability.

Vector fields are arrays whose leading axis has length 2 (the two species);
all tensor helpers broadcast over the trailing axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import BracketError, ComplexRootsError, ValidationError
from .specfun import degree_roots

PAPER_A = 76.51981
DIRECTION = np.array([1.0, -1.0])


@dataclass(frozen=True)
class BrusselatorParams:
    a: float = 0.01
    bB: float = 1.5  # only the product b*B enters the model
    c: float = 1.8
    d: float = 0.375
    A: float = PAPER_A
    DX: float = 0.005
    DY: float = 0.1

    def __post_init__(self):
        for name in ("a", "bB", "c", "d", "A", "DX", "DY"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive, got {v!r}")

    def with_A(self, A):
        return replace(self, A=A)

    @property
    def X00(self):
        return self.a * self.A / self.d

    @property
    def Y00(self):
        return self.bB * self.d / (self.a * self.A * self.c)

    @property
    def equilibrium(self):
        return np.array([self.X00, self.Y00])

    @property
    def k1(self):
        return self.bB - self.d

    @property
    def k2(self):
        return self.a**2 * self.A**2 * self.c / self.d**2

    @property
    def k3(self):
        return -self.bB

    @property
    def k4(self):
        return -self.k2

    @property
    def K0(self):
        return np.array([[self.k1, self.k2], [self.k3, self.k4]])

    @property
    def D(self):
        return np.diag([self.DX, self.DY])

    # coefficients of the quadratic form: bBd/(aA) = c*Y00 and aAc/d = c*X00
    @property
    def q_uu(self):
        return self.bB * self.d / (self.a * self.A)

    @property
    def q_uv(self):
        return self.a * self.A * self.c / self.d


def reaction(p: BrusselatorParams, X, Y):
    """Brusselator reaction terms (f, g)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    auto = p.c * X * X * Y
    f = p.a * p.A - p.d * X - p.bB * X + auto
    g = p.bB * X - auto
    return f, g


def B0(p: BrusselatorParams, U1, U2):
    """Symmetric bilinear Taylor term; values lie along (1, -1)."""
    u1, v1 = U1[0], U1[1]
    u2, v2 = U2[0], U2[1]
    s = p.q_uu * u1 * u2 + p.q_uv * (u1 * v2 + v1 * u2)
    return np.stack([s, -s])


def C0(p: BrusselatorParams, U1, U2, U3):
    """Symmetric trilinear Taylor term; values lie along (1, -1)."""
    s = (p.c / 3.0) * (U1[0] * U2[0] * U3[1] + U1[0] * U2[1] * U3[0] + U1[1] * U2[0] * U3[0])
    return np.stack([s, -s])


def tensors(p: BrusselatorParams):
    """(K0, B0, C0) with the bilinear and trilinear forms bound to ``p``."""
    return (
        p.K0,
        lambda U1, U2: B0(p, U1, U2),
        lambda U1, U2, U3: C0(p, U1, U2, U3),
    )


def mode_matrix(p: BrusselatorParams, mu):
    """2x2 linearisation restricted to a Laplace-Beltrami eigenvalue ``mu``."""
    return np.array(
        [[-p.DX * mu + p.k1, p.k2], [p.k3, -p.DY * mu + p.k4]]
    )


@dataclass(frozen=True)
class SigmaPair:
    sigma_plus: float
    sigma_minus: float


def sigma_pair(p: BrusselatorParams, mu) -> SigmaPair:
    """Real roots of the characteristic quadratic, larger first."""
    tr = -(p.DX + p.DY) * mu + p.k1 + p.k4
    det = (p.DX * p.DY * mu * mu - (p.DX * p.k4 + p.DY * p.k1) * mu
           + p.k1 * p.k4 - p.k2 * p.k3)
    disc = tr * tr - 4.0 * det
    if disc < 0:
        raise ComplexRootsError(mu, disc)
    r = math.sqrt(disc)
    # avoid cancellation in the smaller-magnitude root
    q = -0.5 * (-tr + math.copysign(r, -tr))
    big, small = q, (det / q if q != 0 else 0.0)
    hi, lo = max(big, small), min(big, small)
    return SigmaPair(hi, lo)


def sigma_plus(p: BrusselatorParams, mu):
    return sigma_pair(p, mu).sigma_plus


def mode_mu(m, n, gamma, R=1.0):
    lam = degree_roots(m, n, gamma)[n - 1]
    return lam * (lam + 1.0) * gamma * gamma / (R * R)


def marginal_A(m, n, gamma, p: BrusselatorParams | None = None, bracket=(76.0, 77.0),
               R=1.0, tol=1e-10, mu=None):
    """A at which the leading growth rate of mode (m, n) vanishes, by bisection."""
    p = p or BrusselatorParams()
    mu = mode_mu(m, n, gamma, R) if mu is None else mu
    lo, hi = bracket
    f = lambda A: sigma_plus(p.with_A(A), mu)
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise BracketError(f"no sign change of sigma+ for mode ({m},{n}) at gamma={gamma} in A{bracket}")
    # sigma+ is expected to be monotone in A across the bracket
    probe = [f(lo + (hi - lo) * t) for t in np.linspace(0, 1, 9)]
    if not (np.all(np.diff(probe) <= 0) or np.all(np.diff(probe) >= 0)):
        raise BracketError(f"sigma+ is not monotone in A on {bracket} for mode ({m},{n})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def curves_in_region(A_range=(76.1, 76.7), gamma_range=(0.3, 0.8), m_max=12, n_max=8,
                     p: BrusselatorParams | None = None, n_gamma=101, R=1.0):
    """Modes whose marginal curve A_mn(gamma) enters the given rectangle.

    Returns ``{(m, n): (gammas, A_values)}`` with the curve sampled on the
    gamma grid (NaN where the curve leaves the A window).
    """
    p = p or BrusselatorParams()
    gammas = np.linspace(gamma_range[0], gamma_range[1], n_gamma)
    lo, hi = A_range
    found = {}
    for m in range(m_max + 1):
        for n in range(1, n_max + 1):
            vals = np.full(gammas.shape, np.nan)
            for i, g in enumerate(gammas):
                # one scan per (m, gamma) serves every n
                lam = degree_roots(m, n_max, g)[n - 1]
                mu = lam * (lam + 1.0) * g * g / (R * R)
                slo = sigma_plus(p.with_A(lo), mu)
                shi = sigma_plus(p.with_A(hi), mu)
                if slo * shi <= 0:
                    vals[i] = marginal_A(m, n, g, p, bracket=A_range, R=R, mu=mu)
            if np.any(np.isfinite(vals)):
                found[(m, n)] = (gammas, vals)
    return found
