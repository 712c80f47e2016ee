"""Spherical-cap geometry: curvature schedules, coordinate charts, the
dilution field, quadrature and Laplace-Beltrami mode data.

A cap of base radius R and curvature gamma = sin(theta_max) sits on a sphere
of radius rho = R/gamma.  Three charts are supported:

* spherical (theta, phi), 0 <= theta <= theta_max;
* toroidal (eta, phi), eta in [0, inf), cap boundary at eta -> inf;
* disk (w, phi), w = tanh(eta/2) in [0, 1].

The disk chart is a rescaled stereographic projection,
w = tan(theta/2) / tan(theta_max/2), so it is conformal and the
Laplace-Beltrami operator is c(w) times the flat polar Laplacian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, ValidationError
from .specfun import degree_roots, legendre_p

CHARTS = ("spherical", "toroidal", "disk")


@dataclass(frozen=True)
class CapSchedule:
    """Curvature trajectory gamma(tau) with tau = epsilon * t.

    linear: gamma = gamma0 - tau.
    arctan: gamma = gamma0 - (delta/2) arctan(tau), nearly linear near tau = 0
    and saturating at gamma0 -/+ delta*pi/4.
    """

    R: float = 1.0
    epsilon: float = 1e-6
    kind: str = "linear"
    gamma0: float = 0.5
    delta: float = 0.2

    def __post_init__(self):
        if not self.R > 0:
            raise ValidationError("R must be positive")
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if self.kind not in ("linear", "arctan"):
            raise ValidationError(f"unknown schedule kind {self.kind!r}")
        if not 0 < self.gamma0 <= 1:
            raise ValidationError("gamma0 must lie in (0, 1]")

    def gamma(self, tau):
        if self.kind == "linear":
            return self.gamma0 - np.asarray(tau, dtype=float) if np.ndim(tau) else self.gamma0 - tau
        return self.gamma0 - 0.5 * self.delta * np.arctan(tau)

    def dgamma(self, tau):
        if self.kind == "linear":
            return -1.0 + 0.0 * np.asarray(tau, dtype=float) if np.ndim(tau) else -1.0
        return -0.5 * self.delta / (1.0 + np.asarray(tau, dtype=float) ** 2)

    def tau_of_gamma(self, gamma):
        if self.kind == "linear":
            return self.gamma0 - gamma
        arg = 2.0 * (self.gamma0 - gamma) / self.delta
        if abs(arg) >= math.pi / 2:
            raise DomainError(f"gamma={gamma} is outside the range of the arctan schedule")
        return math.tan(arg)

    def tau_of_t(self, t):
        return self.epsilon * t

    def geometry(self, tau) -> "CapGeometry":
        return CapGeometry(self.R, float(self.gamma(tau)))

    def check_interval(self, tau0, tau1, samples=201):
        g = self.gamma(np.linspace(tau0, tau1, samples))
        if np.any(g <= 0) or np.any(g > 1):
            raise DomainError(f"gamma leaves (0, 1] on tau in [{tau0}, {tau1}]")


@dataclass(frozen=True)
class CapGeometry:
    R: float
    gamma: float

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise DomainError(f"curvature must lie in (0, 1], got {self.gamma!r}")
        if not self.R > 0:
            raise DomainError("R must be positive")

    @property
    def s(self):
        """cos(theta_max) = sqrt(1 - gamma^2)."""
        return math.sqrt(max(0.0, 1.0 - self.gamma * self.gamma))

    @property
    def theta_max(self):
        return math.asin(self.gamma)

    @property
    def xi(self):
        return math.pi - math.asin(self.gamma)

    @property
    def sphere_radius(self):
        return self.R / self.gamma

    @property
    def t_half(self):
        """tan(theta_max / 2), the stereographic scale of the disk chart."""
        return self.gamma / (1.0 + self.s)


@dataclass(frozen=True)
class SurfacePoint:
    chart: str
    c1: float
    c2: float

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValidationError(f"unknown chart {self.chart!r}")


# -- chart maps (vectorised) -------------------------------------------------

def theta_from_eta(geom: CapGeometry, eta):
    eta = np.asarray(eta, dtype=float)
    return theta_from_w(geom, np.tanh(0.5 * eta))


def eta_from_theta(geom: CapGeometry, theta):
    return 2.0 * np.arctanh(w_from_theta(geom, theta))


def cos_theta_from_eta(geom: CapGeometry, eta):
    """cos(theta) = (1 - cosh(eta) cos(xi)) / (cosh(eta) - cos(xi))."""
    ch = np.cosh(np.asarray(eta, dtype=float))
    cx = -geom.s
    return (1.0 - ch * cx) / (ch - cx)


def theta_from_w(geom: CapGeometry, w):
    return 2.0 * np.arctan(geom.t_half * np.asarray(w, dtype=float))


def w_from_theta(geom: CapGeometry, theta):
    return np.tan(0.5 * np.asarray(theta, dtype=float)) / geom.t_half


def zeta_from_w(geom: CapGeometry, w):
    """cos(theta) as a function of the disk radius, without trigonometry."""
    w2 = np.asarray(w, dtype=float) ** 2
    s = geom.s
    return ((1.0 - w2) + s * (1.0 + w2)) / ((1.0 + w2) + s * (1.0 - w2))


def to_spherical(geom: CapGeometry, p: SurfacePoint) -> SurfacePoint:
    _check_bounds(geom, p)
    if p.chart == "spherical":
        return p
    if p.chart == "toroidal":
        return SurfacePoint("spherical", float(theta_from_eta(geom, p.c1)), p.c2)
    return SurfacePoint("spherical", float(theta_from_w(geom, p.c1)), p.c2)


def convert(geom: CapGeometry, p: SurfacePoint, chart: str) -> SurfacePoint:
    sph = to_spherical(geom, p)
    if chart == "spherical":
        return sph
    if chart == "toroidal":
        return SurfacePoint("toroidal", float(eta_from_theta(geom, sph.c1)), sph.c2)
    if chart == "disk":
        return SurfacePoint("disk", float(w_from_theta(geom, sph.c1)), sph.c2)
    raise ValidationError(f"unknown chart {chart!r}")


def _check_bounds(geom: CapGeometry, p: SurfacePoint):
    if not (0.0 <= p.c2 < 2.0 * math.pi):
        raise DomainError(f"phi={p.c2} outside [0, 2pi)")
    tol = 1e-12
    if p.chart == "spherical" and not (-tol <= p.c1 <= geom.theta_max + tol):
        raise DomainError(f"theta={p.c1} outside [0, theta_max={geom.theta_max}]")
    if p.chart == "toroidal" and not p.c1 >= 0:
        raise DomainError(f"eta={p.c1} must be >= 0")
    if p.chart == "disk" and not (0.0 <= p.c1 <= 1.0):
        raise DomainError(f"w={p.c1} outside [0, 1]")


# -- dilution and metric -----------------------------------------------------

def q_of_zeta(geom: CapGeometry, zeta):
    """Dilution profile Q = (2/gamma)(cos(theta)/sqrt(1-gamma^2) - 1)."""
    if geom.gamma >= 1.0:
        raise DomainError("the dilution field is singular for a hemisphere (gamma = 1)")
    return (2.0 / geom.gamma) * (np.asarray(zeta, dtype=float) / geom.s - 1.0)


def dilution_Q(geom: CapGeometry, p: SurfacePoint):
    sph = to_spherical(geom, p)
    if p.chart == "toroidal":
        # through the coordinate map, not the cosh form with a stray factor
        z = cos_theta_from_eta(geom, p.c1)
    elif p.chart == "disk":
        z = zeta_from_w(geom, p.c1)
    else:
        z = math.cos(sph.c1)
    return float(q_of_zeta(geom, z))


def disk_chart_factor(geom: CapGeometry, w):
    """c(w) with Laplace-Beltrami = c(w) * flat polar Laplacian on the unit disk."""
    w2 = np.asarray(w, dtype=float) ** 2
    return (((1.0 + w2) + geom.s * (1.0 - w2)) / (2.0 * geom.R)) ** 2


def disk_area_weight(geom: CapGeometry, w, physical=False):
    """Density of the chosen area element against w dw dphi."""
    c = disk_chart_factor(geom, w)
    return 1.0 / c if physical else (geom.gamma / geom.R) ** 2 / c


# -- quadrature --------------------------------------------------------------

@lru_cache(maxsize=64)
def _gl(nodes):
    return np.polynomial.legendre.leggauss(nodes)


def theta_quadrature(geom: CapGeometry, panels=64, nodes=8, physical=False):
    """Nodes and weights on [0, theta_max] with the area density sin(theta) folded in."""
    x, wt = _gl(nodes)
    edges = np.linspace(0.0, geom.theta_max, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    th = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    w = (half[:, None] * wt[None, :]).ravel() * np.sin(th)
    if physical:
        w = w * geom.sphere_radius**2
    return th, w


def phi_integral(m1, m2):
    """Closed form of the integral of cos(m1 phi) cos(m2 phi) over [0, 2pi]."""
    if m1 != m2 and m1 != -m2:
        return 0.0
    return 2.0 * math.pi if m1 == 0 else math.pi


def area_integral(geom: CapGeometry, f, physical=False, panels=64, nodes=8, n_phi=128):
    """Integral of f(theta, phi) over the cap.

    The default weight is sin(theta) dtheta dphi (solid angle); ``physical``
    multiplies by rho^2.  phi uses the periodic trapezoid rule, exact for
    trigonometric polynomials of degree below ``n_phi``.
    """
    th, w = theta_quadrature(geom, panels, nodes, physical)
    ph = 2.0 * math.pi * np.arange(n_phi) / n_phi
    vals = np.asarray(f(th[:, None], ph[None, :]), dtype=float)
    vals = np.broadcast_to(vals, (th.size, n_phi))
    return float(w @ vals.sum(axis=1)) * (2.0 * math.pi / n_phi)


def radial_integral(geom: CapGeometry, g, physical=False, panels=64, nodes=8):
    """Integral over [0, theta_max] of g(theta) sin(theta) dtheta."""
    th, w = theta_quadrature(geom, panels, nodes, physical)
    return float(w @ np.asarray(g(th), dtype=float))


# -- modes -------------------------------------------------------------------

@dataclass(frozen=True)
class ModeBasis:
    """Laplace-Beltrami eigenfunction cos(m phi) P^m_lambda(cos theta) on a cap."""

    m: int
    n: int
    gamma: float
    R: float
    lambda_mn: float
    mu_mn: float
    norm_sq: float = field(repr=False)

    def radial(self, theta):
        return legendre_p(self.m, self.lambda_mn, np.cos(theta))

    def radial_zeta(self, zeta):
        return legendre_p(self.m, self.lambda_mn, np.clip(zeta, -1.0, 1.0))

    def __call__(self, theta, phi):
        return np.cos(self.m * np.asarray(phi)) * self.radial(theta)


def mode_basis(m, n, geom: CapGeometry, panels=64, nodes=8) -> ModeBasis:
    lam = degree_roots(m, n, geom.gamma)[n - 1]
    mu = lam * (lam + 1.0) * geom.gamma**2 / geom.R**2
    radial_sq = radial_integral(geom, lambda th: legendre_p(m, lam, np.cos(th)) ** 2,
                                panels=panels, nodes=nodes)
    return ModeBasis(int(m), int(n), geom.gamma, geom.R, lam, mu, radial_sq * phi_integral(m, m))


def eigenfunction_eval(basis: ModeBasis, geom: CapGeometry, p: SurfacePoint):
    sph = to_spherical(geom, p)
    if p.chart == "disk":
        z = float(zeta_from_w(geom, p.c1))
    else:
        z = math.cos(sph.c1)
    return math.cos(basis.m * sph.c2) * legendre_p(basis.m, basis.lambda_mn, min(1.0, z))
