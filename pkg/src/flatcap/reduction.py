"""Centre-manifold reduction about the slowly drifting patternless state.

The critical eigenfunction is U0 = u0 Phi cos(m0 phi) with
Phi = P^m0_lambda(cos theta) / S(gamma), where S fixes the amplitude
convention (see ``AMPLITUDE_CONVENTIONS``).  All inner products use the
solid-angle weight sin(theta) dtheta dphi.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import SingularSystemError, SpectralGapError, ValidationError
from .geometry import CapGeometry, CapSchedule, q_of_zeta, theta_quadrature
from .kinetics import BrusselatorParams, mode_matrix, sigma_pair
from .quasipattern import k1_matrix, qp_correction
from .specfun import FdSteps, degree_roots, legendre_dx, legendre_p

COND_LIMIT = 1e12


# -- amplitude convention ----------------------------------------------------

def _radial_l2(m, lam, geom, panels=64, nodes=8):
    th, w = theta_quadrature(geom, panels, nodes)
    return float(w @ legendre_p(m, lam, np.cos(th)) ** 2)


def _scale_legendre(m, lam, geom):
    return 1.0


# Fixed divisor of the Ferrers function that reproduces the published
# amplitude scale of the (5,1) pattern: with it the cubic coefficient at
# gamma = 0.5 (N = 5 quadratic modes) is -2.99378.  Being independent of
# gamma, it leaves growth rates and the drift of Phi untouched and only
# rescales x (by 1/S) and C (by S^2).
REFERENCE_SCALE = 453970.54157290334


def _scale_reference(m, lam, geom):
    return REFERENCE_SCALE


def _scale_l2_area(m, lam, geom):
    # unit L2 norm of cos(m phi) P over the physical cap area
    phi_int = 2.0 * math.pi if m == 0 else math.pi
    return math.sqrt(phi_int * geom.sphere_radius**2 * _radial_l2(m, lam, geom))


def _scale_l2_solid(m, lam, geom):
    phi_int = 2.0 * math.pi if m == 0 else math.pi
    return math.sqrt(phi_int * _radial_l2(m, lam, geom))


AMPLITUDE_CONVENTIONS = {
    "legendre": _scale_legendre,
    "reference": _scale_reference,
    "l2-area": _scale_l2_area,
    "l2-solid": _scale_l2_solid,
}
# conventions whose divisor does not depend on gamma
FIXED_SCALE = ("legendre", "reference")
DEFAULT_CONVENTION = "reference"


def amplitude_scale(m, lam, geom, convention=DEFAULT_CONVENTION):
    try:
        return AMPLITUDE_CONVENTIONS[convention](m, lam, geom)
    except KeyError:
        raise ValidationError(f"unknown amplitude convention {convention!r}") from None


# -- critical eigenpair ------------------------------------------------------

@dataclass(frozen=True)
class CriticalPair:
    gamma: float
    m: int
    n: int
    lam: float
    mu: float
    sigma0: float
    sigma_minus: float
    u0: np.ndarray
    u0_star: np.ndarray
    scale: float  # S in Phi = P / S
    radial_norm: float  # integral of Phi^2 sin(theta) over [0, theta_max]
    Nstar: float
    tau: float | None = None

    @property
    def phi_norm(self):
        return (2.0 * math.pi if self.m == 0 else math.pi) * self.radial_norm

    def phi(self, theta):
        return legendre_p(self.m, self.lam, np.cos(theta)) / self.scale

    def pairing(self):
        """<U0*, U0> under the imposed normalisation (1 by construction)."""
        return self.Nstar * float(self.u0_star @ self.u0) * self.phi_norm


def other_modes_sigma(p, geom, mode, m_max=12, n_max=8):
    out = {}
    for m in range(m_max + 1):
        lams = degree_roots(m, n_max, geom.gamma)
        for n, lam in enumerate(lams, start=1):
            if (m, n) == tuple(mode):
                continue
            mu = lam * (lam + 1.0) * geom.gamma**2 / geom.R**2
            out[(m, n)] = sigma_pair(p, mu).sigma_plus
    return out


def critical_pair(p: BrusselatorParams, geom: CapGeometry, mode=(5, 1), convention=DEFAULT_CONVENTION,
                  check_gap=False, tau=None) -> CriticalPair:
    m, n = mode
    lam = degree_roots(m, n, geom.gamma)[n - 1]
    mu = lam * (lam + 1.0) * geom.gamma**2 / geom.R**2
    sp = sigma_pair(p, mu)
    sig = sp.sigma_plus
    u0 = np.array([p.k2, p.DX * mu - p.k1 + sig])
    us = np.array([p.k3, p.DX * mu - p.k1 + sig])
    pairing = float(us @ u0)
    if abs(pairing) < 1e-14:
        raise SingularSystemError("degenerate eigenvector pairing")
    if check_gap:
        others = other_modes_sigma(p, geom, mode)
        worst = max(others, key=others.get)
        if others[worst] >= sig:
            raise SpectralGapError(
                f"mode {worst} has growth rate {others[worst]:.3e} >= {sig:.3e} of mode {tuple(mode)}")
    S = amplitude_scale(m, lam, geom, convention)
    rn = _radial_l2(m, lam, geom) / S**2
    phi_norm = (2.0 * math.pi if m == 0 else math.pi) * rn
    Nstar = 1.0 / (pairing * phi_norm)
    return CriticalPair(geom.gamma, m, n, lam, mu, sig, sp.sigma_minus, u0, us, S, rn, Nstar, tau)


# -- eigenfunction drift -----------------------------------------------------

@dataclass(frozen=True)
class PhiDerivative:
    gamma: float
    m: int
    n: int
    d: np.ndarray  # d_i, i = 1..N, Phi' = sum_i d_i Phi_i (Phi_i share the convention)
    lambda_prime: float
    residual: float


def dzeta_dtau(geom: CapGeometry, gamma_prime, theta):
    """Rate of cos(theta) at a fixed material point (fixed disk radius)."""
    s = geom.s
    return -gamma_prime * np.sin(theta) ** 2 / (geom.gamma * s)


def _lambda_at(sched: CapSchedule, tau, m, n):
    return degree_roots(m, n, float(sched.gamma(tau)))[n - 1]


def phi_prime_coeffs(schedule: CapSchedule, tau, mode=(5, 1), steps: FdSteps | None = None, N=5,
                     convention=DEFAULT_CONVENTION, panels=64, nodes=8) -> PhiDerivative:
    """Expansion of the slow-time derivative of the normalised eigenfunction.

    The derivative is taken at fixed material points; it has a degree term
    (lambda' by central differences in tau) and an argument term from the
    closed derivative identity in cos(theta).
    """
    steps = steps or FdSteps()
    m, n = mode
    geom = schedule.geometry(tau)
    gp = float(schedule.dgamma(tau))
    th, w = theta_quadrature(geom, panels, nodes)
    lams = degree_roots(m, max(N, n), geom.gamma)
    lam = lams[n - 1]
    h = steps.h2
    lam_p = (_lambda_at(schedule, tau + h, m, n) - _lambda_at(schedule, tau - h, m, n)) / (2 * h)
    z = np.cos(th)
    P = legendre_p(m, lam, z)
    dP_dlam = (legendre_p(m, lam + steps.h1, z) - legendre_p(m, lam - steps.h1, z)) / (2 * steps.h1)
    dP_dz = legendre_dx(m, lam, np.minimum(z, 1.0 - 1e-15))
    raw_prime = dP_dlam * lam_p + dP_dz * dzeta_dtau(geom, gp, th)
    S = amplitude_scale(m, lam, geom, convention)
    if convention in FIXED_SCALE:
        S_prime = 0.0
    else:
        gp_geom = lambda tt: schedule.geometry(tt)
        S_prime = (amplitude_scale(m, _lambda_at(schedule, tau + h, m, n), gp_geom(tau + h), convention)
                   - amplitude_scale(m, _lambda_at(schedule, tau - h, m, n), gp_geom(tau - h), convention)) / (2 * h)
    phi_prime = raw_prime / S - (S_prime / S**2) * P
    d = np.empty(N)
    basis = []
    for i in range(N):
        Pi = legendre_p(m, lams[i], z) / amplitude_scale(m, lams[i], geom, convention)
        basis.append(Pi)
        d[i] = (w @ (phi_prime * Pi)) / (w @ (Pi * Pi))
    recon = np.tensordot(d, np.array(basis), axes=1)
    resid = math.sqrt(float(w @ (phi_prime - recon) ** 2))
    return PhiDerivative(geom.gamma, m, n, d, lam_p, resid)


# -- order-epsilon growth rate -----------------------------------------------

def _u0_at(p, schedule, tau, mode):
    m, n = mode
    g = float(schedule.gamma(tau))
    lam = degree_roots(m, n, g)[n - 1]
    mu = lam * (lam + 1.0) * g * g / schedule.R**2
    sig = sigma_pair(p, mu).sigma_plus
    return np.array([p.k2, p.DX * mu - p.k1 + sig])


def a1_self(p: BrusselatorParams, cp: CriticalPair, schedule: CapSchedule, tau, qp_terms=5,
            panels=64, nodes=8):
    """<Phi, A1 Phi>/<Phi, Phi> with A1 = K1(X01) - gamma' Q, a 2x2 matrix."""
    geom = schedule.geometry(tau)
    gp = float(schedule.dgamma(tau))
    corr = qp_correction(p, geom, gp, qp_terms)
    th, w = theta_quadrature(geom, panels, nodes)
    z = np.cos(th)
    x01, y01 = corr.evaluate(z)
    K1 = k1_matrix(p, x01, y01)
    Q = q_of_zeta(geom, z)
    phi2 = cp.phi(th) ** 2
    den = w @ phi2
    A1 = np.einsum("ijk,k->ij", K1, w * phi2) / den
    A1 -= gp * (w @ (Q * phi2)) / den * np.eye(2)
    return A1


def sigma1(p: BrusselatorParams, schedule: CapSchedule, tau, mode=(5, 1), steps: FdSteps | None = None,
           N=5, qp_terms=5, convention=DEFAULT_CONVENTION) -> float:
    """First-order correction of the growth exponent from the solvability condition."""
    steps = steps or FdSteps()
    geom = schedule.geometry(tau)
    cp = critical_pair(p, geom, mode, convention, tau=tau)
    pd = phi_prime_coeffs(schedule, tau, mode, steps, N, convention)
    h = steps.h2
    u0p = (_u0_at(p, schedule, tau + h, mode) - _u0_at(p, schedule, tau - h, mode)) / (2 * h)
    A1 = a1_self(p, cp, schedule, tau, qp_terms)
    dn = pd.d[mode[1] - 1]
    rhs = A1 @ cp.u0 - u0p - dn * cp.u0
    return float(cp.u0_star @ rhs / (cp.u0_star @ cp.u0))


# -- quadratic centre-manifold terms and the cubic coefficient ---------------

@dataclass(frozen=True)
class QuadraticCM:
    gamma: float
    m0: int
    orders: tuple  # (0, 2 m0)
    lambdas: dict  # k -> array of degrees
    coeffs: dict  # k -> (N, 2) array of u1 vectors
    rhs: dict  # k -> (N,) projected scalar right sides along (1, -1)
    residuals: dict
    scales: dict  # k -> array of amplitude scales for the P_kj factors


def _bilinear_scalar(p, a, b):
    """Scalar s with B0(a, b) = s (1, -1), for 2-vectors a, b."""
    return p.q_uu * a[0] * b[0] + p.q_uv * (a[0] * b[1] + a[1] * b[0])


def quadratic_cm(p: BrusselatorParams, geom: CapGeometry, cp: CriticalPair, N=5, panels=64, nodes=8,
                 convention=DEFAULT_CONVENTION) -> QuadraticCM:
    """Coefficients u1_kj of the x^2 term of the centre manifold.

    B0(U0, U0) carries cos^2(m0 phi) = (1 + cos(2 m0 phi))/2, so only the
    orders 0 and 2 m0 receive contributions; each mode solves
    (2 sigma0 I - A0_kj) u1 = projection of B0(U0, U0).
    """
    th, w = theta_quadrature(geom, panels, nodes)
    z = np.cos(th)
    phi0 = cp.phi(th)
    beta = _bilinear_scalar(p, cp.u0, cp.u0)
    lambdas, coeffs, rhs, resid, scales = {}, {}, {}, {}, {}
    for k in (0, 2 * cp.m):
        lams = np.array(degree_roots(k, N, geom.gamma))
        sc = np.array([amplitude_scale(k, lam, geom, convention) for lam in lams])
        u1 = np.empty((N, 2))
        r = np.empty(N)
        res = np.empty(N)
        for j, lam in enumerate(lams):
            Pk = legendre_p(k, lam, z) / sc[j]
            # phi-average of cos^2(m0 phi) against cos(k phi), normalised: 1/2 for both orders
            proj = 0.5 * beta * (w @ (phi0 * phi0 * Pk)) / (w @ (Pk * Pk))
            mu = lam * (lam + 1.0) * geom.gamma**2 / geom.R**2
            M = 2.0 * cp.sigma0 * np.eye(2) - mode_matrix(p, mu)
            if np.linalg.cond(M) > COND_LIMIT:
                raise SingularSystemError(f"resonant quadratic mode ({k},{j + 1}) at gamma={geom.gamma}")
            b = proj * np.array([1.0, -1.0])
            u1[j] = np.linalg.solve(M, b)
            r[j] = proj
            res[j] = np.max(np.abs(M @ u1[j] - b)) / np.max(np.abs(b))
        lambdas[k], coeffs[k], rhs[k], resid[k], scales[k] = lams, u1, r, res, sc
    return QuadraticCM(geom.gamma, cp.m, (0, 2 * cp.m), lambdas, coeffs, rhs, resid, scales)


def cubic_coefficient(p: BrusselatorParams, geom: CapGeometry, cp: CriticalPair, cm: QuadraticCM,
                      panels=64, nodes=8, parts=False):
    """x^3 coefficient <U0*, 2 B0(U0, U1) + C0(U0, U0, U0)> of the normal form."""
    th, w = theta_quadrature(geom, panels, nodes)
    z = np.cos(th)
    phi0 = cp.phi(th)
    us_dir = cp.u0_star[0] - cp.u0_star[1]
    # phi integrals of cos(m0)cos(k)cos(m0): pi for k = 0, pi/2 for k = 2 m0; cos^4 gives 3 pi/4
    phi_w = {0: math.pi, 2 * cp.m: 0.5 * math.pi}
    contrib = {}
    for k in cm.orders:
        field_ = np.zeros_like(th)
        for j, lam in enumerate(cm.lambdas[k]):
            Pk = legendre_p(k, lam, z) / cm.scales[k][j]
            field_ += _bilinear_scalar(p, cp.u0, cm.coeffs[k][j]) * Pk
        contrib[k] = 2.0 * phi_w[k] * float(w @ (field_ * phi0 * phi0))
    cubic_s = p.c * cp.u0[0] ** 2 * cp.u0[1]
    contrib["cubic"] = 0.75 * math.pi * cubic_s * float(w @ phi0**4)
    scale = cp.Nstar * us_dir
    vals = {k: scale * v for k, v in contrib.items()}
    total = float(sum(vals.values()))
    return (total, vals) if parts else total


def cubic_at(p, geom, mode=(5, 1), N=5, convention=DEFAULT_CONVENTION):
    cp = critical_pair(p, geom, mode, convention)
    cm = quadratic_cm(p, geom, cp, N, convention=convention)
    return cubic_coefficient(p, geom, cp, cm)


# -- sampled table -----------------------------------------------------------

@dataclass
class NormalFormTable:
    tau: np.ndarray
    gamma: np.ndarray
    sigma0: np.ndarray
    sigma1: np.ndarray
    C0: np.ndarray
    epsilon: float
    mode: tuple = (5, 1)
    convention: str = DEFAULT_CONVENTION
    schedule: CapSchedule | None = None
    bc: str = "natural"  # spline end condition; "not-a-knot" is also accepted
    splines: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.bc not in ("natural", "not-a-knot"):
            raise ValidationError(f"unknown spline end condition {self.bc!r}")
        for name in ("sigma0", "sigma1", "C0"):
            self.splines[name] = CubicSpline(self.tau, getattr(self, name), bc_type=self.bc)

    def __call__(self, name, tau):
        return self.splines[name](tau)

    def tau_of_gamma(self, gamma):
        if self.schedule is not None:
            return self.schedule.tau_of_gamma(gamma)
        order = np.argsort(self.gamma)
        return float(np.interp(gamma, self.gamma[order], self.tau[order]))

    def growth(self, tau):
        return self.splines["sigma0"](tau) + self.epsilon * self.splines["sigma1"](tau)

    def rows(self):
        return zip(self.tau, self.gamma, self.sigma0, self.sigma1, self.C0)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["tau", "gamma", "sigma0", "sigma1", "C0"])
            for row in self.rows():
                wr.writerow([f"{float(v):.17g}" for v in row])

    def to_json(self, path):
        data = {"epsilon": self.epsilon, "mode": list(self.mode), "convention": self.convention,
                **{k: [float(v) for v in getattr(self, k)] for k in ("tau", "gamma", "sigma0", "sigma1", "C0")}}
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2)


def table_sample(p, schedule: CapSchedule, tau, mode=(5, 1), N=5, qp_terms=5, steps=None,
                 convention=DEFAULT_CONVENTION):
    geom = schedule.geometry(tau)
    cp = critical_pair(p, geom, mode, convention, tau=tau)
    cm = quadratic_cm(p, geom, cp, N, convention=convention)
    C = cubic_coefficient(p, geom, cp, cm)
    s1 = sigma1(p, schedule, tau, mode, steps, N, qp_terms, convention)
    return cp.sigma0, s1, C


def build_table(p: BrusselatorParams, schedule: CapSchedule, gamma_window=(0.51, 0.4515), samples=36,
                mode=(5, 1), N=5, qp_terms=5, steps=None, convention=DEFAULT_CONVENTION,
                bc="natural") -> NormalFormTable:
    """Sample sigma0, sigma1 and C0 uniformly in tau across the curvature window."""
    if samples < 4:
        raise ValidationError("need at least 4 samples for a cubic spline")
    t0 = schedule.tau_of_gamma(gamma_window[0])
    t1 = schedule.tau_of_gamma(gamma_window[1])
    taus = np.linspace(min(t0, t1), max(t0, t1), samples)
    schedule.check_interval(taus[0], taus[-1])
    s0 = np.empty(samples)
    s1 = np.empty(samples)
    C = np.empty(samples)
    for i, t in enumerate(taus):
        s0[i], s1[i], C[i] = table_sample(p, schedule, t, mode, N, qp_terms, steps, convention)
    gam = np.asarray(schedule.gamma(taus), dtype=float)
    return NormalFormTable(taus, gam, s0, s1, C, schedule.epsilon, tuple(mode), convention, schedule, bc)
