"""First-order correction to the patternless state on a slowly changing cap.

To first order in epsilon the corrected state is X00 + eps * X01 with
X01 = sum_n (alpha_n, beta_n) Phi_0n, where the dilution profile is expanded
as Q = sum_n q_n Phi_0n and each axisymmetric mode solves a 2x2 system.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError
from .geometry import CapGeometry, q_of_zeta, radial_integral
from .kinetics import BrusselatorParams, mode_matrix
from .specfun import degree_roots, legendre_p

COND_LIMIT = 1e12


@dataclass(frozen=True)
class QExpansion:
    gamma: float
    lambdas: np.ndarray
    q: np.ndarray  # q_n, n = 1..N
    norms: np.ndarray  # integral of P_0n^2 sin(theta) over [0, theta_max]
    tau: float | None = None

    @property
    def N(self):
        return len(self.q)

    def radial_modes(self, zeta):
        zeta = np.clip(np.asarray(zeta, dtype=float), -1.0, 1.0)
        return np.array([legendre_p(0, lam, zeta) for lam in self.lambdas])

    def reconstruct(self, zeta):
        return np.tensordot(self.q, self.radial_modes(zeta), axes=1)


def q_coefficients(geom: CapGeometry, N=5, tau=None, panels=64, nodes=8) -> QExpansion:
    """Project the dilution profile onto the first N axisymmetric Dirichlet modes."""
    lams = np.array(degree_roots(0, N, geom.gamma))
    q = np.empty(N)
    norms = np.empty(N)
    for i, lam in enumerate(lams):
        P = lambda th, lam=lam: legendre_p(0, lam, np.cos(th))
        norms[i] = radial_integral(geom, lambda th: P(th) ** 2, panels=panels, nodes=nodes)
        q[i] = radial_integral(geom, lambda th: q_of_zeta(geom, np.cos(th)) * P(th),
                               panels=panels, nodes=nodes) / norms[i]
    return QExpansion(geom.gamma, lams, q, norms, tau)


@dataclass(frozen=True)
class QpCorrection:
    expansion: QExpansion
    gamma_prime: float
    alpha: np.ndarray
    beta: np.ndarray
    residuals: np.ndarray
    mus: np.ndarray

    @property
    def N(self):
        return len(self.alpha)

    def evaluate(self, zeta):
        """(X01, Y01) at the given cos(theta) values."""
        modes = self.expansion.radial_modes(zeta)
        return np.tensordot(self.alpha, modes, axes=1), np.tensordot(self.beta, modes, axes=1)


def qp_correction(p: BrusselatorParams, geom: CapGeometry, gamma_prime=-1.0, N=5,
                  expansion: QExpansion | None = None, tau=None) -> QpCorrection:
    """Mode coefficients of X01 from (alpha, beta) = gamma' q_n A_0n^{-1} (X00, Y00)."""
    ex = expansion if expansion is not None else q_coefficients(geom, N, tau)
    rhs0 = p.equilibrium
    alpha = np.empty(ex.N)
    beta = np.empty(ex.N)
    res = np.empty(ex.N)
    mus = ex.lambdas * (ex.lambdas + 1.0) * geom.gamma**2 / geom.R**2
    for i, mu in enumerate(mus):
        M = mode_matrix(p, mu)
        if np.linalg.cond(M) > COND_LIMIT:
            raise SingularSystemError(f"axisymmetric mode (0,{i + 1}) is critical at gamma={geom.gamma}")
        rhs = gamma_prime * ex.q[i] * rhs0
        sol = np.linalg.solve(M, rhs)
        alpha[i], beta[i] = sol
        res[i] = np.max(np.abs(M @ sol - rhs))
    return QpCorrection(ex, float(gamma_prime), alpha, beta, res, mus)


def k1_matrix(p: BrusselatorParams, x01, y01):
    """First-order linear correction K1 at the given X01, Y01 values.

    Shape (2, 2, ...) broadcast over the inputs; the second row is minus the first.
    """
    x01 = np.asarray(x01, dtype=float)
    y01 = np.asarray(y01, dtype=float)
    r1 = 2.0 * p.q_uu * x01 + 2.0 * p.q_uv * y01
    r2 = 2.0 * p.q_uv * x01
    return np.array([[r1, r2], [-r1, -r2]])


def dump_csv(path, corr: QpCorrection):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "tau", "n", "lambda_0n", "q_n", "alpha_0n", "beta_0n"])
        ex = corr.expansion
        for i in range(corr.N):
            w.writerow([repr(ex.gamma), "" if ex.tau is None else repr(ex.tau), i + 1,
                        repr(float(ex.lambdas[i])), repr(float(ex.q[i])),
                        repr(float(corr.alpha[i])), repr(float(corr.beta[i]))])
