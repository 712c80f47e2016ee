"""Integration of the slowly varying pitchfork normal form

    dx/dt = (sigma0(eps t) + eps sigma1(eps t)) x + C0(eps t) x^3

with coefficients interpolated from a ``NormalFormTable``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowUpError, ConvergenceError, ValidationError
from .reduction import NormalFormTable

BLOWUP = 1e3


@dataclass(frozen=True)
class NfSolveConfig:
    epsilon: float
    x0: float = 2.305e-3
    gamma_start: float = 0.51
    gamma_end: float = 0.4515
    rtol: float = 1e-9
    atol: float = 1e-12
    n_out: int = 401

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if not (0 < self.gamma_end < 1 and 0 < self.gamma_start < 1):
            raise ValidationError("curvatures must lie in (0, 1)")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValidationError("tolerances must be positive")


@dataclass
class Trajectory:
    t: np.ndarray
    tau: np.ndarray
    gamma: np.ndarray
    x: np.ndarray
    x_branch: np.ndarray
    epsilon: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "tau", "gamma", "x", "x_branch"])
            for row in zip(self.t, self.tau, self.gamma, self.x, self.x_branch):
                w.writerow([f"{float(v):.17g}" for v in row])

    def first_reach(self, fraction=0.5):
        """Curvature from which |x| stays at or above ``fraction`` of the branch.

        Near onset the branch starts at zero, so an amplitude that has not yet
        decayed sits above it briefly; the jump onto the branch is the last
        entry into the region, not the first sample inside it.  NaN if the
        trajectory ends outside the region.
        """
        inside = (self.x_branch > 0) & (np.abs(self.x) >= fraction * self.x_branch)
        out = np.nonzero(~inside)[0]
        if out.size == 0:
            return float(self.gamma[0])
        i = out[-1]
        if i == len(self.x) - 1:
            return math.nan
        f0 = abs(self.x[i]) - fraction * self.x_branch[i]
        f1 = abs(self.x[i + 1]) - fraction * self.x_branch[i + 1]
        s = f0 / (f0 - f1) if f0 < 0 and f0 != f1 else 1.0
        return float(self.gamma[i] + s * (self.gamma[i + 1] - self.gamma[i]))


def branch_value(sigma0, C0):
    """Stable constant-domain equilibrium sqrt(-sigma0/C0), zero before onset."""
    sigma0 = np.asarray(sigma0, dtype=float)
    C0 = np.asarray(C0, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where((sigma0 > 0) & (C0 < 0), np.sqrt(np.abs(sigma0 / C0)), 0.0)
    return float(out) if out.ndim == 0 else out


def pitchfork_branch(table: NormalFormTable, gamma):
    tau = np.vectorize(table.tau_of_gamma)(gamma)
    return branch_value(table("sigma0", tau), table("C0", tau))


def integrate_nf(table: NormalFormTable, cfg: NfSolveConfig, gammas=None) -> Trajectory:
    """Adaptive Dormand-Prince RK4(5) solve with dense output on a curvature grid."""
    eps = cfg.epsilon
    tau0 = table.tau_of_gamma(cfg.gamma_start)
    tau1 = table.tau_of_gamma(cfg.gamma_end)
    lo, hi = table.tau[0], table.tau[-1]
    tol = 1e-12 * max(1.0, abs(hi - lo))
    if min(tau0, tau1) < lo - tol or max(tau0, tau1) > hi + tol:
        raise ValidationError(f"tau span [{tau0}, {tau1}] is outside the table range [{lo}, {hi}]")
    s0, s1, C = table.splines["sigma0"], table.splines["sigma1"], table.splines["C0"]

    def rhs(t, y):
        tau = tau0 + eps * t
        return (s0(tau) + eps * s1(tau)) * y + C(tau) * y**3

    def blow(t, y):
        return abs(y[0]) - BLOWUP

    blow.terminal = True
    t_end = (tau1 - tau0) / eps
    if gammas is None:
        gammas = np.linspace(cfg.gamma_start, cfg.gamma_end, cfg.n_out)
    taus = np.array([table.tau_of_gamma(g) for g in gammas])
    t_eval = np.clip((taus - tau0) / eps, 0.0, t_end)
    sol = solve_ivp(rhs, (0.0, t_end), [cfg.x0], method="RK45", t_eval=t_eval,
                    rtol=cfg.rtol, atol=cfg.atol, events=blow)
    if sol.status == 1:
        raise BlowUpError(f"|x| exceeded {BLOWUP} at t={sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise ConvergenceError(f"normal form integration failed: {sol.message}")
    x = sol.y[0]
    return Trajectory(sol.t, tau0 + eps * sol.t, np.asarray(gammas, dtype=float), x,
                      pitchfork_branch(table, gammas), eps)


def sweep(table: NormalFormTable, epsilons, cfg: NfSolveConfig):
    """One trajectory per epsilon; the table's sigma1 is reused, epsilon enters the growth rate."""
    return {eps: integrate_nf(table, replace(cfg, epsilon=eps)) for eps in epsilons}
