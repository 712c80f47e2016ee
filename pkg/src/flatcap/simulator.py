"""Direct simulation of the deviation system on the evolving cap.

The cap is mapped to the fixed unit disk by the conformal chart of
``geometry``; constant-w points move normally with the surface, so the
evolving-domain PDE becomes a fixed-domain PDE with the scalar coefficient
c(w, tau) in front of the flat Laplacian and the dilution field Q(w, tau).

Discretisation: cell-centred finite volumes in w (boundary ring exactly at
w = 1, no node at the pole), Fourier in phi.  For each Fourier wavenumber the
implicit diffusion operator is a real tridiagonal matrix; its inverse is
formed once per geometry refresh and applied by batched matrix products.
Time stepping is IMEX Euler: backward on diffusion, forward on reaction and
dilution.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowUpError, SingularSystemError, ValidationError
from .geometry import (CapGeometry, CapSchedule, disk_chart_factor, disk_area_weight,
                       q_of_zeta, zeta_from_w)
from .kinetics import BrusselatorParams
from .quasipattern import qp_correction
from .specfun import legendre_p


@dataclass(frozen=True)
class SimGrid:
    Nw: int = 64
    Nphi: int = 32

    def __post_init__(self):
        if self.Nw < 4:
            raise ValidationError("Nw must be at least 4")
        if self.Nphi < 4 or self.Nphi % 4:
            raise ValidationError("Nphi must be a positive multiple of 4")

    @property
    def h(self):
        # r_i = (i + 1/2) h and the Dirichlet ring sits at r_Nw = 1
        return 1.0 / (self.Nw + 0.5)

    @property
    def w(self):
        return (np.arange(self.Nw) + 0.5) * self.h

    @property
    def phi(self):
        return 2.0 * math.pi * np.arange(self.Nphi) / self.Nphi

    @property
    def nk(self):
        return self.Nphi // 2 + 1

    def cell_weights(self):
        """Midpoint weights for integrals against w dw dphi."""
        return self.w[:, None] * self.h * (2.0 * math.pi / self.Nphi) * np.ones((1, self.Nphi))


@dataclass
class SurfaceField:
    """Deviation fields U, V on the interior nodes; the w = 1 ring is implicit
    and identically zero."""

    U: np.ndarray
    V: np.ndarray
    tau: float
    gamma: float
    t: float = 0.0

    def copy(self):
        return SurfaceField(self.U.copy(), self.V.copy(), self.tau, self.gamma, self.t)

    def with_boundary(self):
        """U, V including the explicit zero boundary ring as the last row."""
        z = np.zeros((1, self.U.shape[1]))
        return np.vstack([self.U, z]), np.vstack([self.V, z])


@dataclass
class SimConfig:
    grid: SimGrid = field(default_factory=SimGrid)
    dt: float = 0.1
    epsilon: float = 1e-6
    gamma_start: float = 0.4915
    gamma_end: float = 0.4515
    cadence: int = 50
    ic: str = "eigenmode"  # eigenmode | noise | zero | custom
    ic_peak: float = 0.021
    noise_amp: tuple = (0.05, 0.005)
    seed: int = 0
    affine_mode: bool = False
    frozen: bool = False  # epsilon drops out of the equations; gamma fixed at gamma_start
    t_end: float | None = None  # required when frozen
    mode: tuple = (5, 1)
    qp_terms: int = 5
    R: float = 1.0
    sample_every: int = 50
    snapshot_gammas: tuple = ()
    track: tuple = ()  # extra (m, n) projections to record
    blowup: float = 1e3

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.cadence < 1:
            raise ValidationError("cadence must be >= 1")
        if self.ic not in ("eigenmode", "noise", "zero", "custom"):
            raise ValidationError(f"unknown initial condition {self.ic!r}")
        if not self.frozen and not self.epsilon > 0:
            raise ValidationError("epsilon must be positive unless the domain is frozen")
        if self.frozen and (self.t_end is None or self.t_end <= 0):
            raise ValidationError("a frozen-domain run needs a positive t_end")
        if isinstance(self.grid, dict):
            self.grid = SimGrid(**self.grid)
        self.mode = tuple(self.mode)
        self.noise_amp = tuple(self.noise_amp)
        self.snapshot_gammas = tuple(self.snapshot_gammas)
        self.track = tuple(tuple(t) for t in self.track)

    def schedule(self):
        return CapSchedule(R=self.R, epsilon=self.epsilon if self.epsilon > 0 else 1.0,
                           kind="linear", gamma0=self.gamma_start)

    @property
    def duration(self):
        if self.frozen:
            return self.t_end
        return (self.gamma_start - self.gamma_end) / self.epsilon

    def to_json(self):
        d = asdict(self)
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        if "grid" in d and isinstance(d["grid"], dict):
            d["grid"] = SimGrid(**d["grid"])
        return cls(**d)


# -- operators ---------------------------------------------------------------

def radial_bands(grid: SimGrid, k):
    """Banded form (upper, diag, lower) of the polar Laplacian for wavenumber k."""
    h, r = grid.h, grid.w
    rp = r + 0.5 * h
    rm = r - 0.5 * h
    rm[0] = 0.0  # no flux through the pole
    up = rp / (r * h * h)
    lo = rm / (r * h * h)
    diag = -(up + lo) - (k * k) / (r * r)
    return up, diag, lo


def apply_disk_laplacian(grid: SimGrid, F):
    """Flat polar Laplacian of interior values F (Nw, Nphi) with zero boundary ring."""
    Fh = np.fft.rfft(F, axis=1)
    out = np.empty_like(Fh)
    for k in range(grid.nk):
        up, diag, lo = radial_bands(grid, k)
        col = Fh[:, k]
        res = diag * col
        res[:-1] += up[:-1] * col[1:]
        res[1:] += lo[1:] * col[:-1]
        out[:, k] = res
    return np.fft.irfft(out, n=grid.Nphi, axis=1)


def assemble_operator(grid: SimGrid, geom: CapGeometry, p: BrusselatorParams, dt: float):
    """Inverses of (I - dt D_s c(w) L_k) for both species and every wavenumber.

    Returned array has shape (2, nk, Nw, Nw).
    """
    c = disk_chart_factor(geom, grid.w)
    if np.any(c <= 0):
        raise SingularSystemError("nonpositive chart factor")
    Nw = grid.Nw
    eye = np.eye(Nw)
    out = np.empty((2, grid.nk, Nw, Nw))
    for s, Ds in enumerate((p.DX, p.DY)):
        a = dt * Ds * c
        for k in range(grid.nk):
            up, diag, lo = radial_bands(grid, k)
            ab = np.zeros((3, Nw))
            ab[0, 1:] = -a[:-1] * up[:-1]
            ab[1] = 1.0 - a * diag
            ab[2, :-1] = -a[1:] * lo[1:]
            out[s, k] = solve_banded((1, 1), ab, eye)
    return out


def _implicit_solve(inv_s, F, grid: SimGrid):
    Fh = np.fft.rfft(F, axis=1)  # (Nw, nk)
    stacked = np.stack([Fh.real.T, Fh.imag.T], axis=-1)  # (nk, Nw, 2)
    res = np.matmul(inv_s, stacked)
    Gh = (res[..., 0] + 1j * res[..., 1]).T
    return np.fft.irfft(Gh, n=grid.Nphi, axis=1)


@dataclass
class StepCoefficients:
    """Pointwise coefficient fields frozen between geometry refreshes."""

    gamma: float
    inv: np.ndarray
    lin: np.ndarray  # (2, 2, Nw) linear reaction matrix incl. dilution, per radius
    quad_uu: np.ndarray  # (Nw,) coefficient of U^2
    quad_uv: np.ndarray  # (Nw,) coefficient of U V (already doubled)
    source: np.ndarray  # (2, Nw) affine forcing


def step_coefficients(cfg: SimConfig, p: BrusselatorParams, tau: float) -> StepCoefficients:
    grid = cfg.grid
    sched = cfg.schedule()
    gamma = cfg.gamma_start if cfg.frozen else float(sched.gamma(tau))
    geom = CapGeometry(cfg.R, gamma)
    Nw = grid.Nw
    lin = np.broadcast_to(p.K0[:, :, None], (2, 2, Nw)).copy()
    quad_uu = np.full(Nw, p.q_uu)
    quad_uv = np.full(Nw, 2.0 * p.q_uv)
    source = np.zeros((2, Nw))
    if not cfg.frozen:
        eps = cfg.epsilon
        gp = float(sched.dgamma(tau))
        zeta = zeta_from_w(geom, grid.w)
        Q = q_of_zeta(geom, zeta)
        dil = -eps * gp * Q
        lin[0, 0] += dil
        lin[1, 1] += dil
        if cfg.affine_mode:
            # deviation from the constant-domain state: K0, B0 and the affine source
            source[0] = dil * p.X00
            source[1] = dil * p.Y00
        else:
            corr = qp_correction(p, geom, gp, cfg.qp_terms)
            x01, y01 = corr.evaluate(zeta)
            r1 = 2.0 * p.q_uu * x01 + 2.0 * p.q_uv * y01
            r2 = 2.0 * p.q_uv * x01
            lin[0, 0] += eps * r1
            lin[0, 1] += eps * r2
            lin[1, 0] -= eps * r1
            lin[1, 1] -= eps * r2
            quad_uu = quad_uu + eps * p.c * y01
            quad_uv = quad_uv + 2.0 * eps * p.c * x01
    inv = assemble_operator(grid, geom, p, cfg.dt)
    return StepCoefficients(gamma, inv, lin, quad_uu, quad_uv, source)


def reaction_terms(coef: StepCoefficients, p: BrusselatorParams, U, V):
    L = coef.lin
    s = coef.quad_uu[:, None] * U * U + coef.quad_uv[:, None] * U * V + p.c * U * U * V
    RU = L[0, 0][:, None] * U + L[0, 1][:, None] * V + s + coef.source[0][:, None]
    RV = L[1, 0][:, None] * U + L[1, 1][:, None] * V - s + coef.source[1][:, None]
    return RU, RV


def step_imex(state: SurfaceField, coef: StepCoefficients, p: BrusselatorParams, cfg: SimConfig) -> SurfaceField:
    """One IMEX Euler step; the w = 1 ring stays zero by construction."""
    dt = cfg.dt
    RU, RV = reaction_terms(coef, p, state.U, state.V)
    U = _implicit_solve(coef.inv[0], state.U + dt * RU, cfg.grid)
    V = _implicit_solve(coef.inv[1], state.V + dt * RV, cfg.grid)
    t = state.t + dt
    tau = state.tau if cfg.frozen else cfg.epsilon * t
    return SurfaceField(U, V, tau, coef.gamma, t)


# -- initial conditions and projections --------------------------------------

def eigen_vector(p: BrusselatorParams, mu):
    """Growing eigenvector (k2, DX mu - k1 + sigma) and the matching adjoint."""
    from .kinetics import sigma_plus
    sig = sigma_plus(p, mu)
    u0 = np.array([p.k2, p.DX * mu - p.k1 + sig])
    u_star = np.array([p.k3, p.DX * mu - p.k1 + sig])
    return sig, u0, u_star


def mode_radial_on_grid(grid: SimGrid, geom: CapGeometry, m, lam):
    return legendre_p(m, lam, np.clip(zeta_from_w(geom, grid.w), -1.0, 1.0))


def legendre_max(m, lam, geom: CapGeometry, samples=4001):
    """Absolute maximum of P^m_lam(cos theta) over the cap, refined by a local search."""
    from scipy.optimize import minimize_scalar
    th = np.linspace(0.0, geom.theta_max, samples)
    vals = np.abs(legendre_p(m, lam, np.cos(th)))
    i = int(np.argmax(vals))
    lo, hi = th[max(i - 1, 0)], th[min(i + 1, samples - 1)]
    if hi <= lo:
        return float(vals[i])
    r = minimize_scalar(lambda x: -abs(legendre_p(m, lam, math.cos(x))), bounds=(lo, hi),
                        method="bounded", options={"xatol": 1e-12})
    return float(max(vals[i], -r.fun))


def _cap_mode(geom: CapGeometry, m, n):
    from .specfun import degree_roots
    lam = degree_roots(m, n, geom.gamma)[n - 1]
    return lam, lam * (lam + 1.0) * geom.gamma**2 / geom.R**2


def eigenmode_ic(grid: SimGrid, geom: CapGeometry, p: BrusselatorParams, peak=0.021, mode=(5, 1)) -> SurfaceField:
    """u0 * cos(m phi) P^m_lam scaled so that max U over the grid equals ``peak``."""
    m, n = mode
    lam, mu = _cap_mode(geom, m, n)
    _, u0, _ = eigen_vector(p, mu)
    shape = mode_radial_on_grid(grid, geom, m, lam)[:, None] * np.cos(m * grid.phi)[None, :]
    U = u0[0] * shape
    scale = peak / np.max(U)
    return SurfaceField(scale * U, scale * u0[1] * shape, 0.0, geom.gamma)


def noise_ic(grid: SimGrid, geom: CapGeometry, amp=(0.05, 0.005), seed=0) -> SurfaceField:
    rng = np.random.default_rng(seed)
    U = rng.uniform(-amp[0], amp[0], size=(grid.Nw, grid.Nphi))
    V = rng.uniform(-amp[1], amp[1], size=(grid.Nw, grid.Nphi))
    return SurfaceField(U, V, 0.0, geom.gamma)


def quadrature_weights(grid: SimGrid, geom: CapGeometry):
    """Solid-angle weights sin(theta) dtheta dphi at the grid nodes."""
    return disk_area_weight(geom, grid.w)[:, None] * grid.cell_weights()


@dataclass(frozen=True)
class ModeProjection:
    m: int
    n: int
    a_cos: float
    a_sin: float

    @property
    def amplitude(self):
        return math.hypot(self.a_cos, self.a_sin)


def project_mode(state: SurfaceField, grid: SimGrid, geom: CapGeometry, p: BrusselatorParams,
                 mode=(5, 1)) -> ModeProjection:
    """Centre-direction coefficients of the (m, n) component against u0 P^m_lam.

    The spatial projection uses the discrete solid-angle quadrature on the
    grid; the species pair is then reduced with the adjoint vector.
    Coefficients are relative to the unnormalised Legendre factor.
    """
    m, n = mode
    lam, mu = _cap_mode(geom, m, n)
    _, u0, us = eigen_vector(p, mu)
    W = quadrature_weights(grid, geom)
    P = mode_radial_on_grid(grid, geom, m, lam)[:, None]
    out = []
    trig = [np.cos(m * grid.phi)] + ([np.sin(m * grid.phi)] if m > 0 else [])
    for tr in trig:
        basis = P * tr[None, :]
        nrm = np.sum(W * basis * basis)
        if nrm <= 0:
            raise SingularSystemError("degenerate mode quadrature")
        cu = np.sum(W * state.U * basis) / nrm
        cv = np.sum(W * state.V * basis) / nrm
        out.append((us[0] * cu + us[1] * cv) / (us @ u0))
    return ModeProjection(m, n, out[0], out[1] if m > 0 else 0.0)


@dataclass
class SimResult:
    config: SimConfig
    t: np.ndarray
    gamma: np.ndarray
    amplitude: np.ndarray  # raw-Legendre coefficient of the tracked mode
    tracked: dict
    snapshots: list
    final: SurfaceField


def initial_state(cfg: SimConfig, p: BrusselatorParams, custom=None) -> SurfaceField:
    geom = CapGeometry(cfg.R, cfg.gamma_start)
    if cfg.ic == "eigenmode":
        return eigenmode_ic(cfg.grid, geom, p, cfg.ic_peak, cfg.mode)
    if cfg.ic == "noise":
        return noise_ic(cfg.grid, geom, cfg.noise_amp, cfg.seed)
    if cfg.ic == "custom":
        if custom is None:
            raise ValidationError("custom initial condition requested but none supplied")
        return custom.copy()
    z = np.zeros((cfg.grid.Nw, cfg.grid.Nphi))
    return SurfaceField(z, z.copy(), 0.0, cfg.gamma_start)


def run(cfg: SimConfig, p: BrusselatorParams | None = None, custom: SurfaceField | None = None,
        progress=None) -> SimResult:
    p = p or BrusselatorParams()
    grid = cfg.grid
    state = initial_state(cfg, p, custom)
    nsteps = int(round(cfg.duration / cfg.dt))
    coef = step_coefficients(cfg, p, 0.0)
    geom = CapGeometry(cfg.R, coef.gamma)
    track = tuple(cfg.track)
    ts, gs, amps = [], [], []
    tracked = {k: [] for k in track}
    snaps = []
    pending = sorted(cfg.snapshot_gammas, reverse=True)

    def sample(st, gm):
        ts.append(st.t)
        gs.append(gm.gamma)
        amps.append(project_mode(st, grid, gm, p, cfg.mode).amplitude)
        for k in track:
            tracked[k].append(project_mode(st, grid, gm, p, k).amplitude)

    sample(state, geom)
    for step in range(1, nsteps + 1):
        state = step_imex(state, coef, p, cfg)
        # exact clock, free of accumulated rounding in t += dt
        state.t = step * cfg.dt
        if not cfg.frozen:
            state.tau = cfg.epsilon * state.t
        if step % cfg.cadence == 0 and not cfg.frozen and step < nsteps:
            coef = step_coefficients(cfg, p, state.tau)
            geom = CapGeometry(cfg.R, coef.gamma)
        if step % cfg.sample_every == 0 or step == nsteps:
            peak = max(np.max(np.abs(state.U)), np.max(np.abs(state.V)))
            if not np.isfinite(peak) or peak > cfg.blowup:
                raise BlowUpError(f"solution exceeded {cfg.blowup} at t={state.t:.6g}")
            g_now = cfg.gamma_start if cfg.frozen else float(cfg.schedule().gamma(state.tau))
            gm = CapGeometry(cfg.R, g_now)
            sample(state, gm)
            while pending and g_now <= pending[0] + 1e-15:
                snaps.append((pending.pop(0), state.copy()))
            if progress is not None:
                progress(step, nsteps, state)
    if not cfg.frozen:
        # stamp the exact final curvature (coefficients lag by up to one refresh)
        state.gamma = float(cfg.schedule().gamma(state.tau))
    return SimResult(cfg, np.array(ts), np.array(gs), np.array(amps),
                     {k: np.array(v) for k, v in tracked.items()}, snaps, state)


# -- references, convergence and output ----------------------------------------

def extracted_x(result: SimResult, convention=None):
    """Normal-form amplitude x(t) = max of the projected U field / (k2 M(tau)).

    For the mode u0 P cos(m phi) with coefficient a this is |a| S, where S is
    the divisor of the amplitude convention.
    """
    from .reduction import DEFAULT_CONVENTION, amplitude_scale
    conv = convention or DEFAULT_CONVENTION
    m, n = result.config.mode
    out = np.empty_like(result.amplitude)
    for i, (g, a) in enumerate(zip(result.gamma, result.amplitude)):
        geom = CapGeometry(result.config.R, float(g))
        lam, _ = _cap_mode(geom, m, n)
        out[i] = a * amplitude_scale(m, lam, geom, conv)
    return out


def component_peaks(result: SimResult, p: BrusselatorParams | None = None, index=-1):
    """Peak |U| carried by each recorded mode at one sample: |a| |u0_U| max|P|.

    Raw projection coefficients are not comparable across modes because the
    Legendre factors differ in size by orders of magnitude; the field peak is.
    """
    geom = CapGeometry(result.config.R, float(result.gamma[index]))
    series = {tuple(result.config.mode): result.amplitude}
    series.update(result.tracked)
    out = {}
    for (m, n), amp in series.items():
        lam, mu = _cap_mode(geom, m, n)
        _, u0, _ = eigen_vector(p or BrusselatorParams(), mu)
        out[(m, n)] = float(amp[index]) * abs(u0[0]) * legendre_max(m, lam, geom)
    return out


def qp_reference(grid: SimGrid, geom: CapGeometry, p: BrusselatorParams, epsilon, gamma_prime=-1.0, N=5):
    """epsilon * (X01, Y01) from the truncated series, on the grid nodes (axisymmetric)."""
    corr = qp_correction(p, geom, gamma_prime, N)
    x01, y01 = corr.evaluate(zeta_from_w(geom, grid.w))
    ones = np.ones((1, grid.Nphi))
    return epsilon * x01[:, None] * ones, epsilon * y01[:, None] * ones


def qp_profile_error(state: SurfaceField, cfg: SimConfig, p: BrusselatorParams, N=5):
    """Sup-norm gap between U and epsilon X01, relative to max |epsilon X01|."""
    geom = CapGeometry(cfg.R, state.gamma)
    ref_u, _ = qp_reference(cfg.grid, geom, p, cfg.epsilon, float(cfg.schedule().dgamma(state.tau)), N)
    return float(np.max(np.abs(state.U - ref_u)) / np.max(np.abs(ref_u)))


def cm_prediction(grid: SimGrid, geom: CapGeometry, p: BrusselatorParams, x, mode=(5, 1), N=5,
                  convention=None, phase=0.0):
    """Centre-manifold field x U0 + x^2 U1 on the grid, as (U, V)."""
    from .reduction import DEFAULT_CONVENTION, critical_pair, quadratic_cm
    conv = convention or DEFAULT_CONVENTION
    cp = critical_pair(p, geom, mode, conv)
    cm = quadratic_cm(p, geom, cp, N, convention=conv)
    z = np.clip(zeta_from_w(geom, grid.w), -1.0, 1.0)
    ang = grid.phi - phase
    crit = (legendre_p(cp.m, cp.lam, z) / cp.scale)[:, None] * np.cos(cp.m * ang)[None, :]
    U = x * cp.u0[0] * crit
    V = x * cp.u0[1] * crit
    for k in cm.orders:
        trig = np.cos(k * ang)[None, :]
        for j, lam in enumerate(cm.lambdas[k]):
            f = (legendre_p(k, lam, z) / cm.scales[k][j])[:, None] * trig
            U = U + x * x * cm.coeffs[k][j][0] * f
            V = V + x * x * cm.coeffs[k][j][1] * f
    return U, V


def field_norms(F, grid: SimGrid, geom: CapGeometry):
    """(L2 over solid angle, max norm) of a grid field."""
    W = quadrature_weights(grid, geom)
    return math.sqrt(float(np.sum(W * F * F))), float(np.max(np.abs(F)))


@dataclass
class ConvergenceTable:
    Nw: list
    h: list
    err_l2: list
    err_max: list
    x_end: list
    x_ref: float
    slope_l2: float
    slope_max: float

    def rows(self):
        return zip(self.Nw, self.h, self.err_l2, self.err_max, self.x_end)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["Nw", "h", "err_l2", "err_max", "x_end", "x_ref"])
            for row in self.rows():
                w.writerow([row[0]] + [f"{float(v):.17g}" for v in row[1:]] + [f"{self.x_ref:.17g}"])


def fitted_order(h, err):
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def convergence_study(resolutions, cfg: SimConfig, p: BrusselatorParams | None = None, x_ref=None,
                      convention=None, progress=None) -> ConvergenceTable:
    """Runs cfg at each (Nw, Nphi) and measures the final field against the centre manifold.

    The reference amplitude at the final curvature comes from the normal form
    (``x_ref``) or, when omitted, is built here from a reduction table over
    the run's window, started from the extracted amplitude of the first grid.
    """
    from dataclasses import replace as _replace
    if len(resolutions) < 3:
        raise ValidationError("a convergence study needs at least three resolutions")
    p = p or BrusselatorParams()
    results = []
    for res in resolutions:
        c = _replace(cfg, grid=SimGrid(*res))
        results.append(run(c, p, progress=progress))
    if x_ref is None:
        x_ref = nf_reference(cfg, p, float(extracted_x(results[-1], convention)[0]), convention)
    geom = CapGeometry(cfg.R, float(results[0].gamma[-1]))
    Nw, hs, e2, em, xe = [], [], [], [], []
    for r in results:
        g = r.config.grid
        U_cm, _ = cm_prediction(g, geom, p, x_ref, cfg.mode, convention=convention)
        n2, nm = field_norms(r.final.U - U_cm, g, geom)
        Nw.append(g.Nw)
        hs.append(g.h)
        e2.append(n2)
        em.append(nm)
        xe.append(float(extracted_x(r, convention)[-1]))
    return ConvergenceTable(Nw, hs, e2, em, xe, float(x_ref), fitted_order(hs, e2), fitted_order(hs, em))


def nf_reference(cfg: SimConfig, p: BrusselatorParams, x0, convention=None, samples=36):
    """Normal-form amplitude at cfg.gamma_end for a start at cfg.gamma_start."""
    from .nf import NfSolveConfig, integrate_nf
    from .reduction import DEFAULT_CONVENTION, build_table
    conv = convention or DEFAULT_CONVENTION
    sched = cfg.schedule()
    table = build_table(p, sched, (cfg.gamma_start, cfg.gamma_end), samples, cfg.mode, convention=conv)
    tr = integrate_nf(table, NfSolveConfig(cfg.epsilon, x0, cfg.gamma_start, cfg.gamma_end, n_out=2))
    return float(tr.x[-1])


def write_series_csv(result: SimResult, path, convention=None):
    x = extracted_x(result, convention)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["t", "gamma", "x_extracted"] + [f"amp_{m}_{n}" for m, n in result.tracked]
        w.writerow(header)
        for i in range(len(result.t)):
            row = [result.t[i], result.gamma[i], x[i]] + [result.tracked[k][i] for k in result.tracked]
            w.writerow([f"{float(v):.17g}" for v in row])


def write_snapshot(state: SurfaceField, grid: SimGrid, path):
    """Snapshot as .npz with a header of gamma, tau, t and grid dimensions."""
    np.savez(path, U=state.U, V=state.V, w=grid.w, phi=grid.phi,
             header=np.array([state.gamma, state.tau, state.t, grid.Nw, grid.Nphi]),
             header_names=np.array(["gamma", "tau", "t", "Nw", "Nphi"]))


def read_snapshot(path):
    with np.load(path) as d:
        hdr = dict(zip(d["header_names"].tolist(), d["header"].tolist()))
        grid = SimGrid(int(hdr["Nw"]), int(hdr["Nphi"]))
        return SurfaceField(d["U"].copy(), d["V"].copy(), hdr["tau"], hdr["gamma"], hdr["t"]), grid


def write_config(cfg: SimConfig, path):
    Path(path).write_text(json.dumps(cfg.to_json(), indent=2))


def read_config(path) -> SimConfig:
    return SimConfig.from_json(json.loads(Path(path).read_text()))
