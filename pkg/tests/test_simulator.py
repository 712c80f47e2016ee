import math
import numpy as np
import pytest

from flatcap.errors import BlowUpError, ValidationError
from flatcap.geometry import CapGeometry, disk_chart_factor, zeta_from_w
from flatcap.kinetics import BrusselatorParams
from flatcap.reduction import critical_pair
from flatcap.simulator import (SimConfig, SimGrid, SurfaceField, apply_disk_laplacian, component_peaks,
                               convergence_study, eigenmode_ic, extracted_x, fitted_order, initial_state,
                               legendre_max, noise_ic, project_mode, qp_reference, read_config, read_snapshot, run,
                               step_coefficients, step_imex, write_config, write_snapshot)
from flatcap.specfun import degree_roots, legendre_p

P = BrusselatorParams()


def _mode_field(grid, geom, m, n):
    lam = degree_roots(m, n, geom.gamma)[n - 1]
    F = legendre_p(m, lam, zeta_from_w(geom, grid.w))[:, None] * np.cos(m * grid.phi)[None, :]
    return F, lam * (lam + 1.0) * geom.gamma**2


def test_grid_validation():
    with pytest.raises(ValidationError):
        SimGrid(32, 30)
    with pytest.raises(ValidationError):
        SimGrid(2, 8)
    g = SimGrid(10, 8)
    assert g.w[0] == pytest.approx(g.h / 2) and g.w[-1] + g.h == pytest.approx(1.0, abs=1e-15)


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(dt=0.0)
    with pytest.raises(ValidationError):
        SimConfig(cadence=0)
    with pytest.raises(ValidationError):
        SimConfig(ic="plane")
    with pytest.raises(ValidationError):
        SimConfig(epsilon=0.0)
    with pytest.raises(ValidationError):
        SimConfig(frozen=True)


def test_eigen_residual_second_order():
    geom = CapGeometry(1.0, 0.5)
    errs = []
    for Nw in (32, 64, 128):
        grid = SimGrid(Nw, 16)
        F, mu = _mode_field(grid, geom, 5, 1)
        LF = disk_chart_factor(geom, grid.w)[:, None] * apply_disk_laplacian(grid, F)
        errs.append(np.max(np.abs(LF + mu * F)) / (mu * np.max(np.abs(F))))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.7 < o < 2.3 for o in orders), orders


def test_constant_field_interior():
    grid = SimGrid(64, 8)
    L = apply_disk_laplacian(grid, np.ones((64, 8)))
    assert np.max(np.abs(L[:-1])) < 1e-9 * np.max(np.abs(L))


def test_laplacian_commutes_with_rotation():
    grid = SimGrid(24, 16)
    F = np.random.default_rng(1).standard_normal((24, 16))
    assert np.allclose(apply_disk_laplacian(grid, np.roll(F, 3, axis=1)),
                       np.roll(apply_disk_laplacian(grid, F), 3, axis=1), atol=1e-10)


def _steps(cfg, state, n):
    coef = step_coefficients(cfg, P, 0.0)
    for _ in range(n):
        state = step_imex(state, coef, P, cfg)
    return state


@pytest.mark.parametrize("shift", [1, 4, 8])
def test_rotation_equivariance(shift):
    cfg = SimConfig(grid=SimGrid(16, 16), epsilon=1e-4)
    st = noise_ic(cfg.grid, CapGeometry(1.0, 0.4915), seed=3)
    rolled = SurfaceField(np.roll(st.U, shift, 1), np.roll(st.V, shift, 1), 0.0, st.gamma)
    a = _steps(cfg, st, 30)
    b = _steps(cfg, rolled, 30)
    assert np.allclose(np.roll(a.U, shift, 1), b.U, rtol=0, atol=1e-13)


def test_reflection_equivariance():
    cfg = SimConfig(grid=SimGrid(16, 16), epsilon=1e-4)
    st = noise_ic(cfg.grid, CapGeometry(1.0, 0.4915), seed=4)
    idx = (-np.arange(16)) % 16
    refl = SurfaceField(st.U[:, idx], st.V[:, idx], 0.0, st.gamma)
    a = _steps(cfg, st, 30)
    b = _steps(cfg, refl, 30)
    assert np.allclose(a.U[:, idx], b.U, rtol=0, atol=1e-13)


def test_zero_state_is_fixed():
    cfg = SimConfig(grid=SimGrid(16, 16), epsilon=1e-4, ic="zero")
    st = _steps(cfg, initial_state(cfg, P), 100)
    assert np.all(st.U == 0) and np.all(st.V == 0)


def test_boundary_ring_is_zero():
    st = noise_ic(SimGrid(8, 8), CapGeometry(1.0, 0.5))
    U, V = st.with_boundary()
    assert U.shape == (9, 8) and np.all(U[-1] == 0) and np.all(V[-1] == 0)


def test_frozen_coefficients_are_autonomous():
    cfg = SimConfig(grid=SimGrid(16, 16), frozen=True, t_end=10.0, gamma_start=0.49)
    a = step_coefficients(cfg, P, 0.0)
    b = step_coefficients(cfg, P, 0.3)
    assert np.array_equal(a.inv, b.inv) and np.array_equal(a.lin, b.lin)
    assert np.all(a.lin == P.K0[:, :, None])
    assert np.all(a.source == 0)


@pytest.mark.parametrize("gamma,grows", [(0.51, False), (0.49, True)])
def test_frozen_growth_sign(gamma, grows):
    cfg = SimConfig(grid=SimGrid(32, 16), frozen=True, t_end=3000.0, gamma_start=gamma,
                    ic_peak=1e-4, sample_every=2000)
    res = run(cfg, P)
    amp = res.amplitude
    # after the first sample the off-mode transients have died out
    d = np.diff(amp[1:])
    assert np.all(d > 0) if grows else np.all(d < 0)
    geom = CapGeometry(1.0, gamma)
    assert (critical_pair(P, geom).sigma0 > 0) == grows


def test_projection_recovers_initial_amplitude():
    grid = SimGrid(64, 32)
    geom = CapGeometry(1.0, 0.4915)
    st = eigenmode_ic(grid, geom, P)
    assert np.max(st.U) == pytest.approx(0.021, rel=1e-15)
    cp = critical_pair(P, geom)
    x = project_mode(st, grid, geom, P).amplitude * cp.scale
    x_formula = 0.021 / (P.k2 * legendre_max(5, cp.lam, geom) / cp.scale)
    assert x == pytest.approx(x_formula, rel=1e-3)


def test_eigenmode_ic_rank_one():
    grid = SimGrid(32, 16)
    geom = CapGeometry(1.0, 0.4915)
    st = eigenmode_ic(grid, geom, P)
    mask = np.abs(st.U) > 1e-8
    ratio = st.V[mask] / st.U[mask]
    cp = critical_pair(P, geom)
    assert np.allclose(ratio, cp.u0[1] / P.k2, rtol=1e-12)


def test_axisymmetric_field_projects_to_zero():
    grid = SimGrid(64, 32)
    geom = CapGeometry(1.0, 0.4915)
    F, _ = _mode_field(grid, geom, 0, 1)
    st = SurfaceField(F, 0.3 * F, 0.0, geom.gamma)
    ref = project_mode(eigenmode_ic(grid, geom, P), grid, geom, P).amplitude
    assert project_mode(st, grid, geom, P).amplitude < 1e-12 * ref * np.max(np.abs(F)) / 0.021


def test_projection_phase_invariant():
    grid = SimGrid(32, 40)
    geom = CapGeometry(1.0, 0.4915)
    st = eigenmode_ic(grid, geom, P)
    a = project_mode(st, grid, geom, P).amplitude
    for k in (1, 3, 7):
        rolled = SurfaceField(np.roll(st.U, k, 1), np.roll(st.V, k, 1), 0.0, st.gamma)
        assert project_mode(rolled, grid, geom, P).amplitude == pytest.approx(a, rel=1e-12)


def test_affine_run_stays_axisymmetric():
    cfg = SimConfig(grid=SimGrid(32, 8), epsilon=1e-4, gamma_start=0.5015, gamma_end=0.4915 + 0.009,
                    ic="zero", affine_mode=True, sample_every=10**6)
    res = run(cfg, P)
    U = res.final.U
    assert np.max(np.abs(U - U[:, :1])) < 1e-10 * np.max(np.abs(U))
    assert np.max(np.abs(U)) > 0


def test_qp_reference_shape():
    grid = SimGrid(16, 8)
    geom = CapGeometry(1.0, 0.4915)
    u, v = qp_reference(grid, geom, P, 1e-6)
    assert u.shape == (16, 8) and np.all(u == u[:, :1])


def test_blowup_detected():
    cfg = SimConfig(grid=SimGrid(8, 8), dt=50.0, frozen=True, t_end=5000.0, ic="noise", sample_every=1)
    with pytest.raises(BlowUpError):
        run(cfg, P)


def test_exact_clock():
    cfg = SimConfig(grid=SimGrid(8, 8), epsilon=1e-3, gamma_start=0.4915, gamma_end=0.4815, sample_every=7)
    res = run(cfg, P)
    assert res.t[-1] == pytest.approx(10.0, abs=1e-12)
    assert res.final.gamma == pytest.approx(0.4815, abs=1e-12)


def test_json_and_snapshot_roundtrip(tmp_path):
    cfg = SimConfig(grid=SimGrid(16, 8), epsilon=2e-6, track=((0, 1),), snapshot_gammas=(0.49,))
    write_config(cfg, tmp_path / "c.json")
    assert read_config(tmp_path / "c.json") == cfg
    st = noise_ic(cfg.grid, CapGeometry(1.0, 0.49), seed=9)
    write_snapshot(st, cfg.grid, tmp_path / "s.npz")
    back, grid = read_snapshot(tmp_path / "s.npz")
    assert grid == cfg.grid and np.array_equal(back.U, st.U) and back.gamma == st.gamma


def test_noise_seeded():
    g = SimGrid(8, 8)
    geom = CapGeometry(1.0, 0.5)
    a, b = noise_ic(g, geom, seed=5), noise_ic(g, geom, seed=5)
    assert np.array_equal(a.U, b.U)
    assert np.max(np.abs(a.U)) <= 0.05 and np.max(np.abs(a.V)) <= 0.005


def test_fitted_order():
    h = np.array([0.1, 0.05, 0.025])
    assert fitted_order(h, 3 * h**2) == pytest.approx(2.0, abs=1e-12)


def test_convergence_needs_three_grids():
    with pytest.raises(ValidationError):
        convergence_study([(16, 8), (32, 8)], SimConfig())


def test_extracted_x_at_start():
    cfg = SimConfig(grid=SimGrid(48, 32), epsilon=1e-3, gamma_start=0.4915, gamma_end=0.4905)
    res = run(cfg, P)
    x = extracted_x(res)
    assert x[0] == pytest.approx(2.3057e-3, rel=1e-2)


@pytest.mark.slow
def test_frozen_saturation_matches_branch():
    # the frozen-domain pattern settles at sqrt(-sigma0/C) of the reduction
    g = 0.45
    geom = CapGeometry(1.0, g)
    from flatcap.reduction import cubic_at
    pred = math.sqrt(-critical_pair(P, geom).sigma0 / cubic_at(P, geom))
    cfg = SimConfig(grid=SimGrid(96, 40), frozen=True, t_end=6e4, gamma_start=g, sample_every=1000)
    x = extracted_x(run(cfg, P))
    assert x[-1] == pytest.approx(pred, rel=0.02)


def test_component_peaks_of_eigenmode_start():
    cfg = SimConfig(grid=SimGrid(96, 40), epsilon=1e-3, gamma_start=0.4915, gamma_end=0.4914,
                    track=((0, 1), (6, 1)))
    peaks = component_peaks(run(cfg, P), P, index=0)
    assert peaks[(5, 1)] == pytest.approx(0.021, rel=1e-3)
    assert peaks[(0, 1)] < 1e-12 and peaks[(6, 1)] < 1e-12
