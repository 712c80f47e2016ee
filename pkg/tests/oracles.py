"""Independent high-precision references used by the tests."""

import mpmath as mp


def ferrers_mp(m, nu, x, dps=80):
    """P^m_nu(x) from the hypergeometric series summed in extended precision."""
    with mp.workdps(dps):
        nu = mp.mpf(nu)
        x = mp.mpf(x)
        z = (1 - x) / 2
        a, b, c = m - nu, nu + m + 1, m + 1
        term = mp.mpf(1)
        total = mp.mpf(1)
        k = 0
        eps = mp.mpf(10) ** (5 - dps)
        while True:
            term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
            total += term
            k += 1
            if k > 5 and abs(term) < eps * max(1, abs(total)):
                break
        pref = (-1) ** m * mp.rf(nu - m + 1, 2 * m) / (2**m * mp.factorial(m))
        return pref * (1 - x * x) ** (mp.mpf(m) / 2) * total


def degree_root_mp(m, gamma, lo, hi, dps=40):
    """Root in [lo, hi] of nu -> P^m_nu(sqrt(1 - gamma^2)) by high-precision secant."""
    with mp.workdps(dps):
        x = mp.sqrt(1 - mp.mpf(gamma) ** 2)
        return mp.findroot(lambda nu: ferrers_mp(m, nu, x, dps + 20), (mp.mpf(lo), mp.mpf(hi)),
                           solver="anderson")


def galerkin_slaved(p, geom, cp, x, N=5, n_phi=64):
    """Brute-force Galerkin steady state of the modes slaved to a clamped critical mode.

    The critical (m0, n0) component is held at amplitude ``x``; the orders 0
    and 2 m0 (first N radial modes each) are solved from the full nonlinear
    reaction projected on a (theta, phi) quadrature grid.  Returns the slaved
    2-vectors divided by x^2, keyed by (k, j), as coefficients of the raw
    Ferrers factors, and the reduced growth
    G(x) = <U0*, nonlinear terms>, whose ratio to x^3 estimates the cubic
    coefficient when sigma0 = 0.
    """
    import math

    import numpy as np
    from scipy.optimize import fsolve

    from flatcap.geometry import theta_quadrature
    from flatcap.kinetics import reaction
    from flatcap.specfun import degree_roots, legendre_p

    th, w = theta_quadrature(geom, 64, 8)
    ph = 2.0 * math.pi * np.arange(n_phi) / n_phi
    W = w[:, None] * np.full(n_phi, 2.0 * math.pi / n_phi)[None, :]
    z = np.cos(th)
    m0 = cp.m
    crit = (legendre_p(m0, cp.lam, z) / cp.scale)[:, None] * np.cos(m0 * ph)[None, :]
    keys, basis, mus = [], [], []
    for k in (0, 2 * m0):
        for j, lam in enumerate(degree_roots(k, N, geom.gamma), start=1):
            keys.append((k, j))
            basis.append(legendre_p(k, lam, z)[:, None] * np.cos(k * ph)[None, :])
            mus.append(lam * (lam + 1.0) * geom.gamma**2 / geom.R**2)
    # unit-peak basis keeps the unknowns O(x^2) for the nonlinear solve
    peaks = np.array([np.max(np.abs(b)) for b in basis])
    basis = np.array(basis) / peaks[:, None, None]
    norms = np.einsum("ipq,ipq,pq->i", basis, basis, W)
    K0, D = p.K0, p.D
    X00, Y00 = p.equilibrium

    def fields(a):
        a = a.reshape(-1, 2)
        U = x * cp.u0[:, None, None] * crit[None] + np.einsum("ic,ipq->cpq", a, basis)
        f, g = reaction(p, X00 + U[0], Y00 + U[1])
        nl = np.stack([f, g]) - np.einsum("cd,dpq->cpq", K0, U)
        return U, nl

    def resid(a):
        _, nl = fields(a)
        proj = np.einsum("cpq,ipq,pq->ic", nl, basis, W) / norms[:, None]
        lin = np.array([(K0 - mu * D) @ ai for mu, ai in zip(mus, a.reshape(-1, 2))])
        return (lin + proj).ravel()

    a = fsolve(resid, np.zeros(2 * len(keys)), xtol=1e-13)
    _, nl = fields(a)
    crit_norm = float(np.sum(W * crit * crit))
    G = float(cp.u0_star @ np.einsum("cpq,pq->c", nl, W * crit)) / (float(cp.u0_star @ cp.u0) * crit_norm)
    return {key: ai / (pk * x**2) for key, ai, pk in zip(keys, a.reshape(-1, 2), peaks)}, G
