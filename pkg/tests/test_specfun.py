import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatcap.errors import DomainError
from flatcap.specfun import (FdSteps, degree_roots, find_degree, legendre_dlambda, legendre_dx,
                             legendre_p)

from oracles import ferrers_mp

# first (5,1) degree root at gamma = 0.5 from the 80-digit series oracle
LAMBDA_51_HALF = 16.504141061133362


def test_trivial_values():
    assert legendre_p(0, 0.0, 0.7) == 1.0
    assert legendre_p(0, 1.0, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert legendre_p(0, 2.0, 0.4) == pytest.approx((3 * 0.16 - 1) / 2, abs=1e-15)


def test_condon_shortley_phase():
    x = 0.3
    assert legendre_p(1, 1.0, x) == pytest.approx(-math.sqrt(1 - x * x), rel=1e-14)


def test_value_at_one():
    for lam in (0.0, 0.5, 3.7, 22.1):
        assert legendre_p(0, lam, 1.0) == pytest.approx(1.0, abs=1e-14)
    for m in (1, 3, 5):
        vals = [abs(legendre_p(m, m + 4.3, 1 - d)) for d in (1e-4, 1e-8, 1e-12)]
        assert vals[0] > vals[1] > vals[2]
        assert vals[2] < 1e-3 * vals[0]


@pytest.mark.parametrize("m,lam,x", [
    (0, 0.37, 0.2), (0, 47.3, 0.9), (3, 12.6, 0.05), (5, LAMBDA_51_HALF, 0.6), (5, 33.3, 0.95),
    (10, 59.9, 0.97), (12, 40.2, 0.3), (2, 18.0, 0.0), (7, 7.0, 0.999), (1, 55.5, 0.8),
])
def test_against_high_precision_series(m, lam, x):
    ref = float(ferrers_mp(m, lam, x))
    got = legendre_p(m, lam, x)
    # absolute accuracy 1e-10 read relative to the function's magnitude
    assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref))


def test_vectorised_matches_scalar():
    xs = np.linspace(0.0, 1.0, 7)
    vec = legendre_p(4, 21.25, xs)
    assert np.allclose(vec, [legendre_p(4, 21.25, float(x)) for x in xs], rtol=1e-14, atol=0)


def test_domain_errors():
    with pytest.raises(DomainError):
        legendre_p(0, 1.0, -1.0)
    with pytest.raises(DomainError):
        legendre_p(0, 1.0, 1.5)
    with pytest.raises(DomainError):
        legendre_p(-1, 1.0, 0.5)
    with pytest.raises(DomainError):
        legendre_p(0, -0.5, 0.5)
    with pytest.raises(DomainError):
        legendre_dx(2, 3.0, 1.0)
    with pytest.raises(DomainError):
        FdSteps(h1=1e-3)
    with pytest.raises(DomainError):
        FdSteps(h2=0.0)


def test_dx_trivial():
    assert legendre_dx(0, 1.0, 0.3) == pytest.approx(1.0, rel=1e-12)
    assert legendre_dx(0, 2.0, 0.4) == pytest.approx(1.2, rel=1e-12)


def _fd5(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def test_dx_against_fd():
    d = legendre_dx(5, 7.2, 0.5)
    fd = _fd5(lambda t: legendre_p(5, 7.2, t), 0.5, 1e-3)
    assert d == pytest.approx(fd, rel=1e-6)


@settings(max_examples=100, deadline=None)
@given(m=st.integers(0, 10), frac=st.floats(0.0, 1.0), x=st.floats(-0.9, 0.9))
def test_dx_identity_property(m, frac, x):
    lam = m + frac * (40.0 - m)
    d = legendre_dx(m, lam, x)
    fd = _fd5(lambda t: legendre_p(m, lam, t), x, 1e-4)
    # relative to the natural derivative scale, so sign changes of P' do not blow up the ratio
    scale = abs(d) + (lam + 1.0) * abs(legendre_p(m, lam, x)) / (1 - x * x) + 1e-300
    assert abs(d - fd) <= 1e-6 * scale


def test_dlambda_trivial_at_one():
    assert legendre_dlambda(0, 1e-5, 1.0, FdSteps(h1=1e-5)) == pytest.approx(0.0, abs=1e-12)


def test_dlambda_against_rich_stencil():
    with mp.workdps(40):
        ref = float(mp.diff(lambda nu: ferrers_mp(0, nu, 0, 60), 1))
    # closed form: P_nu(0) = sqrt(pi)/(Gamma((1-nu)/2) Gamma(1+nu/2)) has slope -1 at nu = 1
    assert ref == pytest.approx(-1.0, abs=1e-9)
    assert legendre_dlambda(0, 1.0, 0.0, FdSteps(h1=1e-5)) == pytest.approx(ref, abs=1e-4)


def test_dlambda_sign_at_root():
    x = math.sqrt(0.75)
    lam = find_degree(5, 1, 0.5).lambda_mn
    d = legendre_dlambda(5, lam, x)
    assert d != 0.0
    bracket = legendre_p(5, lam + 1e-3, x) - legendre_p(5, lam - 1e-3, x)
    assert math.copysign(1, d) == math.copysign(1, bracket)


def test_hemisphere_roots():
    assert find_degree(0, 1, 1.0).lambda_mn == pytest.approx(1.0, abs=1e-10)
    assert find_degree(1, 1, 1.0).lambda_mn == pytest.approx(2.0, abs=1e-10)
    assert degree_roots(0, 3, 1.0) == pytest.approx((1.0, 3.0, 5.0), abs=1e-10)


def test_critical_root_matches_oracle():
    r = find_degree(5, 1, 0.5)
    assert r.lambda_mn == pytest.approx(LAMBDA_51_HALF, abs=1e-10)
    assert r.residual <= 1e-8
    with mp.workdps(30):
        assert abs(float(ferrers_mp(5, r.lambda_mn, math.sqrt(0.75)))) < 1e-8


@pytest.mark.parametrize("m,gamma", [(0, 0.5), (5, 0.5), (2, 0.4915), (12, 0.3)])
def test_roots_simple_and_increasing(m, gamma):
    tol = 1e-10
    lams = degree_roots(m, 4, gamma, tol)
    assert all(b > a for a, b in zip(lams, lams[1:]))
    x = math.sqrt(1 - gamma * gamma)
    for lam in lams:
        assert legendre_p(m, lam - 10 * tol, x) * legendre_p(m, lam + 10 * tol, x) < 0


@pytest.mark.parametrize("m,n", [(0, 1), (0, 3), (5, 1), (2, 2), (6, 1)])
def test_roots_decrease_with_curvature(m, n):
    gam = np.round(np.arange(0.3, 1.0001, 0.1), 10)
    lams = [find_degree(m, n, g).lambda_mn for g in gam]
    assert all(b < a for a, b in zip(lams, lams[1:]))


def test_bad_root_requests():
    with pytest.raises(DomainError):
        find_degree(0, 0, 0.5)
    with pytest.raises(DomainError):
        find_degree(0, 1, 0.0)
    with pytest.raises(DomainError):
        find_degree(0, 1, 1.2)
