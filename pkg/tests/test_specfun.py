import math

import numpy as np
import pytest
from scipy import special

from emtoolkit.core import ConvergenceError, DomainError, PreconditionError
from emtoolkit.quadrature import gauss_legendre, sphere_rule
from emtoolkit.specfun import (ModeIndex, ZeroTable, assoc_legendre_P, bessel_J_half,
                               bessel_poly_P, bessel_poly_Q, bessel_zeros, legendre_P,
                               norm_constant, radial_norm_sq, spherical_bessel_j,
                               spherical_bessel_jp, spherical_harmonic,
                               spherical_harmonic_dtheta, tau)


# --- Legendre and harmonics ---------------------------------------------------

@pytest.mark.parametrize("l", range(7))
def test_legendre_matches_scipy(l):
    x = np.linspace(-1, 1, 41)
    np.testing.assert_allclose(legendre_P(l, x), special.eval_legendre(l, x), atol=1e-13)


def test_legendre_domain():
    with pytest.raises(DomainError):
        legendre_P(2, 1.5)


def test_assoc_legendre_no_phase():
    x = 0.3
    # P_1^1 without the (-1)^m factor is +sqrt(1-x^2)
    assert assoc_legendre_P(1, 1, x) == pytest.approx(math.sqrt(1 - x * x))
    assert assoc_legendre_P(2, 2, x) == pytest.approx(3 * (1 - x * x))


@pytest.mark.parametrize("l", range(7))
def test_harmonics_match_scipy(l):
    th = np.linspace(0.05, 3.1, 9)
    ph = np.linspace(-3.0, 3.0, 9)
    for m in range(-l, l + 1):
        ref = special.sph_harm_y(l, m, th, ph)
        np.testing.assert_allclose(spherical_harmonic(l, m, th, ph), ref, atol=1e-13)


def test_y00_constant():
    assert spherical_harmonic(0, 0, 1.0, 2.0) == pytest.approx(1 / math.sqrt(4 * math.pi))


def test_harmonic_conjugation_rule():
    th, ph = 0.7, 1.3
    for l in range(1, 5):
        for m in range(1, l + 1):
            assert spherical_harmonic(l, -m, th, ph) == pytest.approx(
                (-1) ** m * np.conj(spherical_harmonic(l, m, th, ph)))


def test_harmonic_dtheta_fd():
    th, ph, e = 0.9, -0.4, 1e-6
    for l in range(5):
        for m in range(-l, l + 1):
            fd = (spherical_harmonic(l, m, th + e, ph) - spherical_harmonic(l, m, th - e, ph)) / (2 * e)
            assert abs(spherical_harmonic_dtheta(l, m, th, ph) - fd) < 1e-7


def test_harmonic_orthonormality():
    rule = sphere_rule()
    Ys = np.array([spherical_harmonic(l, m, rule.theta, rule.phi)
                   for l in range(7) for m in range(-l, l + 1)])
    gram = (Ys * rule.weights) @ np.conj(Ys).T
    assert np.max(np.abs(gram - np.eye(len(Ys)))) < 1e-10


def test_invalid_m_rejected():
    with pytest.raises(DomainError):
        spherical_harmonic(1, 2, 0.1, 0.1)


# --- spherical Bessel -----------------------------------------------------------

def test_j0_closed_form():
    s = np.linspace(0.1, 40, 200)
    np.testing.assert_allclose(spherical_bessel_j(0, s), np.sin(s) / s, atol=1e-15)


@pytest.mark.parametrize("l", [0, 1, 2, 5, 10, 20, 29])
def test_j_matches_scipy(l):
    s = np.concatenate([np.geomspace(1e-3, 1, 20), np.linspace(1, 60, 80)])
    np.testing.assert_allclose(spherical_bessel_j(l, s), special.spherical_jn(l, s), atol=1e-13)


def test_j_small_argument_large_order():
    # downward recurrence regime; relative accuracy
    s = np.array([0.01, 0.5, 3.0])
    for l in (8, 15):
        ref = special.spherical_jn(l, s)
        np.testing.assert_allclose(spherical_bessel_j(l, s), ref, rtol=1e-10)


def test_j_domain():
    with pytest.raises(DomainError):
        spherical_bessel_j(1, 0.0)
    with pytest.raises(DomainError):
        spherical_bessel_j(1, -1.0)


def test_j_recurrence():
    s = np.linspace(1, 50, 99)
    for l in range(1, 7):
        lhs = spherical_bessel_j(l + 1, s)
        rhs = (2 * l + 1) / s * spherical_bessel_j(l, s) - spherical_bessel_j(l - 1, s)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_jp_matches_scipy():
    s = np.linspace(0.5, 30, 50)
    for l in range(5):
        np.testing.assert_allclose(spherical_bessel_jp(l, s),
                                   special.spherical_jn(l, s, derivative=True), atol=1e-13)


def test_bessel_J_half_example():
    # J_{1/2}(pi/2) = sqrt(2/(pi * pi/2)) * sin(pi/2) = 2/pi
    assert bessel_J_half(0, math.pi / 2) == pytest.approx(2 / math.pi, abs=1e-15)


def test_bessel_J_half_vs_scipy(rng):
    for _ in range(20):
        l, s = int(rng.integers(0, 8)), float(rng.uniform(0.1, 30))
        assert bessel_J_half(l, s) == pytest.approx(special.jv(l + 0.5, s), abs=1e-12)
        assert bessel_J_half(l, s) == pytest.approx(
            math.sqrt(2 * s / math.pi) * spherical_bessel_j(l, s), rel=1e-14)


def test_bessel_polynomials():
    assert bessel_poly_Q(2) == (-1, 0, 15)
    assert bessel_poly_Q(4) == (1, 0, -105, 0, 945)
    assert bessel_poly_P(3) == (0, -6, 0, 15)
    assert bessel_poly_Q(0) == (1,)
    assert bessel_poly_P(1) == (0, 1)


@pytest.mark.parametrize("l", range(6))
def test_bessel_polynomials_reproduce_j(l):
    # j_l(s) = (P_l(1/s) sin s - Q_{l-1}(1/s) cos s)/s
    s = np.linspace(0.7, 20, 31)
    P = np.polynomial.polynomial.polyval(1 / s, bessel_poly_P(l))
    Q = np.polynomial.polynomial.polyval(1 / s, bessel_poly_Q(l - 1)) if l >= 1 else 0.0
    np.testing.assert_allclose((P * np.sin(s) - Q * np.cos(s)) / s, special.spherical_jn(l, s),
                               atol=1e-11)


def test_bessel_polynomial_parity():
    for l in range(5):
        P = np.array(bessel_poly_P(l))
        assert np.polyval(P[::-1], -1) == (-1) ** l * np.polyval(P[::-1], 1)


# --- zeros ------------------------------------------------------------------------

def test_j0_zeros_are_multiples_of_pi():
    t = bessel_zeros(0, 1.0, 3)
    np.testing.assert_allclose(t.zeros, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)


def test_j1_first_zero_bisection_oracle():
    # tan s = s, bracketed in (pi, 3pi/2)
    from scipy.optimize import brentq
    ref = brentq(lambda s: math.tan(s) - s, 4.4, 4.6, xtol=1e-15)
    assert bessel_zeros(1, 1.0, 1)[1] == pytest.approx(4.49340946, abs=1e-8)
    assert bessel_zeros(1, 1.0, 1)[1] == pytest.approx(ref, abs=1e-12)


def test_zero_asymptotics_l2():
    assert abs(bessel_zeros(2, 1.0, 50)[50] - math.pi * 51) < 0.05


@pytest.mark.parametrize("l", range(5))
def test_zeros_match_scipy_roots(l):
    from scipy.optimize import brentq
    t = bessel_zeros(l, 2.0, 6)
    for k in t.zeros:
        s = k * 2.0
        ref = brentq(lambda x: special.spherical_jn(l, x), s - 0.1, s + 0.1, xtol=1e-14)
        assert s == pytest.approx(ref, abs=1e-10)
    assert np.all(t.residuals() < 1e-10)


def test_zero_table_invariants():
    t = bessel_zeros(3, 1.5, 4)
    assert len(t) == 4 and np.all(np.diff(t.zeros) > 0)
    with pytest.raises(IndexError):
        t[0]
    with pytest.raises(PreconditionError):
        ZeroTable(0, 1.0, (2.0, 1.0))
    with pytest.raises(PreconditionError):
        bessel_zeros(0, 1.0, 0)


def test_no_common_zeros():
    tables = [np.array(bessel_zeros(l, 1.0, 10).zeros) for l in range(5)]
    for a in range(5):
        for b in range(a + 1, 5):
            assert np.min(np.abs(tables[a][:, None] - tables[b][None])) > 1e-3


def test_polish_failure_names_mode(monkeypatch):
    from emtoolkit import specfun
    # a wrong derivative stalls Newton far from the root
    monkeypatch.setattr(specfun, "spherical_bessel_jp", lambda l, s: 1e3)
    with pytest.raises(ConvergenceError, match=r"l=2, n=3"):
        specfun._polish(2, 5.0, 3)


# --- radial norms -------------------------------------------------------------------

def test_lommel_l0_pi():
    assert radial_norm_sq(0, math.pi, 1.0) == pytest.approx(
        math.pi / 2 * special.jv(1.5, math.pi) ** 2, rel=1e-14)


@pytest.mark.parametrize("l,n", [(0, 1), (1, 1), (2, 3)])
def test_lommel_quadrature(l, n):
    r0 = 1.0
    k = bessel_zeros(l, r0, n)[n]
    r, w = gauss_legendre(64, 0, r0)
    num = np.sum(tau(l, k, r) ** 2 * r * r * w)
    assert num == pytest.approx(radial_norm_sq(l, k, r0), rel=1e-8)


def test_radial_orthogonality():
    r0 = 1.0
    r, w = gauss_legendre(64, 0, r0)
    for l in range(4):
        t = bessel_zeros(l, r0, 3)
        for a in range(1, 4):
            for b in range(a + 1, 4):
                val = np.sum(tau(l, t[a], r) * tau(l, t[b], r) * r * r * w)
                assert abs(val) < 1e-8


def test_norm_constant_positive_first_zero():
    for l in range(4):
        k = bessel_zeros(l, 1.0, 1)[1]
        assert norm_constant(l, k, 1.0) > 0
        assert norm_constant(l, k, 1.0) ** 2 == pytest.approx(radial_norm_sq(l, k, 1.0))


def test_norm_constant_requires_zero():
    with pytest.raises(PreconditionError):
        norm_constant(0, 3.0, 1.0)


def test_radial_equation_fd():
    # d2/dr2 + (2/r) d/dr - l(l+1)/r^2 applied to tau gives -k^2 tau
    k = 3.7
    for l in range(4):
        errs = []
        for h in (0.02, 0.01):
            r = np.arange(0.5, 2.0, h)
            f = tau(l, k, r)
            d1 = (f[2:] - f[:-2]) / (2 * h)
            d2 = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
            rr = r[1:-1]
            res = d2 + 2 / rr * d1 - l * (l + 1) / rr**2 * f[1:-1] + k * k * f[1:-1]
            errs.append(np.max(np.abs(res)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_mode_index_validation():
    with pytest.raises(DomainError):
        ModeIndex(1, 2, 1.0)
    with pytest.raises(DomainError):
        ModeIndex(0, 0, -1.0)
    assert ModeIndex(0, 0, math.pi).is_cavity(1.0)
    assert not ModeIndex(0, 0, 3.0).is_cavity(1.0)
