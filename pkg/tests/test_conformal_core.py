from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from qcurv import conformal_core as cc
from qcurv import exact_models as em
from qcurv import sphere_spectral as ss
from qcurv.exceptions import BadInput, DimensionTooLow, NonPositiveConformalFactor

N, L = 6, 64
GRID = ss.default_grid(N, L)
SPEC = cc.NonlinearMapSpec.round_sphere(N)


def _random_even(rng, amp, deg=8, n=N, lmax=L):
    c = np.zeros(lmax + 1)
    c[0:deg + 1:2] = rng.standard_normal(deg // 2 + 1) / (1.0 + np.arange(0, deg + 1, 2)) ** 2
    f = ss.SpectralField(c, n, True)
    return (amp / f.sup_norm(ss.default_grid(n, lmax))) * f


def test_einstein_coefficients_values():
    c6 = cc.einstein_paneitz_coeffs(6)
    assert (c6.c1, c6.c2, c6.q_value, c6.b_n) == (4, 6, 24, Fraction(1, 2))
    c8 = cc.einstein_paneitz_coeffs(8)
    assert (c8.c1, c8.c2) == (10, 12) and c8.c1 * c8.c2 == 120
    for n in range(5, 17):
        c = cc.einstein_paneitz_coeffs(n)
        assert c.q_value == Fraction(n * (n * n - 4), 8)
        assert c.c1 * c.c2 == Fraction(n * (n - 4) * (n * n - 4), 16)
    with pytest.raises(DimensionTooLow):
        cc.einstein_paneitz_coeffs(4)


def test_factorization_from_the_general_operator():
    # On Ric = (n-1) g the operator reads lap^2 + beta lap + (n-4)/2 Q with lap = -Delta
    n = sp.Symbol("n")
    b = (n**2 - 4 * n + 8) / (2 * (n - 1) * (n - 2))
    beta = b * n * (n - 1) - 4 * (n - 1) / (n - 2)
    c1 = n**2 / 4 - n / 2 - 2
    c2 = n**2 / 4 - n / 2
    assert sp.simplify(c1 + c2 - beta) == 0
    assert sp.simplify(c1 * c2 - (n - 4) / 2 * n * (n**2 - 4) / 8) == 0


def test_q_round_agrees_with_schouten_route():
    for n in range(5, 17):
        spec = em.SchoutenSpectrum([(Fraction(1, 2), n)])
        assert em.q_from_schouten(spec) == cc.einstein_paneitz_coeffs(n).q_value


def test_eigenvalues():
    assert cc.paneitz_eigenvalue(0, 6) == 24
    assert cc.paneitz_eigenvalue(1, 6) == 120
    assert cc.paneitz_eigenvalue(2, 6) == 360
    assert cc.linearized_eigenvalue(0, 6) == -96
    assert cc.linearized_eigenvalue(1, 6) == 0
    assert cc.linearized_eigenvalue(2, 6) == 240
    for n in range(6, 13):
        q = cc.einstein_paneitz_coeffs(n).q_value
        assert cc.linearized_eigenvalue(1, n) == 0
        assert cc.linearized_eigenvalue(0, n) == -4 * q
        assert all(cc.linearized_eigenvalue(l, n) > 0 for l in range(2, 30))
    with pytest.raises(BadInput):
        cc.paneitz_eigenvalue(-1, 6)


def test_map_spec_validation():
    assert SPEC.exponent == Fraction(5, 1)
    with pytest.raises(BadInput):
        cc.NonlinearMapSpec(6, 24.0, exponent=3)
    with pytest.raises(DimensionTooLow):
        cc.NonlinearMapSpec(5, 1.0)


def test_nonlinear_map_at_one_is_zero():
    one = ss.SpectralField.constant(1.0, N, L)
    assert cc.nonlinear_map(one, SPEC).sup_norm(GRID) < 1e-12


@pytest.mark.parametrize("c", [0.5, 1.3, 2.0])
def test_nonlinear_map_on_constants(c):
    u = ss.SpectralField.constant(c, N, L)
    expected = (N - 4) / 2 * 24 * (c ** (-8 / (N - 4)) - 1)
    vals = ss.to_physical(cc.nonlinear_map(u, SPEC), GRID)
    assert np.max(np.abs(vals - expected)) < 1e-11 * max(1, abs(expected))


def test_nonlinear_map_directional_derivative():
    h = ss.zonal_harmonic(2, N, L)
    t = 1e-6
    u = ss.SpectralField.constant(1.0, N, L) + t * h
    got = cc.nonlinear_map(u, SPEC).coeffs / t
    want = float(cc.linearized_eigenvalue(2, N)) * h.coeffs
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-4


def test_nonlinear_map_rejects_nonpositive_factor():
    u = ss.SpectralField.constant(1.0, N, L) - 2.0 * ss.zonal_harmonic(2, N, L) * (
        1 / ss.zonal_harmonic(2, N, L).sup_norm(GRID))
    with pytest.raises(NonPositiveConformalFactor):
        cc.nonlinear_map(u, SPEC)


def test_quadratic_remainder_zero_and_scaling():
    zero = ss.SpectralField.zeros(N, L)
    assert not np.any(cc.quadratic_remainder(zero, SPEC).coeffs)
    phi = _random_even(np.random.default_rng(3), 1.0)
    ts = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    q = [cc.quadratic_remainder(t * phi, SPEC, grid=GRID).sup_norm(GRID) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(q), 1)[0]
    assert abs(slope - 2.0) < 0.1
    ratios = np.array(q) / ts**2
    assert abs(ratios[-1] / ratios[-2] - 1) < 0.01


def test_quadratic_lipschitz_bound_holds():
    rng = np.random.default_rng(11)
    C = cc.quadratic_lipschitz_bound(N, 0.1)
    for _ in range(20):
        a = _random_even(rng, rng.uniform(1e-3, 0.1))
        b = _random_even(rng, rng.uniform(1e-3, 0.1))
        lhs = (cc.quadratic_remainder(a, SPEC, grid=GRID) - cc.quadratic_remainder(b, SPEC, grid=GRID)).sup_norm(GRID)
        rhs = (a.sup_norm(GRID) + b.sup_norm(GRID)) * cc.c4_norm(a - b, GRID)
        assert lhs <= C * rhs
    with pytest.raises(BadInput):
        cc.quadratic_lipschitz_bound(N, 1.0)


def test_c4_norm_of_harmonic():
    h = ss.zonal_harmonic(2, N, L)
    s = h.sup_norm(GRID)
    assert cc.c4_norm(h, GRID) == pytest.approx(s * (1 + 14 + 196), rel=1e-12)


def test_direct_q_of_round_metric():
    one = ss.SpectralField.constant(1.0, N, L)
    q, pu = cc.conformal_paneitz_direct(one, one, N)
    assert np.max(np.abs(q - 24)) < 1e-9
    assert np.max(np.abs(pu - 24)) < 1e-9


def test_covariance_identity_factor_and_constant_u():
    rng = np.random.default_rng(5)
    one = ss.SpectralField.constant(1.0, N, L)
    u = _random_even(rng, 0.1) + 1.0
    assert cc.conformal_covariance_residual(one, u) < 1e-9
    psi = _random_even(rng, 0.1) + 1.0
    q, pu = cc.conformal_paneitz_direct(psi, one, N)
    # with u = 1 the identity is the constant Q equation for psi
    rhs = ss.to_physical(ss.apply_paneitz(psi), GRID) * ss.to_physical(psi, GRID) ** -5.0
    assert np.max(np.abs(pu - rhs)) < 1e-9
    assert np.max(np.abs(q - (2 / (N - 4)) * rhs)) < 1e-9


def test_covariance_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(5):
        psi = _random_even(rng, 0.1) + 1.0
        u = _random_even(rng, 0.1) + 1.0
        assert cc.conformal_covariance_residual(psi, u) < 1e-8


def test_indicial_roots():
    r6 = cc.bilaplacian_indicial_roots(6, 10)
    assert r6.gap_is_empty and -2 in r6.roots and 0 in r6.roots
    assert not any(-2 < g < 0 for g in r6.roots)
    r7 = cc.bilaplacian_indicial_roots(7, 10)
    assert r7.gap_is_empty and 4 - 7 in r7.roots
    for n in range(6, 13):
        assert cc.bilaplacian_indicial_roots(n, 12).gap_is_empty


def test_indicial_roots_against_symbolic_bilaplacian():
    r, g = sp.symbols("r gamma")
    for n in (6, 7, 9):
        for l in range(0, 5):
            k = l * (l + n - 2)

            def lap(f):  # radial part of the flat Laplacian on r^gamma Y_l
                return sp.diff(f, r, 2) + (n - 1) / r * sp.diff(f, r) - k / r**2 * f

            sym = sp.simplify(lap(lap(r**g)) / r ** (g - 4))
            roots = {int(x) for x in sp.solve(sp.expand(sym), g)}
            assert roots <= set(cc.bilaplacian_indicial_roots(n, l).roots)
            for gam in range(-12, 12):
                assert sym.subs(g, gam) == cc.bilaplacian_symbol(gam, l, n)
    # brute force scan of rational exponents in the gap
    for n in range(6, 13):
        for l in range(0, 6):
            for gam in np.linspace(4 - n, 0, 2001)[1:-1]:
                assert cc.bilaplacian_symbol(gam, l, n) != 0
