import csv
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from qcurv import green_paneitz as gp
from qcurv.exceptions import BadInput, DimensionTooLow, EmptyWindow, NonPositiveOperator


def _sympy_companion(n):
    """(-Delta + c2) applied to the chordal power, as a numeric function of r."""
    r = sp.Symbol("r", positive=True)
    G = (2 * sp.sin(r / 2)) ** (4 - n)
    c2 = sp.Rational(n * n, 4) - sp.Rational(n, 2)
    F = -(sp.diff(G, r, 2) + (n - 1) * sp.cot(r) * sp.diff(G, r)) + c2 * G
    return sp.lambdify(r, sp.simplify(F), "numpy")


@pytest.fixture(scope="module")
def prof6():
    return gp.paneitz_radial_green(6)


@pytest.fixture(scope="module")
def prof7():
    return gp.paneitz_radial_green(7)


def test_green_matches_chordal_power(prof6, prof7):
    for prof in (prof6, prof7):
        exact = gp.exact_sphere_green(prof.r_samples, prof.n)
        assert np.max(np.abs(prof.values / exact - 1)) < 1e-10


@pytest.mark.parametrize("n", [8, 9, 10])
def test_green_higher_dimensions(n):
    prof = gp.paneitz_radial_green(n)
    exact = gp.exact_sphere_green(prof.r_samples, n)
    assert np.max(np.abs(prof.values / exact - 1)) < 1e-10


def test_companion_matches_symbolic_oracle(prof6, prof7):
    r = prof6.r_samples
    one_minus_t = 2 * np.sin(r / 2) ** 2
    closed = (1 + one_minus_t) / one_minus_t**2
    assert np.max(np.abs(prof6.companion / closed - 1)) < 1e-10
    F7 = _sympy_companion(7)(prof7.r_samples)
    assert np.max(np.abs(prof7.companion / F7 - 1)) < 1e-10


def test_positivity_and_normalization(prof6):
    r, G, F = prof6.r_samples, prof6.values, prof6.companion
    assert np.all(G > 0) and np.all(F > 0)
    m = prof6.window(1e-3, 1e-2)
    assert np.max(np.abs(F[m] * r[m] ** 4 / 4 - 1)) < 0.01
    assert np.max(np.abs(G[m] * r[m] ** 2 - 1)) < 0.01
    # minimum away from the pole, at the antipode
    assert r[np.argmin(G)] == pytest.approx(math.pi)
    assert G.min() == pytest.approx(0.25, rel=1e-10)


def test_helmholtz_alone():
    F = gp.helmholtz_radial_green(4.0, 6)
    omt = 2 * np.sin(F.r_samples / 2) ** 2
    assert np.max(np.abs(F.values / ((1 + omt) / omt**2) - 1)) < 1e-10
    with pytest.raises(NonPositiveOperator):
        gp.helmholtz_radial_green(0.0, 6)
    with pytest.raises(NonPositiveOperator):
        gp.helmholtz_radial_green(-1.0, 6)


def test_flat_mode_reproduces_harmonic_power():
    for n in (6, 7):
        prof = gp.helmholtz_radial_green(0.0, n, radii=gp.default_radii(800), flat=True)
        ref = 2 * (n - 4) * prof.r_samples ** (2 - n)
        assert np.max(np.abs(prof.values / ref - 1)) < 1e-8
        # flat radial Laplacian on the log grid: (f_xx + (n-2) f_x) / r^2
        x = np.log(prof.r_samples)
        h = x[1] - x[0]
        f = prof.values
        w1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / (60 * h)
        w2 = np.array([2, -27, 270, -490, 270, -27, 2]) / (180 * h * h)
        sh = np.stack([f[j: j + f.size - 6] for j in range(7)])
        fx, fxx = w1 @ sh, w2 @ sh
        assert np.max(np.abs(fxx + (n - 2) * fx) / np.abs(fxx)) < 1e-8
    with pytest.raises(BadInput):
        gp.helmholtz_radial_green(1.0, 6, flat=True)


def test_slopes(prof6, prof7):
    fit = gp.fit_leading_exponent(prof6)
    assert abs(fit.slope + 2) < 0.05 and fit.meaningful
    sub = gp.fit_leading_exponent(gp.subleading_profile(prof7))
    assert abs(sub.slope + 1) < 0.3
    # n = 6: the correction is logarithmic, far below the leading order
    sub6 = gp.fit_leading_exponent(gp.subleading_profile(prof6))
    assert sub6.slope > -2 + 1.3


def test_fit_on_exact_data():
    r = np.geomspace(1e-4, 1, 300)
    p = gp.RadialProfile(r, r**-2.0, 6)
    assert abs(gp.fit_leading_exponent(p).slope + 2) < 1e-6
    p2 = gp.RadialProfile(r, r**-2.0 * (1 + r * r), 6)
    assert abs(gp.fit_leading_exponent(p2).slope + 2) < 1e-3
    p3 = gp.RadialProfile(r, np.full_like(r, 3.0), 6)
    fit = gp.fit_leading_exponent(p3)
    assert abs(fit.slope) < 1e-12 and fit.leading_constant == pytest.approx(3.0)


def test_fit_window_errors():
    r = np.geomspace(1e-2, 1, 50)
    p = gp.RadialProfile(r, r, 6)
    with pytest.raises(EmptyWindow):
        gp.fit_leading_exponent(p, (1e-3, 1e-2))
    with pytest.raises(EmptyWindow):
        gp.fit_leading_exponent(p, (0.5, 0.52))


def test_profile_validation():
    with pytest.raises(BadInput):
        gp.RadialProfile([1.0, 0.5], [1.0, 1.0], 6)
    with pytest.raises(BadInput):
        gp.RadialProfile([0.5, 1.0], [1.0, np.inf], 6)
    with pytest.raises(DimensionTooLow):
        gp.paneitz_radial_green(5)
    with pytest.raises(BadInput):
        gp.paneitz_radial_green(6, radii=[0.1, 4.0])


def test_operator_residuals(prof6, prof7):
    assert gp.operator_residuals(prof6)["composed_over_max_G"] < 1e-6
    assert gp.operator_residuals(prof7)["composed_over_max_G"] < 1e-6
    coarse = gp.operator_residuals(prof7)
    fine = gp.operator_residuals(gp.paneitz_radial_green(7, gp.default_radii(800)))
    # each second-order stage is limited by stencil truncation on the coarse grid
    assert fine["stage_G"] < 1e-8 and fine["stage_F"] < 1e-6
    assert fine["stage_F"] < coarse["stage_F"] / 10


def test_fd_laplacian_on_known_function():
    n = 6
    r = np.linspace(0.5, 2.5, 801)
    f = np.cos(r)  # degree-1 zonal harmonic: Delta f = -n f
    for order in (4, 6):
        lap = gp.radial_laplacian_fd(f, r, n, order)
        k = order // 2
        assert np.max(np.abs(lap + n * f[k:-k])) < 1e-8
    rl = np.geomspace(0.5, 2.5, 801)
    lap = gp.radial_laplacian_fd(np.cos(rl), rl, n, 6)
    assert np.max(np.abs(lap + n * np.cos(rl)[3:-3])) < 1e-8
    with pytest.raises(BadInput):
        gp.radial_laplacian_fd(f, r, n, 5)
    with pytest.raises(BadInput):
        gp.radial_laplacian_fd(f, r**2, n, 4)


def test_c1_constant():
    expected = {6: Fraction(0), 7: Fraction(-3), 8: Fraction(-32, 3), 9: Fraction(-25), 10: Fraction(-48)}
    for n, v in expected.items():
        assert gp.c1_closed_form(n) == v
        assert gp.measure_c1(n)["C1"] == pytest.approx(float(v), abs=1e-6)


def test_write_csv(tmp_path, prof6):
    path = tmp_path / "g.csv"
    gp.write_profile_csv(prof6, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["r", "G", "F"] and len(rows) == prof6.r_samples.size + 1
    assert float(rows[1][1]) == prof6.values[0]
