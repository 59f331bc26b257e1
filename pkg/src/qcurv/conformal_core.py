"""Paneitz operator on Einstein manifolds and the constant Q nonlinear map.

The exact coefficient functions at the top of the module only use
:mod:`fractions`. The field-level operations work on zonal functions of the
round sphere through :mod:`qcurv.sphere_spectral`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .exact_models import paneitz_coefficient_b
from .exceptions import BadInput, NonPositiveConformalFactor
from .validation import check_dimension

__all__ = [
    "PaneitzEinsteinCoeffs",
    "NonlinearMapSpec",
    "IndicialRootSet",
    "einstein_paneitz_coeffs",
    "paneitz_eigenvalue",
    "linearized_eigenvalue",
    "critical_exponent",
    "nonlinear_map",
    "quadratic_remainder",
    "c4_norm",
    "quadratic_lipschitz_bound",
    "conformal_paneitz_direct",
    "conformal_covariance_residual",
    "bilaplacian_indicial_roots",
    "bilaplacian_symbol",
]


@dataclass(frozen=True)
class PaneitzEinsteinCoeffs:
    """Factorization P = (-Delta + c1)(-Delta + c2) on round S^n."""

    n: int
    c1: Fraction
    c2: Fraction
    q_value: Fraction
    b_n: Fraction


@dataclass(frozen=True)
class NonlinearMapSpec:
    """Data of N[u] = u^{-(n+4)/(n-4)} P u - (n-4)/2 nu."""

    n: int
    nu: float
    exponent: Fraction = None

    def __post_init__(self):
        n = check_dimension(self.n, 6)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "nu", float(self.nu))
        e = critical_exponent(n)
        if self.exponent is not None and Fraction(self.exponent) != e:
            raise BadInput(f"exponent must be (n+4)/(n-4) = {e}")
        object.__setattr__(self, "exponent", e)

    @classmethod
    def round_sphere(cls, n: int) -> "NonlinearMapSpec":
        return cls(n, float(einstein_paneitz_coeffs(n).q_value))


@dataclass(frozen=True)
class IndicialRootSet:
    n: int
    roots: tuple
    gap_is_empty: bool


def einstein_paneitz_coeffs(n: int) -> PaneitzEinsteinCoeffs:
    """Exact constants of the Paneitz operator on the round n-sphere."""
    n = check_dimension(n, 5)
    c1 = Fraction(n * n, 4) - Fraction(n, 2) - 2
    c2 = Fraction(n * n, 4) - Fraction(n, 2)
    q = Fraction(n * (n * n - 4), 8)
    return PaneitzEinsteinCoeffs(n, c1, c2, q, paneitz_coefficient_b(n))


def paneitz_eigenvalue(l: int, n: int) -> Fraction:
    """Eigenvalue of P on degree-l spherical harmonics of S^n."""
    if l < 0:
        raise BadInput("degree must be nonnegative")
    c = einstein_paneitz_coeffs(n)
    lam = l * (l + n - 1)
    return (lam + c.c1) * (lam + c.c2)


def linearized_eigenvalue(l: int, n: int) -> Fraction:
    """Eigenvalue of L = P - (n+4)/2 Q on degree-l harmonics."""
    n = check_dimension(n, 6)
    q = einstein_paneitz_coeffs(n).q_value
    return paneitz_eigenvalue(l, n) - Fraction(n + 4, 2) * q


def critical_exponent(n: int) -> Fraction:
    return Fraction(n + 4, n - 4)


def _spectral():
    # imported lazily: sphere_spectral depends on the eigenvalues above
    from . import sphere_spectral

    return sphere_spectral


def _grid_for(f, grid):
    ss = _spectral()
    return grid if grid is not None else ss.default_grid(f.n, f.L_max)


def _positive_values(u, grid) -> np.ndarray:
    vals = _spectral().to_physical(u, grid)
    if np.min(vals) <= 0.0:
        raise NonPositiveConformalFactor(
            f"conformal factor reaches {np.min(vals):.3e} on the grid"
        )
    return vals


def nonlinear_map(u, spec: NonlinearMapSpec, paneitz_apply: Callable | None = None, grid=None):
    """Evaluate N[u] = u^{-(n+4)/(n-4)} P[u] - (n-4)/2 nu.

    Parameters
    ----------
    u : SpectralField
        Positive conformal factor.
    spec : NonlinearMapSpec
    paneitz_apply : callable, optional
        Operator acting on spectral fields; the round-sphere Paneitz
        operator by default.
    grid : ZonalGrid, optional
        Grid for the pointwise power; twice oversampled by default.

    Returns
    -------
    SpectralField
        The projection of N[u] onto the truncation of ``u``.
    """
    ss = _spectral()
    if u.n != spec.n:
        raise BadInput("field and map dimensions differ")
    paneitz_apply = paneitz_apply or ss.apply_paneitz
    grid = _grid_for(u, grid)
    uv = _positive_values(u, grid)
    pu = ss.to_physical(paneitz_apply(u), grid)
    e = float(spec.exponent)
    vals = uv ** (-e) * pu - 0.5 * (spec.n - 4) * spec.nu
    return ss.to_spectral(vals, grid, u.L_max, even_only=u.even_only)


def quadratic_remainder(phi, spec: NonlinearMapSpec, paneitz_apply=None, L_apply=None, grid=None):
    """q[phi] = N[1 + phi] - N[1] - L[phi]; exactly zero at phi = 0."""
    ss = _spectral()
    L_apply = L_apply or ss.apply_L
    if not np.any(phi.coeffs):
        return phi._like(np.zeros_like(phi.coeffs))
    one = ss.SpectralField.constant(1.0, phi.n, phi.L_max)
    n_phi = nonlinear_map(one + phi, spec, paneitz_apply, grid)
    n_one = nonlinear_map(one, spec, paneitz_apply, grid)
    return n_phi - n_one - L_apply(phi)


def c4_norm(f, grid=None) -> float:
    """sup|f| + sup|Delta f| + sup|Delta^2 f| on the grid.

    A fourth order norm on zonal fields that bounds the Paneitz operator
    directly.
    """
    ss = _spectral()
    grid = _grid_for(f, grid)
    lap = ss.apply_laplacian(f)
    return f.sup_norm(grid) + lap.sup_norm(grid) + ss.apply_laplacian(lap).sup_norm(grid)


def quadratic_lipschitz_bound(n: int, radius: float) -> float:
    """A priori constant C with sup|q[psi] - q[phi]| <= C (|phi| + |psi|) |psi - phi|.

    Norms on the right are :func:`c4_norm`; the bound holds when both fields
    have sup norm at most ``radius`` < 1. It follows from writing
    q[phi] = ((1+phi)^{-e} - 1) P phi + k ((1+phi)^{-e} - 1 + e phi) with
    k = (n-4)/2 Q and bounding each factor by the mean value theorem.
    """
    if not 0 <= radius < 1:
        raise BadInput("radius must lie in [0, 1)")
    c = einstein_paneitz_coeffs(n)
    e = float(critical_exponent(n))
    kappa = float(c.c1 * c.c2)
    k_p = max(1.0, float(c.c1 + c.c2), kappa)
    s = 1.0 - radius
    return e * s ** (-e - 1) * k_p + kappa * e * (e + 1) * s ** (-e - 2)


def conformal_paneitz_direct(psi, u, n: int, grid=None) -> tuple[np.ndarray, np.ndarray]:
    """Q and P u of the metric psi^{4/(n-4)} g_round from curvature formulas.

    Everything is computed from the Ricci tensor of a conformal metric and
    the definition of P through the Schouten tensor, differentiating with
    Taylor jets in t = cos r. No spectral eigenvalues are used.

    Returns
    -------
    (Q, Pu) : tuple of ndarray
        Values at the grid nodes.
    """
    ss = _spectral()
    from .jets import Jet

    grid = _grid_for(psi, grid)
    _positive_values(psi, grid)
    t = Jet.variable(grid.nodes, 4)
    s2 = 1.0 - t * t
    pj = ss.field_jets(psi, grid.nodes, 4)
    uj = ss.field_jets(u, grid.nodes, 4)
    w = pj.log() * (2.0 / (n - 4))
    wt = w.deriv()
    wtt = wt.deriv()

    def lap(f):
        ft = f.deriv()
        return s2 * ft.deriv() - t * ft * n

    e2w = (w * 2.0).exp()
    em2w = (w * -2.0).exp()

    def lap_tilde(f):
        ft = f.deriv()
        return em2w * (lap(f) + s2 * wt * ft * (n - 2))

    grad_w_sq = s2 * wt * wt
    lap_w = lap(w)
    h_r = s2 * wtt - t * wt
    h_a = -(t * wt)
    common = lap_w + grad_w_sq * (n - 2)
    ric_r = (n - 1) - (h_r - grad_w_sq) * (n - 2) - common
    ric_a = (n - 1) - h_a * (n - 2) - common
    rr = ric_r / e2w
    ra = ric_a / e2w
    scal = rr + ra * (n - 1)
    a_r = (rr - scal / (2 * (n - 1))) / (n - 2)
    a_a = (ra - scal / (2 * (n - 1))) / (n - 2)
    sigma1 = a_r + a_a * (n - 1)
    sigma2 = a_r * a_a * (n - 1) + a_a * a_a * ((n - 1) * (n - 2) / 2)
    Q = -lap_tilde(sigma1) + sigma1 * sigma1 * ((n - 4) / 2) + sigma2 * 4
    tau = a_r * 4 - sigma1 * (n - 2)
    ut = uj.deriv()
    div_term = em2w * (tau * lap(uj) + s2 * tau.deriv() * ut + tau * s2 * wt * ut * (n - 2))
    pu = lap_tilde(lap_tilde(uj)) + div_term + Q * uj * ((n - 4) / 2)
    return Q.value.copy(), pu.value.copy()


def conformal_covariance_residual(psi, u, n: int | None = None, grid=None) -> float:
    """Max-norm defect of P_{g~} u = psi^{-(n+4)/(n-4)} P_g(u psi).

    Here g is the round metric and g~ = psi^{4/(n-4)} g. The left side comes
    from :func:`conformal_paneitz_direct`; the right side from spectral
    products and the round-sphere eigenvalues.
    """
    ss = _spectral()
    n = psi.n if n is None else check_dimension(n, 5)
    if psi.n != n or u.n != n or psi.L_max != u.L_max:
        raise BadInput("psi and u must share dimension and truncation")
    grid = _grid_for(psi, grid)
    pv = _positive_values(psi, grid)
    _, lhs = conformal_paneitz_direct(psi, u, n, grid)
    prod = ss.multiply(u, psi, grid)
    rhs = pv ** (-float(critical_exponent(n))) * ss.to_physical(ss.apply_paneitz(prod), grid)
    return float(np.max(np.abs(lhs - rhs)))


def bilaplacian_symbol(gamma, l: int, n: int):
    """Delta^2 (r^gamma Y_l) / (r^{gamma-4} Y_l) on flat R^n, in closed form."""
    k = l * (l + n - 2)
    return (gamma * (gamma + n - 2) - k) * ((gamma - 2) * (gamma + n - 4) - k)


def bilaplacian_indicial_roots(n: int, l_max: int) -> IndicialRootSet:
    """Exponents gamma with Delta^2 (r^gamma Y_l) = 0, for l = 0..l_max.

    Also reports whether none of them lies in the open interval (4-n, 0).
    """
    n = check_dimension(n, 6)
    if l_max < 0:
        raise BadInput("l_max must be nonnegative")
    roots = set()
    for l in range(l_max + 1):
        roots.update({l, 2 + l, 2 - n - l, 4 - n - l})
    roots = tuple(sorted(roots))
    empty = not any(4 - n < g < 0 for g in roots)
    return IndicialRootSet(n, roots, empty)
