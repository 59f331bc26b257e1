"""Radial Green's function of the Paneitz operator on the round sphere.

On S^n the Paneitz operator factors as (-Delta + c1)(-Delta + c2). The
Green's function with pole at the north pole is obtained from two radial
second order solves: F solves (-Delta + c1) F = 0 away from the pole with
F ~ 2(n-4) r^{2-n}, then G solves (-Delta + c2) G = F with G ~ r^{4-n}.

Both solves use two-sided shooting. Near each end the solution is started
from a Frobenius series and integrated in the variable x = log(distance);
the free coefficients are fixed by matching values and derivatives at
r = pi/2.
"""
from __future__ import annotations

import csv
import math
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import bernoulli

from .conformal_core import einstein_paneitz_coeffs
from .exceptions import BadInput, EmptyWindow, NonPositiveOperator, ShootingFailure
from .validation import check_dimension

__all__ = [
    "RadialProfile",
    "AsymptoticFit",
    "default_radii",
    "helmholtz_radial_green",
    "paneitz_radial_green",
    "fit_leading_exponent",
    "subleading_profile",
    "radial_laplacian_fd",
    "operator_residuals",
    "measure_c1",
    "c1_closed_form",
    "exact_sphere_green",
    "write_profile_csv",
]

_START = 1e-2  # distance from either pole where series data are imposed
_TERMS = 20
_RTOL = 1e-13
_ATOL = 1e-30


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial samples of a function on S^n around a pole.

    ``companion`` optionally carries a second profile on the same radii
    (the intermediate function F alongside G).
    """

    r_samples: np.ndarray
    values: np.ndarray
    n: int
    companion: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.r_samples, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise BadInput("r_samples and values must be 1-D of equal length")
        if np.any(np.diff(r) <= 0):
            raise BadInput("r_samples must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise BadInput("profile values must be finite")
        object.__setattr__(self, "r_samples", r)
        object.__setattr__(self, "values", v)
        if self.companion is not None:
            object.__setattr__(self, "companion", np.asarray(self.companion, dtype=float))

    def window(self, r_lo: float, r_hi: float) -> np.ndarray:
        return (self.r_samples >= r_lo) & (self.r_samples <= r_hi)


@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares fit log|v| = slope log r + log(constant)."""

    window: tuple
    slope: float
    leading_constant: float
    residual: float

    @property
    def meaningful(self) -> bool:
        return self.residual < 1e-2


def default_radii(count: int = 400, r_min: float = 1e-4) -> np.ndarray:
    """Log-spaced radii on [r_min, pi]."""
    return np.geomspace(r_min, math.pi, count)


@lru_cache(maxsize=None)
def _rcot_coeffs(terms: int) -> np.ndarray:
    # r cot r = sum_j (-1)^j 4^j B_{2j} r^{2j} / (2j)!
    b = bernoulli(2 * terms)
    j = np.arange(terms + 1)
    return np.array([(-4.0) ** k * b[2 * k] / math.factorial(2 * k) for k in j])


def _frobenius(e: float, c: float, n: int, a0: float | None, source=None, terms=_TERMS,
               flat=False) -> np.ndarray:
    """Coefficients a_m of f = sum a_m r^{e+2m} solving f'' + (n-1) cot r f' - c f = -s.

    ``source`` lists s_m with s = sum s_m r^{e-2+2m}. At an exponent where
    the indicial polynomial vanishes the coefficient is free; it is set to
    zero when the equation is consistent there and the series is cut off
    otherwise (the neglected logarithmic term is far below rounding at the
    starting radius).
    """
    p = _rcot_coeffs(terms)
    if flat:
        p = np.r_[1.0, np.zeros(terms)]
    s = np.zeros(terms + 1) if source is None else np.r_[source, np.zeros(terms + 1)][: terms + 1]
    a = np.zeros(terms + 1)
    for m in range(terms + 1):
        E = e + 2 * m
        num = -s[m]
        if m:
            num += c * a[m - 1]
            num -= (n - 1) * sum(p[j] * a[m - j] * (e + 2 * m - 2 * j) for j in range(1, m + 1))
        d = E * (E + n - 2)
        if abs(d) < 1e-12:
            if m == 0 and a0 is not None:
                a[0] = a0
                continue
            scale = max(1.0, np.max(np.abs(a[:m])) if m else 1.0)
            if abs(num) <= 1e-12 * scale:
                a[m] = 0.0
                continue
            return a[:m]
        a[m] = num / d
    return a


def _series(coeffs, e, rho):
    """Value and x-derivative of sum a_m rho^{e+2m} at rho."""
    E = e + 2 * np.arange(len(coeffs))
    pw = rho ** E
    return float(np.dot(coeffs, pw)), float(np.dot(coeffs * E, pw))


class _Mode:
    """A pair (F, G) given by series near an endpoint."""

    def __init__(self, eF, aF, eG, aG):
        self.eF, self.aF, self.eG, self.aG = eF, aF, eG, aG

    def state(self, rho):
        if self.aF is None:
            f = (0.0, 0.0)
        else:
            f = _series(self.aF, self.eF, rho)
        g = _series(self.aG, self.eG, rho) if self.aG is not None else (0.0, 0.0)
        return np.array([f[0], f[1], g[0], g[1]])


def _rhs_factory(n, c_f, c_g, flat):
    def rhs(x, y):
        rho = math.exp(x)
        k = 1.0 - (n - 1) * (1.0 if flat else rho / math.tan(rho))
        r2 = rho * rho
        out = np.empty_like(y)
        F, Fx, G, Gx = y[0::4], y[1::4], y[2::4], y[3::4]
        out[0::4] = Fx
        out[1::4] = Fx * k + r2 * c_f * F
        out[2::4] = Gx
        out[3::4] = Gx * k + r2 * (c_g * G - F)
        return out

    return rhs


def _integrate(modes, n, c_f, c_g, rho_end, x_eval, flat=False):
    """Integrate stacked modes from _START to rho_end; returns (end states, sampled states)."""
    y0 = np.concatenate([m.state(_START) for m in modes])
    x0, x1 = math.log(_START), math.log(rho_end)
    x_eval = np.asarray(x_eval, dtype=float)
    inner = x_eval[x_eval < x0]
    outer = x_eval[(x_eval >= x0) & (x_eval < x1)]
    n_end = int(np.sum(x_eval >= x1))
    t_eval = np.r_[outer, x1]
    sol = solve_ivp(
        _rhs_factory(n, c_f, c_g, flat), (x0, x1), y0, method="DOP853",
        rtol=_RTOL, atol=_ATOL, t_eval=t_eval,
    )
    if not sol.success or sol.y.shape[1] != len(t_eval):
        raise ShootingFailure(f"radial integration failed: {sol.message}")
    end = sol.y[:, -1].reshape(len(modes), 4)
    ys = sol.y.reshape(len(modes), 4, -1)
    # radii inside the starting radius come straight from the series
    near = np.stack([np.stack([m.state(math.exp(x)) for x in inner], axis=-1)
                     if len(inner) else np.zeros((4, 0)) for m in modes])
    samples = np.concatenate([near, ys[:, :, :-1], np.repeat(ys[:, :, -1:], n_end, axis=2)], axis=2)
    return end, samples


def _check_c(c):
    c = float(c)
    if not c > 0:
        raise NonPositiveOperator(f"-Delta + c needs c > 0, got {c}")
    return c


def _solve(n, c_f, c_g, radii, with_g: bool):
    """Shared two-sided shooting for F alone or for the pair (F, G)."""
    lead = 2.0 * (n - 4)
    mid = math.pi / 2
    aS = _frobenius(2 - n, c_f, n, lead)
    a1 = _frobenius(0, c_f, n, 1.0)
    if with_g:
        gS = _frobenius(4 - n, c_g, n, None, source=aS[: _TERMS + 1])[: len(aS)]
        g1 = _frobenius(2, c_g, n, None, source=a1)
        g2 = _frobenius(0, c_g, n, 1.0)
        near = [_Mode(2 - n, aS, 4 - n, gS), _Mode(0, a1, 2, g1), _Mode(0, None, 0, g2)]
        far = [_Mode(0, a1, 2, g1), _Mode(0, None, 0, g2)]
    else:
        near = [_Mode(2 - n, aS, 0, None), _Mode(0, a1, 0, None)]
        far = [_Mode(0, a1, 0, None)]

    left = radii[radii <= mid]
    right = radii[radii > mid]
    s_right = math.pi - right
    s_int = s_right[s_right >= _START][::-1]
    end_l, samp_l = _integrate(near, n, c_f, c_g, mid, np.log(left))
    end_r, samp_r = _integrate(far, n, c_f, c_g, mid, np.log(s_int))

    # d/dr = d/dx / rho on the left and -d/dx / s on the right; at pi/2 both rho = s
    comps = [0, 1, 2, 3] if with_g else [0, 1]
    sign = np.array([1.0, -1.0, 1.0, -1.0])[comps]
    A_left = end_l[1:, comps].T
    A_right = (end_r[:, comps] * sign).T
    A = np.hstack([A_left, -A_right])
    b = -end_l[0, comps]
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e12:
        raise ShootingFailure(f"matching system is singular (cond = {cond:.2e})")
    coef = np.linalg.solve(A, b)
    k_left = len(near) - 1
    wl = np.r_[1.0, coef[:k_left]]
    wr = coef[k_left:]

    F = np.empty(len(radii))
    G = np.empty(len(radii))
    nl = len(left)
    if nl:
        F[:nl] = np.tensordot(wl, samp_l[:, 0, :], axes=1)
        G[:nl] = np.tensordot(wl, samp_l[:, 2, :], axes=1)
    # right side: integrated samples come in increasing s, i.e. decreasing r
    if len(s_int):
        F_r = np.tensordot(wr, samp_r[:, 0, :], axes=1)[::-1]
        G_r = np.tensordot(wr, samp_r[:, 2, :], axes=1)[::-1]
        F[nl: nl + len(s_int)] = F_r
        G[nl: nl + len(s_int)] = G_r
    for i in range(nl + len(s_int), len(radii)):
        s = math.pi - radii[i]
        states = np.array([m.state(s) for m in far])
        F[i] = wr @ states[:, 0]
        G[i] = wr @ states[:, 2]
    return F, G, wl, wr


def helmholtz_radial_green(c: float, n: int, radii=None, flat: bool = False) -> RadialProfile:
    """Singular radial solution of (-Delta + c) F = 0 on S^n.

    Parameters
    ----------
    c : float
        Positive constant.
    n : int
        Dimension, at least 5.
    radii : array_like, optional
        Output radii in (0, pi]; :func:`default_radii` by default.
    flat : bool
        Replace cot r by 1/r (flat R^n). Only c = 0 is allowed then and the
        profile is the outward solution without a matching condition.

    Returns
    -------
    RadialProfile
        F with F r^{n-2} -> 2(n-4) and F regular at r = pi.
    """
    n = check_dimension(n, 5)
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if flat:
        if float(c) != 0.0:
            raise BadInput("the flat sanity mode is defined for c = 0 only")
        a = _frobenius(2 - n, 0.0, n, 2.0 * (n - 4), flat=True)
        _, samp = _integrate([_Mode(2 - n, a, 0, None)], n, 0.0, 0.0, radii[-1],
                             np.log(radii), flat=True)
        F, Fx = samp[0, 0], samp[0, 1]
        # rounding at the large starting values leaks into the constant mode;
        # decay at infinity removes it (a pure power has F = Fx / (2 - n))
        # decay at infinity fixes it from the outer end state
        drift = float(F[-1] - Fx[-1] / (2 - n))
        F = np.where(radii >= _START, F - drift, F)
        return RadialProfile(radii, F, n, meta={"c": 0.0, "flat": True, "constant_mode": drift})
    c = _check_c(c)
    F, _, wl, wr = _solve(n, c, 1.0, radii, with_g=False)
    return RadialProfile(radii, F, n, meta={"c": c, "reg0_weight": float(wl[1]),
                                             "regpi_weight": float(wr[0])})


def paneitz_radial_green(n: int, radii=None) -> RadialProfile:
    """Green's function G of P = (-Delta + c1)(-Delta + c2) on round S^n.

    G is normalized by G r^{n-4} -> 1 at the pole; the intermediate F is
    returned as ``companion``.
    """
    n = check_dimension(n, 6)
    co = einstein_paneitz_coeffs(n)
    c1, c2 = float(co.c1), float(co.c2)
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if radii[0] <= 0 or radii[-1] > math.pi:
        raise BadInput("radii must lie in (0, pi]")
    F, G, _, _ = _solve(n, c1, c2, radii, with_g=True)
    return RadialProfile(radii, G, n, companion=F, meta={"c1": c1, "c2": c2})


def fit_leading_exponent(profile: RadialProfile, window=(1e-3, 1e-2)) -> AsymptoticFit:
    """Least-squares slope of log|values| against log r over ``window``."""
    lo, hi = float(window[0]), float(window[1])
    r = profile.r_samples
    if lo < r[0] or hi > r[-1] or not lo < hi:
        raise EmptyWindow(f"window [{lo}, {hi}] is not inside the sampled range")
    mask = profile.window(lo, hi)
    if mask.sum() < 10:
        raise EmptyWindow(f"only {int(mask.sum())} samples in the window, need 10")
    x = np.log(r[mask])
    y = np.log(np.abs(profile.values[mask]))
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icpt] - y) ** 2)))
    return AsymptoticFit((lo, hi), float(slope), float(math.exp(icpt)), resid)


def subleading_profile(profile: RadialProfile) -> RadialProfile:
    """G - r^{4-n} on the same radii."""
    r = profile.r_samples
    return RadialProfile(r, profile.values - r ** (4 - profile.n), profile.n)


def exact_sphere_green(r, n: int) -> np.ndarray:
    """(2 sin(r/2))^{4-n}: chordal distance power, the conformal Green's function."""
    return (2.0 * np.sin(np.asarray(r, dtype=float) / 2.0)) ** (4 - n)


_STENCILS = {
    4: (np.array([1, -8, 0, 8, -1]) / 12.0, np.array([-1, 16, -30, 16, -1]) / 12.0),
    6: (np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0,
        np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0),
}


def radial_laplacian_fd(profile_values, r, n: int, order: int = 4) -> np.ndarray:
    """Central finite difference Laplacian of a radial function.

    The grid must be uniform either in r or in log r. With stencil
    half-width k = order // 2, values are returned at r[k:-k].
    """
    if order not in _STENCILS:
        raise BadInput("order must be 4 or 6")
    w1, w2 = _STENCILS[order]
    k = order // 2
    r = np.asarray(r, dtype=float)
    f = np.asarray(profile_values, dtype=float)
    m = len(f) - 2 * k
    if m <= 0:
        raise BadInput("grid too short for the stencil")
    shifted = np.stack([f[j: j + m] for j in range(2 * k + 1)])
    rr = r[k:-k]
    cot = 1.0 / np.tan(rr)
    h = np.diff(r)
    if np.allclose(h, h[0], rtol=1e-9, atol=0):
        return w2 @ shifted / h[0] ** 2 + (n - 1) * cot * (w1 @ shifted) / h[0]
    hx = np.diff(np.log(r))
    if np.allclose(hx, hx[0], rtol=1e-9, atol=0):
        fx, fxx = w1 @ shifted / hx[0], w2 @ shifted / hx[0] ** 2
        return (fxx + fx * ((n - 1) * rr * cot - 1.0)) / (rr * rr)
    raise BadInput("finite differences need a grid uniform in r or in log r")


def operator_residuals(profile: RadialProfile, window=(0.1, math.pi - 0.1), order: int = 6) -> dict:
    """Finite-difference checks of the computed Green's function.

    Reports the composed residual of (-Delta + c1)(-Delta + c2) G scaled by
    max|G| over the profile, and the two second-order stages relative to
    the size of their right-hand sides on the window.
    """
    n = profile.n
    co = einstein_paneitz_coeffs(n)
    c1, c2 = float(co.c1), float(co.c2)
    r, G, F = profile.r_samples, profile.values, profile.companion
    if F is None:
        raise BadInput("profile carries no intermediate function")
    k = order // 2
    inner = r[k:-k]
    mask = (inner >= window[0]) & (inner <= window[1])
    lap_g = radial_laplacian_fd(G, r, n, order)
    stage_g = -lap_g + c2 * G[k:-k] - F[k:-k]
    stage_f = -radial_laplacian_fd(F, r, n, order) + c1 * F[k:-k]
    h = -lap_g + c2 * G[k:-k]
    composed = -radial_laplacian_fd(h, inner, n, order) + c1 * h[k:-k]
    inner_mask = mask[k:-k]
    Fw = F[k:-k][mask]
    return {
        "composed_over_max_G": float(np.max(np.abs(composed[inner_mask])) / np.max(np.abs(G))),
        "stage_G": float(np.max(np.abs(stage_g[mask])) / np.max(np.abs(Fw))),
        "stage_F": float(np.max(np.abs(stage_f[mask])) / np.max(np.abs(c1 * Fw))),
    }


def c1_closed_form(n: int) -> Fraction:
    """Limit of r^{n-2} P(r^{4-n}) on round S^n, r the geodesic distance.

    Expanding (n-1) cot r = (n-1)/r - (n-1) r/3 + ... in both Helmholtz
    factors gives 2(n-4) [c1 + c2 - (n-1)(2n-6)/3].
    """
    co = einstein_paneitz_coeffs(n)
    return 2 * (n - 4) * (co.c1 + co.c2 - Fraction((n - 1) * (2 * n - 6), 3))


def measure_c1(n: int, radii=(4e-3, 2e-3, 1e-3)) -> dict:
    """Measure the leading coefficient of P(r^{4-n}) ~ C1 r^{2-n} near the pole.

    P is applied exactly with Taylor jets in r; the product r^{n-2} P(r^{4-n})
    is then extrapolated to r = 0 assuming an expansion in powers of r^2.
    """
    from .jets import Jet

    n = check_dimension(n, 6)
    co = einstein_paneitz_coeffs(n)
    c1, c2 = float(co.c1), float(co.c2)
    r = np.asarray(radii, dtype=float)
    x = Jet.variable(r, 4)
    s, c = x.sincos()
    cot = c / s

    def helm(f, k):
        ft = f.deriv()
        return (ft.deriv() + cot * ft * (n - 1)) * -1.0 + f * k

    pf = helm(helm(x ** (4 - n), c2), c1)
    vals = pf.value * r ** (n - 2)
    # fit vals = C1 + b r^2 + d r^4
    A = np.vstack([np.ones_like(r), r**2, r**4]).T[:, : len(r)]
    coef = np.linalg.lstsq(A, vals, rcond=None)[0]
    return {"n": n, "C1": float(coef[0]), "samples": vals.tolist(), "radii": r.tolist()}


def write_profile_csv(profile: RadialProfile, path) -> None:
    """Write columns r, G, F."""
    F = profile.companion if profile.companion is not None else np.full_like(profile.values, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "G", "F"])
        for r, g, f in zip(profile.r_samples, profile.values, F):
            w.writerow([repr(float(r)), repr(float(g)), repr(float(f))])
