"""Exact curvature scalars for homogeneous model metrics.

Everything here works with :class:`fractions.Fraction`; no floats are
accepted as eigenvalues. The models are diagonal Schouten spectra and
Riemannian products of Einstein factors, for which the Laplacian of the
scalar curvature vanishes.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

from .exceptions import BadInput, DimensionTooLow, EmptyProduct, UnsupportedOrder

__all__ = [
    "SchoutenSpectrum",
    "EinsteinFactor",
    "CurvatureScalars",
    "PositivityCertificate",
    "as_fraction",
    "q_coefficient_a",
    "paneitz_coefficient_b",
    "sigma_elementary",
    "q_from_schouten",
    "curvature_scalars",
    "product_schouten",
    "q_two_forms",
    "bochner_certificate",
    "split_model_spectrum",
    "split_model_closed_form",
    "split_model_window",
]


def as_fraction(x) -> Fraction:
    """Convert an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are rejected so that rounding can never leak in silently.
    """
    if isinstance(x, bool):
        raise BadInput("booleans are not rationals")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise BadInput(f"cannot parse rational {x!r}") from exc
    raise BadInput(f"expected an exact rational, got {type(x).__name__}")


def q_coefficient_a(n: int) -> Fraction:
    """Coefficient of R^2 when Q is written through R and Ric.

    Q = -Delta R / (2(n-1)) + a_n R^2 - 2 |Ric|^2 / (n-2)^2.
    """
    n = int(n)
    return Fraction(n**3 - 4 * n**2 + 16 * n - 16, 8 * (n - 1) ** 2 * (n - 2) ** 2)


def paneitz_coefficient_b(n: int) -> Fraction:
    """Coefficient of R g in the second order part of the Paneitz operator.

    P u = Delta^2 u - div((b_n R g - 4/(n-2) Ric) du) + (n-4)/2 Q u.
    """
    n = int(n)
    return Fraction(n**2 - 4 * n + 8, 2 * (n - 1) * (n - 2))


@dataclass(frozen=True)
class SchoutenSpectrum:
    """Diagonal Schouten tensor given as (eigenvalue, multiplicity) pairs."""

    entries: tuple

    def __init__(self, entries: Iterable):
        pairs = []
        for item in entries:
            try:
                lam, mult = item
            except (TypeError, ValueError) as exc:
                raise BadInput("entries must be (eigenvalue, multiplicity) pairs") from exc
            if isinstance(mult, bool) or not isinstance(mult, int) or mult < 1:
                raise BadInput(f"multiplicity must be a positive integer, got {mult!r}")
            pairs.append((as_fraction(lam), mult))
        if not pairs:
            raise BadInput("empty spectrum")
        object.__setattr__(self, "entries", tuple(pairs))
        if self.n < 5:
            raise DimensionTooLow(f"total dimension {self.n} < 5")

    @property
    def n(self) -> int:
        return sum(m for _, m in self.entries)

    def eigenvalues(self) -> list[Fraction]:
        """Eigenvalues listed with multiplicity."""
        out = []
        for lam, m in self.entries:
            out.extend([lam] * m)
        return out


@dataclass(frozen=True)
class EinsteinFactor:
    """Einstein factor with ric = kappa (dim - 1) g."""

    dim: int
    einstein_constant: Fraction

    def __post_init__(self):
        if isinstance(self.dim, bool) or not isinstance(self.dim, int) or self.dim < 1:
            raise BadInput(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "einstein_constant", as_fraction(self.einstein_constant))

    @property
    def ricci_eigenvalue(self) -> Fraction:
        return self.einstein_constant * (self.dim - 1)

    @property
    def scalar_curvature(self) -> Fraction:
        return self.einstein_constant * self.dim * (self.dim - 1)


@dataclass(frozen=True)
class CurvatureScalars:
    n: int
    sigma1: Fraction
    sigma2: Fraction
    R: Fraction
    ric_norm_sq: Fraction
    laplacian_R: Fraction
    Q: Fraction


@dataclass(frozen=True)
class PositivityCertificate:
    n: int
    coeff_laplacian_sq: Fraction
    coeff_gradient: Fraction
    coeff_hessian: Fraction
    coeff_zeroth: Fraction
    verdict: bool


def sigma_elementary(spec: SchoutenSpectrum, k: int) -> Fraction:
    """Elementary symmetric function of the Schouten eigenvalues.

    Parameters
    ----------
    spec : SchoutenSpectrum
    k : int
        Order, one of 0, 1, 2.

    Returns
    -------
    Fraction
    """
    if k not in (0, 1, 2):
        raise UnsupportedOrder(f"sigma_{k} is not supported (k must be 0, 1 or 2)")
    if k == 0:
        return Fraction(1)
    s1 = sum((m * lam for lam, m in spec.entries), Fraction(0))
    if k == 1:
        return s1
    sq = sum((m * lam * lam for lam, m in spec.entries), Fraction(0))
    return (s1 * s1 - sq) / 2


def q_from_schouten(spec: SchoutenSpectrum) -> Fraction:
    """Q-curvature of a homogeneous model, Q = (n-4)/2 sigma1^2 + 4 sigma2."""
    n = spec.n
    if n < 5:
        raise DimensionTooLow(f"n = {n} < 5")
    s1 = sigma_elementary(spec, 1)
    return Fraction(n - 4, 2) * s1 * s1 + 4 * sigma_elementary(spec, 2)


def curvature_scalars(spec: SchoutenSpectrum) -> CurvatureScalars:
    """Collect sigma1, sigma2, R, |Ric|^2 and Q of a Schouten spectrum."""
    n = spec.n
    s1 = sigma_elementary(spec, 1)
    s2 = sigma_elementary(spec, 2)
    R = 2 * (n - 1) * s1
    # Ric = (n-2) A + sigma1 g
    ric_sq = sum((m * ((n - 2) * lam + s1) ** 2 for lam, m in spec.entries), Fraction(0))
    return CurvatureScalars(n, s1, s2, R, ric_sq, Fraction(0), q_from_schouten(spec))


def product_schouten(factors: Sequence[EinsteinFactor]) -> SchoutenSpectrum:
    """Schouten spectrum of a Riemannian product of Einstein factors."""
    factors = list(factors)
    if not factors:
        raise EmptyProduct("at least one factor is required")
    n = sum(f.dim for f in factors)
    if n < 5:
        raise DimensionTooLow(f"total dimension {n} < 5")
    r_total = sum((f.scalar_curvature for f in factors), Fraction(0))
    shift = r_total / (2 * (n - 1))
    return SchoutenSpectrum(
        [((f.ricci_eigenvalue - shift) / (n - 2), f.dim) for f in factors]
    )


def q_two_forms(ric_eigenvalues: Sequence, laplacian_R, n: int) -> tuple[Fraction, Fraction]:
    """Q computed through the Schouten spectrum and through the R/Ric form.

    Parameters
    ----------
    ric_eigenvalues : sequence of rationals
        Ricci eigenvalues, length ``n``.
    laplacian_R : rational
        Value of Delta R at the point.
    n : int

    Returns
    -------
    (q_schouten, q_ricci) : tuple of Fraction
    """
    if n < 5:
        raise DimensionTooLow(f"n = {n} < 5")
    ric = [as_fraction(x) for x in ric_eigenvalues]
    if len(ric) != n:
        raise BadInput(f"expected {n} Ricci eigenvalues, got {len(ric)}")
    lap = as_fraction(laplacian_R)
    R = sum(ric, Fraction(0))
    shift = R / (2 * (n - 1))
    spec = SchoutenSpectrum([((rho - shift) / (n - 2), 1) for rho in ric])
    q_a = q_from_schouten(spec) - lap / (2 * (n - 1))
    ric_sq = sum((rho * rho for rho in ric), Fraction(0))
    q_b = -lap / (2 * (n - 1)) + q_coefficient_a(n) * R * R - 2 * ric_sq / (n - 2) ** 2
    return q_a, q_b


def bochner_certificate(n: int, Q, R_sign: int) -> PositivityCertificate:
    """Coefficients of the Bochner lower bound for <L u, u>.

    The verdict is positive when the scalar curvature is positive and Q is
    strictly negative, in which case every coefficient is nonnegative and the
    zeroth order one is strictly positive.
    """
    if n < 6:
        raise DimensionTooLow(f"n = {n} < 6")
    Q = as_fraction(Q)
    c_lap = 1 - Fraction(4, n - 2)
    c_grad = Fraction((n - 2) ** 2 + 4, 2 * (n - 1) * (n - 2))
    c_hess = Fraction(4, n - 2)
    c_zero = -4 * Q
    verdict = bool(R_sign > 0 and Q < 0)
    return PositivityCertificate(n, c_lap, c_grad, c_hess, c_zero, verdict)


def split_model_spectrum(k: int, n: int, eps) -> SchoutenSpectrum:
    """Spectrum {1/2 x k, (-1/2 + eps) x k, 0 x (n - 2k)}."""
    eps = as_fraction(eps)
    if k < 1 or n < 2 * k:
        raise BadInput(f"need 1 <= k and 2k <= n, got k={k}, n={n}")
    entries = [(Fraction(1, 2), k), (Fraction(-1, 2) + eps, k)]
    if n > 2 * k:
        entries.append((Fraction(0), n - 2 * k))
    return SchoutenSpectrum(entries)


def split_model_closed_form(k: int, n: int, eps) -> tuple[Fraction, Fraction]:
    """Closed forms (R, Q) for the split Schouten model."""
    eps = as_fraction(eps)
    R = 2 * (n - 1) * k * eps
    Q = -k - 2 * k * eps**2 + 2 * k * eps + Fraction(n, 2) * k**2 * eps**2
    return R, Q


def split_model_window(k: int, n: int) -> Fraction:
    """Largest eps of a window (0, eps_max] on which R > 0 and Q < 0.

    Q is a quadratic in eps; its maximum over [0, eps_max] sits at an endpoint
    or, when the quadratic is concave, possibly at the vertex. All candidates
    are evaluated exactly. For n >= 5 the endpoint is cross-checked through
    the Schouten spectrum; below that only the closed form is available.
    """
    if k < 1 or n < 2 * k + 1:
        raise BadInput(f"need 1 <= k and n >= 2k + 1, got k={k}, n={n}")
    eps_max = Fraction(1, 2 * n * k)
    c2 = Fraction(n, 2) * k**2 - 2 * k
    cands = [Fraction(0), eps_max]
    if c2 < 0:
        vertex = Fraction(-2 * k) / (2 * c2)
        if 0 < vertex < eps_max:
            cands.append(vertex)
    if max(split_model_closed_form(k, n, e)[1] for e in cands) >= 0:
        raise BadInput("Q is not negative on the window")
    if split_model_closed_form(k, n, eps_max)[0] <= 0:
        raise BadInput("R is not positive at the window endpoint")
    if n >= 5:
        spec_end = split_model_spectrum(k, n, eps_max)
        cs = curvature_scalars(spec_end)
        if (cs.R, cs.Q) != split_model_closed_form(k, n, eps_max):
            raise BadInput("closed form disagrees with the spectrum")
    return eps_max
