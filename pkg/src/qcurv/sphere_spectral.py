"""Zonal functions on the round n-sphere in orthonormal Gegenbauer harmonics.

A zonal function depends only on the geodesic distance r from a pole and is
written in the variable t = cos r. Degree-l zonal harmonics are Gegenbauer
polynomials C_l^{(n-1)/2}(t), orthogonal for the weight (1 - t^2)^{(n-2)/2},
which is the surface measure sin^{n-1} r dr after the change of variables.
The basis used here is orthonormal for that weight, so the Laplacian, the
Paneitz operator and the linearized operator are all diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .conformal_core import linearized_eigenvalue, paneitz_eigenvalue
from .exceptions import BadInput, DegenerateOperator, UnderResolved
from .jets import Jet
from .validation import check_dimension, check_field_matrix, check_positive_int

__all__ = [
    "ZonalGrid",
    "SpectralField",
    "zonal_grid",
    "zonal_measure",
    "default_grid",
    "recurrence_coefficients",
    "basis_table",
    "basis_jets",
    "to_spectral",
    "to_physical",
    "field_jets",
    "zonal_harmonic",
    "laplacian_eigenvalues",
    "paneitz_eigenvalues",
    "linearized_eigenvalues",
    "apply_multiplier",
    "apply_laplacian",
    "apply_paneitz",
    "apply_L",
    "apply_L_inverse",
    "chop",
    "multiply",
    "inner_product",
    "even_projection",
    "ZonalHarmonicTransform",
]


@dataclass(frozen=True, eq=False)
class ZonalGrid:
    """Gauss quadrature in t = cos r for the zonal surface measure.

    The weights integrate against (1 - t^2)^{(n-2)/2} dt, so they sum to
    |S^n| / |S^{n-1}|.
    """

    n: int
    node_count: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def total_measure(self) -> float:
        return zonal_measure(self.n)

    @property
    def radii(self) -> np.ndarray:
        return np.arccos(self.nodes)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Zonal field stored by orthonormal harmonic coefficients.

    Parameters
    ----------
    coeffs : array_like
        Coefficient of degree l at index l, for l = 0..L_max.
    n : int
        Sphere dimension.
    even_only : bool
        If set, coefficients of odd degree must vanish.
    """

    coeffs: np.ndarray
    n: int
    even_only: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True)
        if c.ndim != 1 or c.size == 0:
            raise BadInput("coeffs must be a non-empty 1-D array")
        if not np.all(np.isfinite(c)):
            raise BadInput("coeffs must be finite")
        if self.even_only and np.any(c[1::2] != 0.0):
            raise BadInput("even_only field has nonzero odd-degree coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "n", check_dimension(self.n, 2))

    @property
    def L_max(self) -> int:
        return self.coeffs.size - 1

    def _like(self, coeffs, even_only=None):
        return SpectralField(coeffs, self.n, self.even_only if even_only is None else even_only)

    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.n != self.n or other.L_max != self.L_max:
            raise BadInput("fields live on different spheres or truncations")
        return other

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return self._like(self.coeffs + other.coeffs, self.even_only and other.even_only)
        c = self.coeffs.copy()
        c[0] += float(other) * _constant_coefficient(self.n)
        return self._like(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            raise TypeError("pointwise products need a grid; use to_physical")
        return self._like(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def sup_norm(self, grid: ZonalGrid | None = None) -> float:
        """Max of |f| over the quadrature nodes."""
        grid = grid if grid is not None else default_grid(self.n, self.L_max)
        return float(np.max(np.abs(to_physical(self, grid))))

    def coefficient_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def zeros(cls, n: int, L_max: int, even_only: bool = True) -> "SpectralField":
        return cls(np.zeros(L_max + 1), n, even_only)

    @classmethod
    def constant(cls, value: float, n: int, L_max: int) -> "SpectralField":
        c = np.zeros(L_max + 1)
        c[0] = value * _constant_coefficient(n)
        return cls(c, n, True)


@lru_cache(maxsize=None)
def zonal_grid(n: int, node_count: int) -> ZonalGrid:
    """Gauss-Jacobi grid with ``node_count`` nodes for the sphere S^n."""
    n = check_dimension(n, 2)
    node_count = check_positive_int(node_count, "node_count")
    a = (n - 2) / 2
    t, _ = roots_jacobi(node_count, a, a)
    t = np.asarray(t, dtype=float)
    # Newton polish on the orthonormal recurrence, then Christoffel weights,
    # so that the quadrature is orthonormal for exactly the basis used here
    for _ in range(3):
        jets = basis_jets(t, n, node_count, 1)
        pm = jets[node_count]
        t = t - pm.c[0] / pm.c[1]
    tab = basis_table(t, n, node_count - 1)
    w = 1.0 / np.sum(tab * tab, axis=1)
    t.setflags(write=False)
    w.setflags(write=False)
    return ZonalGrid(n, node_count, t, w)


def default_grid(n: int, L_max: int) -> ZonalGrid:
    """Twice oversampled grid used for pointwise nonlinear operations."""
    return zonal_grid(n, 2 * (L_max + 1))


def zonal_measure(n: int) -> float:
    """Integral of (1 - t^2)^{(n-2)/2} over [-1, 1], i.e. |S^n| / |S^{n-1}|."""
    a = (n - 2) / 2
    return float(np.exp(0.5 * np.log(np.pi) + gammaln(a + 1) - gammaln(a + 1.5)))


def _constant_coefficient(n: int) -> float:
    # coefficient of the constant function 1 on the degree-0 basis element
    return float(np.sqrt(zonal_measure(n)))


@lru_cache(maxsize=None)
def recurrence_coefficients(n: int, L_max: int) -> np.ndarray:
    """beta_l of the orthonormal three-term recurrence, l = 0..L_max + 1.

    t p_l = beta_{l+1} p_{l+1} + beta_l p_{l-1}.
    """
    alpha = (n - 1) / 2
    l = np.arange(L_max + 2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        b2 = l * (l + 2 * alpha - 1) / (4 * (l + alpha) * (l + alpha - 1))
    b2[0] = 0.0
    out = np.sqrt(b2)
    out.setflags(write=False)
    return out


def basis_table(t, n: int, L_max: int) -> np.ndarray:
    """Orthonormal zonal basis evaluated at ``t``; shape (len(t), L_max + 1)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    beta = recurrence_coefficients(n, L_max)
    out = np.empty((t.size, L_max + 1))
    out[:, 0] = 1.0 / _constant_coefficient(n)
    if L_max >= 1:
        out[:, 1] = t * out[:, 0] / beta[1]
    for l in range(1, L_max):
        out[:, l + 1] = (t * out[:, l] - beta[l] * out[:, l - 1]) / beta[l + 1]
    return out


def basis_jets(t, n: int, L_max: int, order: int) -> list[Jet]:
    """Taylor jets in t of every basis function, l = 0..L_max."""
    tj = Jet.variable(np.asarray(t, dtype=float), order)
    beta = recurrence_coefficients(n, L_max)
    p0 = Jet(np.zeros_like(tj.c)) + 1.0 / _constant_coefficient(n)
    jets = [p0]
    if L_max >= 1:
        jets.append(tj * p0 / beta[1])
    for l in range(1, L_max):
        jets.append((tj * jets[l] - jets[l - 1] * beta[l]) / beta[l + 1])
    return jets


@lru_cache(maxsize=64)
def _grid_table(n: int, node_count: int, L_max: int) -> np.ndarray:
    grid = zonal_grid(n, node_count)
    tab = basis_table(grid.nodes, n, L_max)
    tab.setflags(write=False)
    return tab


def to_spectral(values, grid: ZonalGrid, L_max: int, even_only: bool = False) -> SpectralField:
    """Project nodal values onto degrees 0..L_max by quadrature.

    Raises
    ------
    UnderResolved
        If the grid has fewer than ``L_max + 1`` nodes.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.node_count,):
        raise BadInput(f"expected {grid.node_count} nodal values, got shape {values.shape}")
    if grid.node_count < L_max + 1:
        raise UnderResolved(f"{grid.node_count} nodes cannot resolve degree {L_max}")
    tab = _grid_table(grid.n, grid.node_count, L_max)
    coeffs = tab.T @ (grid.weights * values)
    if even_only:
        coeffs[1::2] = 0.0
    return SpectralField(coeffs, grid.n, even_only)


def to_physical(f: SpectralField, grid: ZonalGrid) -> np.ndarray:
    """Evaluate a field at the grid nodes."""
    if grid.n != f.n:
        raise BadInput("grid and field dimensions differ")
    if grid.node_count < f.L_max + 1:
        raise UnderResolved(f"{grid.node_count} nodes cannot resolve degree {f.L_max}")
    return _grid_table(grid.n, grid.node_count, f.L_max) @ f.coeffs


def field_jets(f: SpectralField, t, order: int) -> Jet:
    """Taylor jet in t of a field at the points ``t``."""
    jets = basis_jets(t, f.n, f.L_max, order)
    out = jets[0] * f.coeffs[0]
    for l in range(1, f.L_max + 1):
        if f.coeffs[l] != 0.0:
            out = out + jets[l] * f.coeffs[l]
    return out


def zonal_harmonic(l: int, n: int, L_max: int) -> SpectralField:
    """Unit-coefficient zonal harmonic of degree ``l``."""
    if not 0 <= l <= L_max:
        raise BadInput(f"degree {l} outside 0..{L_max}")
    c = np.zeros(L_max + 1)
    c[l] = 1.0
    return SpectralField(c, n, l % 2 == 0)


def _frozen(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def laplacian_eigenvalues(n: int, L_max: int) -> np.ndarray:
    l = np.arange(L_max + 1)
    return _frozen(-(l * (l + n - 1)))


@lru_cache(maxsize=None)
def paneitz_eigenvalues(n: int, L_max: int) -> np.ndarray:
    return _frozen([float(paneitz_eigenvalue(l, n)) for l in range(L_max + 1)])


@lru_cache(maxsize=None)
def linearized_eigenvalues(n: int, L_max: int) -> np.ndarray:
    return _frozen([float(linearized_eigenvalue(l, n)) for l in range(L_max + 1)])


def apply_multiplier(f: SpectralField, mult) -> SpectralField:
    return f._like(f.coeffs * np.asarray(mult))


def apply_laplacian(f: SpectralField) -> SpectralField:
    """Laplace-Beltrami operator (nonpositive convention)."""
    return apply_multiplier(f, laplacian_eigenvalues(f.n, f.L_max))


def apply_paneitz(f: SpectralField) -> SpectralField:
    """Paneitz operator of the round sphere."""
    return apply_multiplier(f, paneitz_eigenvalues(f.n, f.L_max))


def apply_L(f: SpectralField) -> SpectralField:
    """Linearized operator P - (n+4)/2 Q of the round sphere."""
    return apply_multiplier(f, linearized_eigenvalues(f.n, f.L_max))


def apply_L_inverse(f: SpectralField, n: int | None = None, threshold: float = 1e-8) -> SpectralField:
    """Invert the linearized operator degree by degree.

    Every even degree up to L_max counts as represented, plus any odd degree
    carrying a nonzero coefficient.

    Raises
    ------
    DegenerateOperator
        If a represented eigenvalue has modulus below ``threshold``.
    """
    n = f.n if n is None else n
    if n != f.n:
        raise BadInput("dimension mismatch")
    mu = linearized_eigenvalues(n, f.L_max)
    l = np.arange(f.L_max + 1)
    represented = (l % 2 == 0) | (f.coeffs != 0.0)
    small = represented & (np.abs(mu) <= threshold)
    if np.any(small):
        bad = ", ".join(str(int(d)) for d in l[small])
        raise DegenerateOperator(f"linearized operator is degenerate in degree(s) {bad}")
    out = np.zeros_like(f.coeffs)
    out[represented] = f.coeffs[represented] / mu[represented]
    return f._like(out)


def chop(f: SpectralField, tol: float = 1e-14) -> SpectralField:
    """Zero the trailing coefficients that sit below ``tol * max|c|``.

    Quadrature projection of a pointwise product leaves rounding noise of
    order 1e-16 in every coefficient. Fourth order operators multiply degree
    l by roughly l^4, so that noise must be removed before applying them.
    """
    c = f.coeffs.copy()
    big = np.nonzero(np.abs(c) > tol * np.max(np.abs(c)))[0]
    if big.size:
        c[big[-1] + 1 :] = 0.0
    return f._like(c)


def multiply(f: SpectralField, g: SpectralField, grid: ZonalGrid | None = None, tol: float = 1e-14) -> SpectralField:
    """Pointwise product projected back onto the truncation of ``f``."""
    f._check(g)
    grid = grid if grid is not None else default_grid(f.n, f.L_max)
    vals = to_physical(f, grid) * to_physical(g, grid)
    prod = to_spectral(vals, grid, f.L_max, even_only=f.even_only and g.even_only)
    return chop(prod, tol)


def inner_product(f, g, grid: ZonalGrid) -> float:
    """L^2 inner product of nodal values over S^n (up to |S^{n-1}|)."""
    return float(np.sum(grid.weights * np.asarray(f) * np.asarray(g)))


def even_projection(f: SpectralField) -> SpectralField:
    """Antipodally even part of a field."""
    c = f.coeffs.copy()
    c[1::2] = 0.0
    return SpectralField(c, f.n, True)


class ZonalHarmonicTransform(TransformerMixin, BaseEstimator):
    """Nodal values to zonal harmonic coefficients, sklearn style.

    Each row of ``X`` holds the values of one zonal field at the quadrature
    nodes exposed as ``nodes_`` after :meth:`fit`.

    Parameters
    ----------
    n : int, default=6
        Sphere dimension.
    lmax : int, default=64
        Truncation degree.
    oversample : int, default=2
        Nodes per resolved degree.
    even_only : bool, default=False
        Zero the odd-degree coefficients after projection.

    Examples
    --------
    >>> tr = ZonalHarmonicTransform(n=6, lmax=8).fit()
    >>> coeffs = tr.transform(np.ones((1, tr.nodes_.size)))
    >>> int(np.argmax(np.abs(coeffs[0])))
    0
    """

    def __init__(self, n=6, lmax=64, oversample=2, even_only=False):
        self.n = n
        self.lmax = lmax
        self.oversample = oversample
        self.even_only = even_only

    def fit(self, X=None, y=None):
        check_dimension(self.n, 2)
        check_positive_int(self.lmax + 1, "lmax + 1")
        check_positive_int(self.oversample, "oversample")
        self.grid_ = zonal_grid(self.n, self.oversample * (self.lmax + 1))
        self.nodes_ = np.asarray(self.grid_.nodes)
        self.weights_ = np.asarray(self.grid_.weights)
        self.n_features_in_ = self.grid_.node_count
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_field_matrix(X, self.n_features_in_)
        return np.vstack(
            [to_spectral(row, self.grid_, self.lmax, self.even_only).coeffs for row in X]
        )

    def inverse_transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_field_matrix(X, self.lmax + 1)
        return np.vstack([to_physical(SpectralField(row, self.n), self.grid_) for row in X])
