"""Approximate metric on a connected sum and its curvature by finite differences.

The asymptotically flat end (N, g_N) is written in inverted normal
coordinates z and the other summand (M, g_2) in normal coordinates u near
the gluing point. With u = a b z the metric a^2 b^2 g_N reads
|du|^2 + eta1(u / (ab)), and on the annulus b <= |u| <= 4b it is blended
with g_2 = |du|^2 + eta2(u) by a radial cutoff.

Curvature is computed from sampled metric components with fourth-order
central differences: Christoffel symbols and Ricci from first and second
derivatives of g, and the Laplacian of R by a second nested stencil.
Samplers return g - delta so that the identity never enters a difference.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .conformal_core import einstein_paneitz_coeffs
from .exact_models import q_coefficient_a
from .exceptions import BadInput, InsideUnitBall, StencilOutOfRegion
from .validation import check_points
from .weighted_norms import FieldSamples, WeightSpec, weighted_sup_norm

__all__ = [
    "GluingParams",
    "NeckMetric",
    "MetricSample",
    "Cutoffs",
    "CurvatureFD",
    "SweepResult",
    "smoothstep9",
    "theta1",
    "cutoffs",
    "round_curvature_tensor",
    "check_curvature_tensor",
    "g_N_inverted",
    "approximate_metric",
    "space_form_eta",
    "MetricSampler",
    "FlatSampler",
    "SpaceFormSampler",
    "ProductSampler",
    "ConformallyFlatSampler",
    "InvertedNeckSampler",
    "ApproximateMetricSampler",
    "fd_curvature",
    "fd_metric_derivatives",
    "neck_q_tail",
    "scaling_sweep",
]


# --------------------------------------------------------------------------
# parameters and cutoffs


@dataclass(frozen=True)
class GluingParams:
    """Scales of the gluing.

    Parameters
    ----------
    b : float
        Inner radius of the gluing annulus, 0 < b < 1/4.
    a : float, optional
        Neck scale; forced to b**4 when ``coupling`` is on.
    lam : float, optional
        Sharpness of the beta cutoffs; ``c / |log b|`` by default.
    c : float
    coupling : bool
    """

    b: float
    a: float | None = None
    lam: float | None = None
    c: float = 1.0
    coupling: bool = True

    def __post_init__(self):
        b = float(self.b)
        if not 0 < b < 0.25:
            raise BadInput(f"b must lie in (0, 1/4), got {b}")
        a = self.a
        if self.coupling:
            if a is not None and not math.isclose(a, b**4, rel_tol=1e-12):
                raise BadInput("coupling requires a = b**4")
            a = b**4
        elif a is None or not a > 0:
            raise BadInput("a must be positive when coupling is off")
        if not self.c > 0:
            raise BadInput("c must be positive")
        lam = self.c / abs(math.log(b)) if self.lam is None else float(self.lam)
        if not lam > 0:
            raise BadInput("lambda must be positive")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "lam", lam)

    @property
    def ab(self) -> float:
        return self.a * self.b


@dataclass(frozen=True)
class Cutoffs:
    theta1: np.ndarray
    theta2: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray


def smoothstep9(s):
    """Degree 9 smoothstep: C^4 at both ends, monotone on [0, 1]."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**5 * (126 + s * (-420 + s * (540 + s * (-315 + 70 * s))))


def theta1(t):
    """1 for t <= 1, 0 for t >= 4, C^4 blend in log t between."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        s = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)) / math.log(4.0), 0.0)
    return 1.0 - smoothstep9(s)


def cutoffs(t, params: GluingParams | None = None) -> Cutoffs:
    """All cutoff values at radius |u| = t b.

    gamma1 = theta1(t), gamma2 = theta2(t), beta1 = theta1((t/4)^lam) and
    beta2 = theta2(4 t^lam). Without ``params`` the betas use lam = 1/log(4).
    """
    t = np.asarray(t, dtype=float)
    lam = params.lam if params is not None else 1.0 / math.log(4.0)
    th1 = theta1(t)
    th2 = 1.0 - th1
    tp = np.where(t > 0, t, 0.0)
    b1 = theta1((tp / 4.0) ** lam)
    b2 = 1.0 - theta1(4.0 * tp**lam)
    return Cutoffs(th1, th2, b1, b2, th1, th2)


# --------------------------------------------------------------------------
# curvature data


def round_curvature_tensor(n: int, kappa: float = 1.0) -> np.ndarray:
    """R_{ikjl} = kappa (delta_ij delta_kl - delta_il delta_kj).

    With this index order the normal-coordinate expansion reads
    g_ij = delta_ij - (1/3) R_{ikjl} x^k x^l + O(|x|^3).
    """
    d = np.eye(n)
    return kappa * (np.einsum("ij,kl->ikjl", d, d) - np.einsum("il,kj->ikjl", d, d))


def check_curvature_tensor(R, atol: float = 1e-12) -> np.ndarray:
    """Validate the algebraic symmetries of R_{ikjl} and return it as an array."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 4 or len(set(R.shape)) != 1:
        raise BadInput("curvature tensor must have shape (n, n, n, n)")
    checks = {
        "antisymmetry in the first pair": R + R.transpose(1, 0, 2, 3),
        "antisymmetry in the last pair": R + R.transpose(0, 1, 3, 2),
        "pair symmetry": R - R.transpose(2, 3, 0, 1),
        "first Bianchi identity": R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2),
    }
    for name, defect in checks.items():
        if np.max(np.abs(defect)) > atol:
            raise BadInput(f"curvature tensor violates {name}")
    return R


def _space_form_kappa(R) -> float | None:
    n = R.shape[0]
    base = round_curvature_tensor(n)
    k = float(R[0, 1, 0, 1]) if n > 1 else 0.0
    return k if np.allclose(R, k * base, atol=1e-14) else None


@dataclass(frozen=True, eq=False)
class NeckMetric:
    """Curvature data at the two gluing points plus the gluing scales.

    ``g2_exact`` selects the exact space-form metric for g_2 when
    ``curvature_at_q`` is a constant curvature tensor; otherwise g_2 is the
    truncated normal-coordinate expansion.
    """

    curvature_at_p: np.ndarray
    curvature_at_q: np.ndarray
    mass_coefficient: float
    params: GluingParams
    g2_exact: bool = True

    def __post_init__(self):
        Rp = check_curvature_tensor(self.curvature_at_p)
        Rq = check_curvature_tensor(self.curvature_at_q)
        if Rp.shape != Rq.shape:
            raise BadInput("curvature tensors at p and q differ in dimension")
        object.__setattr__(self, "curvature_at_p", Rp)
        object.__setattr__(self, "curvature_at_q", Rq)
        object.__setattr__(self, "mass_coefficient", float(self.mass_coefficient))

    @property
    def n(self) -> int:
        return self.curvature_at_p.shape[0]

    @property
    def kappa_p(self):
        return _space_form_kappa(self.curvature_at_p)

    @property
    def kappa_q(self):
        return _space_form_kappa(self.curvature_at_q) if self.g2_exact else None

    @property
    def nu(self) -> float:
        """Q-curvature of g_2 at q when g_2 is an exact space form."""
        k = self.kappa_q
        if k is None:
            raise BadInput("nu is only available for an exact space-form g_2")
        return float(einstein_paneitz_coeffs(self.n).q_value) * k * k

    @classmethod
    def default(cls, n: int = 6, b: float = 2.0**-5, C: float = 1.0) -> "NeckMetric":
        R = round_curvature_tensor(n)
        return cls(R, R.copy(), C, GluingParams(b))

    def with_b(self, b: float) -> "NeckMetric":
        p = self.params
        a = None if p.coupling else p.a
        lam = None if p.lam == p.c / abs(math.log(p.b)) else p.lam
        return replace(self, params=GluingParams(b, a, lam, p.c, p.coupling))


@dataclass(frozen=True, eq=False)
class MetricSample:
    """Metric components at chart points, shape (m, n, n)."""

    point: np.ndarray
    g: np.ndarray

    def min_eigenvalue(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.g)[..., 0]


# --------------------------------------------------------------------------
# metric branches (all return g - delta)


def _curv_quadratic(R, x, kappa):
    """R_{pkql} x^k x^l for each row of x."""
    if kappa is not None:
        r2 = np.einsum("mi,mi->m", x, x)
        n = x.shape[1]
        return kappa * (r2[:, None, None] * np.eye(n) - np.einsum("mp,mq->mpq", x, x))
    return np.einsum("pkql,mk,ml->mpq", R, x, x)


def _eta_N(z, neck: NeckMetric):
    """g_N - delta in inverted coordinates, exactly as the displayed expansion."""
    r2 = np.einsum("mi,mi->m", z, z)
    r = np.sqrt(r2)
    n = z.shape[1]
    R = neck.curvature_at_p
    kp = neck.kappa_p
    eta = (neck.mass_coefficient / r)[:, None, None] * np.eye(n)
    eta -= _curv_quadratic(R, z, kp) / (3.0 * r2**2)[:, None, None]
    # the two quartic terms vanish identically for algebraic curvature tensors;
    # they are kept to mirror the expansion term by term
    if kp is None:
        t3 = np.einsum("pkjl,mk,ml,mj,mq->mpq", R, z, z, z, z) / r2[:, None, None] ** 3
        t4 = np.einsum("ikjl,mk,ml,mi,mj,mp,mq->mpq", R, z, z, z, z, z, z) / r2[:, None, None] ** 4
        eta += (4.0 / 3.0) * (t3 - t4)
    return eta


def _sinc_sq_coeffs(terms=10):
    # (sin y / y)^2 = sum_k (-1)^k 2^{2k+1} y^{2k} / (2k+2)!
    return np.array([(-1) ** k * 2.0 ** (2 * k + 1) / math.factorial(2 * k + 2) for k in range(terms)])


_SINC_SQ = _sinc_sq_coeffs()


def _space_form_ratio(r2, kappa):
    """(q, q / r^2) with q = (s_kappa(r) / r)^2 - 1."""
    Y = kappa * r2
    out_q = np.empty_like(r2)
    out_qr = np.empty_like(r2)
    small = np.abs(Y) < 0.1
    if np.any(small):
        Ys = Y[small]
        poly = np.polynomial.polynomial.polyval(Ys, _SINC_SQ[1:])
        out_qr[small] = kappa * poly
        out_q[small] = Ys * poly
    big = ~small
    if np.any(big):
        r = np.sqrt(r2[big])
        sk = math.sqrt(abs(kappa))
        s = np.sin(sk * r) if kappa > 0 else np.sinh(sk * r)
        q = (s / (sk * r)) ** 2 - 1.0
        out_q[big] = q
        out_qr[big] = q / r2[big]
    return out_q, out_qr


def space_form_eta(x, kappa: float) -> np.ndarray:
    """g - delta of the constant curvature kappa metric in normal coordinates.

    g = x^ x^ + (s_kappa(r)/r)^2 (delta - x^ x^) with s_kappa = sin(sqrt(kappa) r)/sqrt(kappa).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape
    if kappa == 0:
        return np.zeros((m, n, n))
    r2 = np.einsum("mi,mi->m", x, x)
    q, qr = _space_form_ratio(r2, kappa)
    return q[:, None, None] * np.eye(n) - qr[:, None, None] * np.einsum("mp,mq->mpq", x, x)


def _eta_2(u, neck: NeckMetric):
    k = neck.kappa_q
    if k is not None:
        return space_form_eta(u, k)
    return -_curv_quadratic(neck.curvature_at_q, u, None) / 3.0


def _eta_glued(u, neck: NeckMetric):
    p = neck.params
    r = np.linalg.norm(u, axis=1)
    t = r / p.b
    eta = np.zeros((u.shape[0], u.shape[1], u.shape[1]))
    th = theta1(t)
    inner = th > 0
    outer = th < 1
    if np.any(inner):
        eta[inner] += th[inner, None, None] * _eta_N(u[inner] / p.ab, neck)
    if np.any(outer):
        eta[outer] += (1 - th[outer])[:, None, None] * _eta_2(u[outer], neck)
    return eta


def g_N_inverted(z, neck: NeckMetric) -> np.ndarray:
    """Components of g_N in inverted normal coordinates, |z| >= 1.

    Returns shape (n, n) for a single point and (m, n, n) otherwise.
    """
    zz = np.asarray(z, dtype=float)
    single = zz.ndim == 1
    zz = check_points(zz, neck.n)
    if np.any(np.linalg.norm(zz, axis=1) < 1.0):
        raise InsideUnitBall("the expansion of g_N is only used for |z| >= 1")
    g = np.eye(neck.n) + _eta_N(zz, neck)
    return g[0] if single else g


def approximate_metric(u, neck: NeckMetric) -> MetricSample:
    """g_{a,b} at points u of the connected sum chart.

    For |u| >= 4b this is g_2, for |u| <= b it is a^2 b^2 g_N written in u
    (components delta + eta1(u / ab)), and in between the blend
    delta + theta1(|u|/b) eta1(u / ab) + theta2(|u|/b) eta2(u).
    """
    uu = check_points(u, neck.n)
    r = np.linalg.norm(uu, axis=1)
    if np.any(r < neck.params.ab):
        raise InsideUnitBall("points with |z| < 1 lie outside the neck chart")
    return MetricSample(uu, np.eye(neck.n) + _eta_glued(uu, neck))


# --------------------------------------------------------------------------
# samplers


class MetricSampler:
    """Callable returning g - delta at an (m, dim) array of points."""

    dim: int

    def __call__(self, pts) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def contains(self, pts) -> np.ndarray:
        return np.ones(len(pts), dtype=bool)


class FlatSampler(MetricSampler):
    def __init__(self, dim: int):
        self.dim = dim

    def __call__(self, pts):
        return np.zeros((len(pts), self.dim, self.dim))


class SpaceFormSampler(MetricSampler):
    """Constant sectional curvature ``kappa`` in normal coordinates."""

    def __init__(self, dim: int, kappa: float = 1.0):
        self.dim, self.kappa = dim, float(kappa)

    def __call__(self, pts):
        return space_form_eta(pts, self.kappa)

    def contains(self, pts):
        if self.kappa <= 0:
            return np.ones(len(pts), dtype=bool)
        return np.linalg.norm(pts, axis=1) < math.pi / math.sqrt(self.kappa)


class ProductSampler(MetricSampler):
    """Riemannian product; coordinates are concatenated, metric block diagonal."""

    def __init__(self, factors):
        self.factors = list(factors)
        self.dim = sum(f.dim for f in self.factors)

    def __call__(self, pts):
        out = np.zeros((len(pts), self.dim, self.dim))
        i = 0
        for f in self.factors:
            j = i + f.dim
            out[:, i:j, i:j] = f(pts[:, i:j])
            i = j
        return out

    def contains(self, pts):
        ok = np.ones(len(pts), dtype=bool)
        i = 0
        for f in self.factors:
            ok &= f.contains(pts[:, i: i + f.dim])
            i += f.dim
        return ok


class ConformallyFlatSampler(MetricSampler):
    """e^{2w} delta with w = A exp(-|x|^2 / (2 s^2)); scalar curvature known exactly."""

    def __init__(self, dim: int, amplitude: float = 0.1, width: float = 1.0):
        self.dim, self.A, self.s = dim, float(amplitude), float(width)

    def _w(self, pts):
        r2 = np.einsum("mi,mi->m", pts, pts)
        return self.A * np.exp(-r2 / (2 * self.s**2)), r2

    def __call__(self, pts):
        w, _ = self._w(pts)
        return np.expm1(2 * w)[:, None, None] * np.eye(self.dim)

    def exact_scalar_curvature(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        n, s2 = self.dim, self.s**2
        w, r2 = self._w(pts)
        lap = w * (r2 / s2**2 - n / s2)
        grad2 = w * w * r2 / s2**2
        return -np.exp(-2 * w) * (2 * (n - 1) * lap + (n - 2) * (n - 1) * grad2)


class InvertedNeckSampler(MetricSampler):
    """g_N - delta in inverted coordinates; defined for |z| >= 1."""

    def __init__(self, neck: NeckMetric):
        self.neck, self.dim = neck, neck.n

    def __call__(self, pts):
        return _eta_N(pts, self.neck)

    def contains(self, pts):
        return np.linalg.norm(pts, axis=1) >= 1.0


class ApproximateMetricSampler(MetricSampler):
    """g_{a,b} - delta in the u chart; defined for ab <= |u| <= 1."""

    def __init__(self, neck: NeckMetric):
        self.neck, self.dim = neck, neck.n

    def __call__(self, pts):
        return _eta_glued(pts, self.neck)

    def contains(self, pts):
        r = np.linalg.norm(pts, axis=1)
        return (r >= self.neck.params.ab) & (r <= 1.0)


# --------------------------------------------------------------------------
# finite differences

_W1 = {-2: 1 / 12, -1: -8 / 12, 1: 8 / 12, 2: -1 / 12}
_W2 = {-2: -1 / 12, -1: 16 / 12, 0: -30 / 12, 1: 16 / 12, 2: -1 / 12}


@lru_cache(maxsize=None)
def _stencil(n: int):
    """Offsets (K, n) plus weight matrices for first and second derivatives.

    First derivatives use the 4-point central stencil, pure second
    derivatives the 5-point one and mixed ones the 16-point product of
    first-derivative stencils; all are fourth-order accurate.
    """
    offsets = [np.zeros(n)]
    index = {(): 0}

    def add(key, vec):
        index[key] = len(offsets)
        offsets.append(vec)

    for i in range(n):
        for a in (-2, -1, 1, 2):
            v = np.zeros(n)
            v[i] = a
            add((i, a), v)
    for i in range(n):
        for j in range(i + 1, n):
            for a in (-2, -1, 1, 2):
                for b in (-2, -1, 1, 2):
                    v = np.zeros(n)
                    v[i], v[j] = a, b
                    add((i, a, j, b), v)
    K = len(offsets)
    D1 = np.zeros((n, K))
    D2 = np.zeros((n, n, K))
    for i in range(n):
        for a, w in _W1.items():
            D1[i, index[(i, a)]] += w
        for a, w in _W2.items():
            D2[i, i, index[() if a == 0 else (i, a)]] += w
        for j in range(i + 1, n):
            for a, wa in _W1.items():
                for b, wb in _W1.items():
                    D2[i, j, index[(i, a, j, b)]] += wa * wb
            D2[j, i] = D2[i, j]
    return np.array(offsets), D1, D2


def _ricci_from_samples(eta, h, n):
    """Metric, inverse, Christoffel symbols and Ricci at the stencil centres.

    ``eta`` has shape (M, K, n, n): g - delta on the stencil around M centres.
    """
    _, D1, D2 = _stencil(n)
    g = np.eye(n) + eta[:, 0]
    dg = np.einsum("aK,mKij->maij", D1, eta) / h
    ddg = np.einsum("abK,mKij->mabij", D2, eta) / (h * h)
    ginv = np.linalg.inv(g)
    gl = 0.5 * (np.einsum("mijl->mlij", dg) + np.einsum("mjil->mlij", dg) - dg)
    gam = np.einsum("mkl,mlij->mkij", ginv, gl)
    dgl = 0.5 * (np.einsum("maijl->malij", ddg) + np.einsum("majil->malij", ddg) - ddg)
    dginv = -np.einsum("mkp,mapq,mql->makl", ginv, dg, ginv)
    dgam = np.einsum("makl,mlij->makij", dginv, gl) + np.einsum("mkl,malij->makij", ginv, dgl)
    ric = (
        np.einsum("mkkij->mij", dgam)
        - np.einsum("mjkik->mij", dgam)
        + np.einsum("mkkl,mlij->mij", gam, gam)
        - np.einsum("mkjl,mlik->mij", gam, gam)
    )
    return g, ginv, gam, ric


@dataclass(frozen=True)
class CurvatureFD:
    R: float
    Ric: np.ndarray
    ric_norm_sq: float
    lap_R: float
    Q: float


def _default_step(point):
    r = float(np.linalg.norm(point))
    return r / 64 if r > 0 else 1e-2


def fd_curvature(sampler: MetricSampler, point, h: float | None = None) -> CurvatureFD:
    """Scalar curvature, Ricci, Delta R and Q at one point by finite differences.

    Parameters
    ----------
    sampler : MetricSampler
        Returns g - delta at arrays of points.
    point : array_like, shape (n,)
    h : float, optional
        Step; |point| / 64 by default. The nested stencil reaches 4h.

    Raises
    ------
    StencilOutOfRegion
        When the sampler declares a stencil point outside its region.
    """
    x = np.asarray(point, dtype=float).ravel()
    n = x.size
    if n != sampler.dim:
        raise BadInput(f"point has dimension {n}, sampler {sampler.dim}")
    h = _default_step(x) if h is None else float(h)
    if not h > 0:
        raise BadInput("step must be positive")
    O, D1, D2 = _stencil(n)
    K = len(O)
    pts = x + h * (O[:, None, :] + O[None, :, :])
    flat = pts.reshape(-1, n)
    if not np.all(sampler.contains(flat)):
        raise StencilOutOfRegion(f"stencil of radius {4 * h:.3e} around {x} leaves the sampler region")
    eta = sampler(flat).reshape(K, K, n, n)
    g, ginv, gam, ric = _ricci_from_samples(eta, h, n)
    R = np.einsum("mij,mij->m", ginv, ric)
    dR = D1 @ R / h
    ddR = np.einsum("abK,K->ab", D2, R) / (h * h)
    lap = float(np.einsum("ij,ij->", ginv[0], ddR - np.einsum("kij,k->ij", gam[0], dR)))
    Ric0 = ric[0]
    ric_up = ginv[0] @ Ric0 @ ginv[0]
    ric_sq = float(np.einsum("ij,ij->", ric_up, Ric0))
    R0 = float(R[0])
    a_n = float(q_coefficient_a(n))
    Q = -lap / (2 * (n - 1)) + a_n * R0 * R0 - 2 * ric_sq / (n - 2) ** 2
    return CurvatureFD(R0, Ric0, ric_sq, lap, Q)


def fd_metric_derivatives(sampler: MetricSampler, point, h: float | None = None):
    """Frobenius norms of the first and second coordinate derivatives of g - delta."""
    x = np.asarray(point, dtype=float).ravel()
    n = x.size
    h = _default_step(x) if h is None else float(h)
    O, D1, D2 = _stencil(n)
    pts = x + h * O
    if not np.all(sampler.contains(pts)):
        raise StencilOutOfRegion("derivative stencil leaves the sampler region")
    eta = sampler(pts)
    d1 = np.einsum("aK,Kij->aij", D1, eta) / h
    d2 = np.einsum("abK,Kij->abij", D2, eta) / (h * h)
    return float(np.sqrt(np.sum(d1**2))), float(np.sqrt(np.sum(d2**2)))


# --------------------------------------------------------------------------
# sweeps


def neck_q_tail(neck: NeckMetric, radii=None) -> dict:
    """Q of the truncated g_N along a ray, with the fitted power law.

    The truncated expansion is not exactly Q-flat; its Q decays like a
    power of |z| that is reported rather than asserted.
    """
    radii = np.geomspace(2.0, 64.0, 6) if radii is None else np.asarray(radii, dtype=float)
    s = InvertedNeckSampler(neck)
    e = np.eye(neck.n)[0]
    q = np.array([fd_curvature(s, r * e).Q for r in radii])
    slope, icpt = np.polyfit(np.log(radii), np.log(np.abs(q)), 1)
    return {"radii": radii.tolist(), "Q": q.tolist(), "slope": float(slope),
            "coefficient": float(np.exp(icpt)), "max_abs_Q": float(np.max(np.abs(q)))}


@dataclass
class SweepResult:
    """Per-b measurements and fitted log-log slopes."""

    n: int
    delta: float
    b_list: list
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    tolerance: float = 0.3

    @property
    def passed(self) -> dict:
        return {k: abs(self.slopes[k] - v) <= self.tolerance for k, v in self.expected.items()}

    def csv_rows(self):
        return [(r["b"], r["quantity"], r["value"]) for r in self.rows]

    def summary(self) -> dict:
        return {
            "n": self.n,
            "delta": self.delta,
            "b_list": list(self.b_list),
            "slopes": dict(self.slopes),
            "expected": dict(self.expected),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _measure_b(neck: NeckMetric, delta: float, per_region: int) -> dict:
    p = neck.params
    n = neck.n
    e = np.eye(n)[0]
    nu = neck.nu
    glued = ApproximateMetricSampler(neck)
    inv = InvertedNeckSampler(neck)
    ts = np.geomspace(1.0, 4.0, per_region)
    d1 = d2 = qmax = 0.0
    pts, vals = [], []
    for t in ts:
        u = t * p.b * e
        a, bb = fd_metric_derivatives(glued, u)
        d1, d2 = max(d1, a), max(d2, bb)
        q = fd_curvature(glued, u).Q
        qmax = max(qmax, abs(q))
        pts.append(u)
        vals.append(q - nu)
    # neck: evaluate in z and rescale Q by (ab)^{-4}
    for zr in np.geomspace(1.2, 0.9 / p.a, per_region // 2):
        q = fd_curvature(inv, zr * e).Q / p.ab**4
        pts.append(zr * p.ab * e)
        vals.append(q - nu)
    for ur in np.geomspace(5.0 * p.b, 0.5, per_region // 2):
        q = fd_curvature(glued, ur * e).Q
        pts.append(ur * e)
        vals.append(q - nu)
    spec = WeightSpec("glued", p.a, p.b)
    res = weighted_sup_norm(FieldSamples(np.array(pts), (np.array(vals),)), spec, delta - 4, 0)
    return {"dphi": d1, "d2phi": d2, "sup_Q_annulus": qmax, "weighted_Q_minus_nu": res.value,
            "argmax_radius": float(np.linalg.norm(res.argmax_point))}


def scaling_sweep(neck: NeckMetric | None = None, b_list=None, delta: float = -0.5,
                  per_region: int = 24, max_workers: int | None = None) -> SweepResult:
    """Measure how the glued metric's estimates scale with b.

    For each b (with a = b^4) records sup |d phi|, sup |d^2 phi| and sup |Q|
    over the annulus b <= |u| <= 4b, and the weighted norm of Q - nu with
    weight exponent delta - 4. The data are rotation invariant so samples
    lie on one ray.
    """
    neck = NeckMetric.default() if neck is None else neck
    b_list = [2.0**-k for k in range(5, 10)] if b_list is None else [float(b) for b in b_list]
    if len(b_list) < 2:
        raise BadInput("a sweep needs at least two values of b")
    if max_workers is None:
        max_workers = int(os.environ.get("QCURV_THREADS", "1") or 1)
    necks = [neck.with_b(b) for b in b_list]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            meas = list(ex.map(lambda nk: _measure_b(nk, delta, per_region), necks))
    else:
        meas = [_measure_b(nk, delta, per_region) for nk in necks]
    out = SweepResult(neck.n, float(delta), b_list)
    for b, m in zip(b_list, meas):
        for k, v in m.items():
            out.rows.append({"b": b, "quantity": k, "value": v})
    lb = np.log(b_list)
    for k in ("dphi", "d2phi", "sup_Q_annulus", "weighted_Q_minus_nu"):
        y = np.log([m[k] for m in meas])
        out.slopes[k] = float(np.polyfit(lb, y, 1)[0])
    out.expected = {"dphi": 1.0, "sup_Q_annulus": -2.0, "weighted_Q_minus_nu": 2.0 - delta}
    return out
