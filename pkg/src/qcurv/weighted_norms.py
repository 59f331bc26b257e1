"""Radial weights and discrete weighted Hoelder norms on coordinate charts.

Four weights are provided:

* ``rho_N_inverted`` (rho1) on the inverted chart z of the asymptotically
  flat end: 1 for |z| <= 1, |z| for |z| >= 2, a monotone blend between.
* ``rho_N_normal`` (rho) on the normal chart x near the puncture,
  rho(x) = 1 / rho1(x / |x|^2).
* ``rho_M`` (rho2) on the normal chart u of the other summand,
  rho2(u) = 1 / rho1(u / |u|^2), so rho2 = |u| near the puncture.
* ``glued`` (w) on the u chart of the connected sum with u = a b z:
  a b rho1(z) for |u| <= 2b, rho2(u) for |u| >= 2b.

All sups are taken over sample points and distances are Euclidean in the
chart of the weight, so the results are discrete lower bounds of the
continuum norms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import BadInput, NoAdmissiblePairs, PointOutsideChart

__all__ = [
    "WEIGHT_KINDS",
    "WeightSpec",
    "FieldSamples",
    "WeightedNormResult",
    "smoothstep5",
    "rho1",
    "weight",
    "weighted_sup_norm",
    "weighted_holder_seminorm",
    "weighted_holder_norm",
    "dyadic_shell_points",
]

WEIGHT_KINDS = ("rho_N_inverted", "rho_N_normal", "rho_M", "glued")


@dataclass(frozen=True)
class WeightSpec:
    """Which weight to use; ``a`` and ``b`` are the gluing scales."""

    kind: str
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise BadInput(f"unknown weight kind {self.kind!r}; expected one of {WEIGHT_KINDS}")
        if self.kind == "glued":
            if self.a is None or self.b is None:
                raise BadInput("the glued weight needs both a and b")
            if not (0 < self.a < 1 and 0 < self.b < 0.25):
                raise BadInput("glued weight needs 0 < a < 1 and 0 < b < 1/4")


@dataclass(frozen=True, eq=False)
class FieldSamples:
    """Chart points with derivative data.

    Parameters
    ----------
    points : ndarray, shape (m, dim)
    derivatives : sequence of ndarray
        ``derivatives[i]`` holds the i-th derivative at each point, shape
        (m,) or (m, ...); pointwise magnitudes are Euclidean norms of the
        flattened components.
    """

    points: np.ndarray
    derivatives: tuple

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        if not np.all(np.isfinite(p)):
            raise BadInput("sample points must be finite")
        ders = []
        for d in self.derivatives:
            d = np.asarray(d, dtype=float)
            if d.shape[0] != p.shape[0]:
                raise BadInput("derivative arrays must have one row per point")
            ders.append(d.reshape(p.shape[0], -1))
        if not ders:
            raise BadInput("at least the function values are required")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "derivatives", tuple(ders))

    @property
    def order(self) -> int:
        return len(self.derivatives) - 1


@dataclass(frozen=True)
class WeightedNormResult:
    """A weighted norm with the point where it is attained.

    ``components`` lists the pieces whose sum is ``value``.
    """

    value: float
    argmax_point: np.ndarray
    components: tuple


def smoothstep5(s):
    """Quintic 6s^5 - 15s^4 + 10s^3, clamped to [0, 1]."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s)


def rho1(radius):
    """rho1 as a function of |z|; monotone, 1 on [0, 1], |z| on [2, inf)."""
    s = np.asarray(radius, dtype=float)
    return 1.0 + smoothstep5(s - 1.0) * (s - 1.0) * (s > 1.0)


def _inverted(radius):
    # 1 / rho1(1/|x|); equal to |x| for |x| <= 1/2 and to 1 for |x| >= 1
    r = np.asarray(radius, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / rho1(1.0 / r)


def weight(point, spec: WeightSpec):
    """Evaluate the weight of ``spec`` at chart points.

    Parameters
    ----------
    point : array_like, shape (dim,) or (m, dim)
    spec : WeightSpec

    Returns
    -------
    float or ndarray
        Scalar for a single point.

    Raises
    ------
    PointOutsideChart
        For non-finite coordinates and for the puncture of the normal charts.
    """
    p = np.asarray(point, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if not np.all(np.isfinite(p)):
        raise PointOutsideChart("chart coordinates must be finite")
    r = np.linalg.norm(p, axis=1)
    kind = spec.kind
    if kind == "rho_N_inverted":
        out = rho1(r)
    elif kind in ("rho_N_normal", "rho_M"):
        if np.any(r == 0):
            raise PointOutsideChart("the puncture itself is not in the chart")
        out = _inverted(r)
    else:
        ab = spec.a * spec.b
        neck = r <= 2 * spec.b
        out = np.empty_like(r)
        out[neck] = ab * rho1(r[neck] / ab)
        out[~neck] = _inverted(r[~neck])
    return float(out[0]) if single else out


def _magnitudes(d):
    return np.linalg.norm(d, axis=1)


def weighted_sup_norm(samples: FieldSamples, spec: WeightSpec, delta: float,
                      derivative_order: int = 0) -> WeightedNormResult:
    """Discrete sup of weight^{-(delta - i)} |nabla^i f|."""
    i = int(derivative_order)
    if i > samples.order:
        raise BadInput(f"samples carry derivatives up to order {samples.order}, not {i}")
    w = weight(samples.points, spec)
    vals = w ** (-(delta - i)) * _magnitudes(samples.derivatives[i])
    j = int(np.argmax(vals))
    v = float(vals[j])
    return WeightedNormResult(v, samples.points[j].copy(), (v,))


def _admissible_pairs(points, w):
    """Index pairs (x, y) with 0 < 4 |x - y| <= w(x)."""
    tree = cKDTree(points)
    lists = tree.query_ball_point(points, w / 4.0)
    rows, cols = [], []
    for k, nb in enumerate(lists):
        if nb:
            nb = np.asarray(nb)
            nb = nb[nb != k]
            rows.append(np.full(len(nb), k))
            cols.append(nb)
    if not rows:
        return np.empty(0, int), np.empty(0, int)
    return np.concatenate(rows), np.concatenate(cols)


def weighted_holder_seminorm(samples: FieldSamples, spec: WeightSpec, delta: float,
                             alpha: float, derivative_order: int = 0) -> WeightedNormResult:
    """Discrete weighted Hoelder seminorm of the k-th derivative.

    sup over sample pairs with 0 < 4 d(x, y) <= w(x) of
    w(x)^{-(delta - k) + alpha} |nabla^k f(x) - nabla^k f(y)| / d(x, y)^alpha.

    Raises
    ------
    NoAdmissiblePairs
        If no pair of samples satisfies the distance condition.
    """
    if not 0 < alpha < 1:
        raise BadInput("alpha must lie in (0, 1)")
    k = int(derivative_order)
    if k > samples.order:
        raise BadInput(f"samples carry derivatives up to order {samples.order}, not {k}")
    pts = samples.points
    w = weight(pts, spec)
    rows, cols = _admissible_pairs(pts, w)
    if rows.size == 0:
        raise NoAdmissiblePairs("no sample pair satisfies 0 < 4 d(x, y) <= w(x); refine the sampling")
    d = np.linalg.norm(pts[rows] - pts[cols], axis=1)
    keep = d > 0
    rows, cols, d = rows[keep], cols[keep], d[keep]
    if rows.size == 0:
        raise NoAdmissiblePairs("only coincident sample pairs are admissible")
    f = samples.derivatives[k]
    diff = np.linalg.norm(f[rows] - f[cols], axis=1)
    vals = w[rows] ** (-(delta - k) + alpha) * diff / d**alpha
    j = int(np.argmax(vals))
    v = float(vals[j])
    return WeightedNormResult(v, pts[rows[j]].copy(), (v,))


def weighted_holder_norm(samples: FieldSamples, spec: WeightSpec, delta: float, alpha: float,
                         k: int) -> WeightedNormResult:
    """Full C^{k,alpha}_delta norm: k + 1 weighted sups plus the top seminorm."""
    parts = [weighted_sup_norm(samples, spec, delta, i) for i in range(k + 1)]
    parts.append(weighted_holder_seminorm(samples, spec, delta, alpha, k))
    comps = tuple(p.value for p in parts)
    best = max(parts, key=lambda p: p.value)
    return WeightedNormResult(float(sum(comps)), best.argmax_point, comps)


def dyadic_shell_points(r_min: float, r_max: float, dim: int, per_shell: int = 64,
                        seed: int = 0) -> np.ndarray:
    """Random chart points with ``per_shell`` samples in every dyadic annulus.

    Radii are log-uniform inside each shell [2^j r_min, 2^{j+1} r_min].
    """
    if not 0 < r_min < r_max:
        raise BadInput("need 0 < r_min < r_max")
    rng = np.random.default_rng(seed)
    shells = max(1, int(np.ceil(np.log2(r_max / r_min))))
    lo = r_min * 2.0 ** np.arange(shells)
    hi = np.minimum(2 * lo, r_max)
    u = rng.random((shells, per_shell))
    radii = (lo[:, None] * (hi / lo)[:, None] ** u).ravel()
    dirs = rng.standard_normal((radii.size, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * radii[:, None]
