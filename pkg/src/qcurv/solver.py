"""Fixed-point solver for constant Q-curvature on the zonal sphere venue.

The background metric is g = (1 + f)^{4/(n-4)} g_round with f an even zonal
field. We look for phi such that (1 + f)(1 + phi) has constant Q-curvature
nu, by iterating

    T[phi] = -L^{-1}[N_g[1] + q[phi]],   q[phi] = N_g[1 + phi] - N_g[1] - L phi,

where L is the linearized operator of the round sphere, inverted exactly in
the harmonic basis. Algebraically T[phi] = phi - L^{-1} N_g[1 + phi].
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import sphere_spectral as ss
from .conformal_core import (
    NonlinearMapSpec,
    critical_exponent,
    einstein_paneitz_coeffs,
    nonlinear_map,
)
from .exceptions import BadInput, BallExit, NotContracting
from .validation import check_dimension, check_positive_int, check_positive_real

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "IterationTrace",
    "Solution",
    "VerificationReport",
    "background_map",
    "apply_T",
    "iterate",
    "verify_solution",
    "degree_two_background",
    "ConstantQSolver",
]


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the fixed-point iteration.

    ``nu`` defaults to the Q-curvature of the round sphere.
    """

    n: int = 6
    nu: float | None = None
    L_max: int = 64
    max_iter: int = 50
    residual_tol: float = 1e-9
    ball_radius: float = 0.1
    min_eigen_threshold: float = 1e-8

    def __post_init__(self):
        n = check_dimension(self.n, 6)
        object.__setattr__(self, "n", n)
        if self.nu is None:
            object.__setattr__(self, "nu", float(einstein_paneitz_coeffs(n).q_value))
        check_positive_int(self.L_max, "L_max")
        if isinstance(self.max_iter, bool) or int(self.max_iter) < 0:
            raise BadInput("max_iter must be a nonnegative integer")
        check_positive_real(self.residual_tol, "residual_tol")
        check_positive_real(self.ball_radius, "ball_radius")
        check_positive_real(self.min_eigen_threshold, "min_eigen_threshold")

    @property
    def map_spec(self) -> NonlinearMapSpec:
        return NonlinearMapSpec(self.n, self.nu)

    @property
    def grid(self):
        return ss.default_grid(self.n, self.L_max)


@dataclass
class IterationTrace:
    """Per-iteration diagnostics, appended as the iteration runs.

    ``ratio[k]`` is update[k] / update[k-1] and is None when undefined.
    """

    residual: list = field(default_factory=list)
    update: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    min_one_plus_phi: list = field(default_factory=list)
    min_u: list = field(default_factory=list)

    def __len__(self):
        return len(self.residual)

    def rows(self) -> list[dict]:
        return [
            {
                "iteration": k,
                "residual": self.residual[k],
                "update": self.update[k],
                "ratio": self.ratio[k],
                "min_one_plus_phi": self.min_one_plus_phi[k],
                "min_u": self.min_u[k],
            }
            for k in range(len(self))
        ]

    def write_csv(self, path) -> None:
        """Columns iteration, residual, ratio, min_u; empty cells for undefined ratios."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "residual", "ratio", "min_u"])
            for row in self.rows():
                ratio = "" if row["ratio"] is None else repr(row["ratio"])
                w.writerow([row["iteration"], repr(row["residual"]), ratio, repr(row["min_u"])])

    def max_ratio(self) -> float:
        vals = [r for r in self.ratio if r is not None]
        return max(vals) if vals else 0.0


@dataclass(frozen=True)
class Solution:
    phi: ss.SpectralField
    background_f: ss.SpectralField
    u: ss.SpectralField
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class VerificationReport:
    sup_q_deviation: float
    min_u: float
    residual: float
    residual_above_tolerance: bool
    passed: bool


def _one(config_or_field):
    f = config_or_field
    return ss.SpectralField.constant(1.0, f.n, f.L_max)


def _check_field(phi, config: SolverConfig, name="phi"):
    if not isinstance(phi, ss.SpectralField):
        raise BadInput(f"{name} must be a SpectralField")
    if phi.n != config.n or phi.L_max != config.L_max:
        raise BadInput(f"{name} does not match the solver's dimension/truncation")
    if not phi.even_only:
        raise BadInput(f"{name} must be even_only")


def _total_factor(phi, background_f, config):
    one = _one(phi)
    if background_f is None or not np.any(background_f.coeffs):
        return one + phi
    return ss.multiply(one + background_f, one + phi, config.grid)


def background_map(phi, config: SolverConfig, background_f=None):
    """N_g[1 + phi] for the background g = (1 + f)^{4/(n-4)} g_round."""
    u = _total_factor(phi, background_f, config)
    return nonlinear_map(u, config.map_spec, grid=config.grid)


def apply_T(phi, config: SolverConfig, background_f=None):
    """One application of the fixed-point map T.

    Parameters
    ----------
    phi : SpectralField
        Even zonal iterate with 1 + phi > 0.
    config : SolverConfig
    background_f : SpectralField, optional
        Background perturbation f; zero means the round sphere.

    Returns
    -------
    SpectralField
    """
    _check_field(phi, config)
    if background_f is not None:
        _check_field(background_f, config, "background_f")
    zero = ss.SpectralField.zeros(config.n, config.L_max)
    n_one = background_map(zero, config, background_f)
    if not np.any(phi.coeffs):
        q = zero
    else:
        q = background_map(phi, config, background_f) - n_one - ss.apply_L(phi)
    return -ss.apply_L_inverse(n_one + q, threshold=config.min_eigen_threshold)


def iterate(config: SolverConfig, background_f=None) -> tuple[Solution, IterationTrace]:
    """Banach iteration phi_{k+1} = T[phi_k] from phi_0 = 0.

    Returns
    -------
    (Solution, IterationTrace)

    Raises
    ------
    BallExit
        When an iterate leaves the ball of radius ``config.ball_radius``.
    NotContracting
        When three consecutive update ratios are at least 1.
    """
    if background_f is None:
        background_f = ss.SpectralField.zeros(config.n, config.L_max)
    _check_field(background_f, config, "background_f")
    grid = config.grid
    one = _one(background_f)
    one_f = ss.to_physical(one + background_f, grid)
    phi = ss.SpectralField.zeros(config.n, config.L_max)
    trace = IterationTrace()
    converged = False
    prev_update = None
    res = math.inf
    for k in range(config.max_iter + 1):
        nk = background_map(phi, config, background_f)
        res = nk.sup_norm(grid)
        phys = ss.to_physical(one + phi, grid)
        trace.residual.append(res)
        trace.min_one_plus_phi.append(float(phys.min()))
        trace.min_u.append(float((phys * one_f).min()))
        logger.debug("iteration %d residual %.3e", k, res)
        if res < config.residual_tol:
            converged = True
            trace.update.append(None)
            trace.ratio.append(None)
            break
        if k == config.max_iter:
            trace.update.append(None)
            trace.ratio.append(None)
            break
        step = ss.apply_L_inverse(nk, threshold=config.min_eigen_threshold)
        new = phi - step
        upd = step.sup_norm(grid)
        ratio = upd / prev_update if prev_update else None
        trace.update.append(upd)
        trace.ratio.append(ratio)
        prev_update = upd
        recent = [r for r in trace.ratio[-3:] if r is not None]
        if len(recent) == 3 and min(recent) >= 1.0:
            raise NotContracting(f"update ratios {recent} over the last three iterations")
        size = new.sup_norm(grid)
        if size > config.ball_radius:
            raise BallExit(f"|phi_{k + 1}| = {size:.3e} exceeds ball radius {config.ball_radius}")
        phi = new
    u = _total_factor(phi, background_f, config)
    sol = Solution(phi, background_f, u, converged, len(trace) - 1, res)
    return sol, trace


def verify_solution(solution: Solution, config: SolverConfig) -> VerificationReport:
    """Recompute Q of u^{4/(n-4)} g_round pointwise from P u = (n-4)/2 Q u^{(n+4)/(n-4)}."""
    grid = config.grid
    u = ss.chop(solution.u)
    uv = ss.to_physical(u, grid)
    min_u = float(uv.min())
    if min_u <= 0:
        return VerificationReport(math.inf, min_u, solution.residual, True, False)
    pu = ss.to_physical(ss.apply_paneitz(u), grid)
    q = 2.0 / (config.n - 4) * pu * uv ** (-float(critical_exponent(config.n)))
    dev = float(np.max(np.abs(q - config.nu)))
    above = not solution.residual < config.residual_tol
    passed = dev < 10 * config.residual_tol and min_u > 0
    return VerificationReport(dev, min_u, float(solution.residual), above, passed)


def degree_two_background(amplitude: float, n: int = 6, L_max: int = 64):
    """amplitude times the degree-2 zonal harmonic normalized to sup norm 1."""
    h = ss.zonal_harmonic(2, n, L_max)
    return (amplitude / h.sup_norm()) * h


class ConstantQSolver(BaseEstimator):
    """Estimator wrapper around :func:`iterate`.

    ``fit`` takes the background perturbation f, either as a SpectralField
    or as an array of its harmonic coefficients.

    Parameters
    ----------
    n : int, default=6
    nu : float or None
        Target Q-curvature; the round-sphere value when None.
    lmax : int, default=64
    max_iter : int, default=50
    tol : float, default=1e-9
    ball_radius : float, default=0.1
    min_eigen_threshold : float, default=1e-8

    Attributes
    ----------
    solution_ : Solution
    trace_ : IterationTrace
    phi_ : ndarray
        Harmonic coefficients of the fixed point.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, n=6, nu=None, lmax=64, max_iter=50, tol=1e-9, ball_radius=0.1,
                 min_eigen_threshold=1e-8):
        self.n = n
        self.nu = nu
        self.lmax = lmax
        self.max_iter = max_iter
        self.tol = tol
        self.ball_radius = ball_radius
        self.min_eigen_threshold = min_eigen_threshold

    def _config(self) -> SolverConfig:
        return SolverConfig(self.n, self.nu, self.lmax, self.max_iter, self.tol,
                            self.ball_radius, self.min_eigen_threshold)

    def _as_field(self, X):
        if isinstance(X, ss.SpectralField):
            return X
        c = np.asarray(X, dtype=float).ravel()
        if c.size != self.lmax + 1:
            raise BadInput(f"expected {self.lmax + 1} coefficients, got {c.size}")
        return ss.even_projection(ss.SpectralField(c, self.n))

    def fit(self, X=None, y=None):
        config = self._config()
        f = ss.SpectralField.zeros(config.n, config.L_max) if X is None else self._as_field(X)
        self.solution_, self.trace_ = iterate(config, f)
        self.phi_ = np.asarray(self.solution_.phi.coeffs)
        self.n_iter_ = self.solution_.iterations
        self.converged_ = self.solution_.converged
        return self

    def transform(self, X):
        """Solve for every row of background coefficients; returns phi rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        config = self._config()
        return np.vstack([iterate(config, self._as_field(row))[0].phi.coeffs for row in X])

    def verify(self) -> VerificationReport:
        check_is_fitted(self, "solution_")
        return verify_solution(self.solution_, self._config())
