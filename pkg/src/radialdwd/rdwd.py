"""Radial distance weighted discrimination.

Training searches for a center ``O`` and radius ``R`` minimizing::

    sum_i w(y_i) * (1 / r_i + C * eps_i),   r_i = y_i (R - ||x_i - O||) + eps_i

with ``r, eps >= 0`` and ``R >= 0``. The distance terms are nonconvex, so the
fit repeatedly linearizes ``||x_i - O||`` around the previous center, confines
the center update to a small ball, and solves the resulting second-order cone
program with :mod:`radialdwd.socp`.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .core import RdwdError, SphereModel, TrainingSet
from .socp import (ConeSpec, ConicProgram, ConicSolution, Nonneg, SecondOrder,
                   SolverTolerances, Status, solve)

log = logging.getLogger(__name__)

PENALTY_MARGIN = 10.0
DEGENERATE_SHIFT = 1e-8
MIN_STEP = 1e-12


class EmptyPositiveClass(RdwdError, ValueError):
    pass


class DegenerateCenter(RdwdError, ValueError):
    pass


class DegeneratePoint(RdwdError, ValueError):
    pass


class FitError(RdwdError, RuntimeError):
    pass


class MaxItersExceeded(UserWarning):
    """The outer loop hit its cap; the returned model is the last iterate."""


class ZeroRadiusWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RdwdConfig:
    """Fit settings. ``penalty`` and ``weights`` left as ``None`` are filled
    from the training data (see :func:`default_penalty`, :func:`default_weights`)."""

    penalty: Optional[float] = None
    stop_eps: float = 1e-4
    step_length: float = 1e-3
    max_outer_iters: int = 500
    weights: Optional[tuple] = None
    init_mode: str = "mean"
    init_center: Optional[np.ndarray] = None
    shrink_on_slow: bool = False
    reject_uphill: bool = True
    solver: SolverTolerances = field(default_factory=SolverTolerances)

    def __post_init__(self):
        if self.penalty is not None and not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if not self.stop_eps > 0 or not self.step_length > 0:
            raise ValueError("stop_eps and step_length must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != 2 or min(w) <= 0:
                raise ValueError("weights must be two positive numbers")
            object.__setattr__(self, "weights", w)
        if self.init_mode not in ("mean", "median", "explicit"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")
        if self.init_mode == "explicit" and self.init_center is None:
            raise ValueError("explicit init_mode needs init_center")


@dataclass(frozen=True)
class OuterIterState:
    center: np.ndarray
    radius: float
    objective: float        # exact objective, drives the stopping rule
    step_index: int
    linearized_objective: float = math.nan    # optimal value of the step program


@dataclass(frozen=True)
class StepProblemLayout:
    """Where each RDWD quantity lives in the step program's variable vector.

    Variables: ``n`` blocks ``(rho_i, sigma_i, tau_i)`` with ``tau_i`` pinned
    to 1, the trust-region block ``(t, Delta)`` with ``t`` pinned to the step
    length, then ``R`` and the slacks ``eps``. Rows: ``n`` residual rows, ``n``
    pins for ``tau``, one pin for ``t``.
    """

    n: int
    dim: int
    directions: np.ndarray   # (n, dim) unit vectors from the previous center
    distances: np.ndarray    # (n,)

    @property
    def rho(self):
        return np.arange(0, 3 * self.n, 3)

    @property
    def sigma(self):
        return np.arange(1, 3 * self.n, 3)

    @property
    def tau(self):
        return np.arange(2, 3 * self.n, 3)

    @property
    def trust_head(self) -> int:
        return 3 * self.n

    @property
    def displacement(self):
        return slice(3 * self.n + 1, 3 * self.n + 1 + self.dim)

    @property
    def radius(self) -> int:
        return 3 * self.n + 1 + self.dim

    @property
    def slack(self):
        start = 3 * self.n + 2 + self.dim
        return slice(start, start + self.n)

    @property
    def nvar(self) -> int:
        return 4 * self.n + self.dim + 2

    @property
    def residual_rows(self):
        return slice(0, self.n)


@dataclass(frozen=True)
class DualCertificate:
    """Dual solution of the final step program plus what is needed to re-check it."""

    z: np.ndarray
    eta_hat: float
    z_star: np.ndarray
    separability: float
    kkt_residuals: dict
    prev_center: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    slack: np.ndarray
    radius: float
    displacement: np.ndarray
    step_length: float
    penalty: float
    weights: tuple
    solver_status: str = "optimal"


@dataclass(frozen=True)
class ReducedData:
    q_basis: np.ndarray          # (d, k) orthonormal columns
    reduced_points: np.ndarray   # (n, k) rows are the reduced training points
    reduced: bool = True

    def lift(self, v) -> np.ndarray:
        return self.q_basis @ v

    def project(self, v) -> np.ndarray:
        return self.q_basis.T @ v


# -- defaults ---------------------------------------------------------------

def initialize_center(data: TrainingSet, mode: str = "mean", center=None) -> np.ndarray:
    """Mean or coordinate-wise median of the +1 class, or an explicit vector."""
    if mode == "explicit":
        c = np.asarray(center, dtype=float)
        if c.shape != (data.d,):
            raise ValueError(f"explicit center has shape {c.shape}, need ({data.d},)")
        return c.copy()
    pos = data.X[data.y > 0]
    if pos.shape[0] == 0:
        raise EmptyPositiveClass("no +1 training points")
    if mode == "mean":
        return pos.mean(axis=0)
    if mode == "median":
        return np.median(pos, axis=0)
    raise ValueError(f"unknown init mode {mode!r}")


def default_penalty(data: TrainingSet, center0) -> float:
    """``C = 10 / min_{i in N} ||x_i - O^0||^2``, so ``C d_i^2 >= 10 > 1`` for every negative."""
    neg = data.X[data.y < 0]
    dist = np.linalg.norm(neg - np.asarray(center0, float), axis=1)
    dmin = float(dist.min())
    if dmin == 0.0:
        raise DegenerateCenter("a -1 point coincides with the initial center")
    return PENALTY_MARGIN / dmin ** 2


def default_weights(data: TrainingSet) -> tuple:
    """Class weights ``(n_-/n, n_+/n)`` for the +1 and -1 classes."""
    n = data.n
    return data.n_neg / n, data.n_pos / n


def point_weights(y, weights) -> np.ndarray:
    w_plus, w_minus = weights
    return np.where(np.asarray(y) > 0, w_plus, w_minus)


# -- objective --------------------------------------------------------------

def _dwd_terms(rbar, penalty):
    # per point: the slack minimizing 1/(rbar + eps) + C eps is max(0, 1/sqrt(C) - rbar)
    thresh = 1.0 / math.sqrt(penalty)
    r = np.maximum(rbar, thresh)
    return 1.0 / r, r - rbar


def objective(X, y, center, radius, penalty, weights=None) -> float:
    """Training objective with exact distances and the best slack for each point.

    ``weights=None`` gives the unweighted objective ``sum 1/r_i + C sum eps_i``.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    rbar = y * (radius - np.linalg.norm(X - center, axis=1))
    inv_r, eps = _dwd_terms(rbar, penalty)
    if weights is None:
        terms = inv_r + penalty * eps
    else:
        terms = point_weights(y, weights) * (inv_r + penalty * eps)
    return float(np.sum(terms))


# -- QR reduction -----------------------------------------------------------

def reduce_qr(data: TrainingSet, extra=None) -> ReducedData:
    """Thin QR of the data matrix: ``X' = Q U`` with ``Q`` of size ``d x n``.

    With ``extra`` (a vector, typically the starting center) the basis is
    widened to also span it, so every center reachable by the fit is
    representable.
    """
    Xt = data.X.T
    Q, _ = np.linalg.qr(Xt, mode="reduced")
    if extra is not None:
        extra = np.asarray(extra, float)
        resid = extra - Q @ (Q.T @ extra)
        # second pass keeps the widened basis orthonormal to working precision
        resid -= Q @ (Q.T @ resid)
        nrm = np.linalg.norm(resid)
        if nrm > 1e-12 * max(1.0, np.linalg.norm(extra)):
            Q = np.hstack([Q, (resid / nrm)[:, None]])
    return ReducedData(Q, data.X @ Q, True)


# -- one outer step ---------------------------------------------------------

def build_step_problem(X, y, prev_center, penalty, weights, step_length,
                       ) -> tuple[ConicProgram, StepProblemLayout]:
    """Second-order cone program for one linearized step around ``prev_center``."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    n, dim = X.shape
    diff = X - prev_center
    dist = np.linalg.norm(diff, axis=1)
    if np.any(dist == 0.0):
        raise DegeneratePoint(
            f"training point {int(np.argmin(dist))} equals the current center")
    dirs = diff / dist[:, None]
    lay = StepProblemLayout(n, dim, dirs, dist)
    omega = point_weights(y, weights)

    c = np.zeros(lay.nvar)
    c[lay.rho] = omega
    c[lay.sigma] = omega
    c[lay.slack] = penalty * omega

    A = np.zeros((2 * n + 1, lay.nvar))
    rows = np.arange(n)
    A[rows, lay.sigma] = 1.0
    A[rows, lay.rho] = -1.0
    A[:n, lay.radius] = y
    A[:n, lay.displacement] = y[:, None] * dirs
    A[rows, lay.slack.start + rows] = 1.0
    A[n + rows, lay.tau] = 1.0
    A[2 * n, lay.trust_head] = 1.0
    b = np.concatenate([y * dist, np.ones(n), [step_length]])

    cones = ConeSpec([SecondOrder(3)] * n + [SecondOrder(dim + 1), Nonneg(1), Nonneg(n)])
    return ConicProgram(c, A, b, cones), lay


def _nudge(center, X):
    out = center.copy()
    while np.any(np.linalg.norm(X - out, axis=1) == 0.0):
        out[0] += DEGENERATE_SHIFT
    return out


def _displacement(sol, lay, y, step_length):
    """Center update of a solved step program.

    When the ball constraint is active, the optimal update is
    ``delta * g / ||g||`` with ``g = W'Yz`` built from the duals. The
    objective is flat along the ball up to second order, so the solver pins
    this direction far less accurately than ``z``; recomputing it from ``z``
    gives the same objective and an exact trust-region condition, and the
    primal residual check still covers the substitution.
    """
    disp = sol.primal[lay.displacement].copy()
    nrm = np.linalg.norm(disp)
    if nrm > step_length:
        disp *= step_length / nrm
    z = sol.dual_eq[lay.residual_rows]
    g = lay.directions.T @ (y * z)
    gn = np.linalg.norm(g)
    if nrm >= (1.0 - 1e-3) * step_length and gn > 1e-9 * (1.0 + np.sum(np.abs(z))):
        disp = step_length * g / gn
    return disp


def _certificate(X, y, prev_center, sol, lay, penalty, weights, step_length):
    x = sol.primal
    disp = _displacement(sol, lay, y, step_length)
    return DualCertificate(
        z=sol.dual_eq[lay.residual_rows].copy(),
        eta_hat=float("nan"), z_star=np.zeros(lay.n), separability=float("nan"),
        kkt_residuals={}, prev_center=prev_center.copy(),
        rho=x[lay.rho].copy(), sigma=x[lay.sigma].copy(), slack=x[lay.slack].copy(),
        radius=float(x[lay.radius]), displacement=disp, step_length=step_length,
        penalty=penalty, weights=tuple(weights), solver_status=sol.status.value)


# -- fitting ----------------------------------------------------------------

def _resolve(data, config):
    center0 = initialize_center(data, config.init_mode, config.init_center)
    penalty = config.penalty if config.penalty is not None else default_penalty(data, center0)
    weights = config.weights if config.weights is not None else default_weights(data)
    return center0, replace(config, penalty=penalty, weights=tuple(weights))


def fit(data: TrainingSet, config: Optional[RdwdConfig] = None,
        reduce: Optional[bool] = None) -> tuple[SphereModel, DualCertificate]:
    """Fit a separating sphere.

    ``reduce=None`` works in the QR-reduced coordinates whenever ``d > n``;
    ``True``/``False`` force either path. Both give the same iterates.
    """
    config = config or RdwdConfig()
    center0, cfg = _resolve(data, config)
    if reduce is None:
        reduce = data.d > data.n
    if reduce:
        red = reduce_qr(data, extra=center0)
        P = red.reduced_points
        o = red.project(center0)
    else:
        red = None
        P = data.X
        o = center0.copy()

    history, sol, lay, cert_center = _outer_loop(P, data.y, o, cfg)
    final = history[-1]
    converged = len(history) >= 2 and abs(final.objective - history[-2].objective) < cfg.stop_eps

    lift = red.lift if red is not None else (lambda v: v)
    center = lift(final.center)
    cert = _certificate(P, data.y, cert_center, sol, lay, cfg.penalty, cfg.weights,
                        sol_step_length(sol, lay))
    if red is not None:
        cert = replace(cert, prev_center=lift(cert.prev_center),
                       displacement=lift(cert.displacement))
    resid = kkt_check(data, None, cert)
    diag = dual_diagnostics(cert, data)
    cert = replace(cert, kkt_residuals=resid, eta_hat=diag.eta_hat,
                   z_star=diag.z_star, separability=diag.separability)

    if not converged:
        warnings.warn(f"outer loop stopped after {cfg.max_outer_iters} steps without "
                      f"meeting |dObj| < {cfg.stop_eps}", MaxItersExceeded, stacklevel=2)
    if final.radius <= 0.0:
        warnings.warn("fitted radius is zero", ZeroRadiusWarning, stacklevel=2)
    model = SphereModel(center, max(final.radius, 0.0), config=cfg,
                        iterations=final.step_index, converged=converged,
                        objective=final.objective,
                        meta={"reduced": bool(red is not None)})
    return model, cert


def sol_step_length(sol, lay) -> float:
    return float(sol.primal[lay.trust_head])


def _outer_loop(P, y, o, cfg):
    delta = cfg.step_length
    history = [OuterIterState(o.copy(), 0.0, -1.0, 0)]
    accepted = None
    for k in range(1, cfg.max_outer_iters + 1):
        prev = _nudge(history[-1].center, P)
        while True:
            prog, lay = build_step_problem(P, y, prev, cfg.penalty, cfg.weights, delta)
            sol = solve(prog, cfg.solver)
            if sol.status is Status.OPTIMAL:
                break
            if sol.status is Status.SLOW_PROGRESS:
                if cfg.shrink_on_slow and delta > MIN_STEP:
                    delta *= 0.5
                    log.info("step %d: slow inner solve, step length -> %g", k, delta)
                    continue
                log.warning("step %d: inner solver slow progress (gap %.2e)", k, sol.gap)
                break
            raise FitError(f"step program reported {sol.status.value} at outer step {k}")
        disp = _displacement(sol, lay, y, delta)
        nrm = np.linalg.norm(disp)
        center = prev + disp
        radius = max(float(sol.primal[lay.radius]), 0.0)
        obj = objective(P, y, center, radius, cfg.penalty, cfg.weights)
        last = history[-1].objective
        if cfg.reject_uphill and k > 1 and obj > last and delta > MIN_STEP:
            # linearization overshot: keep the previous iterate, halve the ball
            delta *= 0.5
            log.debug("outer %d rejected (obj %.10g > %.10g), step length -> %g",
                      k, obj, last, delta)
            continue
        accepted = (sol, lay, prev)
        history.append(OuterIterState(center, radius, obj, k, float(sol.objective_value)))
        log.debug("outer %d obj %.10g linearized %.10g radius %.6g |dO| %.3g",
                  k, obj, sol.objective_value, radius, nrm)
        if abs(obj - last) < cfg.stop_eps:
            break
    sol, lay, prev = accepted
    return history, sol, lay, prev


# -- certification ----------------------------------------------------------

def optimal_rho_sigma(z, omega=1.0):
    """``rho, sigma`` implied by dual ``z``; with unit weights
    ``rho = (z + 1) / (2 sqrt z)`` and ``sigma = (z - 1) / (2 sqrt z)``."""
    z = np.asarray(z, float)
    root = 2.0 * np.sqrt(omega * z)
    return (z + omega) / root, (z - omega) / root


def _step_geometry(data, cert):
    diff = data.X - cert.prev_center
    dist = np.linalg.norm(diff, axis=1)
    return diff / dist[:, None], dist


def kkt_check(data: TrainingSet, model, cert: DualCertificate, tol: float = 1e-4) -> dict:
    """Optimality-condition residuals of the final step program.

    Each entry is scaled to be dimensionless where the raw quantity can be
    large (the ``rho``/``sigma`` relations are relative to ``1 + |rho|``).
    The report has one key per condition plus ``max`` and ``passed``.
    """
    y = data.y
    z = np.asarray(cert.z, float)
    omega = point_weights(y, cert.weights)
    cap = cert.penalty * omega
    dirs, dist = _step_geometry(data, cert)
    disp = np.asarray(cert.displacement, float)

    lhs = (cert.sigma - cert.rho + cert.radius * y + y * (dirs @ disp) + cert.slack)
    res = {}
    res["primal_equality"] = float(np.max(np.abs(lhs - y * dist)) / (1.0 + np.max(dist)))
    res["dual_bounds"] = float(max(0.0, np.max(-z), np.max((z - cap) / cap)))
    res["slack_nonneg"] = float(max(0.0, -np.min(cert.slack)))
    res["slack_complementarity"] = float(abs(np.sum((cap - z) * cert.slack))
                                         / (1.0 + np.sum(cap)))
    res["radius_nonneg"] = max(0.0, -cert.radius)
    yz = float(y @ z)
    res["label_balance"] = max(0.0, yz) / (1.0 + np.sum(np.abs(z)))
    res["radius_complementarity"] = abs(cert.radius * yz) / (1.0 + np.sum(np.abs(z)))

    # either W Y z = 0 with the step inside the ball, or the step is the ball
    # radius along W Y z; both read ||g|| Delta = delta g in product form
    g = dirs.T @ (y * z)
    zscale = 1.0 + float(np.sum(np.abs(z)))
    res["trust_region"] = max(
        float(np.linalg.norm(np.linalg.norm(g) * disp - cert.step_length * g))
        / (cert.step_length * zscale),
        max(0.0, float(np.linalg.norm(disp)) - cert.step_length) / cert.step_length)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho_z, sigma_z = optimal_rho_sigma(np.maximum(z, 0.0), omega)
    scale = 1.0 + np.abs(cert.rho)
    if np.any(z <= 0):
        res["rho_relation"] = res["sigma_relation"] = math.inf
    else:
        res["rho_relation"] = float(np.max(np.abs(cert.rho - rho_z) / scale))
        res["sigma_relation"] = float(np.max(np.abs(cert.sigma - sigma_z) / scale))
    worst = max(res.values())
    res["max"] = worst
    res["passed"] = bool(worst <= tol)
    return res


@dataclass(frozen=True)
class DualDiagnostics:
    eta_hat: float
    separability: float
    z_star: np.ndarray
    eta: float
    available: bool


def dual_diagnostics(cert: DualCertificate, data: TrainingSet, tol: float = 1e-6,
                     ) -> DualDiagnostics:
    """Split ``z = eta z*`` with each class of ``z*`` summing to one.

    Returns the maximizing ``eta_hat`` of the dual objective along ``z*`` and
    the separability denominator ``-d'Yz* + delta ||W Y z*||``. Only defined
    when the label balance ``y'z = 0`` holds (a strictly positive radius).
    """
    y = data.y
    z = np.asarray(cert.z, float)
    omega = point_weights(y, cert.weights)
    zp, zn = z[y > 0].sum(), z[y < 0].sum()
    scale = 1.0 + np.sum(np.abs(z))
    if (zp - zn) < -tol * scale or zp <= 0 or zn <= 0:
        return DualDiagnostics(math.nan, math.nan, np.full(z.shape, math.nan), math.nan, False)
    eta = 0.5 * (zp + zn)
    z_star = np.where(y > 0, z / zp, z / zn)
    dirs, dist = _step_geometry(data, cert)
    yz = y * z_star
    sep = float(-(dist @ yz) + cert.step_length * np.linalg.norm(dirs.T @ yz))
    if sep <= 0:
        return DualDiagnostics(math.nan, sep, z_star, eta, False)
    root = float(np.sum(np.sqrt(omega * z_star))) / sep
    return DualDiagnostics(root * root, sep, z_star, eta, True)


def step_dual_objective(data: TrainingSet, cert: DualCertificate, z) -> float:
    """Dual objective of the final step program evaluated at ``z``."""
    y = data.y
    omega = point_weights(y, cert.weights)
    dirs, dist = _step_geometry(data, cert)
    yz = y * np.asarray(z, float)
    return float(dist @ yz - cert.step_length * np.linalg.norm(dirs.T @ yz)
                 + 2.0 * np.sum(np.sqrt(omega * z)))


def training_residuals(model: SphereModel, data: TrainingSet) -> np.ndarray:
    """Signed residuals ``y_i (R - ||x_i - O||)``."""
    return data.y * model.score(data.X)
