"""Linear reference classifiers: mean difference and linear DWD."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .core import DimensionMismatch, RdwdError, TrainingSet
from .rdwd import FitError, point_weights, reduce_qr
from .socp import (ConeSpec, ConicProgram, Nonneg, SecondOrder, SolverTolerances,
                   Status, solve)


class ZeroDirection(RdwdError, ValueError):
    pass


@dataclass(frozen=True)
class HyperplaneModel:
    """Linear rule ``sign(w'x + beta)``; ``score`` is the signed distance to the plane."""

    normal: np.ndarray
    intercept: float
    method: str = "md"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.normal, dtype=float)
        if w.ndim != 1 or not np.any(w != 0):
            raise ZeroDirection("hyperplane normal is zero")
        w.setflags(write=False)
        object.__setattr__(self, "normal", w)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def d(self) -> int:
        return self.normal.size

    def score(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DimensionMismatch(
                f"model dimension {self.d}, data dimension {X.shape[1]}")
        return (X @ self.normal + self.intercept) / np.linalg.norm(self.normal)


def md_fit(data: TrainingSet) -> HyperplaneModel:
    """Mean difference: ``w = mean+ - mean-``, boundary through the midpoint of the means."""
    mp = data.X[data.y > 0].mean(axis=0)
    mn = data.X[data.y < 0].mean(axis=0)
    w = mp - mn
    if not np.any(w != 0):
        raise ZeroDirection("class means coincide")
    beta = -float(w @ (mp + mn)) / 2.0
    return HyperplaneModel(w, beta, "md")


def default_ldwd_penalty(data: TrainingSet) -> float:
    """``100 / t^2`` with ``t`` the median distance between points of opposite classes."""
    P = data.X[data.y > 0]
    N = data.X[data.y < 0]
    sq = (np.sum(P * P, axis=1)[:, None] + np.sum(N * N, axis=1)[None, :]
          - 2.0 * P @ N.T)
    t = float(np.median(np.sqrt(np.maximum(sq, 0.0))))
    if t == 0.0:
        raise FitError("classes overlap completely; no typical distance")
    return 100.0 / t ** 2


def ldwd_fit(data: TrainingSet, penalty: Optional[float] = None, weights=None,
             reduce: Optional[bool] = None,
             tol: Optional[SolverTolerances] = None) -> HyperplaneModel:
    """Linear distance weighted discrimination.

    Solves ``min sum w_i (1/r_i + C eps_i)`` with ``r_i = y_i (x_i'w + beta) + eps_i``
    and ``||w|| <= 1``, using ``(rho_i, sigma_i, 1)`` second-order cone blocks for the
    reciprocal terms. The free intercept is eliminated by projecting the
    residual rows onto the complement of ``y`` and recovered afterwards.
    """
    C = default_ldwd_penalty(data) if penalty is None else float(penalty)
    if not C > 0:
        raise ValueError("penalty must be positive")
    weights = (1.0, 1.0) if weights is None else tuple(weights)
    if reduce is None:
        reduce = data.d > data.n
    red = reduce_qr(data) if reduce else None
    X = red.reduced_points if red is not None else data.X
    y = data.y
    n, dim = X.shape
    omega = point_weights(y, weights)

    # variables: n blocks (rho, sigma, tau) | ball (t, w) | eps (n)
    rho = np.arange(0, 3 * n, 3)
    sig = rho + 1
    tau = rho + 2
    head = 3 * n
    wsl = slice(head + 1, head + 1 + dim)
    eps = np.arange(head + 1 + dim, head + 1 + dim + n)
    nvar = eps[-1] + 1

    c = np.zeros(nvar)
    c[rho] = omega
    c[sig] = omega
    c[eps] = C * omega

    # B v = rho - sigma - Y X w - eps must equal beta * y
    B = np.zeros((n, nvar))
    rows = np.arange(n)
    B[rows, rho] = 1.0
    B[rows, sig] = -1.0
    B[:, wsl] = -y[:, None] * X
    B[rows, eps] = -1.0
    Qy = scipy.linalg.null_space(y[None, :]).T        # (n-1, n), rows orthogonal to y
    A = np.zeros((2 * n, nvar))
    A[: n - 1] = Qy @ B
    A[n - 1 + rows, tau] = 1.0
    A[2 * n - 1, head] = 1.0
    b = np.concatenate([np.zeros(n - 1), np.ones(n), [1.0]])
    cones = ConeSpec([SecondOrder(3)] * n + [SecondOrder(dim + 1), Nonneg(n)])

    sol = solve(ConicProgram(c, A, b, cones), tol)
    if sol.status not in (Status.OPTIMAL, Status.SLOW_PROGRESS):
        raise FitError(f"linear DWD program reported {sol.status.value}")
    v = sol.primal
    beta = float(y @ (B @ v)) / n
    w = v[wsl].copy()
    nrm = np.linalg.norm(w)
    if nrm > 1.0:
        w /= nrm
    if red is not None:
        w = red.lift(w)
    return HyperplaneModel(w, beta, "ldwd",
                           meta={"penalty": C, "status": sol.status.value})


def stratified_folds(y, n_folds: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Fold labels per point; each class is shuffled and dealt round-robin."""
    rng = np.random.default_rng(seed)
    y = np.asarray(y)
    fold = np.empty(y.size, dtype=int)
    for label in (1, -1):
        idx = np.flatnonzero(y == label)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = np.arange(idx.size) % n_folds
    return [np.flatnonzero(fold == f) for f in range(n_folds)]


def cv_penalty(data: TrainingSet, grid: Sequence[float],
               fit: Callable = None, n_folds: int = 5, seed: int = 0) -> float:
    """Pick the penalty from ``grid`` with the lowest stratified k-fold error.

    Ties go to the earlier grid entry.
    """
    fit = fit or (lambda d, C: ldwd_fit(d, penalty=C))
    folds = stratified_folds(data.y, n_folds, seed)
    best, best_err = None, math.inf
    for C in grid:
        wrong = 0
        for test in folds:
            if test.size == 0:
                continue
            train = np.setdiff1d(np.arange(data.n), test)
            sub = TrainingSet(data.X[train], data.y[train])
            model = fit(sub, C)
            pred = np.where(model.score(data.X[test]) >= 0, 1, -1)
            wrong += int(np.sum(pred != data.y[test]))
        if wrong < best_err:
            best, best_err = C, wrong
    return best
