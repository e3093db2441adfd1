"""Labeled simplex data, L1 normalization and signed-distance classification.

Points are stored as the rows of an ``(n, d)`` array throughout the package.
A sample whose raw coverage vector is all zeros has no position on the unit
simplex; it is represented by the :data:`ZERO_VECTOR` sentinel and always
scores ``-inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence, Union

import numpy as np

SIMPLEX_TOL = 1e-12


class RdwdError(Exception):
    """Base class for errors raised by this package."""


class NegativeEntry(RdwdError, ValueError):
    pass


class DimensionMismatch(RdwdError, ValueError):
    pass


class InvalidTrainingSet(RdwdError, ValueError):
    pass


class _ZeroVectorSentinel:
    """Marker for an all-zero feature vector (placed at minus infinity)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ZERO_VECTOR"

    def __reduce__(self):
        return (_ZeroVectorSentinel, ())


ZERO_VECTOR = _ZeroVectorSentinel()

SimplexPoint = Union[np.ndarray, _ZeroVectorSentinel]


def is_zero_sentinel(x: Any) -> bool:
    return x is ZERO_VECTOR


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def l1_normalize(v) -> SimplexPoint:
    """Scale a nonnegative count vector onto the unit simplex.

    Returns :data:`ZERO_VECTOR` for the all-zero vector. Raises
    :class:`NegativeEntry` when any entry is negative.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("feature vector must be one-dimensional and nonempty")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector has non-finite entries")
    if np.any(v < 0):
        raise NegativeEntry(f"negative entry at index {int(np.argmax(v < 0))}")
    total = math.fsum(v)
    if total == 0.0:
        return ZERO_VECTOR
    return _readonly(v / total)


def l1_normalize_rows(V) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`l1_normalize`.

    Returns ``(points, is_zero)``; rows flagged in ``is_zero`` are left as zeros
    in ``points``.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[1] < 1:
        raise ValueError("expected a 2-D array with at least one column")
    if np.any(V < 0):
        row = int(np.argmax(np.any(V < 0, axis=1)))
        raise NegativeEntry(f"negative entry in row {row}")
    totals = np.array([math.fsum(row) for row in V])
    is_zero = totals == 0.0
    out = np.zeros_like(V)
    nz = ~is_zero
    out[nz] = V[nz] / totals[nz, None]
    return out, is_zero


def check_simplex(x, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate that ``x`` lies on the unit simplex and return it as an array."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NegativeEntry("simplex vector has a negative entry")
    if abs(math.fsum(x) - 1.0) > tol:
        raise ValueError(f"entries sum to {math.fsum(x)!r}, not 1")
    return x


@dataclass(frozen=True)
class TrainingSet:
    """Labeled training points (rows of ``X``) with labels in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray
    n_dropped_zero: int = 0

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2:
            raise InvalidTrainingSet("X must be a 2-D array (n points by d)")
        if y.shape != (X.shape[0],):
            raise InvalidTrainingSet("y must have one label per row of X")
        if X.shape[1] < 1:
            raise InvalidTrainingSet("dimension must be at least 1")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InvalidTrainingSet("labels must be -1 or +1")
        if not np.all(np.isfinite(X)):
            raise InvalidTrainingSet("X has non-finite entries")
        if np.sum(y > 0) < 1 or np.sum(y < 0) < 1:
            raise InvalidTrainingSet("each class needs at least one point")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "y", _readonly(y))

    @classmethod
    def from_counts(cls, counts, labels, normalize: bool = True) -> "TrainingSet":
        """Build a training set from raw coverage counts.

        Zero vectors in the -1 class sit at infinity and carry no weight, so
        they are dropped (the count is kept in ``n_dropped_zero``). A zero
        vector labeled +1 is rejected.
        """
        counts = np.asarray(counts, dtype=float)
        labels = np.asarray(labels, dtype=float)
        if counts.ndim != 2 or labels.shape != (counts.shape[0],):
            raise InvalidTrainingSet("counts must be (n, d) with n labels")
        if normalize:
            X, is_zero = l1_normalize_rows(counts)
        else:
            X = counts
            if np.any(X < 0):
                raise NegativeEntry("negative entry in pre-normalized data")
            is_zero = ~np.any(X != 0, axis=1)
        bad = is_zero & (labels > 0)
        if np.any(bad):
            raise InvalidTrainingSet(
                f"row {int(np.argmax(bad))} is a zero vector in the +1 class")
        keep = ~is_zero
        return cls(X[keep], labels[keep], n_dropped_zero=int(np.sum(is_zero)))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def pos_index(self) -> np.ndarray:
        return np.flatnonzero(self.y > 0)

    @property
    def neg_index(self) -> np.ndarray:
        return np.flatnonzero(self.y < 0)

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.y > 0))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.y < 0))


@dataclass(frozen=True)
class SphereModel:
    """Separating hypersphere: points inside are labeled +1."""

    center: np.ndarray
    radius: float
    config: Any = None
    iterations: int = 0
    converged: bool = True
    objective: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        center = np.array(self.center, dtype=float)
        if center.ndim != 1 or center.size < 1:
            raise ValueError("center must be a nonempty vector")
        if not self.radius >= 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "center", _readonly(center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def d(self) -> int:
        return self.center.size

    def score(self, X) -> np.ndarray:
        """Signed distances ``R - ||x - O||`` for the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DimensionMismatch(
                f"model dimension {self.d}, data dimension {X.shape[1]}")
        return self.radius - np.linalg.norm(X - self.center, axis=1)


class ScoredSample(NamedTuple):
    signed_distance: float
    predicted_label: int
    residual: Optional[float] = None


def signed_distance(model, x: SimplexPoint) -> float:
    """Signed distance of one point to the model's boundary; ``-inf`` for zero vectors."""
    if is_zero_sentinel(x):
        return -math.inf
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single point")
    return float(model.score(x[None, :])[0])


def label_from_distance(dist) -> np.ndarray:
    # ties go to +1; -inf is always -1
    return np.where(np.asarray(dist) >= 0, 1, -1)


def classify(model, x: SimplexPoint, label: Optional[int] = None) -> ScoredSample:
    dist = signed_distance(model, x)
    pred = 1 if dist >= 0 else -1
    residual = None if label is None else label * dist
    return ScoredSample(dist, pred, residual)


def score_counts(model, counts, normalize: bool = True) -> np.ndarray:
    """Signed distances for raw count rows, with zero rows mapped to ``-inf``."""
    counts = np.atleast_2d(np.asarray(counts, dtype=float))
    if counts.shape[1] != model.d:
        raise DimensionMismatch(
            f"model dimension {model.d}, data dimension {counts.shape[1]}")
    if normalize:
        X, is_zero = l1_normalize_rows(counts)
    else:
        X, is_zero = counts, ~np.any(counts != 0, axis=1)
    out = np.full(X.shape[0], -np.inf)
    if np.any(~is_zero):
        out[~is_zero] = model.score(X[~is_zero])
    return out


def classify_many(model, points: Sequence[SimplexPoint]) -> list[ScoredSample]:
    return [classify(model, p) for p in points]
