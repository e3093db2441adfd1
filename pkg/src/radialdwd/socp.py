"""Primal-dual interior-point solver for linear cone programs.

Solves the standard-form pair::

    minimize    c'x                 maximize    b'y
    subject to  A x = b             subject to  A'y + s = c
                x in K                          s in K

where ``K`` is a product of nonnegative orthants and second-order cones
``{(t; u) : t >= ||u||}``. The iteration is an infeasible-start path-following
method with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
Search directions come from the dense normal equations ``(A W^-2 A') dy = r``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import scipy.linalg

from .core import RdwdError

log = logging.getLogger(__name__)


class InconsistentEqualities(RdwdError, ValueError):
    pass


@dataclass(frozen=True)
class Nonneg:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("Nonneg block needs size >= 1")


@dataclass(frozen=True)
class SecondOrder:
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("SecondOrder block needs size >= 2")


class ConeSpec:
    """Ordered product of cone blocks; variables are laid out block by block."""

    def __init__(self, blocks: Iterable):
        self.blocks = tuple(blocks)
        if not self.blocks:
            raise ValueError("ConeSpec needs at least one block")
        for b in self.blocks:
            if not isinstance(b, (Nonneg, SecondOrder)):
                raise TypeError(f"unknown cone block {b!r}")
        self.nvar = sum(b.size for b in self.blocks)

        nonneg, groups = [], {}
        offset = 0
        for b in self.blocks:
            idx = np.arange(offset, offset + b.size)
            if isinstance(b, Nonneg):
                nonneg.append(idx)
            else:
                groups.setdefault(b.size, []).append(idx)
            offset += b.size
        self._nonneg = np.concatenate(nonneg) if nonneg else np.zeros(0, int)
        # SOC blocks of equal size are stacked so cone arithmetic is vectorized
        self._soc = [np.vstack(groups[k]) for k in sorted(groups)]
        self.degree = self._nonneg.size + sum(g.shape[0] for g in self._soc)

    def __eq__(self, other):
        return isinstance(other, ConeSpec) and self.blocks == other.blocks

    def __repr__(self):
        return f"ConeSpec({list(self.blocks)!r})"

    # -- elementary cone arithmetic -----------------------------------------

    def identity(self) -> np.ndarray:
        e = np.zeros(self.nvar)
        e[self._nonneg] = 1.0
        for g in self._soc:
            e[g[:, 0]] = 1.0
        return e

    def interior_margin(self, x) -> np.ndarray:
        """Per-block ``min(x)`` for orthants and ``x0 - ||x1||`` for cones."""
        parts = [np.asarray(x)[self._nonneg]]
        for g in self._soc:
            v = x[g]
            parts.append(v[:, 0] - np.linalg.norm(v[:, 1:], axis=1))
        return np.concatenate(parts)

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.interior_margin(np.asarray(x, float)) >= -tol))

    def shift_inside(self, x) -> np.ndarray:
        """Return ``x + (1 + a) e`` where ``a`` is the smallest shift reaching the boundary."""
        x = np.asarray(x, float)
        alpha = -float(np.min(self.interior_margin(x)))
        if alpha < 0:
            return x.copy()
        return x + (1.0 + alpha) * self.identity()

    def product(self, u, v) -> np.ndarray:
        """Jordan product ``u o v``."""
        out = np.empty(self.nvar)
        nn = self._nonneg
        out[nn] = u[nn] * v[nn]
        for g in self._soc:
            U, V = u[g], v[g]
            out[g[:, 0]] = np.sum(U * V, axis=1)
            out[g[:, 1:]] = U[:, :1] * V[:, 1:] + V[:, :1] * U[:, 1:]
        return out

    def divide(self, u, r) -> np.ndarray:
        """Solve ``u o w = r`` for ``w`` (``u`` in the interior)."""
        out = np.empty(self.nvar)
        nn = self._nonneg
        out[nn] = r[nn] / u[nn]
        for g in self._soc:
            U, R = u[g], r[g]
            u0, u1 = U[:, 0], U[:, 1:]
            det = _jdet(U)
            w0 = (u0 * R[:, 0] - np.sum(u1 * R[:, 1:], axis=1)) / det
            out[g[:, 0]] = w0
            out[g[:, 1:]] = (R[:, 1:] - w0[:, None] * u1) / u0[:, None]
        return out

    def max_step(self, x, dx) -> float:
        """Largest ``a >= 0`` with ``x + a dx`` in the cone (``inf`` if unbounded)."""
        best = np.inf
        nn = self._nonneg
        if nn.size:
            d = dx[nn]
            neg = d < 0
            if np.any(neg):
                best = min(best, float(np.min(-x[nn][neg] / d[neg])))
        for g in self._soc:
            best = min(best, _soc_max_step(x[g], dx[g]))
        return best

    def nt_scaling(self, x, s) -> "_NTScaling":
        return _NTScaling(self, x, s)


def _jdet(U):
    """``u0^2 - ||u1||^2`` computed as a product to limit cancellation."""
    n1 = np.linalg.norm(U[:, 1:], axis=1)
    return (U[:, 0] - n1) * (U[:, 0] + n1)


def _soc_max_step(X, D) -> float:
    # smallest positive root of (x + a d)' J (x + a d) = 0, per block
    a = _jprod(D, D)
    b = _jprod(X, D)
    c = _jdet(X)
    disc = b * b - a * c
    steps = np.full(X.shape[0], np.inf)
    real = disc >= 0
    sq = np.sqrt(np.where(real, disc, 0.0))
    sgn = np.where(b >= 0, 1.0, -1.0)
    q = -(b + sgn * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(q != 0, c / q, np.inf)
        r2 = np.where(a != 0, q / a, np.inf)
    for r in (r1, r2):
        ok = real & (r > 0) & np.isfinite(r)
        steps = np.where(ok & (r < steps), r, steps)
    return float(np.min(steps)) if steps.size else np.inf


def _jprod(U, V):
    return U[:, 0] * V[:, 0] - np.sum(U[:, 1:] * V[:, 1:], axis=1)


class _NTScaling:
    """Nesterov-Todd scaling ``W`` with ``W x = W^-1 s = lambda``.

    On a second-order block ``W = beta (2 v v' - J)`` and
    ``W^-1 = (2 Jv (Jv)' - J) / beta``; on the orthant ``W = diag(sqrt(s/x))``.
    """

    def __init__(self, cones: ConeSpec, x, s):
        self.cones = cones
        nn = cones._nonneg
        self.d = np.sqrt(s[nn] / x[nn])
        self.soc = []
        for g in cones._soc:
            X, S = x[g], s[g]
            xj = np.sqrt(_jdet(X))
            sj = np.sqrt(_jdet(S))
            xb, sb = X / xj[:, None], S / sj[:, None]
            gamma = np.sqrt((1.0 + np.sum(xb * sb, axis=1)) / 2.0)
            wb = sb.copy()
            wb[:, 0] += xb[:, 0]
            wb[:, 1:] -= xb[:, 1:]
            wb /= 2.0 * gamma[:, None]
            v = wb.copy()
            v[:, 0] += 1.0
            v /= np.sqrt(2.0 * (wb[:, 0] + 1.0))[:, None]
            beta = np.sqrt(sj / xj)
            u = v.copy()
            u[:, 1:] = -u[:, 1:]
            self.soc.append((g, beta, v, u))
        self.lam = self.apply(x)

    def apply(self, z, inverse: bool = False) -> np.ndarray:
        out = np.empty_like(z)
        nn = self.cones._nonneg
        out[nn] = z[nn] / self.d if inverse else z[nn] * self.d
        for g, beta, v, u in self.soc:
            Z = z[g]
            JZ = Z.copy()
            JZ[:, 1:] = -JZ[:, 1:]
            if inverse:
                out[g] = (2.0 * u * np.sum(u * Z, axis=1)[:, None] - JZ) / beta[:, None]
            else:
                out[g] = beta[:, None] * (2.0 * v * np.sum(v * Z, axis=1)[:, None] - JZ)
        return out

    def scale_columns(self, A) -> np.ndarray:
        """Return ``A W^-1`` (``W`` is symmetric)."""
        G = np.empty_like(A)
        nn = self.cones._nonneg
        G[:, nn] = A[:, nn] / self.d
        for g, beta, v, u in self.soc:
            Ag = A[:, g]                                  # (m, count, k)
            t = np.einsum("mbk,bk->mb", Ag, u)
            blk = 2.0 * t[:, :, None] * u[None, :, :]
            blk[:, :, 0] -= Ag[:, :, 0]
            blk[:, :, 1:] += Ag[:, :, 1:]
            G[:, g] = blk / beta[None, :, None]
        return G


@dataclass(frozen=True)
class ConicProgram:
    """``minimize c'x  s.t.  A x = b,  x in cones``."""

    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    cones: ConeSpec

    def __post_init__(self):
        c = np.array(self.objective, dtype=float)
        A = np.array(self.eq_matrix, dtype=float)
        b = np.array(self.eq_rhs, dtype=float)
        if A.ndim != 2:
            A = A.reshape(0, c.size) if A.size == 0 else A
        if c.ndim != 1 or b.ndim != 1:
            raise ValueError("objective and rhs must be vectors")
        if A.shape != (b.size, c.size):
            raise ValueError(
                f"eq_matrix shape {A.shape} does not match rhs {b.size} / vars {c.size}")
        if self.cones.nvar != c.size:
            raise ValueError(
                f"cones cover {self.cones.nvar} variables, objective has {c.size}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", A)
        object.__setattr__(self, "eq_rhs", b)

    @property
    def nvar(self) -> int:
        return self.objective.size

    @property
    def m(self) -> int:
        return self.eq_rhs.size


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    SLOW_PROGRESS = "slow_progress"


@dataclass(frozen=True)
class SolverTolerances:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iters: int = 100
    step_fraction: float = 0.99


@dataclass(frozen=True)
class IterRecord:
    iteration: int
    primal_objective: float
    dual_objective: float
    complementarity: float
    primal_residual: float
    dual_residual: float
    step: float


@dataclass
class ConicSolution:
    primal: np.ndarray
    dual_eq: np.ndarray
    dual_cone: np.ndarray
    objective_value: float
    dual_objective: float
    gap: float
    status: Status
    iterations: int
    primal_residual: float
    dual_residual: float
    history: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _independent_rows(A, tol=1e-10):
    m = A.shape[0]
    if m == 0:
        return np.arange(0)
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return np.arange(0)
    rank = int(np.sum(diag > tol * diag[0] * max(A.shape)))
    return np.sort(piv[:rank])


def presolve_rows(p: ConicProgram, tol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal independent subset of equality rows.

    Raises :class:`InconsistentEqualities` if a dropped row contradicts the
    retained ones.
    """
    A, b = p.eq_matrix, p.eq_rhs
    keep = _independent_rows(A, tol)
    if keep.size == A.shape[0]:
        return keep
    if keep.size:
        x, *_ = np.linalg.lstsq(A[keep], b[keep], rcond=None)
        resid = A @ x - b
    else:
        resid = -b
    scale = 1.0 + np.abs(b).max(initial=0.0)
    if np.max(np.abs(resid)) > 1e-8 * scale:
        bad = int(np.argmax(np.abs(resid)))
        raise InconsistentEqualities(f"equality row {bad} contradicts the others")
    return keep


def presolve(p: ConicProgram) -> ConicProgram:
    """Drop linearly dependent equality rows; a full-rank program is returned as is."""
    keep = presolve_rows(p)
    if keep.size == p.m:
        return p
    return ConicProgram(p.objective, p.eq_matrix[keep], p.eq_rhs[keep], p.cones)


def _factor(M):
    try:
        return scipy.linalg.cho_factor(M, lower=False, check_finite=False), True
    except np.linalg.LinAlgError:
        pass
    # near-singular late in the iteration; regularize just enough to factor
    reg = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(M)))))
    for _ in range(12):
        try:
            return scipy.linalg.cho_factor(M + reg * np.eye(M.shape[0]),
                                           lower=False, check_finite=False), True
        except np.linalg.LinAlgError:
            reg *= 100.0
    return np.linalg.pinv(M), False


def _back(factor, rhs):
    F, is_chol = factor
    if is_chol:
        return scipy.linalg.cho_solve(F, rhs, check_finite=False)
    return F @ rhs


def solve(p: ConicProgram, tol: Optional[SolverTolerances] = None) -> ConicSolution:
    """Solve a cone program; see the module docstring for the problem pair."""
    tol = tol or SolverTolerances()
    keep = presolve_rows(p)
    A, b, c = p.eq_matrix[keep], p.eq_rhs[keep], p.objective
    cones = p.cones
    m, nvar = A.shape
    nu = cones.degree
    e = cones.identity()
    bnorm = 1.0 + np.abs(b).max(initial=0.0)
    cnorm = 1.0 + np.abs(c).max(initial=0.0)

    # least-squares start shifted into the cone interior
    if m:
        AAt = _factor(A @ A.T)
        x = A.T @ _back(AAt, b)
        y = _back(AAt, A @ c)
    else:
        x = np.zeros(nvar)
        y = np.zeros(0)
    s = c - A.T @ y
    x = cones.shift_inside(x)
    s = cones.shift_inside(s)

    history = []
    status = Status.SLOW_PROGRESS
    step = 0.0
    it = 0
    for it in range(tol.max_iters + 1):
        rp = b - A @ x
        rd = c - A.T @ y - s
        pres = float(np.abs(rp).max(initial=0.0)) / bnorm
        dres = float(np.abs(rd).max(initial=0.0)) / cnorm
        comp = float(x @ s)
        pobj, dobj = float(c @ x), float(b @ y)
        history.append(IterRecord(it, pobj, dobj, comp, pres, dres, step))
        log.debug("it %3d pobj % .10e dobj % .10e gap %.2e pres %.2e dres %.2e",
                  it, pobj, dobj, comp, pres, dres)

        gap_scale = max(1.0, min(abs(pobj), abs(dobj)))
        if (pres <= tol.feas_tol and dres <= tol.feas_tol
                and comp <= tol.gap_tol * gap_scale
                and abs(pobj - dobj) <= tol.gap_tol * gap_scale):
            status = Status.OPTIMAL
            break
        if dobj > 0 and np.abs(A.T @ y + s).max(initial=0.0) <= tol.feas_tol * dobj:
            status = Status.INFEASIBLE
            break
        if pobj < 0 and np.abs(A @ x).max(initial=0.0) <= tol.feas_tol * -pobj:
            status = Status.UNBOUNDED
            break
        if it == tol.max_iters:
            break

        W = cones.nt_scaling(x, s)
        lam = W.lam
        mu = comp / nu
        G = W.scale_columns(A)
        factor = _factor(G @ G.T)
        w_rd = W.apply(rd, inverse=True)

        def direction(rc):
            q = cones.divide(lam, rc)
            dy = _back(factor, rp - G @ (q - w_rd))
            dxs = G.T @ dy + q - w_rd
            return dxs, dy, q - dxs

        lam2 = cones.product(lam, lam)
        dxa, _, dsa = direction(-lam2)
        alpha_a = min(1.0, cones.max_step(lam, dxa), cones.max_step(lam, dsa))
        mu_a = float((lam + alpha_a * dxa) @ (lam + alpha_a * dsa)) / nu
        sigma = min(1.0, max(0.0, mu_a / mu)) ** 3 if mu > 0 else 0.0

        rc = sigma * mu * e - lam2 - cones.product(dxa, dsa)
        dxs, dy, dss = direction(rc)
        step = min(1.0, tol.step_fraction *
                   min(cones.max_step(lam, dxs), cones.max_step(lam, dss)))
        if not np.isfinite(step) or step < 1e-12:
            log.debug("step collapsed at iteration %d", it)
            break
        x_new = x + step * W.apply(dxs, inverse=True)
        s_new = s + step * W.apply(dss)
        y_new = y + step * dy
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(s_new))
                and np.all(np.isfinite(y_new))
                and cones.interior_margin(x_new).min() > 0
                and cones.interior_margin(s_new).min() > 0):
            # rounding pushed the iterate onto the boundary; keep the last good one
            log.debug("iterate left the cone interior at iteration %d", it)
            break
        x, s, y = x_new, s_new, y_new

    dual_eq = np.zeros(p.m)
    dual_eq[keep] = y
    if status is Status.INFEASIBLE:
        scale = float(b @ y)
        return ConicSolution(x, dual_eq / scale, s / scale, float(c @ x), 1.0,
                             np.inf, status, it, pres, dres, history)
    if status is Status.UNBOUNDED:
        scale = float(-(c @ x))
        return ConicSolution(x / scale, dual_eq, s, -1.0, float(b @ y),
                             np.inf, status, it, pres, dres, history)
    if status is Status.OPTIMAL and all(isinstance(blk, Nonneg) for blk in cones.blocks):
        x = _polish_vertex(A, b, c, x, s)
        pres = float(np.abs(b - A @ x).max(initial=0.0)) / bnorm
    return ConicSolution(x, dual_eq, s, float(c @ x), float(b @ y), float(x @ s),
                         status, it, pres, dres, history)


def _polish_vertex(A, b, c, x, s):
    """Snap an LP solution onto its vertex: zero the entries complementary to
    a larger dual slack and re-solve the equalities for the rest. The snapped
    point is kept only if it stays feasible and does not raise the objective
    beyond rounding."""
    fixed = x < s
    free = ~fixed
    xp = np.zeros_like(x)
    if np.any(free):
        Af = A[:, free]
        if Af.shape[0]:
            corr, *_ = np.linalg.lstsq(Af, b - Af @ x[free], rcond=None)
            xp[free] = x[free] + corr
        else:
            xp[free] = x[free]
    feasible = np.all(xp >= 0) and (
        A.shape[0] == 0 or np.abs(A @ xp - b).max() <= np.abs(A @ x - b).max() + 1e-15)
    if feasible and c @ xp <= c @ x + 1e-12 * (1 + abs(c @ x)):
        return xp
    return x


# -- debug text format ------------------------------------------------------

def dump_program(p: ConicProgram) -> str:
    """Serialize a program to the line-oriented debug format (see README)."""
    lines = ["conic-program v1", f"nvar {p.nvar}", f"m {p.m}"]
    for blk in p.cones.blocks:
        kind = "nonneg" if isinstance(blk, Nonneg) else "soc"
        lines.append(f"cone {kind} {blk.size}")
    for j, cj in enumerate(p.objective):
        if cj != 0:
            lines.append(f"c {j} {cj:.17g}")
    rows, cols = np.nonzero(p.eq_matrix)
    for i, j in zip(rows, cols):
        lines.append(f"a {i} {j} {p.eq_matrix[i, j]:.17g}")
    for i, bi in enumerate(p.eq_rhs):
        if bi != 0:
            lines.append(f"b {i} {bi:.17g}")
    return "\n".join(lines) + "\n"


def load_program(text: str) -> ConicProgram:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ["conic-program", "v1"]:
        raise ValueError("not a conic-program v1 file")
    nvar = m = None
    blocks, entries = [], []
    c_items, b_items = [], []
    for parts in lines[1:]:
        tag = parts[0]
        if tag == "nvar":
            nvar = int(parts[1])
        elif tag == "m":
            m = int(parts[1])
        elif tag == "cone":
            cls = {"nonneg": Nonneg, "soc": SecondOrder}[parts[1]]
            blocks.append(cls(int(parts[2])))
        elif tag == "c":
            c_items.append((int(parts[1]), float(parts[2])))
        elif tag == "a":
            entries.append((int(parts[1]), int(parts[2]), float(parts[3])))
        elif tag == "b":
            b_items.append((int(parts[1]), float(parts[2])))
        else:
            raise ValueError(f"unknown record {tag!r}")
    if nvar is None or m is None:
        raise ValueError("missing nvar/m header")
    c = np.zeros(nvar)
    for j, v in c_items:
        c[j] = v
    A = np.zeros((m, nvar))
    for i, j, v in entries:
        A[i, j] = v
    b = np.zeros(m)
    for i, v in b_items:
        b[i] = v
    return ConicProgram(c, A, b, ConeSpec(blocks))
