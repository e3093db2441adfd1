"""Dirichlet simulations of radially separated classes.

Random numbers come from NumPy's PCG64 bit generator (``numpy.random.Generator``),
which produces the same stream on every platform for a given seed. Replication
``r`` of a scenario seeded with ``s`` uses seed ``s + r``; within a replication
each dimension ``d`` gets its own stream keyed by ``(s + r, d)``, so adding or
dropping a dimension does not disturb the others.
"""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import baselines, rdwd
from .core import RdwdError, TrainingSet

log = logging.getLogger(__name__)

METHODS = ("md", "ldwd", "rdwd")
FULL_DIMS = (10, 50, 100, 500, 1000, 5000, 10000, 50000, 100000)


class ScenarioError(RdwdError, ValueError):
    pass


@dataclass(frozen=True)
class DirichletParams:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if a.ndim != 1 or a.size < 1 or not np.all(a > 0):
            raise ValueError("alpha must be a nonempty vector of positive numbers")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def constant(cls, value: float, d: int) -> "DirichletParams":
        return cls(np.full(d, float(value)))

    @property
    def d(self) -> int:
        return self.alpha.size

    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()

    def variance(self) -> np.ndarray:
        a0 = self.alpha.sum()
        return self.alpha * (a0 - self.alpha) / (a0 ** 2 * (a0 + 1.0))


def sample_dirichlet(params: DirichletParams, rng: np.random.Generator,
                     size: Optional[int] = None) -> np.ndarray:
    """Draw from Dirichlet(alpha) by normalizing independent Gamma(alpha_i, 1) draws.

    Returns one point, or ``(size, d)`` points. A draw whose gammas all
    underflow to zero (possible for tiny alpha) is redrawn.
    """
    n = 1 if size is None else int(size)
    g = rng.standard_gamma(params.alpha, size=(n, params.d))
    totals = g.sum(axis=1)
    while np.any(totals == 0.0):
        bad = totals == 0.0
        g[bad] = rng.standard_gamma(params.alpha, size=(int(bad.sum()), params.d))
        totals = g.sum(axis=1)
    out = g / totals[:, None]
    return out[0] if size is None else out


@dataclass(frozen=True)
class ExperimentScenario:
    alpha_plus: float
    alpha_minus: float
    dims: tuple
    n_pos: int = 20
    n_neg: int = 50
    n_test: int = 500
    test_class: str = "both"
    replications: int = 10
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or any(d < 1 for d in dims) or list(dims) != sorted(set(dims)):
            raise ScenarioError("dims must be a nonempty strictly ascending list")
        if self.replications < 1:
            raise ScenarioError("replications must be at least 1")
        if self.n_pos < 1 or self.n_neg < 1 or self.n_test < 1:
            raise ScenarioError("sample sizes must be positive")
        if not (self.alpha_plus > 0 and self.alpha_minus > 0):
            raise ScenarioError("alpha values must be positive")
        if self.test_class not in ("pos", "neg", "both"):
            raise ScenarioError("test_class must be pos, neg or both")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ScenarioError("seed must fit in 64 bits")

    def full(self) -> "ExperimentScenario":
        """Same scenario on the large grid (nine dimensions up to 1e5, 5000 test draws)."""
        return replace(self, dims=FULL_DIMS, n_test=5000, replications=30)


_INT_KEYS = {"n_pos", "n_neg", "n_test", "replications", "seed"}
_FLOAT_KEYS = {"alpha_plus", "alpha_minus"}


def parse_scenario(text: str) -> ExperimentScenario:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key == "dims":
                values[key] = tuple(int(v) for v in val.replace(",", " ").split())
            elif key in ("test_class", "name"):
                values[key] = val
            else:
                raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"line {lineno}: bad value for {key}: {val!r}") from None
    missing = {"alpha_plus", "alpha_minus", "dims"} - values.keys()
    if missing:
        raise ScenarioError(f"missing keys: {', '.join(sorted(missing))}")
    try:
        return ExperimentScenario(**values)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from None


def format_scenario(s: ExperimentScenario) -> str:
    return (f"name = {s.name}\n"
            f"alpha_plus = {s.alpha_plus!r}\n"
            f"alpha_minus = {s.alpha_minus!r}\n"
            f"dims = {', '.join(str(d) for d in s.dims)}\n"
            f"n_pos = {s.n_pos}\nn_neg = {s.n_neg}\nn_test = {s.n_test}\n"
            f"test_class = {s.test_class}\nreplications = {s.replications}\n"
            f"seed = {s.seed}\n")


def load_scenario(path) -> ExperimentScenario:
    """Read a scenario file; a bare name like ``case1-desk`` resolves to a bundled one."""
    path = str(path)
    if not os.path.exists(path):
        bundled = os.path.join(os.path.dirname(__file__), "scenarios",
                               path if path.endswith(".scenario") else path + ".scenario")
        if os.path.exists(bundled):
            path = bundled
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None


# -- error tables -----------------------------------------------------------

@dataclass(frozen=True)
class ErrorRow:
    method: str
    d: int
    fp_mean: float
    fp_sd: float
    fn_mean: float
    fn_sd: float
    avg_mean: float
    avg_sd: float
    reps: int


def _fmt(v: float) -> str:
    if np.isnan(v):
        return ""
    return format(float(v), ".17g")


@dataclass
class ErrorTable:
    rows: list = field(default_factory=list)
    # raw[(method, d)] = array of shape (replications, 2): FP and FN per replication
    raw: dict = field(default_factory=dict, repr=False)

    HEADER = ("method", "d", "fp_mean", "fp_sd", "fn_mean", "fn_sd",
              "avg_mean", "avg_sd", "reps")

    def get(self, method: str, d: int) -> ErrorRow:
        for row in self.rows:
            if row.method == method and row.d == d:
                return row
        raise KeyError((method, d))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows:
            w.writerow([r.method, r.d, _fmt(r.fp_mean), _fmt(r.fp_sd), _fmt(r.fn_mean),
                        _fmt(r.fn_sd), _fmt(r.avg_mean), _fmt(r.avg_sd), r.reps])
        return buf.getvalue()

    def to_plot_csv(self) -> str:
        """Long format ``method,d,metric,value`` for external plotting."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("method", "d", "metric", "value"))
        for r in self.rows:
            for metric in ("fp_mean", "fp_sd", "fn_mean", "fn_sd", "avg_mean", "avg_sd"):
                w.writerow([r.method, r.d, metric, _fmt(getattr(r, metric))])
        return buf.getvalue()


def _summarize(values: np.ndarray) -> tuple:
    ok = values[~np.isnan(values)]
    if ok.size == 0:
        return np.nan, np.nan
    sd = float(np.std(ok, ddof=1)) if ok.size > 1 else 0.0
    return float(np.mean(ok)), sd


def build_table(raw: dict, methods: Sequence[str], dims: Sequence[int]) -> ErrorTable:
    rows = []
    for method in methods:
        for d in dims:
            rates = raw[(method, d)]
            fp, fn = rates[:, 0], rates[:, 1]
            avg = (fp + fn) / 2.0
            fp_m, fp_s = _summarize(fp)
            fn_m, fn_s = _summarize(fn)
            av_m, av_s = _summarize(avg)
            reps = int(np.sum(~(np.isnan(fp) & np.isnan(fn))))
            rows.append(ErrorRow(method, d, fp_m, fp_s, fn_m, fn_s, av_m, av_s, reps))
    return ErrorTable(rows, raw)


# -- running ----------------------------------------------------------------

def fit_method(method: str, data: TrainingSet, rdwd_config=None):
    if method == "md":
        return baselines.md_fit(data)
    if method == "ldwd":
        return baselines.ldwd_fit(data)
    if method == "rdwd":
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", rdwd.MaxItersExceeded)
            warnings.simplefilter("ignore", rdwd.ZeroRadiusWarning)
            model, _ = rdwd.fit(data, rdwd_config)
        return model
    raise ValueError(f"unknown method {method!r}")


def draw_training(rng, alpha_plus, alpha_minus, d, n_pos, n_neg) -> TrainingSet:
    Xp = sample_dirichlet(DirichletParams.constant(alpha_plus, d), rng, n_pos)
    Xn = sample_dirichlet(DirichletParams.constant(alpha_minus, d), rng, n_neg)
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    return TrainingSet(np.vstack([Xp, Xn]), y)


def _replication(args):
    scenario, rep, methods, rdwd_config = args
    out = {}
    for d in scenario.dims:
        rng = np.random.default_rng([scenario.seed + rep, d])
        data = draw_training(rng, scenario.alpha_plus, scenario.alpha_minus, d,
                             scenario.n_pos, scenario.n_neg)
        test_neg = test_pos = None
        if scenario.test_class in ("neg", "both"):
            test_neg = sample_dirichlet(DirichletParams.constant(scenario.alpha_minus, d),
                                        rng, scenario.n_test)
        if scenario.test_class in ("pos", "both"):
            test_pos = sample_dirichlet(DirichletParams.constant(scenario.alpha_plus, d),
                                        rng, scenario.n_test)
        for method in methods:
            try:
                model = fit_method(method, data, rdwd_config)
            except (RdwdError, np.linalg.LinAlgError) as exc:
                log.warning("rep %d d=%d %s failed: %s", rep, d, method, exc)
                out[(method, d)] = (np.nan, np.nan)
                continue
            fp = np.nan if test_neg is None else float(np.mean(model.score(test_neg) >= 0))
            fn = np.nan if test_pos is None else float(np.mean(model.score(test_pos) < 0))
            out[(method, d)] = (fp, fn)
    return out


def _workers(requested: Optional[int]) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("RDWD_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def run_scenario(scenario: ExperimentScenario, methods: Sequence[str] = METHODS,
                 workers: Optional[int] = None, rdwd_config=None) -> ErrorTable:
    """Fit every method on every replication and dimension and tabulate test errors.

    ``workers`` (default: ``$RDWD_THREADS`` or 1) runs replications in
    separate processes; results are combined in replication order, so the
    table does not depend on the worker count. A fit that raises is recorded
    as a missing cell.
    """
    jobs = [(scenario, rep, tuple(methods), rdwd_config)
            for rep in range(scenario.replications)]
    n_workers = min(_workers(workers), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            results = list(pool.map(_replication, jobs))
    else:
        results = [_replication(j) for j in jobs]
    raw = {}
    for method in methods:
        for d in scenario.dims:
            raw[(method, d)] = np.array([res[(method, d)] for res in results], dtype=float)
    return build_table(raw, methods, scenario.dims)


def simulation_one(seed: int, d: int = 50, n_pos: int = 20, n_neg: int = 20,
                   n_test: int = 200, alpha_plus: float = 5.0, alpha_minus: float = 0.5,
                   methods: Sequence[str] = METHODS) -> dict:
    """Single-run experiment: train on Dirichlet(5) vs Dirichlet(0.5) samples in
    ``d = 50`` and count how many of 200 fresh -1 draws each method calls +1."""
    rng = np.random.default_rng(seed)
    data = draw_training(rng, alpha_plus, alpha_minus, d, n_pos, n_neg)
    test = sample_dirichlet(DirichletParams.constant(alpha_minus, d), rng, n_test)
    counts = {}
    for method in methods:
        model = fit_method(method, data)
        counts[method] = int(np.sum(model.score(test) >= 0))
    return counts
