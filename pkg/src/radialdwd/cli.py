"""Command-line interface: ``radialdwd {train,predict,simulate,report}``.

Input tables are CSV with a header row. The first column is a sample id; an
optional ``label`` column (values ``+1``, ``-1`` or ``unknown``) may follow;
every remaining column is a feature. Features are raw counts and are
L1-normalized unless ``--no-normalize`` is given.

Exit codes: 0 success, 2 bad input (the message names the row), 3 fit
failure, 4 dimension mismatch, 5 unreadable scenario.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import sys
import warnings
from typing import Optional, Sequence

import numpy as np
import scipy.stats

from . import baselines, modelfile, rdwd, simlab
from .core import (DimensionMismatch, InvalidTrainingSet, NegativeEntry, RdwdError,
                   TrainingSet, label_from_distance, score_counts)
from .modelfile import ModelFormatError, fmt_float

EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_DIM = 4
EXIT_SCENARIO = 5

LABEL_TOKENS = {"+1": 1, "1": 1, "-1": -1, "unknown": 0}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclasses.dataclass
class CoverageTable:
    ids: list
    labels: Optional[np.ndarray]    # +1 / -1 / 0 (unknown); None without a label column
    counts: np.ndarray
    lines: list               # file line number of each row


def read_table(path: str) -> CoverageTable:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise CliError(EXIT_INPUT, f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    has_label = len(header) > 1 and header[1].lower() == "label"
    first_feature = 2 if has_label else 1
    width = len(header)
    if width <= first_feature:
        raise CliError(EXIT_INPUT, f"{path}: header has no feature columns")
    ids, labels, feats, lines = [], [], [], []
    for lineno, row in enumerate(rows[1:], 2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != width:
            raise CliError(EXIT_INPUT, f"{path}: row {lineno} has {len(row)} fields, "
                                       f"header has {width}")
        ids.append(row[0])
        lines.append(lineno)
        if has_label:
            tok = row[1].strip()
            if tok not in LABEL_TOKENS:
                raise CliError(EXIT_INPUT, f"{path}: row {lineno} has label {tok!r}; "
                                           "expected +1, -1 or unknown")
            labels.append(LABEL_TOKENS[tok])
        try:
            vals = [float(v) for v in row[first_feature:]]
        except ValueError:
            raise CliError(EXIT_INPUT, f"{path}: row {lineno} has a non-numeric feature") from None
        if not all(math.isfinite(v) for v in vals):
            raise CliError(EXIT_INPUT, f"{path}: row {lineno} has a non-finite feature")
        if any(v < 0 for v in vals):
            raise CliError(EXIT_INPUT, f"{path}: row {lineno} has a negative feature")
        feats.append(vals)
    if not ids:
        raise CliError(EXIT_INPUT, f"{path}: no data rows")
    return CoverageTable(ids, np.array(labels, dtype=int) if has_label else None,
                         np.array(feats, dtype=float), lines)


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _parse_weights(text: str):
    if text == "auto":
        return None
    try:
        w = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(EXIT_INPUT, f"--weights expects auto or w+,w- (got {text!r})") from None
    if len(w) != 2 or min(w) <= 0:
        raise CliError(EXIT_INPUT, "--weights needs two positive numbers")
    return w


def _load_model(path):
    try:
        return modelfile.load(path)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read model {path}: {exc.strerror}") from None
    except ModelFormatError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def _scores(model, table: CoverageTable, normalize: bool) -> np.ndarray:
    if table.counts.shape[1] != model.d:
        raise CliError(EXIT_DIM, f"model has dimension {model.d}, input has "
                                 f"{table.counts.shape[1]} features")
    try:
        return score_counts(model, table.counts, normalize=normalize)
    except DimensionMismatch as exc:
        raise CliError(EXIT_DIM, str(exc)) from None


# -- commands ---------------------------------------------------------------

def cmd_train(args) -> int:
    table = read_table(args.input)
    if table.labels is None:
        raise CliError(EXIT_INPUT, f"{args.input}: training input needs a label column")
    unknown = np.flatnonzero(table.labels == 0)
    if unknown.size:
        raise CliError(EXIT_INPUT, f"{args.input}: row {table.lines[int(unknown[0])]} has label "
                                   "unknown; training rows need +1 or -1")
    try:
        data = TrainingSet.from_counts(table.counts, table.labels,
                                       normalize=not args.no_normalize)
    except (InvalidTrainingSet, NegativeEntry) as exc:
        raise CliError(EXIT_INPUT, f"{args.input}: {exc}") from None
    weights = _parse_weights(args.weights)

    out = sys.stdout
    try:
        if args.method == "rdwd":
            cfg = rdwd.RdwdConfig(penalty=args.penalty, stop_eps=args.eps,
                                  step_length=args.delta, weights=weights,
                                  init_mode=args.init)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model, cert = rdwd.fit(data, cfg)
            out.write("method rdwd\n")
            out.write(f"outer_iterations {model.iterations}\n")
            out.write(f"converged {str(model.converged).lower()}\n")
            out.write(f"objective {fmt_float(model.objective)}\n")
            out.write(f"kkt_max_residual {fmt_float(cert.kkt_residuals['max'])}\n")
            out.write(f"radius {fmt_float(model.radius)}\n")
        elif args.method == "md":
            model = baselines.md_fit(data)
            out.write("method md\n")
        else:
            model = baselines.ldwd_fit(data, penalty=args.penalty, weights=weights)
            out.write("method ldwd\n")
            out.write(f"penalty {fmt_float(model.meta['penalty'])}\n")
            out.write(f"solver_status {model.meta['status']}\n")
    except (RdwdError, np.linalg.LinAlgError, ValueError) as exc:
        raise CliError(EXIT_FIT, f"fit failed: {exc}") from None
    if data.n_dropped_zero:
        out.write(f"dropped_zero_rows {data.n_dropped_zero}\n")
    modelfile.save(model, args.out)
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    table = read_table(args.input)
    dist = _scores(model, table, not args.no_normalize)
    pred = label_from_distance(dist)
    rows = [(sid, fmt_float(d), f"{p:+d}") for sid, d, p in zip(table.ids, dist, pred)]
    _write(args.out, _csv_text(("sample_id", "signed_distance", "predicted_label"), rows))
    return 0


def cmd_simulate(args) -> int:
    try:
        scenario = simlab.load_scenario(args.scenario)
    except simlab.ScenarioError as exc:
        raise CliError(EXIT_SCENARIO, f"scenario: {exc}") from None
    if args.full:
        scenario = scenario.full()
    if args.seed is not None:
        try:
            scenario = dataclasses.replace(scenario, seed=args.seed)
        except simlab.ScenarioError as exc:
            raise CliError(EXIT_SCENARIO, f"scenario: {exc}") from None
    cfg = rdwd.RdwdConfig(penalty=args.penalty, stop_eps=args.eps, step_length=args.delta,
                          weights=_parse_weights(args.weights), init_mode=args.init)
    table = simlab.run_scenario(scenario, rdwd_config=cfg)
    _write(args.out, table.to_csv())
    plot_path = args.plot_out
    if plot_path is None and args.out not in (None, "-"):
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        plot_path = stem + "-plot.csv"
    if plot_path is not None:
        _write(plot_path, table.to_plot_csv())
    return 0


def kde_curve(values: np.ndarray, n_min: int = 512, max_points: int = 100001):
    """Gaussian KDE with Silverman's bandwidth on a grid reaching 5 bandwidths
    past the data. Returns ``(grid, density)`` or ``None`` when the values have
    no spread."""
    values = np.asarray(values, dtype=float)
    if values.size < 2 or np.ptp(values) == 0:
        return None
    kde = scipy.stats.gaussian_kde(values, bw_method="silverman")
    h = float(np.sqrt(kde.covariance[0, 0]))
    lo, hi = values.min() - 5 * h, values.max() + 5 * h
    n = int(min(max_points, max(n_min, math.ceil((hi - lo) / (h / 10)) + 1)))
    grid = np.linspace(lo, hi, n)
    return grid, kde(grid)


def cmd_report(args) -> int:
    model = _load_model(args.model)
    table = read_table(args.input)
    if table.labels is None:
        raise CliError(EXIT_INPUT, f"{args.input}: report input needs a label column")
    dist = _scores(model, table, not args.no_normalize)
    pred = label_from_distance(dist)
    lab = table.labels
    pos, neg = lab == 1, lab == -1

    def rate(mask, wrong):
        return float(np.mean(wrong[mask])) if np.any(mask) else float("nan")

    fp = rate(neg, pred == 1)
    fn = rate(pos, pred == -1)
    metrics = [("n_pos", int(pos.sum())), ("n_neg", int(neg.sum())),
               ("n_unknown", int((lab == 0).sum())),
               ("false_positive_rate", fmt_float(fp)),
               ("false_negative_rate", fmt_float(fn)),
               ("average_error", fmt_float((fp + fn) / 2))]
    metrics = [(k, "" if v == "nan" else v) for k, v in metrics]

    rng = np.random.default_rng(args.seed)
    jitter = rng.random(len(table.ids))
    names = {1: "+1", -1: "-1", 0: "unknown"}
    points = [(sid, names[int(l)], fmt_float(d), f"{p:+d}", fmt_float(j))
              for sid, l, d, p, j in zip(table.ids, lab, dist, pred, jitter)]

    kde_rows = []
    for code in (1, -1, 0):
        vals = dist[(lab == code) & np.isfinite(dist)]
        curve = kde_curve(vals)
        if curve is None:
            continue
        for x, dens in zip(*curve):
            kde_rows.append((names[code], fmt_float(x), fmt_float(dens)))

    prefix = args.out
    _write(prefix + "-metrics.csv", _csv_text(("metric", "value"), metrics))
    _write(prefix + "-points.csv", _csv_text(
        ("sample_id", "label", "signed_distance", "predicted_label", "jitter"), points))
    _write(prefix + "-kde.csv", _csv_text(("group", "signed_distance", "density"), kde_rows))
    return 0


# -- argument parsing -------------------------------------------------------

def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _fit_flags(p, with_method=True):
    if with_method:
        p.add_argument("--method", choices=("rdwd", "md", "ldwd"), default="rdwd")
    p.add_argument("--penalty", type=_positive, default=None,
                   help="penalty C (default: chosen from the training data)")
    p.add_argument("--eps", type=_positive, default=1e-4,
                   help="outer-loop objective tolerance (default 1e-4)")
    p.add_argument("--delta", type=_positive, default=1e-3,
                   help="trust-region step length (default 1e-3)")
    p.add_argument("--weights", default="auto", help="auto, or w+,w- class weights")
    p.add_argument("--init", choices=("mean", "median"), default="mean",
                   help="initial center from the +1 class")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radialdwd", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a classifier and write a model file")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--no-normalize", action="store_true")
    _fit_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="signed distances for every input row")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run a Dirichlet simulation scenario")
    p.add_argument("scenario", help="scenario file, or a bundled name such as case1-desk")
    p.add_argument("--out", default=None, help="error-table CSV (default stdout)")
    p.add_argument("--plot-out", default=None,
                   help="long-format plot CSV (default: <out>-plot.csv)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--full", action="store_true",
                   help="full grid: d up to 100000, 5000 test draws, 30 replications")
    _fit_flags(p, with_method=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="error rates, jitter and density data for plotting")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--out", required=True,
                   help="output prefix; writes <out>-metrics.csv, <out>-points.csv, <out>-kde.csv")
    p.add_argument("--seed", type=int, default=0, help="jitter seed")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"radialdwd {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
