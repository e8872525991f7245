"""Command-line front end.

Exit codes: 0 on success, 1 when an estimator or oracle fails numerically,
2 for usage, configuration and I/O problems.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import diagnostics, harness, theory
from .errors import ConfigError, ExIndexError, InvalidParameter, UsageError
from .estimators import (
    ESTIMATOR_IDS,
    Quantile,
    hill_estimator,
    intervals_estimator,
    resolve_threshold,
    scp_estimator,
)
from .models import Sre, simulate
from .special import riemann_zeta

SEED_ENV = "EXINDEX_SEED"
MIN_INGEST_LENGTH = 100


# ---------------------------------------------------------------------------
# series files


def format_series(values, model, seed, burn_in) -> str:
    lines = [
        "# exindex series",
        f"# model: {json.dumps(harness.model_to_dict(model), sort_keys=True)}",
        f"# seed: {seed}",
        f"# burn_in: {burn_in}",
        f"# n: {len(values)}",
    ]
    lines += [repr(float(v)) for v in values]
    return "\n".join(lines) + "\n"


def read_series(path) -> np.ndarray:
    """Read one value per line, skipping blank lines and ``#`` comments."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: cannot parse {text!r}") from None
    if not values:
        raise ConfigError(f"{path}: no values")
    x = np.asarray(values)
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"{path}: non-finite values")
    return x


def series_model(path) -> dict | None:
    """Model mapping recorded in a series header, if any."""
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# model:"):
                return json.loads(line.split(":", 1)[1])
    return None


# ---------------------------------------------------------------------------
# ingestion


@dataclass(frozen=True)
class IngestSpec:
    path: str
    column: str | int = 0
    transform: str = "none"  # none | logReturns | absolute
    delimiter: str = ","


def ingest(spec: IngestSpec) -> np.ndarray:
    """Parse a delimited text file into a transformed series.

    A header row is detected when the chosen column does not parse as a
    number on the first line. Unparsable rows are reported together with
    their line numbers.
    """
    if spec.transform not in ("none", "logReturns", "absolute"):
        raise InvalidParameter(f"unknown transform {spec.transform!r}")
    with open(spec.path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter=spec.delimiter))
    rows = [(i, row) for i, row in enumerate(rows, start=1) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ConfigError(f"{spec.path}: empty file")

    column = spec.column
    if isinstance(column, str) and column.lstrip("-").isdigit():
        column = int(column)
    first = rows[0][1]
    header = None
    if isinstance(column, str):
        header = [cell.strip() for cell in first]
        if column not in header:
            raise ConfigError(f"{spec.path}: no column named {column!r}")
        column = header.index(column)
        rows = rows[1:]
    else:
        try:
            float(first[column])
        except (ValueError, IndexError):
            rows = rows[1:]

    values, bad = [], []
    for lineno, row in rows:
        try:
            values.append(float(row[column]))
        except (ValueError, IndexError):
            bad.append(lineno)
    if bad:
        shown = ", ".join(map(str, bad[:10])) + (" ..." if len(bad) > 10 else "")
        raise ConfigError(f"{spec.path}: unparsable rows at lines {shown}")
    x = np.asarray(values, dtype=float)
    if spec.transform == "logReturns":
        if np.any(x <= 0):
            raise ConfigError(f"{spec.path}: log returns need positive prices")
        x = np.diff(np.log(x))
    elif spec.transform == "absolute":
        x = np.abs(x)
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"{spec.path}: non-finite values after transform")
    return x


# ---------------------------------------------------------------------------
# argument helpers


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _add_model_flags(p, required=True):
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=["ar1", "sre", "maxma", "iid"], required=required)
    g.add_argument("--phi", type=float)
    g.add_argument("--noise", choices=["student", "pareto", "normal"], default="student")
    g.add_argument("--df", type=float)
    g.add_argument("--alpha-noise", dest="noise_alpha", type=float, help="Pareto tail index")
    g.add_argument("--p-plus", type=float, default=1.0)
    g.add_argument("--log-a-mean", type=float, default=-0.5)
    g.add_argument("--log-a-sd", type=float, default=1.0)
    g.add_argument("--b", type=float, default=1.0)
    g.add_argument("--window", type=int)
    g.add_argument("--n", type=int, default=5000)
    g.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV}, then 0")
    g.add_argument("--burn-in", type=int)


def _model_from_args(args):
    fields = {
        "kind": args.model,
        "phi": args.phi,
        "noise": args.noise,
        "df": args.df,
        "alpha": args.noise_alpha,
        "p_plus": args.p_plus,
        "log_a_mean": args.log_a_mean,
        "log_a_sd": args.log_a_sd,
        "b": args.b,
        "window": args.window,
    }
    return harness.model_from_dict({k: v for k, v in fields.items() if v is not None}, where="flags")


def _input_series(args):
    """Series from --in or from model flags; absolute values where the model is two-sided."""
    if args.input:
        x = read_series(args.input)
        recorded = series_model(args.input)
        if args.absolute is None and recorded is not None:
            absolute = recorded.get("kind") != "sre"
        else:
            absolute = bool(args.absolute)
        return (np.abs(x) if absolute else x), absolute
    if not args.model:
        raise UsageError("give --in PATH or model flags (--model ...)")
    model = _model_from_args(args)
    ts = simulate(model, args.n, _seed(args), args.burn_in)
    absolute = not isinstance(model, Sre) if args.absolute is None else bool(args.absolute)
    return (np.abs(ts.values) if absolute else ts.values), absolute


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    Path(out).write_text(text)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args):
    model = _model_from_args(args)
    ts = simulate(model, args.n, _seed(args), args.burn_in)
    _write(format_series(ts.values, model, ts.seed, ts.burn_in), args.out)


def cmd_estimate(args):
    x, _ = _input_series(args)
    est = args.estimator
    name = harness.PARAM_NAMES[est]
    param = getattr(args, name)
    if param is None and not (est == "int" and args.u is not None):
        raise UsageError(f"estimator {est} needs --{name}")
    rules = harness.default_hyperparameters(est, x.size)
    u = args.u
    if u is None and args.quantile is not None:
        u = resolve_threshold(x, Quantile(args.quantile))
    alpha_hat = None
    if est == "scp":
        auto = args.alpha in (None, "auto")
        alpha = hill_estimator(x, rules.hill_k) if auto else float(args.alpha)
        alpha_hat = alpha if auto else None
        s = args.s if args.s is not None else rules.scp_s(param)
        rec = scp_estimator(x, param, s, alpha)
    elif est == "int" and param is None:
        rec = intervals_estimator(x, u)
    else:
        rec = harness.evaluate(x, est, param, u=u)
    hyper = dict(rec.hyper)
    if alpha_hat is not None:
        hyper["alphaHat"] = alpha_hat
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["estimator", "hyper", "value", "counts", "flags"])
    w.writerow([
        rec.estimator,
        ";".join(f"{k}={v!r}" for k, v in hyper.items()),
        repr(rec.value),
        ";".join(f"{k}={v!r}" for k, v in rec.counts.items()),
        ";".join(rec.flags),
    ])


def _scalar(value, digits):
    return f"{value:.{digits}f}" if digits is not None else repr(float(value))


def cmd_theory(args):
    sub = args.theory_cmd
    if sub == "ar1":
        out = [theory.ar1_theta(args.phi, args.alpha)]
    elif sub == "maxma":
        out = [theory.max_ma_theta(args.window)]
    elif sub == "sre-first-order":
        out = [theory.sre_theta_first_order()]
    elif sub == "sre-mc":
        est = theory.sre_theta_mc(args.log_a_mean, args.log_a_sd, args.horizon, args.reps, _seed(args))
        out = [est.value, est.stderr]
    elif sub == "br":
        res = theory.brown_resnick_theta(args.delta, args.tol)
        out = [res.value]
    elif sub == "zeta":
        out = [riemann_zeta(args.s)]
    else:  # pragma: no cover - argparse enforces the choices
        raise UsageError(f"unknown theory command {sub}")
    print(" ".join(_scalar(v, args.digits) for v in out))


def cmd_mc(args):
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    env_seed = os.environ.get(SEED_ENV)
    config = harness.load_config(path.read_text(), master_seed=env_seed)
    if args.reps is not None:
        config = replace(config, reps=args.reps)
    report = harness.run_experiment(config, workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{out}.json").write_text(report.to_json())
    Path(f"{out}.csv").write_text(report.to_csv())
    print(f"wrote {out}.json and {out}.csv (true theta {report.true_theta!r})")


def cmd_ingest(args):
    spec = IngestSpec(args.input, args.column, args.transform, args.delimiter)
    x = ingest(spec)
    if x.size < MIN_INGEST_LENGTH:
        raise InvalidParameter(f"{x.size} usable observations, need at least {MIN_INGEST_LENGTH}")
    if args.absolute:
        x = np.abs(x)
    estimators = args.estimators.split(",")
    for est in estimators:
        if est not in ESTIMATOR_IDS:
            raise InvalidParameter(f"unknown estimator {est!r}")
    grid = {est: harness.DEFAULT_GRID[est] for est in estimators}
    if args.grid:
        values = tuple(int(tok) for tok in args.grid.split(","))
        grid = {est: values for est in estimators}
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["estimator", "param_name", "param_value", "value", "error"])
    for est, params in grid.items():
        for p in params:
            if p > x.size:
                continue
            try:
                rec = harness.evaluate(x, est, p)
                w.writerow([est, harness.PARAM_NAMES[est], p, repr(rec.value), ""])
            except ExIndexError as exc:
                w.writerow([est, harness.PARAM_NAMES[est], p, "", type(exc).__name__])


def cmd_diagnose(args):
    x, _ = _input_series(args)
    u = args.u if args.u is not None else resolve_threshold(x, Quantile(args.quantile))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["section", "key", "value"])
    w.writerow(["theta_n", f"r={args.r};u={u!r}", repr(diagnostics.theta_n_empirical(x, args.r, u))])
    hist = diagnostics.cluster_size_histogram(x, args.r, u)
    for size, freq in hist.counts.items():
        w.writerow(["cluster_size", size, freq])
    ratio_u = resolve_threshold(np.abs(x), Quantile(args.ratio_quantile))
    for lag in args.lags:
        sample = diagnostics.empirical_spectral_ratio(x, u=ratio_u, lag=lag)
        for key, value in sample.summary.items():
            w.writerow([f"ratio_lag_{lag}", key, repr(value)])


# ---------------------------------------------------------------------------
# parser


def _alpha_arg(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number or 'auto'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exindex", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="simulate a series, one value per line")
    _add_model_flags(p)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("estimate", help="run one estimator on a file or a simulated series")
    p.add_argument("--in", dest="input", help="series file")
    _add_model_flags(p, required=False)
    p.add_argument("--estimator", choices=ESTIMATOR_IDS, required=True)
    p.add_argument("--r", type=int, help="block length")
    p.add_argument("--l", type=int, help="run length")
    p.add_argument("--x", type=int, help="intervals threshold divisor, u = [n/x]-th largest")
    p.add_argument("--u", type=float, help="explicit threshold")
    p.add_argument("--quantile", type=float, help="threshold as a sample quantile")
    p.add_argument("--s", type=int, help="scp: rank of the block-sum threshold")
    p.add_argument("--alpha", type=_alpha_arg, default="auto", help="scp tail index or 'auto' (Hill)")
    p.add_argument("--absolute", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_estimate)

    p = subs.add_parser("theory", help="ground-truth extremal indices")
    p.add_argument("--digits", type=int, help="print with this many decimals")
    tsub = p.add_subparsers(dest="theory_cmd", required=True)
    q = tsub.add_parser("ar1", help="1 - |phi|^alpha")
    q.add_argument("--phi", type=float, required=True)
    q.add_argument("--alpha", type=float, required=True)
    q = tsub.add_parser("maxma", help="1 / window")
    q.add_argument("--window", type=int, required=True)
    tsub.add_parser("sre-first-order", help="zeta approximation for log A ~ N(-1/2, 1)")
    q = tsub.add_parser("sre-mc", help="ladder Monte Carlo for the SRE (value, stderr)")
    q.add_argument("--log-a-mean", type=float, default=-0.5)
    q.add_argument("--log-a-sd", type=float, default=1.0)
    q.add_argument("--horizon", type=int, default=10_000)
    q.add_argument("--reps", type=int, default=1_000_000)
    q.add_argument("--seed", type=int)
    q = tsub.add_parser("br", help="Brown-Resnick extremal index on the grid delta Z")
    q.add_argument("--delta", type=float, required=True)
    q.add_argument("--tol", type=float, default=1e-12)
    q = tsub.add_parser("zeta", help="Riemann zeta at real s")
    q.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_theory)

    p = subs.add_parser("mc", help="run a Monte Carlo experiment from a config file")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.json and PREFIX.csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--reps", type=int, help="override the configured replication count")
    p.set_defaults(func=cmd_mc)

    p = subs.add_parser("ingest", help="estimator sweep on delimited real data")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--column", default="0", help="column name or 0-based index")
    p.add_argument("--transform", choices=["none", "logReturns", "absolute"], default="none")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--estimators", default=",".join(ESTIMATOR_IDS))
    p.add_argument("--grid", help="comma-separated hyperparameter values for every estimator")
    p.add_argument("--absolute", action="store_true", help="estimate on |x| after the transform")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("diagnose", help="cluster histogram and spectral ratio summaries")
    p.add_argument("--in", dest="input")
    _add_model_flags(p, required=False)
    p.add_argument("--r", type=int, default=50)
    p.add_argument("--u", type=float)
    p.add_argument("--quantile", type=float, default=0.995)
    p.add_argument("--lags", type=int, nargs="+", default=[1])
    p.add_argument("--ratio-quantile", type=float, default=0.999, help="quantile of |x| conditioned on by the ratios")
    p.add_argument("--absolute", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ExIndexError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"IOError: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
