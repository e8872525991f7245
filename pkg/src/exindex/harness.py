"""Monte Carlo comparison of the extremal index estimators.

Each replication is simulated from its own derived seed and evaluated on the
full hyperparameter grid; results are stored by replication index, so the
report does not depend on how replications are spread over workers.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, EmptySample, ExIndexError, InvalidParameter
from .estimators import (
    ESTIMATOR_IDS,
    EstimateRecord,
    UpperOrderStatistic,
    blocks_estimator,
    disjoint_blocks_estimator,
    hill_estimator,
    intervals_estimator,
    northrop_disjoint,
    northrop_sliding,
    resolve_threshold,
    runs_estimator,
    scp_estimator,
    sliding_blocks_estimator,
)
from .models import (
    Ar1,
    Iid,
    MaxMovingAverage,
    ModelSpec,
    Pareto,
    Sre,
    StandardNormal,
    StudentT,
    derive_replication_seed,
    simulate,
)
from .theory import ar1_theta, max_ma_theta, sre_theta_first_order, sre_theta_mc

SCHEMA_VERSION = 1

PARAM_NAMES = {
    "bl": "r",
    "dbl": "r",
    "slbl": "r",
    "runs": "l",
    "int": "x",
    "Nsl": "r",
    "Ndbl": "r",
    "scp": "r",
}

POWERS_OF_TWO = (2, 4, 8, 16, 32, 64, 128, 256, 512)

DEFAULT_GRID = {
    "bl": POWERS_OF_TWO,
    "dbl": POWERS_OF_TWO,
    "slbl": POWERS_OF_TWO,
    "runs": (1, 2, 4, 8, 16, 32, 64, 128),
    "int": (4, 8, 16, 32, 64, 128),
    "Nsl": POWERS_OF_TWO,
    "Ndbl": POWERS_OF_TWO,
    "scp": POWERS_OF_TWO,
}


# ---------------------------------------------------------------------------
# hyperparameter rules


@dataclass(frozen=True)
class HyperRules:
    """Threshold and selection rules for one estimator at sample size `n`."""

    estimator: str
    n: int

    @property
    def param_name(self) -> str:
        return PARAM_NAMES[self.estimator]

    @property
    def pot_rank(self) -> int:
        # rank of the upper order statistic used as u by bl, dbl and runs
        return math.ceil(self.n**0.6)

    @property
    def hill_k(self) -> int:
        return max(2, math.floor(self.n**0.8))

    def threshold(self, param):
        """Threshold rule as a :class:`ThresholdSpec`, or None if not used."""
        if self.estimator in ("bl", "dbl", "runs"):
            return UpperOrderStatistic(self.pot_rank)
        if self.estimator == "slbl":
            return UpperOrderStatistic(int(param))
        if self.estimator == "int":
            return UpperOrderStatistic(max(1, self.n // int(param)))
        return None

    def scp_s(self, r: int) -> int:
        return max(2, math.floor(self.n**0.6 / r))


def default_hyperparameters(estimator: str, n: int) -> HyperRules:
    if estimator not in ESTIMATOR_IDS:
        raise InvalidParameter(f"unknown estimator {estimator!r}")
    if n < 1:
        raise InvalidParameter("n must be positive")
    return HyperRules(estimator, int(n))


def evaluate(series, estimator: str, param, *, u=None, alpha=None) -> EstimateRecord:
    """Run one estimator at one grid point using the default rules.

    `u` and `alpha` override the threshold rule and the Hill step.
    """
    x = np.asarray(getattr(series, "values", series), dtype=float)
    rules = default_hyperparameters(estimator, x.size)
    if u is None:
        spec = rules.threshold(param)
        if spec is not None:
            u = resolve_threshold(x, spec)
    p = int(param)
    if estimator == "bl":
        return blocks_estimator(x, p, u)
    if estimator == "dbl":
        return disjoint_blocks_estimator(x, p, u)
    if estimator == "slbl":
        return sliding_blocks_estimator(x, p, u)
    if estimator == "runs":
        return runs_estimator(x, u, p)
    if estimator == "int":
        rec = intervals_estimator(x, u)
        rec.hyper["x"] = p
        return rec
    if estimator == "Nsl":
        return northrop_sliding(x, p)
    if estimator == "Ndbl":
        return northrop_disjoint(x, p)
    if estimator == "scp":
        alpha_hat = hill_estimator(x, rules.hill_k) if alpha is None else float(alpha)
        rec = scp_estimator(x, p, rules.scp_s(p), alpha_hat)
        return rec
    raise InvalidParameter(f"unknown estimator {estimator!r}")


# ---------------------------------------------------------------------------
# models <-> plain mappings


def model_to_dict(model: ModelSpec) -> dict:
    def noise_dict(noise):
        if isinstance(noise, StudentT):
            return {"noise": "student", "df": noise.df}
        if isinstance(noise, Pareto):
            return {"noise": "pareto", "alpha": noise.alpha, "p_plus": noise.p_plus}
        return {"noise": "normal"}

    if isinstance(model, Ar1):
        return {"kind": "ar1", "phi": model.phi, **noise_dict(model.noise)}
    if isinstance(model, Sre):
        return {"kind": "sre", "log_a_mean": model.log_a_mean, "log_a_sd": model.log_a_sd, "b": model.b}
    if isinstance(model, MaxMovingAverage):
        return {"kind": "maxma", "window": model.window, **noise_dict(model.noise)}
    return {"kind": "iid", **noise_dict(model.noise)}


def _num(mapping, key, default=None, cast=float, where="model"):
    raw = mapping.get(key, default)
    if raw is None:
        raise ConfigError(f"[{where}] missing field '{key}'")
    try:
        value = cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{where}] field '{key}': cannot parse {raw!r}") from None
    if cast is int and float(raw) != value:
        raise ConfigError(f"[{where}] field '{key}': expected an integer, got {raw!r}")
    return value


def model_from_dict(mapping, where="model") -> ModelSpec:
    """Build a model from string or numeric fields (config files and CLI flags)."""
    kind = str(mapping.get("kind", "")).lower()

    def noise():
        name = str(mapping.get("noise", "student")).lower()
        if name == "student":
            return StudentT(_num(mapping, "df", where=where))
        if name == "pareto":
            return Pareto(_num(mapping, "alpha", where=where), _num(mapping, "p_plus", 1.0, where=where))
        if name == "normal":
            return StandardNormal()
        raise ConfigError(f"[{where}] field 'noise': unknown noise law {name!r}")

    if kind == "ar1":
        return Ar1(_num(mapping, "phi", where=where), noise())
    if kind == "sre":
        return Sre(
            _num(mapping, "log_a_mean", -0.5, where=where),
            _num(mapping, "log_a_sd", 1.0, where=where),
            _num(mapping, "b", 1.0, where=where),
        )
    if kind == "maxma":
        return MaxMovingAverage(_num(mapping, "window", cast=int, where=where), noise())
    if kind == "iid":
        return Iid(noise())
    raise ConfigError(f"[{where}] field 'kind': unknown model {kind!r}")


def true_theta(model: ModelSpec) -> float:
    """Extremal index of the series the estimators see (``|X|`` except for the SRE)."""
    if isinstance(model, Ar1):
        return ar1_theta(model.phi, model.noise.tail_index)
    if isinstance(model, MaxMovingAverage):
        return max_ma_theta(model.window)
    if isinstance(model, Iid):
        return 1.0
    if (model.log_a_mean, model.log_a_sd) == (-0.5, 1.0):
        return sre_theta_first_order()
    return sre_theta_mc(model.log_a_mean, model.log_a_sd, reps=200_000).value


def estimator_input(model: ModelSpec, values) -> np.ndarray:
    """Absolute values for two-sided models, the raw series for the SRE."""
    values = np.asarray(values, dtype=float)
    return values if isinstance(model, Sre) else np.abs(values)


# ---------------------------------------------------------------------------
# experiment config


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n: int = 5000
    reps: int = 200
    master_seed: int = 1
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    burn_in: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameter("n must be at least 2")
        if self.reps < 1:
            raise InvalidParameter("reps must be at least 1")
        if not self.grid:
            raise InvalidParameter("estimator grid is empty")
        for est, params in self.grid.items():
            if est not in ESTIMATOR_IDS:
                raise InvalidParameter(f"unknown estimator {est!r}")
            if not params:
                raise InvalidParameter(f"empty grid for {est}")
            for p in params:
                if int(p) != p or not 1 <= p <= self.n:
                    raise InvalidParameter(f"{est}: grid value {p} outside 1..{self.n}")

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "n": self.n,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "burn_in": self.burn_in,
            "grid": {est: [int(p) for p in params] for est, params in self.grid.items()},
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(text: str, *, master_seed=None) -> ExperimentConfig:
    """Parse an INI-style experiment document.

    Sections: ``[experiment]`` (n, reps, master_seed, burn_in), ``[model]``
    (kind plus model fields) and ``[grid]`` (estimator = whitespace-separated
    values). A missing ``master_seed`` falls back to `master_seed`.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # estimator ids are case sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    for section in ("experiment", "model"):
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]")
    exp = parser["experiment"]
    seed = exp.get("master_seed", master_seed)
    if seed is None:
        raise ConfigError("[experiment] missing field 'master_seed' (or set EXINDEX_SEED)")
    model = model_from_dict(dict(parser["model"]))
    grid = dict(DEFAULT_GRID)
    if parser.has_section("grid"):
        grid = {}
        for est, raw in parser["grid"].items():
            try:
                grid[est] = tuple(int(tok) for tok in raw.replace(",", " ").split())
            except ValueError:
                raise ConfigError(f"[grid] field '{est}': expected integers, got {raw!r}") from None
    burn_in = exp.get("burn_in")
    try:
        return ExperimentConfig(
            model=model,
            n=_num(exp, "n", cast=int, where="experiment"),
            reps=_num(exp, "reps", 200, cast=int, where="experiment"),
            master_seed=_num({"s": seed}, "s", cast=int, where="experiment"),
            grid=grid,
            burn_in=None if burn_in is None else _num(exp, "burn_in", cast=int, where="experiment"),
        )
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# running


def run_replication(config: ExperimentConfig, index: int) -> dict:
    """Evaluate the whole grid on replication `index`.

    Returns ``{(estimator, param): (value, error_name)}``.
    """
    seed = derive_replication_seed(config.master_seed, index)
    ts = simulate(config.model, config.n, seed, config.burn_in)
    x = estimator_input(config.model, ts.values)
    alpha_hat = None
    out = {}
    for est, params in config.grid.items():
        for p in params:
            try:
                if est == "scp" and alpha_hat is None:
                    alpha_hat = hill_estimator(x, default_hyperparameters("scp", x.size).hill_k)
                rec = evaluate(x, est, p, alpha=alpha_hat if est == "scp" else None)
                out[(est, int(p))] = (float(rec.value), None)
            except ExIndexError as exc:
                out[(est, int(p))] = (None, type(exc).__name__)
    return out


def _run_chunk(args):
    config, indices = args
    return [(i, run_replication(config, i)) for i in indices]


def summarize(values) -> dict:
    """Boxplot statistics with lower-interpolation order statistics.

    Whiskers reach the most extreme data within 1.5 IQR of the quartiles.
    """
    v = np.sort(np.asarray([x for x in values if x is not None], dtype=float))
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise EmptySample("no finite values to summarize")
    q25, med, q75 = (float(np.quantile(v, q, method="lower")) for q in (0.25, 0.5, 0.75))
    iqr = q75 - q25
    lo = float(v[v >= q25 - 1.5 * iqr].min())
    hi = float(v[v <= q75 + 1.5 * iqr].max())
    return {
        "median": med,
        "q25": q25,
        "q75": q75,
        "whisker_low": lo,
        "whisker_high": hi,
        "min": float(v[0]),
        "max": float(v[-1]),
        "count": int(v.size),
    }


@dataclass
class PointResult:
    values: list
    errors: list

    @property
    def error_count(self) -> int:
        return sum(e is not None for e in self.errors)

    def summary(self):
        try:
            s = summarize(self.values)
        except EmptySample:
            s = {}
        s["error_count"] = self.error_count
        return s


@dataclass
class McReport:
    config: ExperimentConfig
    true_theta: float
    points: dict  # (estimator, param) -> PointResult

    def point(self, estimator, param) -> PointResult:
        return self.points[(estimator, int(param))]

    def median(self, estimator, param) -> float:
        return self.point(estimator, param).summary()["median"]

    def best_point(self, estimator):
        """Grid value whose replicate median lies closest to the true theta."""
        best = None
        for p in self.config.grid[estimator]:
            s = self.point(estimator, p).summary()
            if "median" not in s:
                continue
            gap = abs(s["median"] - self.true_theta)
            if best is None or gap < best[0]:
                best = (gap, int(p), s["median"])
        if best is None:
            raise EmptySample(f"{estimator}: every grid point failed")
        return best[1], best[2]

    def to_json_dict(self) -> dict:
        estimators = {}
        for est, params in self.config.grid.items():
            points = {}
            for p in params:
                pr = self.point(est, p)
                points[str(int(p))] = {
                    "values": pr.values,
                    "errors": pr.errors,
                    "summary": pr.summary(),
                }
            estimators[est] = {"param_name": PARAM_NAMES[est], "points": points}
        return {
            "schema": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "true_theta": self.true_theta,
            "provenance": {"config_hash": self.config.digest(), "code_version": __version__},
            "estimators": estimators,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["estimator", "param_name", "param_value", "replication", "value", "error"])
        for est, params in self.config.grid.items():
            for p in params:
                pr = self.point(est, p)
                for i, (v, e) in enumerate(zip(pr.values, pr.errors)):
                    w.writerow([est, PARAM_NAMES[est], int(p), i, "" if v is None else repr(v), e or ""])
        return buf.getvalue()


def run_experiment(config: ExperimentConfig, workers: int = 1) -> McReport:
    """Run every replication of `config`, optionally across processes."""
    indices = list(range(config.reps))
    if workers <= 1:
        results = _run_chunk((config, indices))
    else:
        size = max(1, math.ceil(len(indices) / (4 * workers)))
        chunks = [(config, indices[i : i + size]) for i in range(0, len(indices), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [item for part in pool.map(_run_chunk, chunks) for item in part]
    by_index = dict(results)
    points = {}
    for est, params in config.grid.items():
        for p in params:
            key = (est, int(p))
            cells = [by_index[i][key] for i in indices]
            points[key] = PointResult([c[0] for c in cells], [c[1] for c in cells])
    return McReport(config, true_theta(config.model), points)
