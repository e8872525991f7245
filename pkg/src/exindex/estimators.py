"""Extremal index estimators, the Hill estimator and threshold utilities.

All positions are 1-based where they are exposed (exceedance times); the
arrays themselves are ordinary numpy vectors. An exceedance is always the
strict event ``X_t > u``. Sliding windows have length ``r`` and start at
``t = 1, ..., n - r + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    AllWindowsExceed,
    DegenerateCounts,
    DegenerateIntervals,
    InvalidParameter,
    NoExceedances,
    NonIdentifiable,
    NonPositiveOrderStatistic,
    NoQualifyingBlocks,
    TooFewExceedances,
)

ESTIMATOR_IDS = ("bl", "dbl", "slbl", "runs", "int", "Nsl", "Ndbl", "scp")


@dataclass(frozen=True)
class EstimateRecord:
    estimator: str
    hyper: dict
    value: float
    counts: dict = field(default_factory=dict)
    flags: tuple = ()


# ---------------------------------------------------------------------------
# thresholds and blocks


@dataclass(frozen=True)
class ThresholdValue:
    u: float


@dataclass(frozen=True)
class UpperOrderStatistic:
    k: int


@dataclass(frozen=True)
class Quantile:
    q: float


ThresholdSpec = Union[ThresholdValue, UpperOrderStatistic, Quantile]


def _as_array(series) -> np.ndarray:
    values = getattr(series, "values", series)
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidParameter("series must be a non-empty one-dimensional sequence")
    return x


def resolve_threshold(series, spec: ThresholdSpec) -> float:
    """Turn a threshold rule into a number for this sample.

    ``UpperOrderStatistic(k)`` is the k-th largest value. ``Quantile(q)`` is the
    inverse of the empirical distribution function, the smallest sample value
    ``x`` with ``#{X_i <= x} >= q n``.
    """
    if isinstance(spec, ThresholdValue):
        return float(spec.u)
    x = _as_array(series)
    n = x.size
    if isinstance(spec, UpperOrderStatistic):
        if int(spec.k) != spec.k or not 1 <= spec.k <= n:
            raise InvalidParameter(f"order statistic rank must lie in 1..{n}, got {spec.k}")
        return float(np.partition(x, n - int(spec.k))[n - int(spec.k)])
    if isinstance(spec, Quantile):
        if not 0.0 < spec.q < 1.0:
            raise InvalidParameter(f"quantile level must lie in (0, 1), got {spec.q}")
        idx = max(math.ceil(spec.q * n) - 1, 0)
        return float(np.partition(x, idx)[idx])
    raise InvalidParameter(f"unknown threshold spec {spec!r}")


def exceedance_times(series, u: float) -> np.ndarray:
    """1-based positions ``t`` with ``X_t > u``."""
    return np.flatnonzero(_as_array(series) > u) + 1


def _blocks(x, r):
    if int(r) != r or r < 1:
        raise InvalidParameter(f"block length must be a positive integer, got {r}")
    r = int(r)
    k = x.size // r
    if k < 1:
        raise InvalidParameter(f"block length {r} exceeds sample size {x.size}")
    return x[: k * r].reshape(k, r), k


def _window_counts(exc, length):
    # number of exceedances in each window exc[t:t+length], t = 0..n-length
    c = np.concatenate(([0], np.cumsum(exc, dtype=np.int64)))
    return c[length:] - c[:-length]


def _sliding_max(x, r):
    return np.lib.stride_tricks.sliding_window_view(x, r).max(axis=1)


# ---------------------------------------------------------------------------
# blocks family


def _block_counts(x, r, u):
    blocks, k = _blocks(x, r)
    exc = blocks > u
    n_exc = int(exc.sum())
    n_clusters = int(exc.any(axis=1).sum())
    return n_clusters, n_exc, k


def blocks_estimator(series, r: int, u: float) -> EstimateRecord:
    """Number of blocks with an exceedance over the number of exceedances.

    Only the ``k = n // r`` complete blocks are used, for both counts.
    """
    x = _as_array(series)
    n_clusters, n_exc, k = _block_counts(x, r, u)
    if n_exc == 0:
        raise NoExceedances(f"no exceedances of u={u} in the complete blocks")
    return EstimateRecord(
        "bl",
        {"r": int(r), "u": float(u)},
        n_clusters / n_exc,
        {"N": n_exc, "K": n_clusters, "blocks": k},
    )


def disjoint_blocks_estimator(series, r: int, u: float) -> EstimateRecord:
    x = _as_array(series)
    n_clusters, n_exc, k = _block_counts(x, r, u)
    used = k * int(r)
    if n_clusters in (0, k) or n_exc in (0, used):
        raise DegenerateCounts(f"K={n_clusters} of k={k} blocks, N={n_exc} of {used} points")
    value = math.log1p(-n_clusters / k) / (int(r) * math.log1p(-n_exc / used))
    return EstimateRecord(
        "dbl",
        {"r": int(r), "u": float(u)},
        value,
        {"N": n_exc, "K": n_clusters, "blocks": k},
    )


def sliding_blocks_estimator(series, r: int, u: float) -> EstimateRecord:
    x = _as_array(series)
    _, k = _blocks(x, r)
    r = int(r)
    n = x.size
    exc = x > u
    n_exc = int(exc.sum())
    if n_exc == 0:
        raise NoExceedances(f"no exceedances of u={u}")
    quiet = int(np.count_nonzero(_window_counts(exc, r) == 0))
    if quiet == 0:
        raise AllWindowsExceed(f"every window of length {r} contains an exceedance")
    value = -math.log(quiet / (n - r + 1)) / (n_exc / k)
    return EstimateRecord(
        "slbl",
        {"r": r, "u": float(u)},
        value,
        {"N": n_exc, "quiet_windows": quiet, "windows": n - r + 1, "blocks": k},
    )


# ---------------------------------------------------------------------------
# runs and intervals


def runs_estimator(series, u: float, l: int) -> EstimateRecord:
    """Share of exceedances followed by at least `l` non-exceedances."""
    x = _as_array(series)
    n = x.size
    if int(l) != l or not 1 <= l < n:
        raise InvalidParameter(f"run length must lie in 1..{n - 1}, got {l}")
    l = int(l)
    exc = x > u
    n_exc = int(exc.sum())
    if n_exc == 0:
        raise NoExceedances(f"no exceedances of u={u}")
    # i = 1..n-l: exceedance at i and none at i+1..i+l
    after = _window_counts(exc, l)[1:]
    n_runs = int(np.count_nonzero(exc[: n - l] & (after == 0)))
    flags = ("degenerate_zero",) if n_runs == 0 else ()
    return EstimateRecord(
        "runs", {"u": float(u), "l": l}, n_runs / n_exc, {"N": n_exc, "K": n_runs}, flags
    )


def intervals_estimator(series, u: float) -> EstimateRecord:
    """Bias-adjusted moment estimator from inter-exceedance times, capped at 1.

    When the denominator vanishes with a positive numerator the cap is
    returned with a ``denominator_zero`` flag.
    """
    times = exceedance_times(series, u)
    n_exc = times.size
    if n_exc < 2:
        raise TooFewExceedances(f"need at least 2 exceedances of u={u}, got {n_exc}")
    gaps = np.diff(times).astype(np.int64)  # T_2, ..., T_N
    s1 = int(np.sum(gaps - 1))
    s2 = int(np.sum((gaps - 1) * (gaps - 2)))
    num = 2 * s1 * s1
    den = (n_exc - 1) * s2
    counts = {"N": n_exc, "sum_t1": s1, "sum_t1t2": s2}
    flags = []
    if gaps.max() > 2:
        flags.append("long_gap")
    if den == 0:
        if num == 0:
            raise DegenerateIntervals("all inter-exceedance times equal 1")
        flags += ["denominator_zero", "capped"]
        return EstimateRecord("int", {"u": float(u)}, 1.0, counts, tuple(flags))
    raw = num / den
    if raw > 1.0:
        flags.append("capped")
    counts["raw"] = raw
    return EstimateRecord("int", {"u": float(u)}, min(1.0, raw), counts, tuple(flags))


# ---------------------------------------------------------------------------
# Northrop


def empirical_cdf(series):
    """Empirical distribution function with denominator ``n + 1``.

    The shifted denominator keeps ``-log F_n`` finite at the sample maximum.
    """
    data = np.sort(_as_array(series))
    denom = data.size + 1

    def cdf(x):
        return np.searchsorted(data, x, side="right") / denom

    return cdf


def _northrop(x, maxima, r, estimator, counts):
    cdf = empirical_cdf(x)
    scaled = -r * np.log(cdf(maxima))
    value = 1.0 / float(np.mean(scaled))
    return EstimateRecord(estimator, {"r": r}, value, counts)


def northrop_sliding(series, r: int) -> EstimateRecord:
    x = _as_array(series)
    if int(r) != r or not 1 <= r <= x.size:
        raise InvalidParameter(f"block length must lie in 1..{x.size}, got {r}")
    r = int(r)
    maxima = _sliding_max(x, r)
    return _northrop(x, maxima, r, "Nsl", {"windows": maxima.size})


def northrop_disjoint(series, r: int) -> EstimateRecord:
    x = _as_array(series)
    blocks, k = _blocks(x, r)
    return _northrop(x, blocks.max(axis=1), int(r), "Ndbl", {"blocks": k})


# ---------------------------------------------------------------------------
# tail index and spectral cluster process


def hill_estimator(series, k: int) -> float:
    """Classic Hill estimate of the tail index from the ``k`` largest ``|X|``."""
    x = np.abs(_as_array(series))
    n = x.size
    if int(k) != k or not 2 <= k < n:
        raise InvalidParameter(f"k must lie in 2..{n - 1}, got {k}")
    k = int(k)
    top = -np.sort(-x)[: k + 1]
    if top[k] <= 0:
        raise NonPositiveOrderStatistic(f"order statistic {k + 1} of |X| is not positive")
    mean_log = float(np.mean(np.log(top[:k] / top[k])))
    if mean_log <= 0:
        raise NonIdentifiable("the k + 1 largest values coincide")
    return 1.0 / mean_log


def scp_estimator(series, r: int, s: int, alpha: float) -> EstimateRecord:
    """Mean of ``max^alpha / sum^alpha`` over the blocks with the largest sums.

    A block qualifies when its sum of ``X_t**alpha`` strictly exceeds the
    `s`-th largest block sum, so generically ``s - 1`` blocks qualify and
    blocks tied with the threshold are left out. The series must be
    non-negative (pass ``|X|`` for signed data).
    """
    x = _as_array(series)
    if np.any(x < 0):
        raise InvalidParameter("scp estimator needs a non-negative series")
    if not alpha > 0:
        raise InvalidParameter(f"alpha must be positive, got {alpha}")
    if int(s) != s or s < 2:
        raise InvalidParameter(f"s must be an integer >= 2, got {s}")
    s = int(s)
    blocks, k = _blocks(x, r)
    if k < s:
        raise InvalidParameter(f"only {k} blocks available for s={s}")
    powered = blocks**alpha
    sums = powered.sum(axis=1)
    maxima = powered.max(axis=1)
    v = np.sort(sums)[::-1][s - 1]
    keep = sums > v
    n_keep = int(keep.sum())
    if n_keep == 0:
        raise NoQualifyingBlocks(f"no block sum exceeds the {s}-th largest")
    value = float(np.mean(maxima[keep] / sums[keep]))
    return EstimateRecord(
        "scp",
        {"r": int(r), "s": s, "alpha": float(alpha)},
        value,
        {"qualifying": n_keep, "blocks": k, "v": float(v)},
    )
