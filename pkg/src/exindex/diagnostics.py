"""Empirical probes of extremal clustering.

Used to check simulators against the theory module: block-level cluster
sizes and ratios ``X_{t+h} / |X_t|`` after a large value.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NoExceedances, TooFewExceedances
from .estimators import _as_array, _blocks

MIN_CONDITIONING_POINTS = 30
DEFAULT_RATIO_QUANTILE = 0.999


@dataclass(frozen=True)
class ClusterHistogram:
    u: float
    r: int
    counts: dict  # cluster size -> number of blocks

    @property
    def n_blocks(self) -> int:
        return sum(self.counts.values())

    @property
    def mean_size(self) -> float:
        return sum(size * freq for size, freq in self.counts.items()) / self.n_blocks


def _block_exceedance_counts(series, r, u):
    blocks, _ = _blocks(_as_array(series), r)
    per_block = (blocks > u).sum(axis=1)
    per_block = per_block[per_block > 0]
    if per_block.size == 0:
        raise NoExceedances(f"no block exceeds u={u}")
    return per_block


def theta_n_empirical(series, r: int, u: float) -> float:
    """Exceeding blocks over exceedances in complete blocks (inverse mean cluster size)."""
    per_block = _block_exceedance_counts(series, r, u)
    return per_block.size / int(per_block.sum())


def cluster_size_histogram(series, r: int, u: float) -> ClusterHistogram:
    per_block = _block_exceedance_counts(series, r, u)
    counts = dict(sorted(Counter(int(c) for c in per_block).items()))
    return ClusterHistogram(float(u), int(r), counts)


@dataclass(frozen=True)
class RatioSample:
    """Ratios ``X_{t+lag} / |X_t|`` and the signs of the conditioning values.

    For two-sided series the raw ratios mix ``+Theta_lag`` and ``-Theta_lag``,
    so the summary quartiles use the sign-aligned ratios ``X_{t+lag} / X_t``,
    whose law approximates ``Theta_lag / Theta_0``. The raw median is kept
    as ``raw_median``.
    """

    lag: int
    u: float
    ratios: np.ndarray
    signs: np.ndarray

    @property
    def aligned(self) -> np.ndarray:
        return self.ratios * self.signs

    @property
    def summary(self) -> dict:
        q25, med, q75 = np.quantile(self.aligned, (0.25, 0.5, 0.75))
        return {
            "count": int(self.ratios.size),
            "q25": float(q25),
            "median": float(med),
            "q75": float(q75),
            "raw_median": float(np.median(self.ratios)),
        }


def empirical_spectral_ratio(series, u=None, lag: int = 1, min_points: int = MIN_CONDITIONING_POINTS) -> RatioSample:
    """Ratios ``X_{t+lag} / |X_t|`` over all ``t`` with ``|X_t| > u``.

    By default `u` is the 99.9% sample quantile of ``|X|``. Times whose
    partner ``t + lag`` falls outside the sample are skipped.
    """
    x = _as_array(series)
    lag = int(lag)
    if abs(lag) >= x.size:
        raise InvalidParameter(f"lag {lag} too large for n={x.size}")
    ax = np.abs(x)
    if u is None:
        u = float(np.quantile(ax, DEFAULT_RATIO_QUANTILE))
    t = np.flatnonzero(ax > u)
    t = t[(t + lag >= 0) & (t + lag < x.size)]
    if t.size < min_points:
        raise TooFewExceedances(f"{t.size} conditioning points, need {min_points}")
    return RatioSample(lag, float(u), x[t + lag] / ax[t], np.sign(x[t]))
