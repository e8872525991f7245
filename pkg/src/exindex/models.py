"""Stationary heavy-tailed processes with reproducible randomness.

Every sampler takes an explicit :class:`numpy.random.Generator`; there is no
module-level random state. Streams are built on the counter-based Philox
bit generator so that a replication can be regenerated from its seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidParameter

MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# noise laws


@dataclass(frozen=True)
class StudentT:
    df: float

    def __post_init__(self):
        if not self.df > 0:
            raise InvalidParameter(f"df must be positive, got {self.df}")

    @property
    def tail_index(self) -> float:
        return float(self.df)


@dataclass(frozen=True)
class Pareto:
    """Pareto magnitude on (1, inf) with an independent random sign."""

    alpha: float
    p_plus: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameter(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.p_plus <= 1.0:
            raise InvalidParameter(f"p_plus must lie in [0, 1], got {self.p_plus}")

    @property
    def tail_index(self) -> float:
        return float(self.alpha)


@dataclass(frozen=True)
class StandardNormal:
    @property
    def tail_index(self) -> float:
        return math.inf


NoiseSpec = Union[StudentT, Pareto, StandardNormal]


def sample_student_t(df, rng, size=None):
    """Student-t variates as a standard normal over ``sqrt(chi2(df) / df)``."""
    if not df > 0:
        raise InvalidParameter(f"df must be positive, got {df}")
    z = rng.standard_normal(size)
    chi2 = 2.0 * rng.standard_gamma(df / 2.0, size)
    return z / np.sqrt(chi2 / df)


def sample_pareto(alpha, p_plus, rng, size=None):
    """Signed Pareto variates: ``P(|Z| > y) = y**-alpha`` for ``y >= 1``.

    The sign is ``+`` with probability `p_plus`, independent of the magnitude.
    """
    if not alpha > 0:
        raise InvalidParameter(f"alpha must be positive, got {alpha}")
    if not 0.0 <= p_plus <= 1.0:
        raise InvalidParameter(f"p_plus must lie in [0, 1], got {p_plus}")
    # 1 - U lies in (0, 1], so the magnitude is >= 1 and finite
    magnitude = (1.0 - rng.random(size)) ** (-1.0 / alpha)
    sign = np.where(rng.random(size) < p_plus, 1.0, -1.0)
    return sign * magnitude


def sample_noise(noise: NoiseSpec, rng, size=None):
    if isinstance(noise, StudentT):
        return sample_student_t(noise.df, rng, size)
    if isinstance(noise, Pareto):
        return sample_pareto(noise.alpha, noise.p_plus, rng, size)
    if isinstance(noise, StandardNormal):
        return rng.standard_normal(size)
    raise InvalidParameter(f"unknown noise spec {noise!r}")


# ---------------------------------------------------------------------------
# process models


@dataclass(frozen=True)
class Ar1:
    phi: float
    noise: NoiseSpec

    def __post_init__(self):
        if not -1.0 < self.phi < 1.0:
            raise InvalidParameter(f"|phi| must be < 1 for a causal solution, got {self.phi}")


@dataclass(frozen=True)
class Sre:
    """``X_t = A_t X_{t-1} + b`` with ``log A_t ~ Normal(log_a_mean, log_a_sd**2)``."""

    log_a_mean: float = -0.5
    log_a_sd: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.log_a_sd > 0:
            raise InvalidParameter("log_a_sd must be positive")
        if not self.b > 0:
            raise InvalidParameter("b must be positive")
        if not self.log_a_mean < 0:
            # E[A^alpha] = 1 has a positive root only for a negative log-mean
            raise InvalidParameter("log_a_mean must be negative (Kesten condition)")

    @property
    def tail_index(self) -> float:
        return -2.0 * self.log_a_mean / self.log_a_sd**2


@dataclass(frozen=True)
class MaxMovingAverage:
    window: int
    noise: NoiseSpec

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 1:
            raise InvalidParameter(f"window must be a positive integer, got {self.window}")


@dataclass(frozen=True)
class Iid:
    noise: NoiseSpec


ModelSpec = Union[Ar1, Sre, MaxMovingAverage, Iid]


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray = field(repr=False)
    model: ModelSpec
    seed: int
    burn_in: int

    def __len__(self):
        return len(self.values)


def default_burn_in(model: ModelSpec) -> int:
    if isinstance(model, Ar1):
        if model.phi == 0:
            return 1000
        return max(1000, math.ceil(math.log(1e-12) / math.log(abs(model.phi))))
    if isinstance(model, Sre):
        return 1000
    return 0


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & MASK64))


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_replication_seed(master_seed: int, replication: int) -> int:
    """Seed of replication `replication` under `master_seed`.

    Both stages are bijections of the 64-bit state, so distinct replication
    indices under one master seed never collide.
    """
    if replication < 0:
        raise InvalidParameter("replication index must be non-negative")
    return _splitmix64((int(master_seed) + _splitmix64(int(replication))) & MASK64)


def simulate(model: ModelSpec, n: int, seed: int, burn_in: int | None = None) -> TimeSeries:
    """Draw a realization of length `n` from `model`.

    Noise for the burn-in period is drawn first from the same stream, so an
    ``Ar1`` with ``phi=0`` reproduces ``Iid`` with the same noise, seed and
    burn-in draw for draw.
    """
    if int(n) != n or n < 1:
        raise InvalidParameter(f"n must be a positive integer, got {n}")
    n = int(n)
    if burn_in is None:
        burn_in = default_burn_in(model)
    if burn_in < 0:
        raise InvalidParameter("burn_in must be non-negative")
    rng = make_rng(seed)

    if isinstance(model, Iid):
        values = sample_noise(model.noise, rng, burn_in + n)[burn_in:]
    elif isinstance(model, Ar1):
        z = sample_noise(model.noise, rng, burn_in + n)
        values = _ar1_recursion(model.phi, z)[burn_in:]
    elif isinstance(model, Sre):
        a = np.exp(rng.normal(model.log_a_mean, model.log_a_sd, burn_in + n))
        values = _sre_recursion(a, model.b)[burn_in:]
    elif isinstance(model, MaxMovingAverage):
        m = int(model.window)
        z = sample_noise(model.noise, rng, burn_in + n + m - 1)[burn_in:]
        values = np.lib.stride_tricks.sliding_window_view(z, m).max(axis=1)
    else:
        raise InvalidParameter(f"unknown model {model!r}")

    values = np.ascontiguousarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidParameter("simulation produced non-finite values")
    values.flags.writeable = False
    return TimeSeries(values=values, model=model, seed=int(seed), burn_in=int(burn_in))


def _ar1_recursion(phi, z):
    # X_{-burn_in} = 0, then X_t = phi X_{t-1} + Z_t
    out = np.empty_like(z)
    x = 0.0
    for t, zt in enumerate(z.tolist()):
        x = phi * x + zt
        out[t] = x
    return out


def _sre_recursion(a, b):
    # X_{-burn_in} = b, then X_t = A_t X_{t-1} + b
    out = np.empty_like(a)
    x = float(b)
    for t, at in enumerate(a.tolist()):
        x = at * x + b
        out[t] = x
    return out
