"""Ground-truth extremal indices.

Closed forms (AR(1), max-moving average), Monte Carlo oracles driven by the
spectral tail process, the random-walk ladder oracle for the stochastic
recurrence equation, and the zeta-series expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidParameter, SeriesDiverged, WindowTooNarrow
from .models import make_rng
from .special import riemann_zeta

DEFAULT_HALF_WIDTH = 200
TRUNCATION_TOL = 1e-10
SRE_BARRIER = -35.0


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float
    reps: int

    def __float__(self):
        return float(self.value)


def _mc_estimate(samples) -> MonteCarloEstimate:
    samples = np.asarray(samples, dtype=float)
    reps = samples.size
    stderr = float(samples.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return MonteCarloEstimate(float(samples.mean()), stderr, reps)


# ---------------------------------------------------------------------------
# closed forms


def ar1_theta(phi: float, alpha: float) -> float:
    """Extremal index of ``|X|`` for a regularly varying AR(1): ``1 - |phi|**alpha``."""
    if not -1.0 < phi < 1.0:
        raise InvalidParameter(f"|phi| must be < 1, got {phi}")
    if not alpha > 0:
        raise InvalidParameter(f"alpha must be positive, got {alpha}")
    return 1.0 - abs(phi) ** alpha


def max_ma_theta(window: int) -> float:
    """Extremal index of ``max(Z_t, ..., Z_{t+m-1})`` for iid noise."""
    if int(window) != window or window < 1:
        raise InvalidParameter(f"window must be a positive integer, got {window}")
    return 1.0 / window


# ---------------------------------------------------------------------------
# spectral tail process


def record_time(lags, values) -> int:
    """Lag of the largest ``|values|``, smallest ``|t|`` first, ``t >= 0`` on ties."""
    return int(_record_times(np.asarray(lags), np.atleast_2d(values))[0])


def _record_times(lags, values2d):
    mag = np.abs(values2d)
    at_max = mag == mag.max(axis=1, keepdims=True)
    key = 2 * np.abs(lags) + (lags < 0)
    key = np.where(at_max, key[None, :], np.iinfo(np.int64).max)
    return lags[np.argmin(key, axis=1)]


@dataclass(frozen=True)
class SpectralTailPath:
    lags: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    record_time: int

    @classmethod
    def from_values(cls, values, h=None):
        values = np.asarray(values, dtype=float)
        if h is None:
            h = (len(values) - 1) // 2
        lags = np.arange(-h, h + 1)
        if len(lags) != len(values):
            raise InvalidParameter("values must cover lags -h..h")
        return cls(lags, values, record_time(lags, values))

    def value_at(self, t: int) -> float:
        return float(self.values[t - self.lags[0]])

    def alpha_norm(self, alpha: float) -> float:
        return float(np.sum(np.abs(self.values) ** alpha))


class Ar1SpectralTail:
    """Sampler of the AR(1) spectral tail process on lags ``-h..h``.

    ``Theta_t = Theta_0 phi**t 1(J + t >= 0)`` where ``J`` is geometric with
    ``P(J = j) = (1 - |phi|**alpha) |phi|**(j alpha)`` and the sign of the
    noise is ``+`` with probability `p_plus`.

    The default half-width is 200, widened when needed so that
    ``|phi|**(alpha h)`` falls below double-precision resolution.
    """

    def __init__(self, phi, alpha, p_plus=0.5, h=None):
        ar1_theta(phi, alpha)  # validates
        if not 0.0 <= p_plus <= 1.0:
            raise InvalidParameter("p_plus must lie in [0, 1]")
        if h is None:
            h = DEFAULT_HALF_WIDTH
            if phi != 0:
                # push the truncated tail below double precision
                need = math.log(1e-17) / (alpha * math.log(abs(phi)))
                h = max(h, math.ceil(need) + 1)
        if h < 0:
            raise InvalidParameter("h must be non-negative")
        self.phi = float(phi)
        self.alpha = float(alpha)
        self.p_plus = float(p_plus)
        self.h = int(h)
        self.lags = np.arange(-self.h, self.h + 1)

    def sample_batch(self, rng, size):
        """Return ``(lags, values)`` with ``values`` of shape ``(size, 2h + 1)``."""
        q = abs(self.phi) ** self.alpha
        if q == 0.0:
            jump = np.zeros(size, dtype=np.int64)
        else:
            jump = rng.geometric(1.0 - q, size) - 1
        sign_z = np.where(rng.random(size) < self.p_plus, 1.0, -1.0)
        if self.phi < 0:
            # sign(phi**(J + t)) = (-1)**J (-1)**t
            sign_z = sign_z * np.where(jump % 2 == 0, 1.0, -1.0)
        alive = self.lags[None, :] >= -jump[:, None]
        return self.lags, np.where(alive, sign_z[:, None] * self._signed_powers[None, :], 0.0)

    @property
    def _signed_powers(self):
        # phi**t on the window, zero where it would overflow (never alive then)
        absphi = abs(self.phi)
        with np.errstate(divide="ignore", over="ignore"):
            mag = absphi ** self.lags.astype(float)
        mag[~np.isfinite(mag)] = 0.0
        sign = np.where(self.lags % 2 == 0, 1.0, -1.0) if self.phi < 0 else 1.0
        return sign * mag

    def __call__(self, rng) -> SpectralTailPath:
        lags, values = self.sample_batch(rng, 1)
        return SpectralTailPath(lags, values[0], int(_record_times(lags, values)[0]))


def ar1_spectral_tail(phi, alpha, p_plus, h, rng) -> SpectralTailPath:
    return Ar1SpectralTail(phi, alpha, p_plus, h)(rng)


def _batches(sampler, rng, reps, chunk=2000):
    """Yield ``(lags, values2d)`` chunks from a batch sampler or a path callable."""
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        if hasattr(sampler, "sample_batch"):
            yield sampler.sample_batch(rng, size)
        else:
            paths = [sampler(rng) for _ in range(size)]
            yield paths[0].lags, np.vstack([p.values for p in paths])
        done += size


def theta_from_record_probability(sampler, reps: int, seed: int = 0) -> MonteCarloEstimate:
    """Fraction of sampled spectral tail paths whose record time is 0.

    The standard error is the binomial one, ``sqrt(p (1 - p) / reps)``.
    """
    if reps < 1:
        raise InvalidParameter("reps must be positive")
    rng = make_rng(seed)
    hits = 0
    for lags, values in _batches(sampler, rng, reps):
        hits += int(np.count_nonzero(_record_times(lags, values) == 0))
    p = hits / reps
    return MonteCarloEstimate(p, math.sqrt(p * (1.0 - p) / reps), reps)


def theta_from_spectral_cluster(sampler, alpha: float, reps: int, seed: int = 0) -> MonteCarloEstimate:
    """Monte Carlo mean of ``max_t |Theta_t|**alpha / sum_t |Theta_t|**alpha``.

    Raises
    ------
    WindowTooNarrow
        If ``|Theta_{+-h}|**alpha`` is not negligible relative to the path
        maximum on some sampled path.
    """
    if reps < 1:
        raise InvalidParameter("reps must be positive")
    rng = make_rng(seed)
    ratios = []
    for _, values in _batches(sampler, rng, reps):
        mag = np.abs(values)
        top = mag.max(axis=1, keepdims=True)
        w = (mag / top) ** alpha
        if np.any(w[:, 0] >= TRUNCATION_TOL) or np.any(w[:, -1] >= TRUNCATION_TOL):
            raise WindowTooNarrow("spectral tail mass at the window edge exceeds tolerance")
        ratios.append(1.0 / w.sum(axis=1))
    return _mc_estimate(np.concatenate(ratios))


def theta_from_forward_path(sampler, alpha: float, reps: int, seed: int = 0) -> MonteCarloEstimate:
    """Monte Carlo mean of ``(1 - sup_{t >= 1} |Theta_t|**alpha)_+``."""
    rng = make_rng(seed)
    vals = []
    for lags, values in _batches(sampler, rng, reps):
        forward = np.abs(values[:, lags >= 1]) ** alpha
        sup = forward.max(axis=1) if forward.shape[1] else np.zeros(len(values))
        vals.append(np.clip(1.0 - sup, 0.0, None))
    return _mc_estimate(np.concatenate(vals))


# ---------------------------------------------------------------------------
# stochastic recurrence equation


def sre_theta_mc(
    log_a_mean: float,
    log_a_sd: float,
    horizon: int = 10_000,
    reps: int = 1_000_000,
    seed: int = 0,
    barrier: float = SRE_BARRIER,
    chunk: int = 250_000,
) -> MonteCarloEstimate:
    """Ladder-height oracle ``E[(1 - exp(max_{t>=1} S_t))_+]`` for the SRE.

    ``S_t`` is the Gaussian random walk of ``log A``. A path stops early once
    it falls below `barrier`, after which later maxima cannot change
    ``(1 - exp(M))_+`` at double precision.
    """
    if not log_a_mean < 0:
        raise InvalidParameter("log_a_mean must be negative")
    if not log_a_sd > 0:
        raise InvalidParameter("log_a_sd must be positive")
    if horizon < 1 or reps < 1:
        raise InvalidParameter("horizon and reps must be positive")
    rng = make_rng(seed)
    out = []
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        walk = rng.normal(log_a_mean, log_a_sd, size)
        peak = walk.copy()
        active = np.flatnonzero(walk > barrier)
        steps = 1
        while active.size and steps < horizon:
            walk[active] += rng.normal(log_a_mean, log_a_sd, active.size)
            peak[active] = np.maximum(peak[active], walk[active])
            active = active[walk[active] > barrier]
            steps += 1
        out.append(np.clip(-np.expm1(peak), 0.0, None))
        done += size
    return _mc_estimate(np.concatenate(out))


def sre_first_order_exponent() -> float:
    return riemann_zeta(0.5) / math.sqrt(2.0 * math.pi)


def sre_theta_first_order() -> float:
    """First-order zeta approximation for the lognormal SRE with ``log A ~ N(-1/2, 1)``."""
    return 0.5 * math.exp(sre_first_order_exponent())


# ---------------------------------------------------------------------------
# Brown-Resnick


@dataclass(frozen=True)
class ZetaSeriesResult:
    delta: float
    partial_sums: tuple
    value: float
    terms_used: int

    @property
    def exponent(self) -> float:
        return self.partial_sums[-1]


def _br_coefficient(n: int) -> float:
    return riemann_zeta(0.5 - n) / (math.factorial(n) * (2 * n + 1))


def brown_resnick_theta(delta: float, tol: float = 1e-12, max_terms: int = 200) -> ZetaSeriesResult:
    """Extremal index of the Brown-Resnick process sampled on the grid ``delta Z``.

    ``theta = delta * exp(sqrt(delta/pi) * sum_n zeta(1/2-n) / (n! (2n+1)) (-delta/4)**n)``.
    The partial sums stored are those of the full exponent.
    """
    if not 0.0 < delta <= 4.0:
        raise InvalidParameter(f"delta must lie in (0, 4], got {delta}")
    scale = math.sqrt(delta / math.pi)
    x = -delta / 4.0
    partial = []
    acc = 0.0
    power = 1.0
    for n in range(max_terms):
        try:
            term = scale * _br_coefficient(n) * power
        except (OverflowError, ValueError) as exc:
            raise SeriesDiverged(f"term {n} not representable") from exc
        acc += term
        partial.append(acc)
        if n > 0 and abs(term) < tol:
            return ZetaSeriesResult(delta, tuple(partial), delta * math.exp(acc), n + 1)
        power *= x
    raise SeriesDiverged(f"{max_terms} terms did not reach tolerance {tol}")


def brown_resnick_exponent_horner(delta: float, terms: int) -> float:
    """Exponent of :func:`brown_resnick_theta` truncated to `terms`, by Horner's rule."""
    x = -delta / 4.0
    acc = 0.0
    for n in reversed(range(terms)):
        acc = acc * x + _br_coefficient(n)
    return math.sqrt(delta / math.pi) * acc


PathSampler = Callable[[np.random.Generator], SpectralTailPath]
