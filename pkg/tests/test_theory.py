import math

import mpmath
import numpy as np
import pytest

from exindex.errors import InvalidParameter, PoleAtOne, SeriesDiverged, WindowTooNarrow
from exindex.models import make_rng
from exindex.special import gamma, riemann_zeta
from exindex.theory import (
    Ar1SpectralTail,
    SpectralTailPath,
    ar1_spectral_tail,
    ar1_theta,
    brown_resnick_exponent_horner,
    brown_resnick_theta,
    max_ma_theta,
    record_time,
    sre_first_order_exponent,
    sre_theta_first_order,
    sre_theta_mc,
    theta_from_forward_path,
    theta_from_record_probability,
    theta_from_spectral_cluster,
)

# Frozen from an Euler-Maclaurin sum (10**4 terms, 6 Bernoulli corrections),
# see em_zeta_oracle below; agrees with mpmath to all printed digits.
ZETA_HALF = -1.4603545088095868


def em_zeta_oracle(s, terms=10**4, corrections=6):
    bern = [mpmath.bernoulli(2 * k) for k in range(1, corrections + 1)]
    with mpmath.workdps(30):
        s = mpmath.mpf(s)
        N = terms
        total = mpmath.fsum(mpmath.power(k, -s) for k in range(1, N))
        total += mpmath.power(N, 1 - s) / (s - 1) + mpmath.power(N, -s) / 2
        for k, b in enumerate(bern, start=1):
            rising = mpmath.rf(s, 2 * k - 1)
            total += b / mpmath.factorial(2 * k) * rising * mpmath.power(N, -s - 2 * k + 1)
        return float(total)


# ---------------------------------------------------------------------------
# special functions


def test_zeta_oracle_matches_frozen_value():
    assert em_zeta_oracle(0.5) == pytest.approx(ZETA_HALF, abs=1e-12)
    assert float(mpmath.zeta(0.5)) == pytest.approx(ZETA_HALF, abs=1e-15)


def test_zeta_two():
    assert riemann_zeta(2.0) == pytest.approx(math.pi**2 / 6, abs=1e-10)


def test_zeta_half():
    assert riemann_zeta(0.5) == pytest.approx(-1.4603545088, abs=1e-6)
    assert riemann_zeta(0.5) == pytest.approx(ZETA_HALF, abs=1e-12)


def test_zeta_zero():
    assert riemann_zeta(0.0) == -0.5


def test_zeta_pole():
    with pytest.raises(PoleAtOne):
        riemann_zeta(1.0)


@pytest.mark.parametrize("s", [3.0, 1.5, 0.9, 0.25, -0.5, -1.5, -3.5, -7.5, -20.5, -2.0, -4.0])
def test_zeta_against_mpmath(s):
    expected = float(mpmath.zeta(s))
    assert riemann_zeta(s) == pytest.approx(expected, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("s", [-3.5, -0.5, 0.5])
def test_zeta_functional_equation_residual(s):
    rhs = 2**s * math.pi ** (s - 1) * math.sin(math.pi * s / 2) * gamma(1 - s) * riemann_zeta(1 - s)
    assert abs(riemann_zeta(s) - rhs) < 1e-9


@pytest.mark.parametrize("x", [0.5, 1.0, 1.5, 4.5, 10.5, 25.5, 0.1, -0.5, -2.5])
def test_gamma_relative_error(x):
    assert gamma(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-10)


# ---------------------------------------------------------------------------
# closed forms


def test_ar1_theta_values():
    assert ar1_theta(0.2, 1) == 0.8
    assert ar1_theta(0.0, 2.5) == 1.0
    assert ar1_theta(0.5, 3) == 0.875
    assert ar1_theta(-0.5, 3) == 0.875


@pytest.mark.parametrize("phi, alpha", [(1.0, 1), (-1.0, 1), (0.5, 0), (0.5, -1)])
def test_ar1_theta_rejects(phi, alpha):
    with pytest.raises(InvalidParameter):
        ar1_theta(phi, alpha)


def test_max_ma_theta():
    assert max_ma_theta(3) == 1 / 3
    assert max_ma_theta(1) == 1.0
    assert max_ma_theta(4) == 0.25
    with pytest.raises(InvalidParameter):
        max_ma_theta(0)


# ---------------------------------------------------------------------------
# spectral tail process


def test_record_time_tie_break():
    lags = np.arange(-2, 3)
    assert record_time(lags, [0, 0, 1, 0, 0]) == 0
    assert record_time(lags, [2, 0, 1, 0, 2]) == 2
    assert record_time(lags, [0, -2, 1, 2, 0]) == 1
    assert record_time(lags, [0, 3, 1, 2, 0]) == -1


def _path_with_jump(phi, alpha, jump, h=10):
    """Sample AR(1) paths until one has the requested J (read off its record time)."""
    sampler = Ar1SpectralTail(phi, alpha, 1.0, h)
    rng = make_rng(1)
    while True:
        path = sampler(rng)
        if path.record_time == -jump:
            return path


def test_ar1_spectral_tail_given_j_zero():
    path = _path_with_jump(0.2, 1, 0)
    t = path.lags
    theta0 = path.value_at(0)
    assert abs(theta0) == 1.0
    np.testing.assert_allclose(path.values[t >= 0], theta0 * 0.2 ** t[t >= 0], rtol=1e-15)
    assert np.all(path.values[t < 0] == 0)


def test_ar1_spectral_tail_given_j_two_negative_phi():
    path = _path_with_jump(-0.5, 1, 2)
    t = path.lags
    theta0 = path.value_at(0)
    alive = t >= -2
    np.testing.assert_allclose(path.values[alive], theta0 * (-0.5) ** t[alive], rtol=1e-15)
    assert np.all(path.values[~alive] == 0)


def test_ar1_spectral_tail_phi_zero():
    path = ar1_spectral_tail(0.0, 1.0, 0.5, 5, make_rng(3))
    assert abs(path.value_at(0)) == 1.0
    assert np.count_nonzero(path.values) == 1
    assert path.record_time == 0


def test_ar1_spectral_tail_theta0_unit_modulus():
    sampler = Ar1SpectralTail(-0.7, 1.5, 0.3, 20)
    lags, values = sampler.sample_batch(make_rng(4), 1000)
    np.testing.assert_array_equal(np.abs(values[:, lags == 0]), 1.0)


def test_geometric_jump_law():
    sampler = Ar1SpectralTail(0.2, 1.0, 0.5, 20)
    lags, values = sampler.sample_batch(make_rng(5), 10**5)
    jump = -lags[np.argmax(values != 0, axis=1)]
    assert np.mean(jump == 0) == pytest.approx(0.8, abs=0.01)


def test_alpha_norm_finite():
    path = Ar1SpectralTail(0.9, 0.5)(make_rng(6))
    assert math.isfinite(path.alpha_norm(0.5))
    assert path.alpha_norm(0.5) >= 1.0


def test_record_probability_ar1():
    est = theta_from_record_probability(Ar1SpectralTail(0.2, 1.0), 10**5, seed=1)
    assert est.value == pytest.approx(0.8, abs=0.005)
    assert est.stderr == pytest.approx(math.sqrt(0.8 * 0.2 / 1e5), rel=0.05)


def test_record_probability_degenerate():
    def spike(rng):
        return SpectralTailPath.from_values([0, 0, 1, 0, 0])

    est = theta_from_record_probability(spike, 50)
    assert est.value == 1.0
    assert est.stderr == 0.0


def test_record_probability_phi_half_alpha_three():
    est = theta_from_record_probability(Ar1SpectralTail(0.5, 3.0), 10**5, seed=2)
    assert est.value == pytest.approx(0.875, abs=0.005)


@pytest.mark.parametrize("phi, alpha", [(0.2, 1.0), (0.5, 3.0), (-0.6, 0.5), (0.9, 2.0)])
def test_spectral_cluster_exact_on_ar1(phi, alpha):
    est = theta_from_spectral_cluster(Ar1SpectralTail(phi, alpha), alpha, 5000, seed=3)
    assert est.value == pytest.approx(ar1_theta(phi, alpha), rel=1e-12)
    assert est.stderr < 1e-15


def test_spectral_cluster_single_spike():
    def spike(rng):
        return SpectralTailPath.from_values([0, 0, -1, 0, 0])

    assert theta_from_spectral_cluster(spike, 2.0, 10).value == 1.0


def test_spectral_cluster_window_check():
    with pytest.raises(WindowTooNarrow):
        theta_from_spectral_cluster(Ar1SpectralTail(0.9, 1.0, h=5), 1.0, 100)


@pytest.mark.parametrize("phi, alpha", [(0.3, 1.0), (0.7, 2.0)])
def test_cluster_and_record_agree(phi, alpha):
    sampler = Ar1SpectralTail(phi, alpha)
    rec = theta_from_record_probability(sampler, 10**5, seed=5)
    clu = theta_from_spectral_cluster(sampler, alpha, 10**4, seed=6)
    assert abs(rec.value - clu.value) < 2 * math.hypot(rec.stderr, clu.stderr)


@pytest.mark.parametrize("phi, alpha", [(0.2, 1.0), (-0.8, 0.5), (0.6, 3.0)])
def test_forward_representation(phi, alpha):
    est = theta_from_forward_path(Ar1SpectralTail(phi, alpha), alpha, 2000)
    assert est.value == pytest.approx(ar1_theta(phi, alpha), rel=1e-12)


# ---------------------------------------------------------------------------
# SRE


def test_sre_first_order_value():
    assert sre_theta_first_order() == pytest.approx(0.2792, abs=5e-4)
    assert sre_first_order_exponent() == pytest.approx(-0.5826, abs=1e-4)


def test_sre_mc_large_negative_drift():
    est = sre_theta_mc(-1e6, 1.0, horizon=10, reps=1000)
    assert est.value == 1.0


def test_sre_mc_rejects_nonnegative_drift():
    with pytest.raises(InvalidParameter):
        sre_theta_mc(0.0, 1.0)


@pytest.mark.slow
def test_sre_mc_matches_first_order():
    est = sre_theta_mc(-0.5, 1.0, horizon=10**4, reps=10**6, seed=11)
    assert est.value == pytest.approx(0.2792, abs=0.005)
    assert abs(est.value - sre_theta_first_order()) < 0.01


def test_sre_mc_horizon_stability():
    a = sre_theta_mc(-0.5, 1.0, horizon=50, reps=10**5, seed=12)
    b = sre_theta_mc(-0.5, 1.0, horizon=100, reps=10**5, seed=12)
    assert abs(a.value - b.value) < 2 * math.hypot(a.stderr, b.stderr)


def test_sre_mc_deterministic():
    a = sre_theta_mc(-0.5, 1.0, horizon=100, reps=1000, seed=3)
    b = sre_theta_mc(-0.5, 1.0, horizon=100, reps=1000, seed=3)
    assert a == b


# ---------------------------------------------------------------------------
# Brown-Resnick


def test_br_pickands_limit():
    ratios = [brown_resnick_theta(d).value / d for d in (1e-1, 1e-2, 1e-3)]
    assert 0.95 <= ratios[-1] <= 1.05
    gaps = [abs(r - 1) for r in ratios]
    assert gaps[0] > gaps[1] > gaps[2]


def test_br_first_term_dominance():
    d = 1e-3
    res = brown_resnick_theta(d)
    first = math.sqrt(d / math.pi) * ZETA_HALF
    assert res.partial_sums[0] == pytest.approx(first, rel=1e-12)
    assert abs(res.exponent - first) < 1e-4


@pytest.mark.parametrize("delta", [1e-3, 0.5, 2 * math.pi / 2, 4.0])
def test_br_exponent_horner_agrees(delta):
    res = brown_resnick_theta(delta)
    assert abs(res.exponent - brown_resnick_exponent_horner(delta, res.terms_used)) < 1e-12
    assert res.value == pytest.approx(delta * math.exp(res.exponent), rel=1e-15)


def test_br_series_against_mpmath():
    delta = 1.0
    with mpmath.workdps(30):
        series = mpmath.nsum(
            lambda n: mpmath.zeta(0.5 - n) / (mpmath.factorial(n) * (2 * n + 1)) * (-delta / 4) ** n,
            [0, mpmath.inf],
        )
        expected = float(delta * mpmath.exp(mpmath.sqrt(delta / mpmath.pi) * series))
    assert brown_resnick_theta(delta).value == pytest.approx(expected, rel=1e-11)


def test_br_convergence_invariants():
    for delta in (0.01, 0.3, 1.0):
        res = brown_resnick_theta(delta, tol=1e-15)
        incr = np.abs(np.diff(res.partial_sums))
        assert np.all(np.diff(incr[4:]) < 0)
        assert incr[-1] < 1e-15
        assert 0 < res.value <= 1


def test_br_errors():
    with pytest.raises(InvalidParameter):
        brown_resnick_theta(0.0)
    with pytest.raises(InvalidParameter):
        brown_resnick_theta(5.0)
    with pytest.raises(SeriesDiverged):
        brown_resnick_theta(4.0, tol=0.0, max_terms=20)
