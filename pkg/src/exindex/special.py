"""Gamma and Riemann zeta on the real line.

Only real arguments are needed (zeta at ``1/2 - n`` and small positive
values), so both functions work in plain floats.
"""

import math

from .errors import PoleAtOne

# Lanczos approximation, g = 7, n = 9 (relative error ~1e-15 for x > 0.5)
_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# B_2, B_4, ..., B_20
_BERNOULLI_EVEN = (
    1 / 6,
    -1 / 30,
    1 / 42,
    -1 / 30,
    5 / 66,
    -691 / 2730,
    7 / 6,
    -3617 / 510,
    43867 / 798,
    -174611 / 330,
)

_EM_TERMS = 16


def gamma(x: float) -> float:
    """Gamma function via the Lanczos series, with reflection below 1/2."""
    if x < 0.5:
        if x == math.floor(x):
            raise ValueError(f"gamma has a pole at {x}")
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def _zeta_euler_maclaurin(s: float) -> float:
    # valid for every real s != 1 as long as N is large relative to |s|;
    # used on s >= 0 only, where it is accurate to ~1e-15
    N = _EM_TERMS
    head = math.fsum(k ** (-s) for k in range(1, N))
    tail = N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** (-s)
    rising = s  # s (s+1) ... (s+2k-2)
    fact = 2.0  # (2k)!
    corr = []
    for k, b2k in enumerate(_BERNOULLI_EVEN, start=1):
        corr.append(b2k / fact * rising * N ** (-s - 2 * k + 1))
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
    return head + tail + math.fsum(corr)


def riemann_zeta(s: float) -> float:
    """Riemann zeta function for real ``s != 1``.

    Non-negative arguments are summed directly with Euler-Maclaurin tail
    corrections; negative ones go through the functional equation
    ``zeta(s) = 2^s pi^(s-1) sin(pi s / 2) Gamma(1-s) zeta(1-s)``.

    >>> round(riemann_zeta(2.0), 12)
    1.644934066848
    """
    s = float(s)
    if s == 1.0:
        raise PoleAtOne("zeta has a pole at s = 1")
    if s >= 0.0:
        return _zeta_euler_maclaurin(s)
    if s == math.floor(s) and int(s) % 2 == 0:
        return 0.0  # trivial zeros
    return (
        2.0**s
        * math.pi ** (s - 1.0)
        * math.sin(math.pi * s / 2.0)
        * gamma(1.0 - s)
        * _zeta_euler_maclaurin(1.0 - s)
    )
