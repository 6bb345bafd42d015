"""Hurwitz zeta by Euler-Maclaurin summation with a certified remainder.

zeta(s, a) = sum_{n<N} (n+a)^-s + (N+a)^(1-s)/(s-1) + (N+a)^-s/2
             + sum_{k=1}^{M} B_2k/(2k)! (s)_{2k-1} (N+a)^(-s-2k+1) + R

with |R| <= 4 |(s)_{2M}| / (2 pi)^{2M} (N+a)^(1-sigma-2M) / (sigma+2M-1).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

from ..errors import DomainError, PoleError

BERNOULLI_TERMS = 12
MIN_TERMS = 50
TARGET_ERROR = 1e-12
MIN_SIGMA = -2.0


@lru_cache(maxsize=4)
def _bernoulli_weights(m: int) -> np.ndarray:
    b = bernoulli(2 * m)
    return np.array([b[2 * k] / math.factorial(2 * k) for k in range(1, m + 1)])


def default_terms(t: float) -> int:
    return max(MIN_TERMS, int(math.ceil(2 * abs(t))))


def _rising_abs(s: complex, n: int) -> float:
    return float(np.prod(np.abs(s + np.arange(n))))


def remainder_bound(s: complex, a: float, n_terms: int, m: int = BERNOULLI_TERMS) -> float:
    sigma = s.real
    if sigma + 2 * m - 1 <= 0:
        return math.inf
    x = n_terms + a
    return (
        4.0
        * _rising_abs(s, 2 * m)
        / (2 * math.pi) ** (2 * m)
        * x ** (1 - sigma - 2 * m)
        / (sigma + 2 * m - 1)
    )


def _check_args(s: complex, a: float):
    if not 0 < a <= 1:
        raise DomainError(f"Hurwitz parameter a must lie in (0, 1], got {a}")
    if s.real <= MIN_SIGMA:
        raise DomainError(f"Re(s) = {s.real} outside supported region Re(s) > {MIN_SIGMA}")


def _tail(s, x, m, with_pole=True):
    """Euler-Maclaurin tail at X = N + a, vectorized over s."""
    s = np.asarray(s, dtype=complex)
    logx = math.log(x)
    xs = np.exp(-s * logx)
    if with_pole:
        total = x * xs / (s - 1) + 0.5 * xs
    else:
        total = 0.5 * xs
    w = _bernoulli_weights(m)
    rising = s.copy()
    power = xs / x
    for k in range(m):
        total = total + w[k] * rising * power
        rising = rising * (s + 2 * k + 1) * (s + 2 * k + 2)
        power = power / (x * x)
    return total


def pole_free_tail(s, x):
    """(X^(1-s) - 1)/(s-1), finite at s = 1 (limit -log X)."""
    s = np.asarray(s, dtype=complex)
    u = (1 - s) * math.log(x)
    small = np.abs(u) < 1e-8
    safe = np.where(small, 1.0, u)
    body = np.where(small, 1 + u / 2, np.expm1(safe) / safe)
    return -math.log(x) * body


def hurwitz_zeta(s: complex, a: float = 1.0, n_terms: int | None = None,
                 m: int = BERNOULLI_TERMS) -> complex:
    """zeta(s, a) for Re(s) > -2, s != 1.

    With ``n_terms=None`` the depth starts at max(50, 2|Im s|) and doubles
    until the remainder bound is below 1e-12 (1 + |zeta|).
    """
    s = complex(s)
    _check_args(s, a)
    if s == 1:
        raise PoleError("zeta(s, a) has a pole at s = 1")
    auto = n_terms is None
    n = default_terms(s.imag) if auto else int(n_terms)
    while True:
        ln = np.log(np.arange(n, dtype=float) + a)
        head = np.exp(-s * ln).sum()
        val = complex(head + _tail(s, n + a, m))
        if not auto or remainder_bound(s, a, n, m) <= TARGET_ERROR * (1 + abs(val)):
            return val
        n *= 2


def hurwitz_terms(s: complex, a: float) -> int:
    """Depth the automatic rule settles on for (s, a)."""
    s = complex(s)
    n = default_terms(s.imag)
    while remainder_bound(s, a, n) > TARGET_ERROR * 1e-3:
        n *= 2
    return n
