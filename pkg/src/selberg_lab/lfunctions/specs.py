"""LFunctionSpec: Selberg-class metadata plus a coefficient provider.

Functional-equation data is deliberately not modelled.  A spec is evaluable
in the strip when it is a product of Dirichlet L-functions (``factors``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError
from .characters import DirichletCharacter, kronecker_character, make_characters
from .coefficients import (
    CharacterCoefficients,
    CoefficientProvider,
    KroneckerZetaCoefficients,
    load_coefficient_file,
    tau_coefficients,
)
from .evaluate import dirichlet_l, dirichlet_l_vertical

LOG_TAIL = 1e-15


@dataclass(frozen=True, eq=False)
class LFunctionSpec:
    label: str
    coefficients: CoefficientProvider
    degree: float = 1.0
    pole_order: int = 0
    sigma_m: float = 0.5
    factors: tuple = ()

    def __post_init__(self):
        if not self.sigma_m < 1:
            raise ConfigError(f"{self.label}: sigma_m must be < 1")
        if self.degree < 0:
            raise ConfigError(f"{self.label}: degree must be >= 0")
        if self.degree == 1 and self.sigma_m != 0.5:
            raise ConfigError(f"{self.label}: degree-1 specs have sigma_m = 1/2")
        if self.pole_order not in (0, 1):
            raise ConfigError(f"{self.label}: pole order {self.pole_order} not supported")

    @property
    def evaluable(self) -> bool:
        return bool(self.factors)

    def _need_factors(self):
        if not self.factors:
            raise DomainError(f"{self.label}: no evaluator in the strip (coefficient-only spec)")

    def __call__(self, s: complex) -> complex:
        self._need_factors()
        val = 1 + 0j
        for chi in self.factors:
            val *= dirichlet_l(s, chi)
        return val

    def evaluate(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        return np.array([self(z) for z in s.ravel()]).reshape(s.shape)

    def vertical(self, points, tau0: float, step: float, count: int) -> np.ndarray:
        """L(s + i tau) on a uniform tau grid; shape (count, len(points))."""
        self._need_factors()
        out = None
        for chi in self.factors:
            v = dirichlet_l_vertical(points, chi, tau0, step, count)
            out = v if out is None else out * v
        return out

    def has_pole_near(self, s, radius: float) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        if self.pole_order == 0:
            return np.zeros(s.shape, dtype=bool)
        return np.abs(s - 1) < radius


def zeta_spec() -> LFunctionSpec:
    chi = make_characters(1)[0]
    return LFunctionSpec("zeta", CharacterCoefficients(chi, "zeta"), 1.0, 1, 0.5, (chi,))


def dirichlet_spec(chi: DirichletCharacter) -> LFunctionSpec:
    if chi.modulus == 1:
        return zeta_spec()
    label = f"dirichlet(q={chi.modulus},index={chi.index})"
    return LFunctionSpec(
        label, CharacterCoefficients(chi, label), 1.0, int(chi.principal), 0.5, (chi,)
    )


def dedekind_spec(d: int) -> LFunctionSpec:
    chi_d = kronecker_character(d)
    label = f"dedekind(d={d})"
    return LFunctionSpec(
        label,
        KroneckerZetaCoefficients(chi_d, label),
        2.0,
        1,
        0.5,
        (make_characters(1)[0], chi_d),
    )


def tau_spec(limit: int = 10**6, path=None) -> LFunctionSpec:
    return LFunctionSpec("tau", tau_coefficients(limit, path), 2.0, 0, 0.5)


def file_spec(path, degree: float = 1.0, pole_order: int = 0,
              sigma_m: float = 0.5) -> LFunctionSpec:
    prov = load_coefficient_file(path)
    return LFunctionSpec(f"file({prov.label})", prov, degree, pole_order, sigma_m)


def auto_kmax(p: int, sigma: float, tol: float = LOG_TAIL) -> int:
    """Smallest K with 2 p^-(K+1)sigma / (1 - p^-sigma) < tol."""
    x = p ** (-sigma)
    k = 1
    while 2 * x ** (k + 1) / (1 - x) >= tol:
        k += 1
    return k


def local_log_term(spec: LFunctionSpec, p: int, s, omega: complex = 1.0,
                   kmax: int | None = None):
    """sum_{k<=kmax} b(p, k) omega^k p^(-ks); ``s`` may be an array."""
    s_arr = np.asarray(s, dtype=complex)
    if kmax is None:
        kmax = auto_kmax(p, float(np.min(s_arr.real)))
    ps = np.exp(-s_arr * math.log(p))
    total = np.zeros(s_arr.shape, dtype=complex)
    power = np.ones(s_arr.shape, dtype=complex)
    for k in range(1, kmax + 1):
        power = power * ps * omega
        total = total + spec.coefficients.b(p, k) * power
    return complex(total) if total.ndim == 0 else total


def local_log_terms(spec: LFunctionSpec, primes: np.ndarray, s: complex,
                    omega=1.0, kmax: int | None = None) -> np.ndarray:
    """Vectorized over primes at a single point s."""
    primes = np.asarray(primes, dtype=np.int64)
    s = complex(s)
    if kmax is None:
        kmax = auto_kmax(int(primes.min()), s.real) if primes.size else 1
    ps = np.exp(-s * np.log(primes.astype(float))) * omega
    total = np.zeros(primes.shape, dtype=complex)
    power = np.ones(primes.shape, dtype=complex)
    for k in range(1, kmax + 1):
        power = power * ps
        total += spec.coefficients.b_many(primes, k) * power
    return total
