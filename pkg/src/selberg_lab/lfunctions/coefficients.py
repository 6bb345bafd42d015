"""Coefficient providers a(p), b(p, k) for prime-sum experiments."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import gmpy2
import numpy as np

from ..errors import CoverageError, ParseError, ResourceLimitError
from ..primes import primes_in
from .characters import DirichletCharacter

TAU_LIMIT = 10**7


class CoefficientProvider:
    """Base class: subclasses implement the vectorized ``a_many``/``b_many``."""

    kind = "abstract"
    label = ""

    def a_many(self, primes: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def b_many(self, primes: np.ndarray, k: int) -> np.ndarray:
        raise NotImplementedError

    def a(self, p: int) -> complex:
        return complex(self.a_many(np.array([p], dtype=np.int64))[0])

    def b(self, p: int, k: int) -> complex:
        return complex(self.b_many(np.array([p], dtype=np.int64), k)[0])


@dataclass(frozen=True, eq=False)
class CharacterCoefficients(CoefficientProvider):
    """a(p) = chi(p), b(p, k) = chi(p)^k / k."""

    chi: DirichletCharacter
    label: str = ""
    kind = "dirichlet"

    def a_many(self, primes):
        return self.chi(primes)

    def b_many(self, primes, k):
        return self.chi(primes) ** k / k


@dataclass(frozen=True, eq=False)
class KroneckerZetaCoefficients(CoefficientProvider):
    """Dedekind zeta of a quadratic field as zeta * L(chi_d): a(p) = 1 + chi_d(p)."""

    chi: DirichletCharacter
    label: str = ""
    kind = "kronecker"

    def a_many(self, primes):
        return 1.0 + self.chi(primes)

    def b_many(self, primes, k):
        return (1.0 + self.chi(primes) ** k) / k


class _TabulatedCoefficients(CoefficientProvider):
    primes: np.ndarray
    values: np.ndarray

    def _lookup(self, primes):
        primes = np.asarray(primes, dtype=np.int64)
        pos = np.searchsorted(self.primes, primes)
        pos_c = np.minimum(pos, self.primes.size - 1)
        bad = (pos >= self.primes.size) | (self.primes[pos_c] != primes)
        if np.any(bad):
            missing = int(primes[np.flatnonzero(bad)[0]])
            raise CoverageError(f"{self.label or self.kind}: no coefficient for p={missing}")
        return pos_c

    def a_many(self, primes):
        return self.values[self._lookup(primes)]

    @property
    def max_prime(self) -> int:
        return int(self.primes[-1]) if self.primes.size else 0


@dataclass(frozen=True, eq=False)
class TauCoefficients(_TabulatedCoefficients):
    """Normalized Ramanujan tau lambda(p) = tau(p) / p^(11/2).

    The local factor is (1 - alpha x)(1 - beta x) with alpha + beta = lambda,
    alpha beta = 1, so b(p, k) = (alpha^k + beta^k) / k.
    """

    primes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str = "tau"
    kind = "tau"

    def b_many(self, primes, k):
        lam = self.a_many(primes).real
        prev, cur = np.full_like(lam, 2.0), lam
        for _ in range(k - 1):
            prev, cur = cur, lam * cur - prev
        return (cur / k).astype(complex)


@dataclass(frozen=True, eq=False)
class FileCoefficients(_TabulatedCoefficients):
    """Coefficients read from a ``p a_re [a_im]`` file; b(p, k) = 0 for k >= 2."""

    primes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str = "file"
    kind = "file"

    def b_many(self, primes, k):
        vals = self.a_many(primes)
        return vals if k == 1 else np.zeros_like(vals)


# ---------------------------------------------------------------- tau series

def _jacobi_cube(n_terms: int) -> list[tuple[int, int]]:
    """prod (1 - q^n)^3 = sum_k (-1)^k (2k+1) q^{k(k+1)/2}, as (exponent, coeff)."""
    out, k = [], 0
    while k * (k + 1) // 2 < n_terms:
        out.append((k * (k + 1) // 2, (-1) ** k * (2 * k + 1)))
        k += 1
    return out


def eta24_coefficients(n_terms: int) -> list[int]:
    """Exact coefficients of prod_{n>=1} (1 - q^n)^24 through q^(n_terms-1).

    The cube series is packed into one integer (Kronecker substitution) and
    squared three times modulo 2^(b n_terms); signed chunks are then decoded.
    """
    terms = _jacobi_cube(n_terms)
    c_max = max(abs(c) for _, c in terms)
    bound = c_max**8 * len(terms) ** 7
    width = (bound.bit_length() + 2 + 7) // 8  # bytes per coefficient
    bits = 8 * width * n_terms
    pos = bytearray(width * n_terms)
    neg = bytearray(width * n_terms)
    for e, c in terms:
        buf = pos if c > 0 else neg
        buf[e * width : e * width + 4] = abs(c).to_bytes(4, "little")
    packed = gmpy2.mpz(int.from_bytes(pos, "little")) - gmpy2.mpz(int.from_bytes(neg, "little"))
    packed = gmpy2.f_mod_2exp(packed, bits)
    for _ in range(3):
        packed = gmpy2.f_mod_2exp(packed * packed, bits)
    raw = int(packed).to_bytes(width * n_terms, "little")
    half = 1 << (8 * width - 1)
    full = 1 << (8 * width)
    out, borrow = [], 0
    for i in range(n_terms):
        c = int.from_bytes(raw[i * width : (i + 1) * width], "little") + borrow
        if c >= half:
            c -= full
            borrow = 1
        else:
            borrow = 0
        out.append(c)
    return out


def ramanujan_tau(limit: int) -> list[int]:
    """[tau(0)=0, tau(1), ..., tau(limit)] exactly."""
    if limit > TAU_LIMIT:
        raise ResourceLimitError(f"tau expansion limited to {TAU_LIMIT} in-process")
    return [0] + eta24_coefficients(limit)


def naive_eta24(n_terms: int) -> list[int]:
    """O(24 n^2) reference: multiply by (1 - q^n) twenty-four times each."""
    c = [1] + [0] * (n_terms - 1)
    for n in range(1, n_terms):
        for _ in range(24):
            for i in range(n_terms - 1, n - 1, -1):
                c[i] -= c[i - n]
    return c


@lru_cache(maxsize=4)
def _tau_table(limit: int):
    tau = ramanujan_tau(limit)
    primes = primes_in(2, limit)
    lam = np.array([tau[p] / float(p) ** 5.5 for p in primes.tolist()], dtype=float)
    return primes, lam


def tau_coefficients(limit: int, path: str | Path | None = None) -> TauCoefficients:
    """Normalized tau provider for p <= limit; beyond the cap a file is required."""
    if limit > TAU_LIMIT:
        if path is None:
            raise ResourceLimitError(
                f"tau limit {limit} above in-process cap {TAU_LIMIT}; supply a coefficient file"
            )
        f = load_coefficient_file(path)
        return TauCoefficients(f.primes, f.values.real.copy())
    primes, lam = _tau_table(int(limit))
    return TauCoefficients(primes, lam)


# ---------------------------------------------------------- coefficient files

def load_coefficient_file(path) -> FileCoefficients:
    primes, values = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'p a_re [a_im]', got {body!r}", lineno)
            try:
                p = int(parts[0])
                re = float(parts[1])
                im = float(parts[2]) if len(parts) == 3 else 0.0
            except ValueError as exc:
                raise ParseError(f"bad number in {body!r}", lineno) from exc
            if primes and p <= primes[-1]:
                raise ParseError(f"primes must be strictly ascending ({p} after {primes[-1]})", lineno)
            primes.append(p)
            values.append(complex(re, im))
    return FileCoefficients(
        np.array(primes, dtype=np.int64), np.array(values, dtype=complex), label=Path(path).stem
    )


def write_coefficient_file(path, provider: CoefficientProvider, primes=None) -> None:
    if primes is None:
        primes = provider.primes
    vals = provider.a_many(np.asarray(primes, dtype=np.int64))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {provider.kind} coefficients: p a_re a_im\n")
        for p, v in zip(np.asarray(primes).tolist(), np.asarray(vals, dtype=complex).tolist()):
            fh.write(f"{p} {v.real:.17g} {v.imag:.17g}\n")


def ramanujan_bound_ok(provider: CoefficientProvider, primes: np.ndarray, kmax: int = 30) -> bool:
    """Axiom surrogates |a(p)| <= 2 and |b(p, k)| <= 2/k."""
    if np.any(np.abs(provider.a_many(primes)) > 2 + 1e-12):
        return False
    return all(
        not np.any(np.abs(provider.b_many(primes, k)) > 2.0 / k + 1e-12)
        for k in range(1, kmax + 1)
    )


