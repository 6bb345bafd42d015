"""Dirichlet characters built from a generator decomposition of (Z/q)^*."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from sympy import divisors, factorint, primitive_root

from ..errors import DomainError

MAX_MODULUS = 10**4


@dataclass(frozen=True)
class _Component:
    modulus: int          # prime power p^e, or 2^e
    generator: int
    order: int


def _components(q: int) -> list[_Component]:
    comps = []
    for p, e in sorted(factorint(q).items()):
        pe = p**e
        if p == 2:
            if e == 1:
                continue
            comps.append(_Component(pe, pe - 1, 2))
            if e >= 3:
                comps.append(_Component(pe, 5, 2 ** (e - 2)))
        else:
            comps.append(_Component(pe, int(primitive_root(pe)), pe // p * (p - 1)))
    return comps


def _index_tables(q: int, comps: list[_Component]) -> np.ndarray:
    """idx[c, a] = discrete log of a in component c, or -1 if gcd(a, q) > 1."""
    idx = np.full((len(comps), q), -1, dtype=np.int64)
    units = np.array([a for a in range(q) if math.gcd(a, q) == 1], dtype=np.int64)
    for c, comp in enumerate(comps):
        local = {}
        if comp.modulus % 2 == 0 and comp.generator == 5:
            # 2^e, e >= 3: a = +-5^k; strip the sign first
            x = 1
            for k in range(comp.order):
                local[x] = k
                local[(-x) % comp.modulus] = k
                x = x * 5 % comp.modulus
        elif comp.modulus % 2 == 0:
            local = {1: 0}
            for x in range(comp.modulus):
                if x % 4 == 1:
                    local[x] = 0
                elif x % 4 == 3:
                    local[x] = 1
        else:
            x = 1
            for k in range(comp.order):
                local[x] = k
                x = x * comp.generator % comp.modulus
        for a in units:
            idx[c, a] = local[int(a) % comp.modulus]
    return idx


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    """A character mod ``modulus`` given by its full residue table.

    ``exponents`` and ``orders`` record chi(g_c) = exp(2 pi i k_c / n_c) on the
    generators of the decomposition; ``index`` is the position in
    :func:`make_characters` order (0 is principal).
    """

    modulus: int
    values: np.ndarray = field(repr=False)
    index: int = 0
    exponents: tuple = ()
    orders: tuple = ()
    label: str = ""

    def __call__(self, n):
        return self.values[np.asarray(n) % self.modulus]

    @property
    def principal(self) -> bool:
        return all(k == 0 for k in self.exponents)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.values.imag) < 1e-15))

    @cached_property
    def conductor(self) -> int:
        q = self.modulus
        for d in divisors(q):
            ok = True
            for a in range(1, q, d):
                if math.gcd(a, q) == 1 and abs(self.values[a] - 1) > 1e-9:
                    ok = False
                    break
            if ok:
                return int(d)
        return q

    @property
    def primitive(self) -> bool:
        return self.conductor == self.modulus

    def __repr__(self):
        return f"DirichletCharacter(q={self.modulus}, index={self.index})"


def make_characters(q: int) -> list[DirichletCharacter]:
    """All phi(q) characters mod q, principal first, then lexicographic exponents."""
    if q <= 0:
        raise DomainError(f"modulus must be positive, got {q}")
    if q > MAX_MODULUS:
        raise DomainError(f"modulus {q} above supported maximum {MAX_MODULUS}")
    comps = _components(q)
    idx = _index_tables(q, comps)
    orders = tuple(c.order for c in comps)
    unit = idx[0] >= 0 if comps else np.array([math.gcd(a, q) == 1 for a in range(q)])
    chars = []
    for i, ks in enumerate(product(*(range(n) for n in orders))):
        phase = np.zeros(q)
        for c, (k, n) in enumerate(zip(ks, orders)):
            phase += (k * np.where(idx[c] >= 0, idx[c], 0) % n) / n
        vals = np.where(unit, np.exp(2j * np.pi * phase), 0.0)
        # snap exact real values so real characters stay real
        vals.real[np.abs(vals.real) < 1e-15] = 0.0
        vals.imag[np.abs(vals.imag) < 1e-15] = 0.0
        vals.flags.writeable = False
        chars.append(DirichletCharacter(q, vals, i, tuple(ks), orders, f"chi_{q}_{i}"))
    return chars


def kronecker_symbol(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n >= 0."""
    if n == 0:
        return 1 if abs(d) == 1 else 0
    result = 1
    if n % 2 == 0:
        if d % 2 == 0:
            return 0
        v = 0
        while n % 2 == 0:
            n //= 2
            v += 1
        if v % 2 == 1 and d % 8 in (3, 5):
            result = -result
    # Jacobi symbol (d/n), n odd positive
    a = d % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_fundamental_discriminant(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return all(e == 1 for e in factorint(abs(d)).values())
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and all(e == 1 for e in factorint(abs(m)).values())
    return False


def kronecker_character(d: int) -> DirichletCharacter:
    """The real primitive character n -> (d/n) modulo |d|."""
    if not is_fundamental_discriminant(d):
        raise DomainError(f"{d} is not a fundamental discriminant")
    q = abs(d)
    vals = np.array([float(kronecker_symbol(d, n)) for n in range(q)], dtype=complex)
    vals.flags.writeable = False
    return DirichletCharacter(q, vals, -1, (1,), (2,), f"kronecker_{d}")
