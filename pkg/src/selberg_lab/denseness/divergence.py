"""Block sums over primes with log p in the innermost nested interval."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, EmptyBlockWarning
from ..primes import primes_in
from .delta import delta_transform
from .intervals import NestedIntervalResult, nested_interval_select

DEFAULT_EPS = 0.05
DEFAULT_SLACK = 1e-3
PRIME_CHUNK = 1 << 16


@dataclass
class DivergenceBlock:
    x: float
    interval: tuple[float, float]
    p_range: tuple[int, int]
    n_primes: int
    block_sum: float            # sum* |sum_j a_j(p) Delta_j(log p)|
    quadratic: float            # S(x) = sum* |...|^2
    diagonal: float
    off_diagonal: float
    per_spec: list              # sum* |a_j(p) Delta_j(log p)| for each j
    shape: float                # e^{(1 - sigma2 - eps) x} / x^(2m+1)
    ok: bool
    delta1_scaled: float        # |Delta_1(x)| e^{sigma2 x}
    nested: NestedIntervalResult | None = field(default=None, repr=False)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "nested"}
        d["interval"] = list(self.interval)
        d["p_range"] = list(self.p_range)
        d["nested"] = self.nested.to_dict() if self.nested else None
        return d


def shape_curve(x: float, sigma2: float, m: int, eps: float = DEFAULT_EPS) -> float:
    return math.exp((1 - sigma2 - eps) * x) / x ** (2 * m + 1)


def _block(specs, polys, lo: int, hi: int):
    m = len(specs)
    stats = np.zeros(3 + m)
    count = 0
    for start in range(lo, hi + 1, PRIME_CHUNK * 16):
        ps = primes_in(start, min(hi, start + PRIME_CHUNK * 16 - 1))
        if ps.size == 0:
            continue
        count += ps.size
        logp = np.log(ps.astype(float))
        terms = np.zeros((m, ps.size), dtype=complex)
        for j, (spec, P) in enumerate(zip(specs, polys)):
            if P is not None:
                terms[j] = spec.coefficients.a_many(ps) * P(logp)
        tot = terms.sum(axis=0)
        diag = (np.abs(terms) ** 2).sum(axis=0)
        stats[0] += math.fsum(np.abs(tot))
        stats[1] += math.fsum(np.abs(tot) ** 2)
        stats[2] += math.fsum(diag)
        stats[3:] += [math.fsum(np.abs(terms[j])) for j in range(m)]
    return count, stats


def divergence_probe(specs, gs, x_list, A: float | None = None, c0: float | None = None,
                     grid=None, *, eps: float = DEFAULT_EPS, slack: float = DEFAULT_SLACK,
                     sigma2: float | None = None, n_test: int = 50,
                     start: str = "meanvalue") -> list[DivergenceBlock]:
    """For each x: nested intervals, then block sums over e^{x'} <= p <= e^{x' + |I_m|}.

    Delta_j(log p) is evaluated through the truncated polynomial P_j, which
    differs from Delta_j by at most its certified tail bound on [x, x+1].
    """
    if len(specs) != len(gs):
        raise ConfigError("need one Bergman element per spec")
    xs = [float(v) for v in x_list]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ConfigError("x_list must be ascending")
    m = len(specs)
    grid = grid or gs[0].grid
    if sigma2 is None:
        sigma2 = grid.domain.sigma_upper
    out = []
    for x in xs:
        nested = nested_interval_select(gs, x, A, c0, grid, n_test=n_test, start=start)
        lo_x, hi_x = nested.innermost
        p_lo, p_hi = int(math.ceil(math.exp(lo_x))), int(math.floor(math.exp(hi_x)))
        count, st = _block(specs, nested.polys, p_lo, p_hi) if p_hi >= p_lo else (0, np.zeros(3 + m))
        if count == 0:
            warnings.warn(f"x = {x}: block [{p_lo}, {p_hi}] contains no primes", EmptyBlockWarning,
                          stacklevel=2)
        shape = shape_curve(x, sigma2, m, eps)
        g1 = next((g for g in gs if not g.is_zero), gs[0])
        d1 = abs(delta_transform(g1, x, grid)) * math.exp(sigma2 * x)
        out.append(DivergenceBlock(
            x, (lo_x, hi_x), (p_lo, p_hi), count, float(st[0]), float(st[1]), float(st[2]),
            float(st[1] - st[2]), [float(v) for v in st[3:]], shape,
            bool(st[0] >= slack * shape), float(d1), nested,
        ))
    return out
