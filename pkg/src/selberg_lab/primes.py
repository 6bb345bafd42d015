"""Segmented prime enumeration and checkpointed sums over primes.

Every prime sum in the lab goes through :func:`prime_sum`.  Terms are
reduced in fixed value blocks of ``REDUCTION_BLOCK`` integers, each block
and checkpoint bin summed with :func:`math.fsum`, so results do not depend
on the sieve segment size or on the number of workers.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import expi

from .errors import ConfigError, DomainError, InvalidRangeError, ResourceLimitError

PRIME_LIMIT = 10**9
REDUCTION_BLOCK = 1 << 20
DEFAULT_SEGMENT = 1 << 18


@dataclass(frozen=True)
class PrimeRange:
    lo: int
    hi: int
    segment_size: int = DEFAULT_SEGMENT

    def __post_init__(self):
        if self.lo < 2:
            raise InvalidRangeError(f"lo must be >= 2, got {self.lo}")
        if self.lo > self.hi:
            raise InvalidRangeError(f"empty range: lo={self.lo} > hi={self.hi}")
        if self.segment_size < 64:
            raise InvalidRangeError("segment_size must be >= 64")


@lru_cache(maxsize=8)
def _small_primes(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _sieve_window(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Primes in [lo, hi] from an odd-only mask; ``base`` covers sqrt(hi)."""
    out = []
    if lo <= 2 <= hi:
        out.append(np.array([2], dtype=np.int64))
    first = max(lo, 3) | 1
    if first > hi:
        return out[0] if out else np.zeros(0, dtype=np.int64)
    count = (hi - first) // 2 + 1
    mask = np.ones(count, dtype=bool)
    for p in base[1:]:
        p = int(p)
        sq = p * p
        if sq > hi:
            break
        start = max(sq, ((first + p - 1) // p) * p)
        if start % 2 == 0:
            start += p
        if start > hi:
            continue
        mask[(start - first) // 2 :: p] = False
    found = first + 2 * np.flatnonzero(mask).astype(np.int64)
    out.append(found)
    return np.concatenate(out)


def sieve_primes(rng: PrimeRange, limit: int = PRIME_LIMIT) -> Iterator[np.ndarray]:
    """Yield the primes of ``rng`` as ascending int64 arrays, one per segment."""
    if rng.hi > limit:
        raise ResourceLimitError(f"hi={rng.hi} exceeds prime limit {limit}")
    base = _small_primes(math.isqrt(rng.hi) + 1)
    span = 2 * rng.segment_size
    lo = rng.lo
    while lo <= rng.hi:
        top = min(lo + span - 1, rng.hi)
        chunk = _sieve_window(lo, top, base)
        if chunk.size:
            yield chunk
        lo = top + 1


def primes_in(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT) -> np.ndarray:
    """All primes in [lo, hi] as one array (empty if the window holds none)."""
    lo = max(lo, 2)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    parts = list(sieve_primes(PrimeRange(lo, hi, segment_size)))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def prime_pi(x: float) -> int:
    if x < 2:
        return 0
    return int(sum(c.size for c in sieve_primes(PrimeRange(2, int(x)))))


@dataclass(frozen=True)
class CheckpointedSum:
    checkpoints: tuple
    values: np.ndarray = field(repr=False)
    term_count: np.ndarray = field(repr=False)

    def value_at(self, x: float) -> complex:
        i = self.checkpoints.index(x)
        return complex(self.values[i])

    def to_rows(self):
        for x, v, n in zip(self.checkpoints, self.values, self.term_count):
            yield x, v.real, v.imag, int(n)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "re", "im", "terms"])
            for x, re, im, n in self.to_rows():
                w.writerow([f"{x:.17g}", f"{re:.17g}", f"{im:.17g}", n])


def _check_checkpoints(checkpoints: Sequence[float], lo: int, hi: int) -> np.ndarray:
    cps = np.asarray(checkpoints, dtype=float)
    if cps.ndim != 1 or cps.size == 0:
        raise ConfigError("at least one checkpoint is required")
    if np.any(np.diff(cps) <= 0):
        raise ConfigError("checkpoints must be strictly ascending")
    if cps[0] < lo or cps[-1] > hi:
        raise ConfigError(f"checkpoints must lie within [{lo}, {hi}]")
    return cps


def _block_cells(lo, hi, segment_size, term, cps, limit):
    """(bin, re, im, count) cells for primes of one reduction block."""
    cells = []
    primes = primes_in(lo, hi, segment_size)
    if primes.size == 0:
        return cells
    if hi > limit:
        raise ResourceLimitError(f"hi={hi} exceeds prime limit {limit}")
    vals = np.asarray(term(primes))
    if vals.shape != primes.shape:
        vals = np.broadcast_to(vals, primes.shape)
    bins = np.searchsorted(cps, primes, side="left")
    edges = np.flatnonzero(np.diff(bins)) + 1
    starts = np.concatenate(([0], edges))
    stops = np.concatenate((edges, [primes.size]))
    is_complex = np.iscomplexobj(vals)
    for a, b in zip(starts, stops):
        chunk = vals[a:b]
        re = math.fsum(chunk.real.tolist()) if is_complex else math.fsum(chunk.tolist())
        im = math.fsum(chunk.imag.tolist()) if is_complex else 0.0
        cells.append((int(bins[a]), re, im, int(b - a)))
    return cells


def prime_sum(
    rng: PrimeRange,
    term: Callable[[np.ndarray], np.ndarray],
    checkpoints: Sequence[float],
    *,
    workers: int = 1,
    limit: int = PRIME_LIMIT,
) -> CheckpointedSum:
    """Sum ``term(p)`` over primes of ``rng`` up to each checkpoint.

    ``term`` is vectorized: it receives an int64 array of primes and returns
    an array of the same shape (real or complex).
    """
    cps = _check_checkpoints(checkpoints, rng.lo, rng.hi)
    top = min(rng.hi, int(math.floor(cps[-1])))
    if top > limit:
        raise ResourceLimitError(f"hi={top} exceeds prime limit {limit}")
    blocks = []
    k = rng.lo // REDUCTION_BLOCK
    while k * REDUCTION_BLOCK <= top:
        blo = max(rng.lo, k * REDUCTION_BLOCK)
        bhi = min(top, (k + 1) * REDUCTION_BLOCK - 1)
        if blo <= bhi:
            blocks.append((blo, bhi))
        k += 1

    def work(block):
        return _block_cells(block[0], block[1], rng.segment_size, term, cps, limit)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]

    per_bin_re = [[] for _ in cps]
    per_bin_im = [[] for _ in cps]
    counts = np.zeros(cps.size, dtype=np.int64)
    for cells in results:
        for b, re, im, n in cells:
            per_bin_re[b].append(re)
            per_bin_im[b].append(im)
            counts[b] += n
    values = np.empty(cps.size, dtype=complex)
    acc_re, acc_im = [], []
    for i in range(cps.size):
        acc_re.extend(per_bin_re[i])
        acc_im.extend(per_bin_im[i])
        values[i] = complex(math.fsum(acc_re), math.fsum(acc_im))
    return CheckpointedSum(tuple(float(c) for c in cps), values, np.cumsum(counts))


def logarithmic_integral(x: float) -> float:
    """Principal-value li(x) for x > 2."""
    if not x > 2:
        raise DomainError(f"li(x) requires x > 2, got {x}")
    return float(expi(math.log(x)))


def geometric_checkpoints(x_min: float, x_max: float, per_decade: int = 32) -> list[float]:
    """Geometric schedule from x_min to x_max inclusive, per_decade points per decade."""
    n = max(1, int(round(per_decade * math.log10(x_max / x_min))))
    pts = [float(x_min * (x_max / x_min) ** (i / n)) for i in range(n + 1)]
    pts[-1] = float(x_max)
    return sorted(set(pts))
