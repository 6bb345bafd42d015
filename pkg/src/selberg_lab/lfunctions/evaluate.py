"""Dirichlet L-functions through the Hurwitz decomposition.

L(s, chi) = q^-s sum_{a=1}^{q} chi(a) zeta(s, a/q)
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError, PoleError
from .characters import DirichletCharacter, kronecker_character
from .hurwitz import (
    BERNOULLI_TERMS,
    MIN_SIGMA,
    TARGET_ERROR,
    _tail,
    hurwitz_terms,
    pole_free_tail,
    remainder_bound,
)

RESYNC = 256


def _residues(chi: DirichletCharacter):
    q = chi.modulus
    return [(a, complex(chi.values[a % q])) for a in range(1, q + 1) if chi.values[a % q] != 0]


def _depth(chi, sigma_min, t_max):
    s = complex(sigma_min, t_max)
    return max(hurwitz_terms(s, a / chi.modulus) for a, _ in _residues(chi))


def _residue_tails(s, x, w, principal):
    if principal:
        return w * _tail(s, x, BERNOULLI_TERMS)
    return w * (_tail(s, x, BERNOULLI_TERMS, with_pole=False) + pole_free_tail(s, x))


def dirichlet_l(s: complex, chi: DirichletCharacter, n_terms: int | None = None) -> complex:
    """L(s, chi) with the Hurwitz remainder certified per residue."""
    s = complex(s)
    if s.real <= MIN_SIGMA:
        raise DomainError(f"Re(s) = {s.real} outside supported region")
    if chi.principal and s == 1:
        raise PoleError("L(s, chi0) has a pole at s = 1")
    q = chi.modulus
    auto = n_terms is None
    n = _depth(chi, s.real, abs(s.imag)) if auto else int(n_terms)
    while True:
        total = 0j
        bound = 0.0
        for a, w in _residues(chi):
            alpha = a / q
            ln = np.log(np.arange(n, dtype=float) + alpha)
            head = np.exp(-s * ln).sum()
            total += w * head + complex(_residue_tails(s, n + alpha, w, chi.principal))
            bound += remainder_bound(s, alpha, n)
        val = complex(np.exp(-s * math.log(q)) * total) if q > 1 else total
        scale = abs(np.exp(-s * math.log(q))) if q > 1 else 1.0
        if not auto or bound * scale <= TARGET_ERROR * (1 + abs(val)):
            return val
        n *= 2


def dirichlet_l_many(s, chi: DirichletCharacter) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    return np.array([dirichlet_l(z, chi) for z in s.ravel()]).reshape(s.shape)


def dirichlet_l_vertical(points, chi: DirichletCharacter, tau0: float, step: float,
                         count: int) -> np.ndarray:
    """L(s + i tau_k, chi) for tau_k = tau0 + k step, k < count, all s in points.

    Returns shape (count, len(points)).  Phases are advanced by the recurrence
    z <- z exp(-i step log n) and re-synchronized every ``RESYNC`` steps, at
    a depth fixed per block so results do not depend on how a scan is split.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any(pts.real <= MIN_SIGMA):
        raise DomainError("points outside supported region")
    q = chi.modulus
    out = np.empty((count, pts.size), dtype=complex)
    sigma_min = float(pts.real.min())
    t_abs = float(np.abs(pts.imag).max())
    for start in range(0, count, RESYNC):
        stop = min(count, start + RESYNC)
        taus = tau0 + step * np.arange(start, stop)
        t_max = t_abs + float(np.abs(taus).max())
        n = _depth(chi, sigma_min, t_max)
        grid = pts[None, :] + 1j * taus[:, None]            # (C, P)
        block = np.zeros(grid.shape, dtype=complex)
        for a, w in _residues(chi):
            alpha = a / q
            ln = np.log(np.arange(n, dtype=float) + alpha)
            z = np.exp(-np.outer(pts + 1j * taus[0], ln))    # (P, N)
            rot = np.exp(-1j * step * ln)
            for k in range(stop - start):
                block[k] += w * z.sum(axis=1)
                z *= rot
            block += _residue_tails(grid, n + alpha, w, chi.principal)
        if q > 1:
            block *= np.exp(-grid * math.log(q))
        out[start:stop] = block
    return out


def dedekind_quadratic(s: complex, d: int) -> complex:
    """zeta_K(s) = zeta(s) L(s, chi_d) for the quadratic field of discriminant d."""
    from .characters import make_characters

    chi_d = kronecker_character(d)
    return dirichlet_l(s, make_characters(1)[0]) * dirichlet_l(s, chi_d)
