"""Delta(z) = iint_U e^{-sz} conj(g(s)) dsigma dt and its Taylor-polynomial surrogate.

Exact (multi-precision) values use Green's formula on the rectangle,

    iint_U f(s) conj(g(s)) dA = (1/2i) oint f(s) conj(G(s)) ds,   G' = g,

and on each edge conj(s) is an affine function of s, so conj(G(s)) is a
polynomial Q_e(s).  Edge integrals of s^n and e^{-zs} Q_e(s) have closed
forms, so moments and Delta are computed without quadrature error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

from ..errors import ConfigError, DomainError, ResourceLimitError
from .domain import BergmanElement, QuadratureGrid, RectDomain

DELTA_CAP = 200.0
DEGREE_CAP = 3000
MAX_SAMPLES = 250_000
GUARD_DIGITS = 30


def delta_transform(g: BergmanElement, z, grid: QuadratureGrid | None = None,
                    cap: float = DELTA_CAP):
    """Delta(z) by tensor quadrature; ``z`` may be an array."""
    grid = grid or g.grid
    if not grid.compatible(g.grid):
        raise ConfigError("element cached on a different grid/domain")
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) > cap):
        raise DomainError(f"|z| above cap {cap}")
    kern = np.exp(-np.multiply.outer(z_arr, grid.nodes))
    out = kern @ (grid.weights * np.conj(g.values))
    return complex(out) if out.ndim == 0 else out


# ------------------------------------------------------------ exact edge forms

def _edges(domain: RectDomain):
    """(start, end, eps, gamma) with conj(s) = eps*s + gamma on the edge."""
    c = [mpmath.mpc(complex(v)) for v in domain.corners]
    u_lo, u_hi = mpmath.mpf(domain.u_lo), mpmath.mpf(domain.u_hi)
    t_lo, t_hi = mpmath.mpf(domain.t_lo), mpmath.mpf(domain.t_hi)
    return [
        (c[0], c[1], 1, mpmath.mpc(0, -2 * t_lo)),
        (c[1], c[2], -1, 2 * u_hi),
        (c[2], c[3], 1, mpmath.mpc(0, -2 * t_hi)),
        (c[3], c[0], -1, 2 * u_lo),
    ]


def _edge_polys(g: BergmanElement):
    """Per edge: coefficients (in s) of conj(G(s)) with G' = g, G(0) = 0."""
    gbar = [mpmath.conj(mpmath.mpc(complex(c))) / (k + 1) for k, c in enumerate(g.coefficients)]
    out = []
    for a, b, eps, gam in _edges(g.grid.domain):
        q = [mpmath.mpc(0)] * (len(gbar) + 1)
        # conj(G) = sum_k gbar_k (eps s + gam)^(k+1)
        for k, gk in enumerate(gbar):
            n = k + 1
            for i in range(n + 1):
                q[i] += gk * mpmath.binomial(n, i) * (eps ** i) * gam ** (n - i)
        out.append((a, b, q))
    return out


def exact_moments(g: BergmanElement, K: int, dps: int):
    """mu_l = iint_U (-s)^l conj(g) dA for l = 0..K, exact up to working precision."""
    with mpmath.workdps(dps):
        edges = _edge_polys(g)
        top = K + len(edges[0][2]) + 1
        mu = [mpmath.mpc(0)] * (K + 1)
        for a, b, q in edges:
            pa, pb = [mpmath.mpc(1)], [mpmath.mpc(1)]
            for _ in range(top):
                pa.append(pa[-1] * a)
                pb.append(pb[-1] * b)
            for l in range(K + 1):
                acc = mpmath.mpc(0)
                for i, qi in enumerate(q):
                    if qi:
                        n = l + i + 1
                        acc += qi * (pb[n] - pa[n]) / n
                mu[l] += acc
        half_i = mpmath.mpc(0, 2)
        return [(-1) ** l * m / half_i for l, m in enumerate(mu)]


def delta_exact(g: BergmanElement, z, dps: int = 50):
    """Delta(z) in multi-precision via the boundary formula; returns mpmath.mpc."""
    with mpmath.workdps(dps + GUARD_DIGITS):
        z = mpmath.mpc(complex(z)) if not isinstance(z, (mpmath.mpf, mpmath.mpc)) else mpmath.mpc(z)
        edges = _edge_polys(g)
        deg = len(edges[0][2]) - 1
        if abs(z) < mpmath.mpf(10) ** (-dps // 3):
            # z ~ 0: expand e^{-zs} is unnecessary, Delta(0) = mu_0
            return exact_moments(g, 0, dps + GUARD_DIGITS)[0]
        extra = 0 if abs(z) >= 1 else int(math.ceil(deg * -math.log10(float(abs(z))))) + 5
        with mpmath.workdps(dps + GUARD_DIGITS + extra):
            total = mpmath.mpc(0)
            for a, b, q in edges:
                # int e^{-zs} Q(s) ds = -e^{-zs} sum_k Q^(k)(s) / z^(k+1)
                for end, sign in ((b, 1), (a, -1)):
                    acc, dq = mpmath.mpc(0), list(q)
                    zp = z
                    for _ in range(deg + 1):
                        acc += mpmath.polyval(dq[::-1], end) / zp
                        dq = [i * c for i, c in enumerate(dq)][1:] or [mpmath.mpc(0)]
                        zp *= z
                    total += -sign * mpmath.exp(-z * end) * acc
            return total / mpmath.mpc(0, 2)


# -------------------------------------------------------- truncated exp poly

def _abs_integral_bound(g: BergmanElement) -> float:
    """iint |g| <= sqrt(area) ||g|| (Cauchy-Schwarz); the grid integrates |g|^2 exactly."""
    return math.sqrt(g.grid.domain.area) * g.norm() * (1 + 1e-12)


def log10_tail_bound(g: BergmanElement, x: float, K: int) -> float:
    """log10 of sup_{xi in [x, x+1]} |Delta(xi) - P(xi)|.

    |mu_l| <= C^l iint|g|, so the dropped tail is at most iint|g| sum_{l>K} y^l/l!
    with y = C (x+1), and sum_{l>K} y^l/l! <= y^(K+1)/(K+1)! / (1 - y/(K+2)).
    """
    y = g.grid.domain.max_modulus * (x + 1)
    if K + 2 <= y:
        return math.inf
    mass = _abs_integral_bound(g)
    if mass == 0:
        return -math.inf
    lg = (K + 1) * math.log(y) - math.lgamma(K + 2) - math.log1p(-y / (K + 2)) + math.log(mass)
    return lg / math.log(10)


def stirling_tail_estimate(x: float, C: float, K: int) -> float:
    """Heuristic e^{xC} exp(-(K+1) log((K+1)/(xC))) from the Stirling argument."""
    return math.exp(x * C - (K + 1) * math.log((K + 1) / (x * C)))


@dataclass(eq=False)
class TruncatedExpPoly:
    """P(xi) = sum_{l<=K} xi^l / l! mu_l, valid as a Delta surrogate on [x, x+1].

    ``coeffs_mp`` are the Taylor coefficients about ``center`` = x + 1/2 in
    multi-precision; ``poly`` is the same polynomial in double precision,
    which is well conditioned near the center.
    """

    g: BergmanElement
    x: float
    c0: float
    K: int
    dps: int
    moments: list = field(repr=False)
    center: float = 0.0
    coeffs_mp: list = field(default_factory=list, repr=False)
    log10_tail: float = 0.0

    @property
    def degree(self) -> int:
        return self.K

    @property
    def tail_bound(self) -> float:
        return 10.0 ** self.log10_tail if self.log10_tail > -300 else 0.0

    @property
    def tail_mp(self):
        with mpmath.workdps(self.dps):
            return mpmath.mpf(10) ** self.log10_tail if math.isfinite(self.log10_tail) else (
                mpmath.mpf(0) if self.log10_tail < 0 else mpmath.inf)

    @property
    def poly(self) -> Polynomial:
        c = self.center
        coef = np.array([complex(v) for v in self.coeffs_mp], dtype=complex)
        return Polynomial(coef, domain=[c - 1, c + 1], window=[-1, 1])

    def __call__(self, xi):
        return self.poly(np.asarray(xi, dtype=float))

    def eval_mp(self, xi, derivative: int = 0):
        with mpmath.workdps(self.dps):
            h = mpmath.mpf(xi) - mpmath.mpf(self.center)
            coeffs = self.coeffs_mp
            for _ in range(derivative):
                coeffs = [i * c for i, c in enumerate(coeffs)][1:]
            acc = mpmath.mpc(0)
            for c in reversed(coeffs):
                acc = acc * h + c
            return acc

    def eval_at_zero_mp(self):
        return self.moments[0]

    def stirling_estimate(self) -> float:
        return stirling_tail_estimate(self.x, self.g.grid.domain.max_modulus, self.K)


def working_dps(g: BergmanElement, x: float, K: int, log10_tail: float) -> int:
    C = g.grid.domain.max_modulus
    cancel = (x + 1) * (C + 1) / math.log(10)
    need = max(0.0, -log10_tail) if math.isfinite(log10_tail) else 0.0
    return int(GUARD_DIGITS + math.ceil(cancel) + math.ceil(need))


def truncated_exp_poly(g: BergmanElement, x: float, c0: float | None = None,
                       grid: QuadratureGrid | None = None) -> TruncatedExpPoly:
    """Degree K = floor(c0 x) polynomial with the certified tail bound.

    ``c0`` defaults to 3 e C with C = max |s| on the closed rectangle; it must
    be at least e C.
    """
    if grid is not None and not grid.compatible(g.grid):
        raise ConfigError("element cached on a different grid/domain")
    C = g.grid.domain.max_modulus
    if c0 is None:
        c0 = 3 * math.e * C
    if c0 < math.e * C:
        raise ConfigError(f"c0 = {c0} below e*C = {math.e * C}")
    K = int(math.floor(c0 * x))
    if K > DEGREE_CAP:
        raise ResourceLimitError(f"degree {K} above cap {DEGREE_CAP}")
    K = max(K, 0)
    lt = log10_tail_bound(g, x, K)
    dps = working_dps(g, x, K, lt)
    mu = exact_moments(g, K, dps)
    center = x + 0.5
    with mpmath.workdps(dps):
        a = [m / mpmath.factorial(l) for l, m in enumerate(mu)]
        # Taylor shift to the center by repeated synthetic division
        c = mpmath.mpf(center)
        coeffs = list(a)
        n = len(coeffs)
        for i in range(n - 1):
            for j in range(n - 2, i - 1, -1):
                coeffs[j] += c * coeffs[j + 1]
    return TruncatedExpPoly(g, float(x), float(c0), K, dps, mu, center, coeffs, lt)


# ------------------------------------------------------------------- Markov

def _as_poly(P):
    if isinstance(P, TruncatedExpPoly):
        return P.poly, P.degree
    if isinstance(P, Polynomial):
        return P, P.degree()
    coef = np.asarray(P, dtype=complex)
    return Polynomial(coef), coef.size - 1


def poly_max_abs(P, a: float, b: float, n_samples: int | None = None):
    """(max_{[a,b]} |P|, argmax) by dense sampling plus local refinement."""
    poly, n = _as_poly(P)
    if n_samples is None:
        n_samples = min(MAX_SAMPLES, max(64, 4 * n * n))
    ts = np.linspace(a, b, n_samples)
    vals = np.abs(poly(ts))
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), float(ts[i])
    # refine the few largest local maxima on their bracketing cells
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    cand = interior[np.argsort(vals[interior])[::-1][:5]]
    for k in cand:
        res = minimize_scalar(lambda t: -abs(poly(t)), bounds=(ts[k - 1], ts[k + 1]),
                              method="bounded", options={"xatol": 1e-15 * max(1.0, abs(ts[k]))})
        v = -float(res.fun)
        if v > best * (1 + 4 * np.finfo(float).eps):
            best, arg = v, float(res.x)
    return best, arg


def markov_bound(P, a: float, b: float) -> float:
    """2 n^2 / (b - a) * max_{[a,b]} |P|, an upper bound for |P'| on [a, b]."""
    if not a < b:
        raise ConfigError(f"degenerate interval [{a}, {b}]")
    _, n = _as_poly(P)
    if n < 1:
        raise ConfigError("Markov bound needs degree >= 1")
    m, _ = poly_max_abs(P, a, b)
    return 2.0 * n * n / (b - a) * m
