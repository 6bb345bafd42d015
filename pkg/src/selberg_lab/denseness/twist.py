"""Greedy unit-modulus twists approximating Bergman targets, plus tail checks."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..lfunctions.specs import auto_kmax, local_log_term, local_log_terms
from ..primes import PrimeRange, geometric_checkpoints, prime_sum, primes_in
from .domain import BergmanElement, QuadratureGrid, RectDomain

ORDERS = ("descending-norm", "ascending", "random")
DEFAULT_GROUP = 6
DEFAULT_SWEEPS = 2
MONOTONE_TOL = 1e-12
CD_ITERS = 30


@dataclass
class TwistAssignment:
    """omega(p) on (v, P]; omega(p) = 1 for p <= v."""

    v: float
    primes: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.primes = np.asarray(self.primes, dtype=np.int64)
        self.omega = np.asarray(self.omega, dtype=complex)
        if self.primes.shape != self.omega.shape:
            raise ConfigError("primes and omega must align")
        if self.omega.size and np.max(np.abs(np.abs(self.omega) - 1)) > 1e-12:
            raise ConfigError("twists must have modulus 1")

    def __call__(self, p: int) -> complex:
        if p <= self.v:
            return 1.0 + 0j
        i = int(np.searchsorted(self.primes, p))
        if i < self.primes.size and self.primes[i] == p:
            return complex(self.omega[i])
        raise KeyError(p)


@dataclass
class TwistFitResult:
    assignment: TwistAssignment
    order: str
    seed: int
    initial_residual: float
    final_residual: float
    trace: list = field(repr=False)       # (step, p, omega, residual)
    skipped: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    sup_error: float | None = None
    group: int = DEFAULT_GROUP
    sweeps: int = DEFAULT_SWEEPS

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r[3] for r in self.trace])

    def nonincreasing(self, tol: float = MONOTONE_TOL) -> bool:
        r = self.residuals
        return bool(np.all(np.diff(r) <= tol))

    def write_trace(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "p", "omega_re", "omega_im", "residual"])
            for step, p, om, res in self.trace:
                w.writerow([step, p, f"{om.real:.17g}", f"{om.imag:.17g}", f"{res:.17g}"])

    def to_dict(self):
        return {
            "order": self.order, "seed": self.seed, "group": self.group, "sweeps": self.sweeps,
            "initial_residual": self.initial_residual, "final_residual": self.final_residual,
            "ratio": self.final_residual / self.initial_residual if self.initial_residual else None,
            "steps": len(self.trace), "skipped": self.skipped,
            "monotone_violations": self.violations, "sup_error": self.sup_error,
            "nonincreasing": self.nonincreasing(),
        }


def _coeff_matrix(specs, primes):
    return np.array([s.coefficients.a_many(primes) for s in specs])     # (m, n)


def h_norms_sq(specs, primes, domain: RectDomain) -> np.ndarray:
    """||h_p||^2 = sum_j |a_j(p)|^2 iint_U p^{-2 sigma} in closed form."""
    primes = np.asarray(primes, dtype=np.int64)
    lp = np.log(primes.astype(float))
    base = (domain.t_hi - domain.t_lo) * (np.exp(-2 * domain.u_lo * lp) - np.exp(-2 * domain.u_hi * lp)) / (2 * lp)
    a = _coeff_matrix(specs, primes)
    return (np.abs(a) ** 2).sum(axis=0) * base


def _base_sum(spec, primes, nodes):
    """sum_{p in primes} g_p(s, 1) on the nodes."""
    out = np.zeros(nodes.shape, dtype=complex)
    for p in np.asarray(primes).tolist():
        out += local_log_term(spec, int(p), nodes)
    return out


class _Residual:
    """Single-owner mutable state of the greedy fitter."""

    def __init__(self, targets, base, grid: QuadratureGrid):
        self.w = grid.weights
        self.nodes = grid.nodes
        self.R = np.array([f.values - b for f, b in zip(targets, base)])   # (m, N)

    def h(self, a_col, p):
        return a_col[:, None] * np.exp(-self.nodes * math.log(p))[None, :]

    def inner(self, H):
        # <R, H> summed over components
        return complex(np.sum(self.w * self.R * np.conj(H)))

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.w * np.abs(self.R) ** 2)))


def _phase(c: complex) -> complex:
    return c / abs(c) if c != 0 else 1.0 + 0j


def _group_step(state: _Residual, Hs):
    """Choose phases for a group jointly by cyclic coordinate descent.

    Starts from sequential greedy phases, and also from a cancelling start
    where consecutive terms are anti-aligned; keeps whichever ends lower.
    """
    w = state.w
    # Gram data
    G = np.array([[np.sum(w * Hi * np.conj(Hk)) for Hk in Hs] for Hi in Hs])   # <H_i, H_k>
    c = np.array([state.inner(H) for H in Hs])                                 # <R, H_i>
    k = len(Hs)

    def objective(om):
        # ||R - sum om_i H_i||^2 - ||R||^2
        return float(-2 * np.real(np.vdot(om, c)) + np.real(np.conj(om) @ G @ om))

    def descend(om):
        om = om.copy()
        for _ in range(CD_ITERS):
            moved = 0.0
            for i in range(k):
                # coefficient of conj(om_i): c_i - sum_{k != i} G_{k,i} om_k
                ci = c[i] - (G[:, i] @ om - G[i, i] * om[i])
                new = _phase(ci)
                moved = max(moved, abs(new - om[i]))
                om[i] = new
            if moved < 1e-14:
                break
        return om

    seq = np.empty(k, dtype=complex)
    for i in range(k):
        ci = c[i] - (G[:i, i] @ seq[:i] if i else 0)
        seq[i] = _phase(ci)
    cands = [descend(seq)]
    if k >= 2:
        anti = np.empty(k, dtype=complex)
        anti[0] = seq[0]
        for i in range(1, k):
            anti[i] = -anti[i - 1] * _phase(G[i - 1, i]) if i % 2 else seq[i]
        cands.append(descend(anti))
    return min(cands, key=objective)


def greedy_twist_fit(specs, targets, v: float, P: float, grid: QuadratureGrid | None = None,
                     order: str = "descending-norm", *, seed: int = 0, group: int = DEFAULT_GROUP,
                     sweeps: int = DEFAULT_SWEEPS, initial: TwistAssignment | None = None,
                     compacts=None) -> TwistFitResult:
    """Fit omega(p), v < p <= P, so that sum_{p<=v} g_p(s,1) + sum omega(p) h_p(s) ~ f.

    Primes are inserted in groups of at most ``group`` whose phases are chosen
    jointly; with group=1 this is the plain closed-form step omega = c/|c|.
    Each refinement sweep then re-optimizes every phase with all others
    fixed, which never increases the residual.  With ``initial`` the pass is
    replaced by that assignment and only the sweeps run.
    """
    if len(specs) != len(targets):
        raise ConfigError("need one target per spec")
    if not 2 <= v < P:
        raise ConfigError(f"need 2 <= v < P, got v={v}, P={P}")
    if order not in ORDERS:
        raise ConfigError(f"order must be one of {ORDERS}")
    if group < 1:
        raise ConfigError("group size must be >= 1")
    grid = grid or targets[0].grid
    for f in targets:
        if not grid.compatible(f.grid):
            raise ConfigError("targets cached on a different grid")
    low = primes_in(2, int(v))
    high = primes_in(int(v) + 1, int(P))
    base = [_base_sum(s, low, grid.nodes) for s in specs]
    state = _Residual(targets, base, grid)
    init_res = state.norm()
    A = _coeff_matrix(specs, high)                          # (m, n)
    norms = h_norms_sq(specs, high, grid.domain)
    active = np.flatnonzero(norms > 0)
    skipped = [int(p) for p in high[norms == 0]]
    if order == "descending-norm":
        seq = active[np.argsort(-norms[active], kind="stable")]
    elif order == "ascending":
        seq = active
    else:
        seq = np.random.default_rng(seed).permutation(active)
    omega = np.ones(high.size, dtype=complex)
    trace = [(0, 0, 1.0 + 0j, init_res)]
    violations = []
    step = 0
    prev = init_res
    if initial is not None:
        for i in seq:
            omega[i] = initial(int(high[i]))
            state.R -= omega[i] * state.h(A[:, i], high[i])
        step += 1
        prev = state.norm()
        trace.append((step, 0, 1.0 + 0j, prev))
    else:
        for g0 in range(0, seq.size, group):
            idx = seq[g0:g0 + group]
            Hs = [state.h(A[:, i], high[i]) for i in idx]
            om = _group_step(state, Hs)
            for i, o, H in zip(idx, om, Hs):
                omega[i] = o
                state.R -= o * H
            step += 1
            res = state.norm()
            if res > prev + MONOTONE_TOL:
                violations.append((step, res - prev))
            for i, o in zip(idx, om):
                trace.append((step, int(high[i]), complex(o), res))
            prev = res
    for _ in range(sweeps):
        for i in seq:
            H = state.h(A[:, i], high[i])
            state.R += omega[i] * H
            new = _phase(state.inner(H))
            omega[i] = new
            state.R -= new * H
            step += 1
            res = state.norm()
            if res > prev + MONOTONE_TOL:
                violations.append((step, res - prev))
            trace.append((step, int(high[i]), complex(new), res))
            prev = res
    assignment = TwistAssignment(v, high, omega)
    result = TwistFitResult(assignment, order, seed, init_res, prev, trace, skipped, violations,
                            group=group, sweeps=sweeps)
    if compacts is not None:
        result.sup_error = sup_error(specs, targets, assignment, compacts)
    return result


def twisted_sum(spec, assignment: TwistAssignment, s) -> np.ndarray:
    """sum_p g_p(s, omega(p)) over p <= P at the points s (full local factors)."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    low = primes_in(2, int(assignment.v))
    out = _base_sum(spec, low, s)
    if assignment.primes.size:
        for k, z in enumerate(s):
            out[k] += local_log_terms(spec, assignment.primes, z, assignment.omega).sum()
    return out


def sup_error(specs, targets, assignment: TwistAssignment, compacts) -> float:
    """max_j max_{s in K_j} |sum_p g_{p,j}(s, omega(p)) - f_j(s)|."""
    worst = 0.0
    for spec, f, K in zip(specs, targets, compacts):
        pts = np.asarray(K, dtype=complex)
        worst = max(worst, float(np.abs(twisted_sum(spec, assignment, pts) - f(pts)).max()))
    return worst


def planted_targets(specs, grid: QuadratureGrid, v: float, P: float, omega_star, *,
                    degree: int = 24):
    """Polynomial targets f_j, least-squares projections (on the grid) of
    sum_{p<=v} g_p(s,1) + sum_{v<p<=P} omega*(p) h_p(s)."""
    low = primes_in(2, int(v))
    high = primes_in(int(v) + 1, int(P))
    A = _coeff_matrix(specs, high)
    E = np.exp(-np.outer(np.log(high.astype(float)), grid.nodes))       # (n, N)
    sw = np.sqrt(grid.weights)
    center = complex(np.dot(grid.weights, grid.nodes) / grid.weights.sum())
    V = np.vander(grid.nodes - center, degree + 1, increasing=True)
    out = []
    for j, spec in enumerate(specs):
        vals = _base_sum(spec, low, grid.nodes) + (A[j] * omega_star) @ E
        coef, *_ = np.linalg.lstsq(V * sw[:, None], vals * sw, rcond=None)
        # re-expand about 0
        poly = np.polynomial.Polynomial(coef)
        shifted = poly(np.polynomial.Polynomial([-center, 1]))
        out.append(BergmanElement(shifted.coef, grid))
    return out, TwistAssignment(v, high, omega_star)


def tail_remainder_terms(spec, primes, domain: RectDomain, n_boundary: int = 256) -> np.ndarray:
    """max over the boundary (maximum principle) of |sum_{k>=2} b(p,k) p^{-ks}| per prime."""
    primes = np.asarray(primes, dtype=np.int64)
    pts = domain.boundary_points(n_boundary)
    if primes.size == 0:
        return np.zeros(0)
    kmax = auto_kmax(int(primes.min()), domain.u_lo)
    out = np.zeros(primes.size)
    lp = np.log(primes.astype(float))
    for lo in range(0, primes.size, 2048):
        sl = slice(lo, lo + 2048)
        ps = np.exp(-np.outer(lp[sl], pts))             # (n, B)
        power = ps.copy()
        acc = np.zeros(ps.shape, dtype=complex)
        for k in range(2, kmax + 1):
            power = power * ps
            acc += spec.coefficients.b_many(primes[sl], k)[:, None] * power
        out[sl] = np.abs(acc).max(axis=1)
    return out


def tail_remainder_check(spec, v: float, grid_or_domain, p_max: float = 1e5,
                         checkpoints=None, n_boundary: int = 256):
    """Partial sums over v < p <= x of max_U |g_p(s,1) - h_p(s)| at checkpoints."""
    if v < 2:
        raise ConfigError("v must be >= 2")
    domain = getattr(grid_or_domain, "domain", grid_or_domain)
    lo = int(v) + 1
    if checkpoints is None:
        checkpoints = geometric_checkpoints(max(lo, 10), p_max, per_decade=4)
    return prime_sum(PrimeRange(lo, int(p_max)),
                     lambda p: tail_remainder_terms(spec, p, domain, n_boundary).astype(complex),
                     checkpoints)


def h_norm_series(specs, grid_or_domain, p_max: float = 1e6, checkpoints=None):
    """Partial sums of sum_p ||h_p||^2; their convergence is what lets the twisted series be rearranged."""
    domain = getattr(grid_or_domain, "domain", grid_or_domain)
    if checkpoints is None:
        checkpoints = geometric_checkpoints(10, p_max, per_decade=4)
    return prime_sum(PrimeRange(2, int(p_max)),
                     lambda p: h_norms_sq(specs, p, domain).astype(complex), checkpoints)
