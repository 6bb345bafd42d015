"""Interval selection around maxima of |P| and the nested m-stage version."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from ..errors import ConfigError, DegenerateSignalError, RefinementLimitError
from .delta import MAX_SAMPLES, TruncatedExpPoly, delta_exact, truncated_exp_poly
from .domain import BergmanElement

MAX_HALVINGS = 20
N_TEST = 50
MAX_STAGES = 6
MAX_X = 60.0
DEGENERATE_FACTOR = 10.0


@dataclass
class IntervalSelection:
    interval: tuple[float, float]
    x0: float
    B_prime: float
    half_width: float
    p_x0: float
    derivative_max: float
    markov_bound: float
    derivative_ratio: float     # max|P'| / (x^(M+2) |P(x0)|)
    tail_bound_log10: float
    halvings: int
    test_points: int
    start: str

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]

    def to_dict(self):
        d = dict(self.__dict__)
        d["interval"] = list(self.interval)
        d["width"] = self.width
        return d


def _mp_abs(P: TruncatedExpPoly, xi):
    return abs(P.eval_mp(xi))


def _newton_max(P: TruncatedExpPoly, t0: float, a: float, b: float, iters: int = 60):
    """Stationary point of |P|^2 near t0 in multi-precision, kept inside [a, b]."""
    with mpmath.workdps(P.dps):
        t = mpmath.mpf(t0)
        lo, hi = mpmath.mpf(a), mpmath.mpf(b)
        tol = mpmath.mpf(10) ** (-(P.dps - 10))
        for _ in range(iters):
            p0, p1, p2 = P.eval_mp(t), P.eval_mp(t, 1), P.eval_mp(t, 2)
            f1 = 2 * mpmath.re(p1 * mpmath.conj(p0))
            f2 = 2 * mpmath.re(p2 * mpmath.conj(p0) + p1 * mpmath.conj(p1))
            if f2 >= 0:
                break
            step = f1 / f2
            t_new = min(max(t - step, lo), hi)
            if abs(t_new - t) <= tol * max(1, abs(t)):
                t = t_new
                break
            t = t_new
        return t


def locate_max(P: TruncatedExpPoly, a: float, b: float):
    """argmax over [a, b] of |P|: dense double sampling, then Newton in
    multi-precision from every near-tie local maximum and both endpoints."""
    n = min(MAX_SAMPLES, max(64, 4 * P.degree ** 2))
    ts = np.linspace(a, b, n)
    vals = np.abs(P(ts))
    vmax = float(vals.max())
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    near = interior[vals[interior] >= vmax * (1 - 1e-6)]
    cands = [mpmath.mpf(a), mpmath.mpf(b)]
    cands += [_newton_max(P, float(ts[k]), a, b) for k in near]
    with mpmath.workdps(P.dps):
        best = max(cands, key=lambda t: _mp_abs(P, t))
        return best, _mp_abs(P, best), vmax, ts


def _sandwich_ok(P: TruncatedExpPoly, lo: float, hi: float, pmax, n_test: int) -> bool:
    with mpmath.workdps(P.dps):
        slack = pmax * mpmath.mpf(10) ** (-(P.dps - 15))
        for xi in np.linspace(lo, hi, n_test):
            v = _mp_abs(P, float(xi))
            if v < pmax / 2 or v > pmax + slack:
                return False
    return True


def interval_select(g: BergmanElement, interval, x: float, *, M: int = 0,
                    A: float | None = None, c0: float | None = None, grid=None,
                    poly: TruncatedExpPoly | None = None, n_test: int = N_TEST,
                    start: str = "meanvalue", stage: int = 1) -> IntervalSelection:
    """Shrink I to I' around x0 = argmax_I |P| so that |P(x0)|/2 <= |P| <= |P(x0)| on I'.

    I' = I cap [x0 - B'/x0^(M+2), x0 + B'/x0^(M+2)].  With ``start="meanvalue"``
    the first B' is the largest one the mean-value estimate allows with the
    sampled max|P'|; ``start="quarter"`` starts at B/4.  B' is then halved
    (at most 20 times) until the sandwich holds at ``n_test`` points.
    ``A`` is accepted for interface symmetry; the achieved error scale is
    reported through the tail bound instead.
    """
    a, b = float(interval[0]), float(interval[1])
    if not x > 2:
        raise ConfigError(f"x = {x} must exceed 2")
    if not (x - 1e-12 <= a < b <= x + 1 + 1e-12):
        raise ConfigError(f"interval [{a}, {b}] not inside [x, x+1]")
    P = poly if poly is not None else truncated_exp_poly(g, x, c0, grid)
    x0_mp, p0_mp, vmax, ts = locate_max(P, a, b)
    tail = P.tail_bound
    if vmax < DEGENERATE_FACTOR * tail or p0_mp == 0:
        raise DegenerateSignalError(
            f"max |P| = {vmax:.3g} below {DEGENERATE_FACTOR:g} x tail bound {tail:.3g}", stage
        )
    x0 = float(x0_mp)
    p0 = float(p0_mp)
    dmax = float(np.abs(P.poly.deriv()(ts)).max())
    n = P.degree
    markov = 2.0 * n * n / (b - a) * vmax
    B = (b - a) * x ** M
    scale = x0 ** (M + 2)
    if start == "meanvalue":
        b_prime = scale * p0 / (2.0 * dmax) if dmax > 0 else B
    elif start == "quarter":
        b_prime = B / 4
    else:
        raise ConfigError(f"unknown B' start rule {start!r}")
    for halvings in range(MAX_HALVINGS + 1):
        h = b_prime / scale
        lo, hi = max(a, x0 - h), min(b, x0 + h)
        if _sandwich_ok(P, lo, hi, p0_mp, n_test):
            break
        b_prime /= 2
    else:
        raise RefinementLimitError(f"stage {stage}: sandwich failed after {MAX_HALVINGS} halvings")
    return IntervalSelection(
        (lo, hi), x0, b_prime, h, p0, dmax, markov,
        dmax / (x ** (M + 2) * p0), P.log10_tail, halvings, n_test, start,
    )


@dataclass
class StageCheck:
    stage: int
    lower_chain: bool       # |D(x0^(j-1))|/2 <= |D(x0^(j))|/2
    lower: bool             # |D(x0^(j))|/2 <= |D(xi)|
    upper: bool             # |D(xi)| <= |D(x0^(j))|
    tolerance_log10: float
    min_margin: float

    @property
    def ok(self) -> bool:
        return self.lower_chain and self.lower and self.upper


@dataclass
class NestedIntervalResult:
    x: float
    intervals: list                 # I_1 ... I_m
    points: list                    # x0^(0) = x, x0^(1) ... x0^(m)
    B: list                         # B_1 > ... > B_m
    selections: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    polys: list = field(default_factory=list, repr=False)

    @property
    def widths(self) -> list:
        return [b - a for a, b in self.intervals]

    @property
    def innermost(self) -> tuple[float, float]:
        return self.intervals[-1] if self.intervals else (self.x, self.x + 1)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def widths_ok(self) -> bool:
        return all(w >= B / self.x ** (2 * j) * (1 - 1e-12) and B > 0
                   for j, (w, B) in enumerate(zip(self.widths, self.B), 1))

    def to_dict(self):
        return {
            "x": self.x,
            "intervals": [list(i) for i in self.intervals],
            "points": self.points,
            "widths": self.widths,
            "B": self.B,
            "skipped_stages": self.skipped,
            "selections": [s.to_dict() if s else None for s in self.selections],
            "checks": [c.__dict__ | {"ok": c.ok} for c in self.checks],
        }


def _estimate_check(P: TruncatedExpPoly, g, stage, x_prev, x_cur, lo, hi, n_test):
    """Two-sided estimate for Delta itself (exact evaluation), tolerance 2 x tail."""
    with mpmath.workdps(P.dps):
        tol = 2 * P.tail_mp
        d_prev = abs(delta_exact(g, x_prev, P.dps))
        d_cur = abs(delta_exact(g, x_cur, P.dps))
        chain = d_prev / 2 <= d_cur / 2 + tol
        lower = upper = True
        margin = mpmath.inf
        for xi in np.linspace(lo, hi, n_test):
            d = abs(delta_exact(g, float(xi), P.dps))
            lower &= bool(d_cur / 2 <= d + tol)
            upper &= bool(d <= d_cur + tol)
            margin = min(margin, (d - d_cur / 2) / d_cur, (d_cur - d) / d_cur)
        return StageCheck(stage, bool(chain), lower, upper, P.log10_tail + math.log10(2),
                          float(margin))


def nested_interval_select(gs, x: float, A: float | None = None, c0: float | None = None,
                           grid=None, *, n_test: int = N_TEST, start: str = "meanvalue",
                           verify: bool = True) -> NestedIntervalResult:
    """Apply interval_select to g_1, ..., g_m in turn with M = 2(j-1).

    Identically zero elements are skipped (their Delta vanishes everywhere);
    the interval is passed through unchanged and the stage is recorded.
    """
    m = len(gs)
    if not 1 <= m <= MAX_STAGES:
        raise ConfigError(f"need 1 <= m <= {MAX_STAGES}, got {m}")
    if x > MAX_X:
        raise ConfigError(f"x = {x} above polynomial degree budget {MAX_X}")
    cur = (float(x), float(x) + 1.0)
    points, intervals, B, sels, polys, skipped = [float(x)], [], [], [], [], []
    for j, g in enumerate(gs, 1):
        if g.is_zero:
            skipped.append(j)
            sels.append(None)
            polys.append(None)
            points.append(points[-1])
        else:
            P = truncated_exp_poly(g, x, c0, grid)
            sel = interval_select(g, cur, x, M=2 * (j - 1), A=A, poly=P, n_test=n_test,
                                  start=start, stage=j)
            cur = sel.interval
            sels.append(sel)
            polys.append(P)
            points.append(sel.x0)
        intervals.append(cur)
        bj = (cur[1] - cur[0]) * x ** (2 * j)
        B.append(bj if not B else min(bj, B[-1] / 2))
    res = NestedIntervalResult(float(x), intervals, points, B, sels, [], skipped, polys)
    if verify:
        lo, hi = res.innermost
        for j, (g, P) in enumerate(zip(gs, polys), 1):
            if P is not None:
                res.checks.append(_estimate_check(P, g, j, points[j - 1], points[j], lo, hi, n_test))
    return res
