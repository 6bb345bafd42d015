"""Shift scans, value-vector coverage and argument-principle zero counts."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, RefinementLimitError

MAX_STEP = 0.05
DEFAULT_STEP = 0.02
BOOTSTRAP_BLOCK = 50
BOOTSTRAP_RESAMPLES = 200
CAUCHY_NODES = 64
CAUCHY_RADIUS = 0.05
POLE_RADIUS = 1e-6


# ----------------------------------------------------------------- targets

def _disk_samples(center: complex, radius: float, n: int) -> np.ndarray:
    """Half the points on the circle, the rest on three inner rings plus the center."""
    n_b = max(8, n // 2)
    rest = max(0, n - n_b - 1)
    pts = [center + radius * np.exp(2j * np.pi * np.arange(n_b) / n_b), [center]]
    for k, frac in enumerate((0.75, 0.5, 0.25)):
        m = rest // 3 + (1 if k < rest % 3 else 0)
        if m:
            pts.append(center + frac * radius * np.exp(2j * np.pi * (np.arange(m) + 0.5) / m))
    return np.concatenate(pts)


def _rect_samples(u_lo, u_hi, t_lo, t_hi, n: int) -> np.ndarray:
    n_b = max(8, n // 2)
    c = np.array([complex(u_lo, t_lo), complex(u_hi, t_lo), complex(u_hi, t_hi), complex(u_lo, t_hi)])
    lengths = np.abs(np.roll(c, -1) - c)
    per = np.maximum(1, np.round(n_b * lengths / lengths.sum()).astype(int))
    edge = [c[i] + (c[(i + 1) % 4] - c[i]) * np.arange(k) / k for i, k in enumerate(per)]
    k = max(1, int(math.ceil(math.sqrt(max(1, n - per.sum())))))
    uu, tt = np.meshgrid(np.linspace(u_lo, u_hi, k + 2)[1:-1], np.linspace(t_lo, t_hi, k + 2)[1:-1])
    return np.concatenate(edge + [(uu + 1j * tt).ravel()])


@dataclass(frozen=True, eq=False)
class CompactTarget:
    """Sampled compact K, polynomial target g (coefficients low to high) and eps."""

    shape: str
    params: tuple
    coefficients: np.ndarray
    eps: float
    n_samples: int = 200
    nonvanishing: bool = True
    label: str = ""
    strip: tuple = (0.5, 1.0)
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coefficients",
                           np.atleast_1d(np.asarray(self.coefficients, dtype=complex)))
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        p = self.params
        if self.shape == "disk":
            pts = _disk_samples(complex(p[0]), float(p[1]), self.n_samples)
        elif self.shape == "rect":
            pts = _rect_samples(*map(float, p), self.n_samples)
        elif self.shape == "segment":
            pts = complex(p[0]) + (complex(p[1]) - complex(p[0])) * np.linspace(0, 1, max(2, self.n_samples))
        elif self.shape == "point":
            pts = np.array([complex(p[0])])
        else:
            raise ConfigError(f"unknown compact shape {self.shape!r}")
        lo, hi = self.strip
        if np.any(pts.real <= lo) or np.any(pts.real >= hi):
            raise ConfigError(f"{self.label or self.shape}: samples leave the strip ({lo}, {hi})")
        object.__setattr__(self, "points", pts)
        if self.nonvanishing and np.min(np.abs(self.g(pts))) == 0:
            raise ConfigError(f"{self.label or self.shape}: target vanishes on K")

    def g(self, s) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(s, dtype=complex), self.coefficients)

    @property
    def max_abs_imag(self) -> float:
        return float(np.abs(self.points.imag).max())

    def describe(self) -> dict:
        return {
            "shape": self.shape, "params": [str(v) for v in self.params],
            "n_samples": int(self.points.size), "eps": self.eps,
            "coefficients": [[c.real, c.imag] for c in self.coefficients.tolist()],
            "nonvanishing": self.nonvanishing, "label": self.label,
        }


# ------------------------------------------------------------ shift scans

@dataclass
class ShiftScanReport:
    T: float
    step: float
    taus: np.ndarray
    deviations: np.ndarray          # (count, m)
    eps: float
    masked: np.ndarray
    labels: list = field(default_factory=list)
    seed: int = 0

    @property
    def dev_max(self) -> np.ndarray:
        d = self.deviations.max(axis=1)
        return np.where(self.masked, np.nan, d)

    def hits(self, eps: float | None = None) -> np.ndarray:
        e = self.eps if eps is None else eps
        with np.errstate(invalid="ignore"):
            return np.nan_to_num(self.dev_max, nan=np.inf) < e

    def density(self, eps: float | None = None, T: float | None = None) -> float:
        T = self.T if T is None else T
        n = int(round(T / self.step))
        return self.step * int(self.hits(eps)[:n].sum()) / T

    def band(self, eps: float | None = None, T: float | None = None,
             level: float = 0.95) -> tuple[float, float]:
        """Block-bootstrap interval over tau-blocks of 50 steps."""
        T = self.T if T is None else T
        n = int(round(T / self.step))
        h = self.hits(eps)[:n].astype(float)
        nb = max(1, n // BOOTSTRAP_BLOCK)
        blocks = h[: nb * BOOTSTRAP_BLOCK].reshape(nb, -1).mean(axis=1) if n >= BOOTSTRAP_BLOCK else h[None, :].mean(axis=1)
        rng = np.random.default_rng(self.seed)
        draws = blocks[rng.integers(0, blocks.size, size=(BOOTSTRAP_RESAMPLES, blocks.size))].mean(axis=1)
        q = (1 - level) / 2
        lo, hi = np.quantile(draws, [q, 1 - q])
        return float(lo), float(hi)

    def lipschitz_flags(self, factor: float = 8.0) -> np.ndarray:
        """Indices where a grid step jumps by more than factor x the 99th-percentile step."""
        d = self.dev_max
        jumps = np.abs(np.diff(d))
        finite = jumps[np.isfinite(jumps)]
        if finite.size == 0:
            return np.zeros(0, dtype=int)
        lip = factor * float(np.quantile(finite, 0.99)) / self.step + 1e-300
        return np.flatnonzero(jumps > self.step * lip)

    def write_csv(self, path) -> None:
        m = self.deviations.shape[1]
        hits = self.hits()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau"] + [f"dev_{j + 1}" for j in range(m)] + ["dev_max", "hit"])
            dmax = self.dev_max
            for i, tau in enumerate(self.taus.tolist()):
                row = [f"{tau:.17g}"] + [f"{v:.17g}" for v in self.deviations[i].tolist()]
                row += [f"{dmax[i]:.17g}", int(hits[i])]
                w.writerow(row)

    def to_dict(self):
        lo, hi = self.band()
        return {
            "T": self.T, "step": self.step, "eps": self.eps, "count": int(self.taus.size),
            "hits": int(self.hits().sum()), "density": self.density(), "band": [lo, hi],
            "masked": int(self.masked.sum()), "lipschitz_flags": int(self.lipschitz_flags().size),
            "labels": self.labels,
        }


def _grid(T: float, step: float):
    if not step > 0:
        raise ConfigError("step must be positive")
    if step > MAX_STEP:
        raise ConfigError(f"step {step} above guard {MAX_STEP}")
    if not T > 0:
        raise ConfigError("T must be positive")
    count = int(round(T / step))
    return count


def _vertical_all(specs, point_sets, step, count, workers):
    """spec.vertical for every spec; specs are independent so threads keep results identical."""
    jobs = list(zip(specs, point_sets))
    if workers <= 1 or len(jobs) == 1:
        return [s.vertical(p, 0.0, step, count) for s, p in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda sp: sp[0].vertical(sp[1], 0.0, step, count), jobs))


def _pole_mask(spec, points, taus, radius):
    if spec.pole_order == 0:
        return np.zeros(taus.size, dtype=bool)
    s = points[None, :] + 1j * taus[:, None]
    return np.any(np.abs(s - 1) < radius, axis=1)


def joint_shift_scan(specs, targets, T: float, step: float = DEFAULT_STEP, eps: float | None = None,
                     *, workers: int = 1, pole_radius: float = POLE_RADIUS, seed: int = 0,
                     _combine=None) -> ShiftScanReport:
    """max_j max_{s in K_j} |L_j(s + i tau) - g_j(s)| for tau = k*step in [0, T)."""
    if len(specs) != len(targets):
        raise ConfigError("need one target per spec")
    count = _grid(T, step)
    taus = step * np.arange(count, dtype=float)
    devs = np.empty((count, len(specs)))
    masked = np.zeros(count, dtype=bool)
    values = _vertical_all(specs, [t.points for t in targets], step, count, workers)
    for j, (spec, tg, vals) in enumerate(zip(specs, targets, values)):
        devs[:, j] = np.abs(vals - tg.g(tg.points)[None, :]).max(axis=1)
        masked |= _pole_mask(spec, tg.points, taus, pole_radius)
    eps = min(t.eps for t in targets) if eps is None else eps
    return ShiftScanReport(T, step, taus, devs, float(eps), masked,
                           [getattr(s, "label", "") for s in specs], seed)


def combination_scan(coeffs, specs, target: CompactTarget, T: float, step: float = DEFAULT_STEP,
                     eps: float | None = None, *, pole_radius: float = POLE_RADIUS,
                     seed: int = 0) -> ShiftScanReport:
    """Shift scan for F(s) = sum_j a_j L_j(s) against a single (possibly vanishing) target."""
    if len(coeffs) != len(specs):
        raise ConfigError("need one coefficient per spec")
    count = _grid(T, step)
    taus = step * np.arange(count, dtype=float)
    total = 0
    masked = np.zeros(count, dtype=bool)
    for a, spec in zip(coeffs, specs):
        total = total + complex(a) * spec.vertical(target.points, 0.0, step, count)
        masked |= _pole_mask(spec, target.points, taus, pole_radius)
    devs = np.abs(total - target.g(target.points)[None, :]).max(axis=1)[:, None]
    eps = target.eps if eps is None else eps
    label = " + ".join(f"({complex(a):g})*{getattr(s, 'label', '')}" for a, s in zip(coeffs, specs))
    return ShiftScanReport(T, step, taus, devs, float(eps), masked, [label], seed)


def density_vs_T(report: ShiftScanReport, T_list, eps: float | None = None) -> list[dict]:
    """Density and bootstrap band on prefixes tau < T_i of one scan."""
    Ts = [float(t) for t in T_list]
    if any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise ConfigError("T_list must be increasing")
    if Ts and Ts[-1] > report.T * (1 + 1e-12):
        raise ConfigError("T_list exceeds the scanned range")
    rows = []
    for T in Ts:
        lo, hi = report.band(eps, T)
        rows.append({"T": T, "density": report.density(eps, T), "band": [lo, hi]})
    seen_positive = any(r["density"] > 0 for r in rows)
    for r in rows:
        r["collapsed"] = bool(seen_positive and rows[-1]["density"] == 0)
    return rows


# ----------------------------------------------------------- value vectors

@dataclass
class ValueScanReport:
    sigma0: float
    ts: np.ndarray
    vectors: np.ndarray             # (count, m, N): L_j^(k)(sigma0 + i t)
    radius: float
    nodes: int
    coverage: float | None = None
    box: dict | None = None

    def write_csv(self, path) -> None:
        count, m, N = self.vectors.shape
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            head = ["t"]
            for j in range(m):
                for k in range(N):
                    head += [f"L{j + 1}_d{k}_re", f"L{j + 1}_d{k}_im"]
            w.writerow(head)
            for i, t in enumerate(self.ts.tolist()):
                row = [f"{t:.17g}"]
                for v in self.vectors[i].ravel().tolist():
                    row += [f"{v.real:.17g}", f"{v.imag:.17g}"]
                w.writerow(row)

    def to_dict(self):
        return {"sigma0": self.sigma0, "count": int(self.ts.size), "radius": self.radius,
                "nodes": self.nodes, "coverage": self.coverage, "box": self.box}


def cauchy_derivatives(values: np.ndarray, radius: float, N: int) -> np.ndarray:
    """Derivatives 0..N-1 from values on a circle (last axis = equispaced nodes)."""
    n = values.shape[-1]
    c = np.fft.fft(values, axis=-1) / n
    k = np.arange(N)
    fact = np.array([math.factorial(i) for i in k], dtype=float)
    return c[..., :N] * fact / radius ** k


def coverage_fraction(vectors: np.ndarray, box_lo, box_hi, resolution: int, rho: float) -> float:
    """Fraction of a tensor grid over the box in C^d (as R^2d) within rho of a sample."""
    lo = np.asarray(box_lo, dtype=complex).ravel()
    hi = np.asarray(box_hi, dtype=complex).ravel()
    d = lo.size
    pts = np.asarray(vectors, dtype=complex).reshape(-1, d)
    real = np.concatenate([pts.real, pts.imag], axis=1)
    axes = [np.linspace(a, b, resolution) for a, b in zip(np.r_[lo.real, lo.imag], np.r_[hi.real, hi.imag])]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2 * d)
    if real.shape[0] == 0:
        return 0.0
    dist, _ = cKDTree(real).query(mesh, k=1)
    return float(np.mean(dist <= rho))


def value_vector_scan(specs, sigma0: float, N: int, t_lo: float, t_hi: float,
                      step: float = DEFAULT_STEP, *, radius: float = CAUCHY_RADIUS,
                      nodes: int = CAUCHY_NODES, box: dict | None = None) -> ValueScanReport:
    """(L_j^(k)(sigma0 + i t))_{j, k<N} on a t-grid, derivatives by Cauchy's formula.

    ``box`` = {"lo": [...], "hi": [...], "resolution": n, "rho": r} with one
    complex bound per coordinate (m*N of them) turns on the coverage statistic.
    """
    worst = max(s.sigma_m for s in specs)
    if not worst < sigma0 < 1:
        raise ConfigError(f"sigma0 must lie in ({worst}, 1)")
    if not (sigma0 - radius > worst and sigma0 + radius < 1):
        raise ConfigError(f"Cauchy radius {radius} too large for the strip at sigma0 = {sigma0}")
    if N < 1:
        raise ConfigError("N must be >= 1")
    if not t_hi > t_lo:
        raise ConfigError("need t_hi > t_lo")
    count = int(round((t_hi - t_lo) / step)) + 1
    ts = t_lo + step * np.arange(count)
    circle = sigma0 + radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    vec = np.empty((count, len(specs), N), dtype=complex)
    for j, spec in enumerate(specs):
        vals = spec.vertical(circle, t_lo, step, count)
        vec[:, j, :] = cauchy_derivatives(vals, radius, N)
    rep = ValueScanReport(float(sigma0), ts, vec, radius, nodes, None, box)
    if box is not None:
        rep.coverage = coverage_fraction(vec, box["lo"], box["hi"], int(box.get("resolution", 20)),
                                         float(box["rho"]))
    return rep


# -------------------------------------------------------------- zero counts

@dataclass
class ZeroCountReport:
    rectangle: tuple
    coefficients: list
    count: int
    resolution: int
    history: list = field(default_factory=list)       # (points, winding)
    retries: list = field(default_factory=list)       # shrunken rectangles tried
    min_abs: float = math.nan

    def to_dict(self):
        return {
            "rectangle": list(self.rectangle), "coefficients": [[complex(c).real, complex(c).imag]
                                                                for c in self.coefficients],
            "count": self.count, "resolution": self.resolution,
            "history": [list(h) for h in self.history],
            "retries": [list(r) for r in self.retries], "min_abs": self.min_abs,
        }


def _boundary(rect, n_per_unit: float, min_per_edge: int = 16):
    sa, sb, ta, tb = rect
    c = [complex(sa, ta), complex(sb, ta), complex(sb, tb), complex(sa, tb)]
    pts = []
    for i in range(4):
        a, b = c[i], c[(i + 1) % 4]
        k = max(min_per_edge, int(math.ceil(abs(b - a) * n_per_unit)))
        pts.append(a + (b - a) * np.arange(k) / k)
    return np.concatenate(pts)


def _winding(F, pts, max_points: int):
    """Phase tracking with bisection until every phase jump is below pi/2.

    Returns a winding of None when F vanishes exactly on the path.
    """
    s = np.asarray(pts, dtype=complex)
    v = np.asarray(F(s), dtype=complex)
    while True:
        if not np.all(np.isfinite(v)) or np.any(v == 0):
            return None, s, v
        nxt_v = np.roll(v, -1)
        jump = np.angle(nxt_v / v)
        bad = np.flatnonzero(np.abs(jump) >= np.pi / 2)
        if bad.size == 0:
            return int(round(jump.sum() / (2 * np.pi))), s, v
        if s.size + bad.size > max_points:
            raise RefinementLimitError(f"path refinement exceeded {max_points} points")
        nxt_s = np.roll(s, -1)
        mids = (s[bad] + nxt_s[bad]) / 2
        mv = np.asarray(F(mids), dtype=complex)
        s = np.insert(s, bad + 1, mids)
        v = np.insert(v, bad + 1, mv)


def winding_count(F, rect, *, n_per_unit: float = 32.0, max_points: int = 200_000,
                  zero_tol: float = 1e-10, retries: int = 3) -> ZeroCountReport:
    """Zeros of F inside [sigma_a, sigma_b] x [t_a, t_b] by the argument principle.

    The count at one resolution is confirmed by a second run at doubled
    initial density; a suspected boundary zero (|F| tiny on the path) shrinks
    the rectangle by 1e-3 on every side and retries.
    """
    sa, sb, ta, tb = map(float, rect)
    if not (sa < sb and ta < tb):
        raise ConfigError("rectangle must have nonempty interior")
    tried = []
    cur = (sa, sb, ta, tb)
    for attempt in range(retries + 1):
        history = []
        counts = []
        min_abs = math.inf
        suspicious = False
        for density in (n_per_unit, 2 * n_per_unit):
            k, s, v = _winding(F, _boundary(cur, density), max_points)
            history.append((int(s.size), k))
            counts.append(k)
            scale = float(np.median(np.abs(v)))
            min_abs = min(min_abs, float(np.abs(v).min()))
            if k is None or np.abs(v).min() <= zero_tol * max(scale, 1e-300):
                suspicious = True
        if not suspicious and counts[0] == counts[1]:
            return ZeroCountReport(cur, [], counts[1], history[-1][0], history, tried, min_abs)
        if not suspicious:
            raise RefinementLimitError(f"successive resolutions disagree: {counts}")
        d = 1e-3
        cur = (cur[0] + d, cur[1] - d, cur[2] + d, cur[3] - d)
        tried.append(cur)
    raise RefinementLimitError("boundary zero persisted after shrinking")


def zero_count(coeffs, specs, rect, *, workers: int = 1, **kwargs) -> ZeroCountReport:
    """Winding count of F(s) = sum_j a_j L_j(s) on the rectangle boundary.

    With ``workers`` > 1 the specs are evaluated in threads; the sum is
    always formed in spec order, so the count does not depend on it.
    """
    if len(coeffs) != len(specs):
        raise ConfigError("need one coefficient per spec")
    sa, sb, ta, tb = map(float, rect)
    if sb >= 1:
        raise ConfigError("rectangle must stay left of Re s = 1")
    if sa <= 0.5:
        raise ConfigError("rectangle must stay right of Re s = 1/2")
    for s in specs:
        if not s.evaluable:
            raise ConfigError(f"{s.label}: not evaluable in the strip")

    def F(points):
        if workers > 1 and len(specs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                vals = list(ex.map(lambda sp: sp.evaluate(points), specs))
        else:
            vals = [sp.evaluate(points) for sp in specs]
        out = 0
        for a, v in zip(coeffs, vals):
            out = out + complex(a) * v
        return out

    rep = winding_count(F, (sa, sb, ta, tb), **kwargs)
    rep.coefficients = [complex(a) for a in coeffs]
    return rep
