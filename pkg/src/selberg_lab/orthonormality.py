"""Prime pair sums S_{k,l}(x), log-weighted sums, and expansion fits.

Thresholds such as the off-diagonal constant or the kappa tolerance are
harness settings with defaults in :class:`Thresholds`; none of them comes
from number theory.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, FitError, IllConditionedFitWarning
from .lfunctions.coefficients import CoefficientProvider
from .primes import PrimeRange, geometric_checkpoints, prime_sum

COND_LIMIT = 1e12


@dataclass(frozen=True)
class Thresholds:
    off_diagonal_constant: float = 5.0
    r_bound: float = 1.0
    kappa_tolerance: float = 0.15
    drift_tolerance: float = 0.05
    residual_ratio_max: float = 10.0


@dataclass
class ExpansionFit:
    m: int
    diagonal: bool
    coefficients: np.ndarray          # c_1 .. c_{2m+1}; c_1 = 0 off the diagonal
    residual_norm: float
    residual_ratio: float
    condition: float
    regularized: bool = False

    @property
    def c1_positive(self) -> bool:
        return bool(self.coefficients[0].real > 0)

    def model(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.log(x)
        j = np.arange(1, 2 * self.m + 2)
        return x * (self.coefficients[None, :] / u[:, None] ** j[None, :]).sum(axis=1)

    def to_dict(self):
        return {
            "m": self.m,
            "diagonal": self.diagonal,
            "coefficients": [[c.real, c.imag] for c in self.coefficients.tolist()],
            "residual_norm": self.residual_norm,
            "residual_ratio": self.residual_ratio,
            "condition": self.condition,
            "regularized": self.regularized,
            "c1_positive": self.c1_positive if self.diagonal else None,
        }


@dataclass
class OrthonormalityReport:
    pair: tuple
    checkpoints: np.ndarray
    raw: np.ndarray
    prime_counts: np.ndarray
    log_weighted: np.ndarray | None = None
    kappa: int = 0
    fit: ExpansionFit | None = None
    thresholds: Thresholds = field(default_factory=Thresholds)

    @property
    def diagonal(self) -> bool:
        return self.pair[0] == self.pair[1]

    @property
    def r_values(self) -> np.ndarray | None:
        if self.log_weighted is None:
            return None
        return self.log_weighted - self.kappa * np.log(np.log(self.checkpoints))

    def write_csv(self, path) -> None:
        r = self.r_values
        lw = self.log_weighted
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "S_re", "S_im", "logS_re", "logS_im", "R_re", "R_im"])
            for i, x in enumerate(self.checkpoints.tolist()):
                row = [x, self.raw[i].real, self.raw[i].imag]
                if lw is None:
                    row += [math.nan] * 4
                else:
                    row += [lw[i].real, lw[i].imag, r[i].real, r[i].imag]
                w.writerow([f"{v:.17g}" for v in row])


def _provider(obj) -> CoefficientProvider:
    return getattr(obj, "coefficients", obj)


def _label(obj) -> str:
    return getattr(obj, "label", "") or getattr(_provider(obj), "label", "") or repr(obj)


def _pair_term(k, l, weight):
    pk, pl = _provider(k), _provider(l)
    if pk is pl:
        def term(p):
            a = pk.a_many(p)
            v = a.real * a.real + a.imag * a.imag
            return v / p if weight else v
    else:
        def term(p):
            v = pk.a_many(p) * np.conj(pl.a_many(p))
            return v / p if weight else v
    return term


def _schedule(x_max, checkpoints):
    if checkpoints is None:
        checkpoints = geometric_checkpoints(100, x_max)
    cps = np.asarray(checkpoints, dtype=float)
    if cps.size and cps[0] < 100:
        raise ConfigError("checkpoints must be >= 100")
    if cps.size and cps[-1] > x_max:
        raise ConfigError("checkpoints must not exceed x_max")
    return cps


def pair_sum(k, l, x_max: float, checkpoints=None, *, workers: int = 1) -> OrthonormalityReport:
    """S_{k,l}(x_i) = sum_{p <= x_i} a_k(p) conj(a_l(p))."""
    cps = _schedule(x_max, checkpoints)
    res = prime_sum(PrimeRange(2, int(x_max)), _pair_term(k, l, False), cps, workers=workers)
    pair = (_label(k), _label(l))
    return OrthonormalityReport(pair, cps, res.values, res.term_count)


def log_weighted_sum(k, l, x_max: float, checkpoints=None, *, workers: int = 1) -> np.ndarray:
    """sum_{p <= x_i} a_k(p) conj(a_l(p)) / p at each checkpoint."""
    cps = _schedule(x_max, checkpoints)
    return prime_sum(PrimeRange(2, int(x_max)), _pair_term(k, l, True), cps, workers=workers).values


def orthonormality_report(k, l, x_max: float, checkpoints=None, *, m: int | None = 1,
                          thresholds: Thresholds | None = None,
                          workers: int = 1) -> OrthonormalityReport:
    rep = pair_sum(k, l, x_max, checkpoints, workers=workers)
    rep.log_weighted = log_weighted_sum(k, l, x_max, rep.checkpoints, workers=workers)
    if thresholds is not None:
        rep.thresholds = thresholds
    if rep.diagonal:
        rep.kappa = max(1, int(round(kappa_estimate(rep)[0])))
    if m is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IllConditionedFitWarning)
            rep.fit = fit_expansion(rep, m)
    return rep


def abel_reconstruct(checkpoints, raw, start_value: complex) -> np.ndarray:
    """Partial summation of the raw series into the 1/p-weighted one.

    Treats S as a step function constant between checkpoints, which is exact
    when every prime in the range is a checkpoint.
    """
    x = np.asarray(checkpoints, dtype=float)
    s = np.asarray(raw, dtype=complex)
    out = np.empty_like(s)
    out[0] = start_value
    # sum_{x0<p<=x} c_p/p = S(x)/x - S(x0)/x0 + int_{x0}^{x} S(u)/u^2 du
    incr = s[:-1] * (1.0 / x[:-1] - 1.0 / x[1:])
    integral = np.concatenate(([0], np.cumsum(incr)))
    out[1:] = start_value + s[1:] / x[1:] - s[0] / x[0] + integral[1:]
    return out


def _design(x, m, diagonal):
    u = np.log(x)
    j0 = 1 if diagonal else 2
    js = np.arange(j0, 2 * m + 2)
    return u[:, None] ** (-js[None, :].astype(float)), js


def fit_expansion(report: OrthonormalityReport, m: int, diagonal: bool | None = None) -> ExpansionFit:
    """Least-squares fit of S(x)/x against (log x)^-j, j = 1 (or 2) .. 2m+1.

    Rows are weighted by (log x)^(2m+2)/x, the scale of the first dropped
    term, so every checkpoint carries comparable leverage; columns are
    normalized and solved by QR.  Above a condition number of 1e12 a warning is issued and
    a Tikhonov-regularized refit replaces the plain solution.
    """
    if diagonal is None:
        diagonal = report.diagonal
    x = np.asarray(report.checkpoints, dtype=float)
    a, js = _design(x, m, diagonal)
    wt = np.log(x) ** (2 * m + 2)
    y = np.asarray(report.raw, dtype=complex) / x * wt
    n_unknown = a.shape[1]
    if x.size < 4 * m + 2 or x.size < n_unknown:
        raise FitError(f"need at least {4 * m + 2} checkpoints, got {x.size}")
    if x[-1] / x[0] < 100:
        raise FitError("checkpoints must span at least two decades")
    aw = a * wt[:, None]
    scale = np.linalg.norm(aw, axis=0)
    a_s = aw / scale
    cond = float(np.linalg.cond(a_s))
    regularized = False
    if cond > COND_LIMIT:
        warnings.warn(f"fit condition number {cond:.3g} above {COND_LIMIT:.0e}; "
                      "using regularized refit", IllConditionedFitWarning, stacklevel=2)
        lam = 1e-12 * np.linalg.norm(a_s, 2)
        a_aug = np.vstack([a_s, lam * np.eye(n_unknown)])
        y_aug = np.concatenate([y, np.zeros(n_unknown)])
        q, r = np.linalg.qr(a_aug)
        coef_s = np.linalg.solve(r, q.T @ y_aug)
        regularized = True
    else:
        q, r = np.linalg.qr(a_s)
        coef_s = np.linalg.solve(r, q.T @ y)
    coef = coef_s / scale
    full = np.zeros(2 * m + 1, dtype=complex)
    full[js - 1] = coef
    resid = report.raw - x * (a @ coef)
    x_max = x[-1]
    ratio = abs(resid[-1]) / (x_max / math.log(x_max) ** (2 * m + 2))
    return ExpansionFit(m, diagonal, full, float(np.linalg.norm(resid)), float(ratio), cond, regularized)


def kappa_estimate(report: OrthonormalityReport):
    """S(x_max)/pi(x_max) and the sequence S(x_i)/pi(x_i)."""
    if not report.diagonal:
        raise ConfigError("kappa_estimate needs a diagonal report")
    seq = report.raw.real / np.maximum(report.prime_counts, 1)
    return float(seq[-1]), seq


def three_scale_drift(report: OrthonormalityReport, scales=None) -> float:
    """max - min of Re R(x) at the last three decades (x_max/100, x_max/10, x_max)."""
    cps = report.checkpoints
    if scales is None:
        scales = [cps[-1] / 100, cps[-1] / 10, cps[-1]]
    r = report.r_values
    vals = []
    for s in scales:
        i = int(np.argmin(np.abs(np.log(cps / s))))
        vals.append(r[i].real)
    return float(max(vals) - min(vals))


def evaluate_report(report: OrthonormalityReport) -> dict:
    """JSON-ready summary with harness pass/fail flags."""
    th = report.thresholds
    x_max = float(report.checkpoints[-1])
    s_max = complex(report.raw[-1])
    out = {
        "pair": list(report.pair),
        "diagonal": report.diagonal,
        "x_max": x_max,
        "S_xmax": [s_max.real, s_max.imag],
        "primes_xmax": int(report.prime_counts[-1]),
        "thresholds": asdict(th),
        "fit": report.fit.to_dict() if report.fit else None,
        "checks": {},
    }
    if report.log_weighted is not None:
        lw = complex(report.log_weighted[-1])
        out["logS_xmax"] = [lw.real, lw.imag]
        out["kappa"] = report.kappa
        out["drift"] = three_scale_drift(report)
    if report.diagonal:
        kap, _ = kappa_estimate(report)
        out["kappa_estimate"] = kap
        out["checks"]["kappa_near_integer"] = abs(kap - round(kap)) <= th.kappa_tolerance
        if report.log_weighted is not None:
            out["checks"]["drift"] = out["drift"] <= th.drift_tolerance
    else:
        bound = th.off_diagonal_constant * x_max / math.log(x_max) ** 2
        out["checks"]["off_diagonal_bound"] = abs(s_max) <= bound
        if report.log_weighted is not None:
            out["checks"]["r_bounded"] = abs(complex(report.log_weighted[-1])) <= th.r_bound
        if report.fit is not None:
            out["checks"]["residual_ratio"] = report.fit.residual_ratio <= th.residual_ratio_max
    return out


def unordered_pairs(items):
    return [(items[i], items[j]) for i in range(len(items)) for j in range(i, len(items))]
