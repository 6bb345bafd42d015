"""Command-line entry point: ``selberg-lab <command> [--config FILE] [--key value ...]``."""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA, RunConfig, parse_config, parse_spec_file, parse_targets_file, schema_for
from .errors import ConfigError, SelbergLabError


# ------------------------------------------------------------------ output

def _clean(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def write_json(path: Path, obj) -> None:
    text = json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------- commands

def _specs(cfg: RunConfig):
    if cfg["spec"] is None:
        raise ConfigError("--spec is required")
    return parse_spec_file(cfg["spec"])


def _grid(cfg: RunConfig):
    from .denseness import QuadratureGrid, RectDomain, StripConfig

    dom = cfg["domain"]
    if len(dom) != 4:
        raise ConfigError("domain needs u_lo,u_hi,t_lo,t_hi")
    strip = cfg["strip"]
    if len(strip) != 2:
        raise ConfigError("strip needs sigma1,sigma2")
    domain = RectDomain(*dom, StripConfig(*strip))
    return QuadratureGrid(domain, cfg["quad_order"], cfg["quad_order"])


def _elements(cfg: RunConfig, key: str, grid):
    from .denseness import BergmanElement

    return [BergmanElement(np.array(c, dtype=complex), grid) for c in cfg[key]]


def run_orthonormality(cfg: RunConfig, out: Path) -> dict:
    from .orthonormality import Thresholds, evaluate_report, orthonormality_report
    from .primes import geometric_checkpoints

    specs = _specs(cfg)
    n = len(specs)
    sel = cfg["pairs"].strip()
    if sel == "all":
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
    elif sel == "diagonal":
        pairs = [(i, i) for i in range(n)]
    else:
        pairs = []
        for tok in sel.split(","):
            try:
                a, b = (int(v) - 1 for v in tok.split("-"))
            except ValueError:
                raise ConfigError(f"--pairs: cannot parse {tok!r}") from None
            if not (0 <= a < n and 0 <= b < n):
                raise ConfigError(f"--pairs: {tok!r} out of range 1..{n}")
            pairs.append((min(a, b), max(a, b)))
    thresholds = Thresholds(cfg["off_diagonal_constant"], cfg["r_bound"], cfg["kappa_tolerance"],
                            cfg["drift_tolerance"], cfg["residual_ratio_max"])
    cps = geometric_checkpoints(100, cfg["xmax"], cfg["per_decade"])
    rows = []
    for i, j in pairs:
        rep = orthonormality_report(specs[i], specs[j], cfg["xmax"], cps, m=cfg["m"],
                                    thresholds=thresholds, workers=cfg["threads"])
        name = f"pair_{i + 1}_{j + 1}.csv"
        rep.write_csv(out / name)
        row = evaluate_report(rep)
        row["csv"] = name
        rows.append(row)
    ok = all(all(r["checks"].values()) for r in rows)
    return {"specs": [s.label for s in specs], "pairs": rows, "n_pairs": len(rows), "all_checks": ok}


def run_delta(cfg, out):
    from .denseness import delta_exact, delta_transform, truncated_exp_poly

    grid = _grid(cfg)
    gs = _elements(cfg, "elements", grid)
    rows, polys = [], []
    lines = ["element,z_re,z_im,quad_re,quad_im,exact_re,exact_im"]
    for k, g in enumerate(gs, 1):
        for z in cfg["z"]:
            q = delta_transform(g, z, grid)
            e = complex(delta_exact(g, z))
            rows.append({"element": k, "z": z, "quadrature": q, "exact": e, "abs_diff": abs(q - e)})
            lines.append(",".join([str(k)] + [f"{v:.17g}" for v in (z.real, z.imag, q.real, q.imag,
                                                                     e.real, e.imag)]))
        if not g.is_zero:
            P = truncated_exp_poly(g, cfg["x"], cfg["c0"], grid)
            polys.append({"element": k, "x": cfg["x"], "degree": P.degree, "dps": P.dps,
                          "log10_tail": P.log10_tail, "c0": P.c0})
    (out / "delta.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"delta": rows, "polynomials": polys, "csv": "delta.csv"}


def run_markov(cfg, out):
    from .denseness import markov_bound, poly_max_abs

    a, b = cfg["interval"]
    coef = np.array(cfg["poly"], dtype=complex)
    P = np.polynomial.Polynomial(coef)
    m, arg = poly_max_abs(P, a, b)
    dm, darg = poly_max_abs(P.deriv(), a, b)
    bound = markov_bound(P, a, b)
    return {"poly": coef, "interval": [a, b], "max_abs": m, "argmax": arg,
            "derivative_max": dm, "derivative_argmax": darg, "markov_bound": bound,
            "violated": bool(dm > bound * (1 + 1e-12))}


def run_intervals(cfg, out):
    from .denseness import nested_interval_select

    grid = _grid(cfg)
    gs = _elements(cfg, "elements", grid)
    res = nested_interval_select(gs, cfg["x"], None, cfg["c0"], grid, n_test=cfg["n_test"],
                                 start=cfg["start"])
    return {"nested": res.to_dict(), "ok": res.ok, "widths_ok": res.widths_ok()}


def run_diverge(cfg, out):
    from .denseness import divergence_probe

    grid = _grid(cfg)
    gs = _elements(cfg, "elements", grid)
    specs = _specs(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        blocks = divergence_probe(specs, gs, cfg["x_list"], None, cfg["c0"], grid, eps=cfg["eps"],
                                  slack=cfg["slack"], n_test=cfg["n_test"], start=cfg["start"])
    lines = ["x,p_lo,p_hi,n_primes,block_sum,quadratic,diagonal,off_diagonal,shape,ok"]
    for b in blocks:
        lines.append(",".join([f"{b.x:.17g}", str(b.p_range[0]), str(b.p_range[1]), str(b.n_primes)]
                              + [f"{v:.17g}" for v in (b.block_sum, b.quadratic, b.diagonal,
                                                       b.off_diagonal, b.shape)] + [str(int(b.ok))]))
    (out / "blocks.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"specs": [s.label for s in specs], "blocks": [b.to_dict() for b in blocks],
            "warnings": [str(w.message) for w in caught], "csv": "blocks.csv",
            "all_ok": all(b.ok for b in blocks)}


def run_twistfit(cfg, out):
    from .denseness import greedy_twist_fit

    grid = _grid(cfg)
    specs = _specs(cfg)
    targets = _elements(cfg, "targets", grid)
    res = greedy_twist_fit(specs, targets, cfg["v"], cfg["P"], grid, cfg["order"], seed=cfg["seed"],
                           group=cfg["group"], sweeps=cfg["sweeps"])
    res.write_trace(out / "trace.csv")
    return {"specs": [s.label for s in specs], "fit": res.to_dict(), "csv": "trace.csv"}


def run_denseness(cfg, out):
    return {"delta": run_delta, "markov": run_markov, "intervals": run_intervals,
            "diverge": run_diverge, "twistfit": run_twistfit}[cfg["cmd"]](cfg, out)


def run_scan(cfg, out):
    from .universality import combination_scan, density_vs_T, joint_shift_scan

    specs = _specs(cfg)
    if cfg["targets"] is None:
        raise ConfigError("--targets is required")
    targets = parse_targets_file(cfg["targets"])
    if cfg["coeffs"] is not None:
        rep = combination_scan(cfg["coeffs"], specs, targets[0], cfg["T"], cfg["step"], cfg["eps"],
                               seed=cfg["seed"])
    else:
        rep = joint_shift_scan(specs, targets, cfg["T"], cfg["step"], cfg["eps"],
                               workers=cfg["threads"], seed=cfg["seed"])
    rep.write_csv(out / "scan.csv")
    T_list = cfg["T_list"] or [cfg["T"]]
    return {"specs": [s.label for s in specs], "targets": [t.describe() for t in targets],
            "scan": rep.to_dict(), "density_table": density_vs_T(rep, T_list), "csv": "scan.csv"}


def run_values(cfg, out):
    from .universality import value_vector_scan

    specs = _specs(cfg)
    box = None
    if cfg["box_lo"] is not None or cfg["box_hi"] is not None:
        if cfg["box_lo"] is None or cfg["box_hi"] is None:
            raise ConfigError("box_lo and box_hi go together")
        if not len(cfg["box_lo"]) == len(cfg["box_hi"]) == len(specs) * cfg["N"]:
            raise ConfigError("box corners need m*N complex values")
        box = {"lo": cfg["box_lo"], "hi": cfg["box_hi"], "resolution": cfg["resolution"],
               "rho": cfg["rho"]}
    rep = value_vector_scan(specs, cfg["sigma0"], cfg["N"], cfg["t_lo"], cfg["t_hi"], cfg["step"],
                            radius=cfg["radius"], nodes=cfg["nodes"], box=box)
    rep.write_csv(out / "values.csv")
    return {"specs": [s.label for s in specs], "values": rep.to_dict(), "csv": "values.csv"}


def run_zeros(cfg, out):
    from .universality import zero_count

    specs = _specs(cfg)
    rect = cfg["rect"]
    if len(rect) != 4:
        raise ConfigError("rect needs sigma_a,sigma_b,t_a,t_b")
    coeffs = cfg["coeffs"] or tuple(1 + 0j for _ in specs)
    rep = zero_count(coeffs, specs, rect, n_per_unit=cfg["n_per_unit"], workers=cfg["threads"])
    return {"specs": [s.label for s in specs], "zeros": rep.to_dict()}


RUNNERS = {"orthonormality": run_orthonormality, "denseness": run_denseness,
           "twistfit": run_twistfit, "scan": run_scan, "values": run_values, "zeros": run_zeros}


def run(cfg: RunConfig) -> dict:
    """Execute a resolved config; returns the manifest (also written as manifest.json)."""
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = RUNNERS[cfg.command](cfg, out)
    report = {"config": cfg.echo(), "version": __version__, "result": result}
    write_json(out / "report.json", report)
    files = sorted(p.name for p in out.iterdir() if p.is_file() and p.name != "manifest.json")
    manifest = {
        "config": cfg.echo(),
        "version": __version__,
        "wall_clock_s": time.perf_counter() - t0,
        "resolution": cfg.sources,
        "conflicts": cfg.conflicts,
        "threads": cfg.threads,
        "config_file": cfg.config_path,
        "outputs": [{"file": f, "sha256": sha256(out / f)} for f in files],
    }
    write_json(out / "manifest.json", manifest)
    return manifest


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    """Malformed flags are configuration errors (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="selberg-lab", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in SCHEMA:
        sp = sub.add_parser(command)
        sp.add_argument("--config", help="INI config file ([common] and [%s] sections)" % command)
        for key, (_, default, doc) in schema_for(command).items():
            names = [f"--{key}"]
            if "_" in key:
                names.append(f"--{key.replace('_', '-')}")
            sp.add_argument(*names, dest=key, default=None, metavar="VALUE",
                            help=f"{doc} (default: {default})")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = vars(ap.parse_args(argv))
    command = args.pop("command")
    path = args.pop("config")
    try:
        cfg = parse_config(command, args, path)
        manifest = run(cfg)
    except SelbergLabError as exc:
        print(f"selberg-lab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    for item in manifest["outputs"]:
        print(f"{item['sha256']}  {cfg.out / item['file']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
