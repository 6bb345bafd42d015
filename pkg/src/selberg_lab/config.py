"""Run configuration, spec files and target files.

Config files are INI-style: a ``[common]`` section plus one section per
command, flat ``key = value`` lines.  Command-line flags win over file
values; every such override is recorded.
"""
from __future__ import annotations

import configparser
import os
import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParseError
from .lfunctions import (
    dedekind_spec,
    dirichlet_spec,
    file_spec,
    kronecker_character,
    make_characters,
    tau_spec,
    zeta_spec,
)

COMMANDS = ("orthonormality", "denseness", "twistfit", "scan", "values", "zeros")
DENSENESS_CMDS = ("delta", "markov", "intervals", "diverge", "twistfit")


# ------------------------------------------------------------ value types

def _complex(tok: str) -> complex:
    t = tok.strip().replace(" ", "").replace("i", "j")
    if not t:
        raise ValueError(tok)
    return complex(t)


def _list(conv):
    def parse(tok: str):
        parts = [p for p in re.split(r"[,\s]+", tok.strip()) if p]
        if not parts:
            raise ValueError(tok)
        return tuple(conv(p) for p in parts)
    return parse


def _elements(tok: str):
    """';'-separated polynomials, each a ','-separated coefficient list (low to high)."""
    out = []
    for chunk in tok.split(";"):
        out.append(_list(_complex)(chunk))
    return tuple(out)


def _int(tok: str) -> int:
    f = float(tok)
    if f != int(f):
        raise ValueError(tok)
    return int(f)


def _optional(conv):
    def parse(tok: str):
        return None if tok.strip().lower() in ("", "none", "auto") else conv(tok)
    return parse


def _choice(*options):
    def parse(tok: str):
        if tok not in options:
            raise ValueError(tok)
        return tok
    return parse


def _path(tok: str) -> str:
    return tok.strip()


FLOATS = _list(float)
COMPLEXES = _list(_complex)

COMMON = {
    "spec": (_optional(_path), None, "spec file listing L-functions"),
    "out": (_path, "out", "output directory"),
    "seed": (_int, 0, "64-bit seed"),
    "threads": (_optional(_int), None, "worker count (default: available cores)"),
}

SCHEMA = {
    "orthonormality": {
        "pairs": (str, "all", "'all', 'diagonal' or 'i-j,...' (1-based spec indices)"),
        "xmax": (float, 1e6, "largest checkpoint"),
        "per_decade": (_int, 32, "geometric checkpoints per decade"),
        "m": (_int, 1, "expansion order of the fit"),
        "off_diagonal_constant": (float, 5.0, "C in |S| <= C x / log^2 x"),
        "r_bound": (float, 1.0, "bound on |R| for off-diagonal pairs"),
        "kappa_tolerance": (float, 0.15, "distance of kappa estimate to an integer"),
        "drift_tolerance": (float, 0.05, "three-scale drift tolerance"),
        "residual_ratio_max": (float, 10.0, "largest accepted fit residual ratio"),
    },
    "denseness": {
        "cmd": (_choice(*DENSENESS_CMDS), "intervals", "sub-command"),
        "domain": (FLOATS, (0.6, 0.9, -1.0, 1.0), "u_lo,u_hi,t_lo,t_hi"),
        "strip": (FLOATS, (0.55, 0.95), "sigma1,sigma2"),
        "quad_order": (_int, 48, "Gauss-Legendre order per axis"),
        "elements": (_elements, ((1 + 0j,), (0j, 1 + 0j)), "Bergman elements g_j"),
        "x": (float, 20.0, "x for delta / intervals"),
        "z": (COMPLEXES, (-5 + 0j, -10 + 0j, 5 + 0j), "evaluation points for delta"),
        "x_list": (FLOATS, (10.0, 12.0, 14.0, 16.0), "x values for diverge"),
        "c0": (_optional(float), None, "polynomial degree constant (default 3eC)"),
        "eps": (float, 0.05, "epsilon of the shape curve"),
        "slack": (float, 1e-3, "slack factor against the shape curve"),
        "n_test": (_int, 50, "sandwich test points"),
        "start": (_choice("meanvalue", "quarter"), "meanvalue", "initial B' rule"),
        "poly": (COMPLEXES, (0j, -3 + 0j, 0j, 4 + 0j), "polynomial for markov (low to high)"),
        "interval": (FLOATS, (-1.0, 1.0), "interval for markov"),
        "targets": (_elements, ((1 + 0j,), (2j,)), "twistfit targets f_j"),
        "v": (float, 100.0, "twistfit: primes <= v get omega = 1"),
        "P": (float, 1e5, "twistfit: largest prime"),
        "order": (_choice("descending-norm", "ascending", "random"), "descending-norm", "prime order"),
        "group": (_int, 6, "primes per joint phase step"),
        "sweeps": (_int, 2, "coordinate refinement sweeps"),
    },
    "scan": {
        "targets": (_path, None, "targets file"),
        "T": (float, 1000.0, "scan length"),
        "step": (float, 0.02, "tau grid spacing"),
        "eps": (_optional(float), None, "hit threshold (default: smallest target eps)"),
        "coeffs": (_optional(COMPLEXES), None, "scan sum_j a_j L_j against the first target"),
        "T_list": (_optional(FLOATS), None, "prefix lengths for the density table"),
    },
    "values": {
        "sigma0": (float, 0.75, "real part of the vertical line"),
        "N": (_int, 2, "derivatives 0..N-1"),
        "t_lo": (float, 0.0, "start of the t-grid"),
        "t_hi": (float, 100.0, "end of the t-grid"),
        "step": (float, 0.02, "t grid spacing"),
        "radius": (float, 0.05, "Cauchy circle radius"),
        "nodes": (_int, 64, "Cauchy circle nodes"),
        "box_lo": (_optional(COMPLEXES), None, "coverage box lower corner (m*N values)"),
        "box_hi": (_optional(COMPLEXES), None, "coverage box upper corner"),
        "resolution": (_int, 10, "coverage grid points per real axis"),
        "rho": (float, 0.1, "coverage radius"),
    },
    "zeros": {
        "rect": (FLOATS, (0.6, 0.9, 10.0, 50.0), "sigma_a,sigma_b,t_a,t_b"),
        "coeffs": (_optional(COMPLEXES), None, "coefficients a_j (default all 1)"),
        "n_per_unit": (float, 32.0, "initial path points per unit length"),
    },
}
SCHEMA["twistfit"] = {k: SCHEMA["denseness"][k] for k in (
    "domain", "strip", "quad_order", "targets", "v", "P", "order", "group", "sweeps")}
SCHEMA["twistfit"]["domain"] = (FLOATS, (0.6, 0.9, -0.5, 0.5), "u_lo,u_hi,t_lo,t_hi")


def schema_for(command: str) -> dict:
    if command not in SCHEMA:
        raise ConfigError(f"unknown command {command!r}")
    return {**COMMON, **SCHEMA[command]}


def _convert(conv, token: str, where: str):
    try:
        return conv(token)
    except (ValueError, TypeError):
        raise ConfigError(f"{where}: cannot parse {token!r}") from None


def canonical(value):
    """JSON-friendly form of a resolved value."""
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, tuple):
        return [canonical(v) for v in value]
    return value


@dataclass
class RunConfig:
    command: str
    params: dict
    sources: dict = field(default_factory=dict)         # key -> default | file | flag
    conflicts: list = field(default_factory=list)
    config_path: str | None = None

    def __getitem__(self, key):
        return self.params[key]

    @property
    def seed(self) -> int:
        return self.params["seed"]

    @property
    def out(self) -> Path:
        return Path(self.params["out"])

    @property
    def threads(self) -> int:
        return self.params["threads"]

    def echo(self) -> dict:
        return {"command": self.command,
                "params": {k: canonical(v) for k, v in sorted(self.params.items())}}


def _line_of(text: str, key: str) -> int | None:
    for n, line in enumerate(text.splitlines(), 1):
        if re.match(rf"\s*{re.escape(key)}\s*[=:]", line):
            return n
    return None


def parse_config(command: str, flags: dict | None = None, path=None) -> RunConfig:
    """Resolve defaults, then the config file, then flags (flags win)."""
    schema = schema_for(command)
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    params = {k: d for k, (_, d, _) in schema.items()}
    sources = {k: "default" for k in schema}
    conflicts = []
    file_vals = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        text = p.read_text(encoding="utf-8")
        cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
        cp.optionxform = str
        try:
            cp.read_string(text, source=str(p))
        except configparser.Error as exc:
            raise ParseError(str(exc).splitlines()[0]) from None
        for section in cp.sections():
            if section not in ("common", command):
                if section in SCHEMA:
                    continue
                raise ConfigError(f"{p}: unknown section [{section}]")
            allowed = COMMON if section == "common" else schema
            for key, token in cp.items(section):
                if key not in allowed:
                    raise ConfigError(f"{p}: unknown key {key!r} in [{section}]")
                line = _line_of(text, key)
                file_vals[key] = _convert(allowed[key][0], token, f"{p} line {line}")
                sources[key] = "file"
    params.update(file_vals)
    for key, token in flags.items():
        if key not in schema:
            raise ConfigError(f"unknown flag --{key}")
        val = _convert(schema[key][0], str(token), f"--{key}")
        if key in file_vals and file_vals[key] != val:
            conflicts.append({"key": key, "file": canonical(file_vals[key]), "flag": canonical(val)})
        params[key] = val
        sources[key] = "flag"
    env = os.environ.get("SELBERG_LAB_THREADS")
    if env:
        params["threads"] = _convert(_int, env, "SELBERG_LAB_THREADS")
        sources["threads"] = "env"
    if params["threads"] is None:
        params["threads"] = os.cpu_count() or 1
    if params["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    if not 0 <= params["seed"] < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return RunConfig(command, params, sources, conflicts, None if path is None else str(path))


# ------------------------------------------------------------- spec files

def _kv(tokens, line):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", line)
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _need(kv, key, line, conv=int):
    if key not in kv:
        raise ParseError(f"missing {key}=", line)
    try:
        return conv(kv[key])
    except ValueError:
        raise ParseError(f"bad value for {key}: {kv[key]!r}", line) from None


def parse_spec_line(text: str, line: int | None = None, base: Path | None = None) -> list:
    tokens = shlex.split(text, comments=True)
    if not tokens:
        return []
    kind, kv = tokens[0], _kv(tokens[1:], line)
    if kind == "zeta":
        return [zeta_spec()]
    if kind == "dirichlet":
        q = _need(kv, "q", line)
        chars = make_characters(q)
        idx = kv.get("index", "all")
        if idx == "all":
            return [dirichlet_spec(c) for c in chars]
        i = _need(kv, "index", line)
        if not 0 <= i < len(chars):
            raise ParseError(f"index {i} out of range for q={q} ({len(chars)} characters)", line)
        return [dirichlet_spec(chars[i])]
    if kind == "kronecker":
        return [dirichlet_spec(kronecker_character(_need(kv, "d", line)))]
    if kind == "dedekind":
        return [dedekind_spec(_need(kv, "d", line))]
    if kind == "tau":
        return [tau_spec(_need(kv, "limit", line) if "limit" in kv else 10 ** 6)]
    if kind == "file":
        if "path" not in kv:
            raise ParseError("missing path=", line)
        p = Path(kv["path"])
        if base is not None and not p.is_absolute():
            p = base / p
        return [file_spec(p, float(kv.get("degree", 1.0)), int(kv.get("pole", 0)))]
    raise ParseError(f"unknown spec kind {kind!r}", line)


def parse_spec_file(path) -> list:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"spec file {p} does not exist")
    specs = []
    for n, text in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        specs.extend(parse_spec_line(text, n, p.parent))
    if not specs:
        raise ConfigError(f"spec file {p} lists no L-functions")
    return specs


# ----------------------------------------------------------- target files

def parse_target_line(text: str, line: int | None = None):
    """``disk center=0.75 radius=0.05 g=1.2 eps=0.3 [n=200] [vanishing] [label=...]``.

    Shapes: disk (center, radius), rect (u_lo, u_hi, t_lo, t_hi),
    segment (a, b), point (s).  ``g`` lists polynomial coefficients low to
    high, comma separated.
    """
    from .universality import CompactTarget

    tokens = shlex.split(text, comments=True)
    if not tokens:
        return None
    shape = tokens[0]
    flags = {t for t in tokens[1:] if "=" not in t}
    kv = _kv([t for t in tokens[1:] if "=" in t], line)
    unknown = flags - {"vanishing"}
    if unknown:
        raise ParseError(f"unknown flag {sorted(unknown)[0]!r}", line)
    keys = {"disk": ("center", "radius"), "rect": ("u_lo", "u_hi", "t_lo", "t_hi"),
            "segment": ("a", "b"), "point": ("s",)}
    if shape not in keys:
        raise ParseError(f"unknown target shape {shape!r}", line)
    allowed = set(keys[shape]) | {"g", "eps", "n", "label"}
    extra = set(kv) - allowed
    if extra:
        raise ParseError(f"unknown key {sorted(extra)[0]!r}", line)
    conv = float if shape == "rect" else _complex
    if shape == "disk":
        params = (_need(kv, "center", line, _complex), _need(kv, "radius", line, float))
    else:
        params = tuple(_need(kv, k, line, conv) for k in keys[shape])
    g = _need(kv, "g", line, COMPLEXES)
    eps = _need(kv, "eps", line, float)
    n = _need(kv, "n", line) if "n" in kv else 200
    try:
        return CompactTarget(shape, params, g, eps, n, "vanishing" not in flags,
                             kv.get("label", f"{shape}@{line}"))
    except ConfigError as exc:
        raise ParseError(str(exc), line) from None


def parse_targets_file(path) -> list:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"targets file {p} does not exist")
    out = []
    for n, text in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        t = parse_target_line(text, n)
        if t is not None:
            out.append(t)
    if not out:
        raise ConfigError(f"targets file {p} lists no targets")
    return out
