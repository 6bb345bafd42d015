import json
from pathlib import Path

import pytest

from selberg_lab.cli import main
from selberg_lab.config import (
    parse_config,
    parse_spec_file,
    parse_spec_line,
    parse_target_line,
    parse_targets_file,
)
from selberg_lab.errors import ConfigError, ParseError

ROOT = Path(__file__).resolve().parents[1]
SAMPLES = ROOT / "sample_inputs"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------- config

def test_minimal_flags_fill_defaults(monkeypatch):
    monkeypatch.delenv("SELBERG_LAB_THREADS", raising=False)
    cfg = parse_config("zeros", {"spec": "specs.txt"})
    assert cfg["rect"] == (0.6, 0.9, 10.0, 50.0)
    assert cfg["n_per_unit"] == 32.0 and cfg.seed == 0 and cfg.threads >= 1
    assert cfg.sources["spec"] == "flag" and cfg.sources["rect"] == "default"
    assert cfg.echo()["params"]["rect"] == [0.6, 0.9, 10.0, 50.0]


def test_file_then_flag_conflict_recorded(tmp_path):
    ini = write(tmp_path / "c.ini", "[common]\nseed = 3\n\n[zeros]\nn_per_unit = 16\n")
    cfg = parse_config("zeros", {"n_per_unit": "64"}, ini)
    assert cfg["n_per_unit"] == 64.0 and cfg.seed == 3
    assert cfg.conflicts == [{"key": "n_per_unit", "file": 16.0, "flag": 64.0}]
    assert cfg.sources["seed"] == "file"


def test_same_value_is_not_a_conflict(tmp_path):
    ini = write(tmp_path / "c.ini", "[zeros]\nn_per_unit = 16\n")
    assert parse_config("zeros", {"n_per_unit": "16.0"}, ini).conflicts == []


def test_malformed_numeric_cites_line_and_token(tmp_path):
    ini = write(tmp_path / "c.ini", "[common]\nseed = 1\n[scan]\nT = 1e4\nstep = fast\n")
    with pytest.raises(ConfigError, match=r"line 5.*'fast'"):
        parse_config("scan", {}, ini)
    with pytest.raises(ConfigError, match=r"--T.*'ten'"):
        parse_config("scan", {"T": "ten"})


def test_unknown_keys_and_sections_named(tmp_path):
    with pytest.raises(ConfigError, match="frobnicate"):
        parse_config("scan", {}, write(tmp_path / "a.ini", "[scan]\nfrobnicate = 1\n"))
    with pytest.raises(ConfigError, match="extras"):
        parse_config("scan", {}, write(tmp_path / "b.ini", "[extras]\nT = 1\n"))
    # other commands' sections are allowed in a shared file
    parse_config("scan", {}, write(tmp_path / "c.ini", "[zeros]\nn_per_unit = 8\n"))
    with pytest.raises(ConfigError):
        parse_config("scan", {}, tmp_path / "missing.ini")


def test_thread_env_and_seed_checks(monkeypatch):
    monkeypatch.setenv("SELBERG_LAB_THREADS", "3")
    cfg = parse_config("zeros", {})
    assert cfg.threads == 3 and cfg.sources["threads"] == "env"
    monkeypatch.setenv("SELBERG_LAB_THREADS", "0")
    with pytest.raises(ConfigError):
        parse_config("zeros", {})
    monkeypatch.delenv("SELBERG_LAB_THREADS")
    with pytest.raises(ConfigError):
        parse_config("zeros", {"seed": str(2 ** 64)})
    with pytest.raises(ConfigError):
        parse_config("zeros", {"seed": "1.5"})


def test_complex_and_list_values():
    cfg = parse_config("zeros", {"coeffs": "1, 2i, -1+0.5i"})
    assert cfg["coeffs"] == (1 + 0j, 2j, -1 + 0.5j)
    d = parse_config("denseness", {"elements": "1; 0,1; 0.5i"})
    assert d["elements"] == ((1 + 0j,), (0j, 1 + 0j), (0.5j,))
    with pytest.raises(ConfigError):
        parse_config("denseness", {"cmd": "dance"})


# ------------------------------------------------------------ spec files

def test_spec_lines():
    assert [s.label for s in parse_spec_line("zeta")] == ["zeta"]
    assert len(parse_spec_line("dirichlet q=5 index=all")) == 4
    assert len(parse_spec_line("dirichlet q=5")) == 4
    assert parse_spec_line("dirichlet q=5 index=2")[0].coefficients.a(2) == -1
    chi = parse_spec_line("kronecker d=-4")[0]
    assert [chi.coefficients.a(p) for p in (2, 3, 5, 7)] == [0, -1, 1, -1]
    assert parse_spec_line("dedekind d=-4")[0].coefficients.a(5) == 2
    assert parse_spec_line("# comment only") == []


@pytest.mark.parametrize("line,msg", [
    ("motive w=3", "unknown spec kind"),
    ("dirichlet index=1", "missing q="),
    ("dirichlet q=5 index=9", "out of range"),
    ("kronecker d=x", "bad value"),
    ("file degree=1", "missing path="),
    ("dirichlet q5", "key=value"),
])
def test_spec_line_errors(line, msg):
    with pytest.raises(ParseError, match=msg):
        parse_spec_line(line, 4)


def test_spec_file_reports_line_number(tmp_path):
    p = write(tmp_path / "s.txt", "zeta\n\n# x\nbogus\n")
    with pytest.raises(ParseError) as exc:
        parse_spec_file(p)
    assert exc.value.line == 4
    with pytest.raises(ConfigError):
        parse_spec_file(write(tmp_path / "e.txt", "# nothing\n"))


def test_sample_spec_files_parse():
    assert len(parse_spec_file(SAMPLES / "specs_q5.txt")) == 4
    assert len(parse_spec_file(SAMPLES / "specs_zeta_chi4.txt")) == 2


def test_target_lines():
    t = parse_target_line("disk center=0.75 radius=0.05 g=1,0.5i eps=0.2 n=30 label=a")
    assert t.shape == "disk" and t.points.size == 30 and t.label == "a"
    assert t.coefficients.tolist() == [1, 0.5j]
    v = parse_target_line("point s=0.8 g=-0.8,1 eps=0.4 vanishing")
    assert not v.nonvanishing
    r = parse_target_line("rect u_lo=0.6 u_hi=0.8 t_lo=0 t_hi=1 g=1 eps=0.1 n=20")
    assert r.points.size >= 20
    assert parse_target_line("  # nothing") is None


@pytest.mark.parametrize("line,msg", [
    ("blob s=0.8 g=1 eps=0.1", "unknown target shape"),
    ("point s=0.8 g=1", "missing eps="),
    ("point s=0.8 g=1 eps=0.1 colour=red", "unknown key"),
    ("point s=0.8 g=1 eps=0.1 shiny", "unknown flag"),
    ("point s=0.8 g=-0.8,1 eps=0.1", "vanishes"),
    ("point s=1.2 g=1 eps=0.1", "strip"),
])
def test_target_line_errors(line, msg):
    with pytest.raises(ParseError, match=msg):
        parse_target_line(line, 2)


def test_sample_targets_parse():
    assert len(parse_targets_file(SAMPLES / "targets_disks.txt")) == 2
    [t] = parse_targets_file(SAMPLES / "targets_zeta.txt")
    assert t.points.tolist() == [0.75] and t.eps == 0.3


# -------------------------------------------------------------------- CLI

def run_cli(args, out):
    return main(list(args) + ["--out", str(out)])


def manifest(out):
    return json.loads((Path(out) / "manifest.json").read_text())


def test_exit_codes(tmp_path, capsys):
    spec = str(SAMPLES / "specs_zeta.txt")
    assert run_cli(["zeros", "--spec", spec, "--rect", "0.6,0.9,10,20"], tmp_path / "a") == 0
    assert run_cli(["zeros", "--spec", spec, "--rect", "0.6,1.0,10,20"], tmp_path / "b") == 1
    assert run_cli(["zeros", "--spec", spec, "--rect", "0.6,0.9,x,20"], tmp_path / "c") == 1
    with pytest.raises(SystemExit) as exc:
        main(["zeros", "--bogus", "1"])
    assert exc.value.code == 1
    assert run_cli(["orthonormality", "--spec", str(SAMPLES / "specs_chi5_pair.txt"),
                    "--xmax", "2000"], tmp_path / "d") == 2
    assert run_cli(["denseness", "--cmd", "intervals", "--c0", "3.66", "--x", "20",
                    "--elements", "1"], tmp_path / "e") == 2
    assert "error" in capsys.readouterr().err


def test_orthonormality_ten_pairs(tmp_path):
    out = tmp_path / "o"
    assert run_cli(["orthonormality", "--spec", str(SAMPLES / "specs_q5.txt"),
                    "--xmax", "1e5", "--per-decade", "16"], out) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["result"]["n_pairs"] == 10
    files = {o["file"] for o in manifest(out)["outputs"]}
    assert {f"pair_{i}_{j}.csv" for i in range(1, 5) for j in range(i, 5)} <= files
    assert "manifest.json" not in files


def test_manifest_contents(tmp_path):
    ini = write(tmp_path / "z.ini", "[zeros]\nn_per_unit = 16\n")
    out = tmp_path / "z"
    assert main(["zeros", "--config", str(ini), "--spec", str(SAMPLES / "specs_zeta.txt"),
                 "--n-per-unit", "24", "--rect", "0.6,0.9,10,20", "--out", str(out)]) == 0
    m = manifest(out)
    assert m["conflicts"] == [{"key": "n_per_unit", "file": 16.0, "flag": 24.0}]
    assert m["config"]["params"]["n_per_unit"] == 24.0
    assert m["config_file"] == str(ini) and m["wall_clock_s"] >= 0
    report = json.loads((out / "report.json").read_text())
    assert report["result"]["zeros"]["count"] == 0


def test_scan_from_sample_config_is_reproducible(tmp_path, monkeypatch):
    monkeypatch.chdir(ROOT)
    digests = []
    out = tmp_path / "s"
    for _ in range(2):
        assert main(["scan", "--config", str(SAMPLES / "scan.ini"), "--out", str(out)]) == 0
        digests.append({o["file"]: o["sha256"] for o in manifest(out)["outputs"]})
    assert digests[0] == digests[1] and "scan.csv" in digests[0]
    table = json.loads((out / "report.json").read_text())["result"]["density_table"]
    assert [r["T"] for r in table] == [50, 100, 200]
