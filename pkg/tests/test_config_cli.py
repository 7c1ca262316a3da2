import json
import subprocess
import sys

import pytest

from qsvtwave.cli import COMMANDS, run
from qsvtwave.config import RunConfig, config_from_dict, load_config
from qsvtwave.errors import ConfigError

BASE = {"n_x": 2, "Lx_kx0": 5.0, "eps_qsvt": 1e-3, "plots": False}


def write_config(tmp_path, name="cfg.json", **over):
    path = tmp_path / name
    path.write_text(json.dumps(dict(BASE, **over)))
    return str(path)


def test_defaults_and_digest():
    cfg = config_from_dict({"n_x": 3, "Lx_kx0": 20})
    assert isinstance(cfg, RunConfig)
    assert cfg.Lx_kx0 == 20.0 and cfg.oracle == "dilation"
    other = config_from_dict({"n_x": 3, "Lx_kx0": 20, "out": "elsewhere"})
    assert cfg.digest() == other.digest()
    assert cfg.digest() != config_from_dict({"n_x": 4, "Lx_kx0": 20}).digest()
    assert cfg.header("solve")[1] == "command=solve"


@pytest.mark.parametrize("data,msg", [
    ({"n_x": 3}, "missing"),
    ({"n_x": 3, "Lx_kx0": 1, "bogus": 1}, "unknown"),
    ({"n_x": 3.5, "Lx_kx0": 1}, "integer"),
    ({"n_x": 3, "Lx_kx0": 1, "oracle": "magic"}, "oracle"),
    ({"n_x": 3, "Lx_kx0": 1, "shots": 10}, "seed"),
    ({"n_x": 3, "Lx_kx0": 1, "plots": "yes"}, "true or false"),
    ({"n_x": 3, "Lx_kx0": 1, "kappas": 5}, "list"),
    ({"n_x": 1, "Lx_kx0": 1}, "n_x"),
])
def test_invalid_configs(data, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_dict(data)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_exit_codes(tmp_path):
    assert run(["solve", "--config", str(tmp_path / "absent.json")]) == 2
    missing = tmp_path / "m.json"
    missing.write_text(json.dumps({"n_x": 3}))
    assert run(["solve", "--config", str(missing)]) == 2
    assert run(["nonsense"]) == 2
    cfg = write_config(tmp_path)
    assert run(["angles", "--config", cfg, "--out", str(tmp_path / "a")]) == 2


def test_convergence_warning_when_kappa_too_small(tmp_path, capsys):
    cfg = write_config(tmp_path, kappa_factor=0.3)
    out = tmp_path / "o"
    assert run(["solve", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["warnings"] and "no convergence" in report["warnings"][0]
    assert "warning" in capsys.readouterr().err


def test_solve_converges_with_default_factor(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o"
    assert run(["solve", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["warnings"] == []
    assert report["error_max_abs"] <= report["threshold"]


def test_metadata_header_on_every_file(tmp_path):
    cfg = write_config(tmp_path, plots=True)
    out = tmp_path / "o"
    assert run(["solve", "--config", cfg, "--out", str(out)]) == 0
    digest = load_config(cfg).digest()
    for f in out.iterdir():
        text = f.read_text()
        if f.suffix == ".json":
            meta = json.loads(text)["meta"]
            assert meta["config_sha256"] == digest and meta["version"]
        else:
            comments = [ln for ln in text.splitlines() if ln.startswith("#")]
            assert any(digest in ln for ln in comments), f.name
            assert any("qsvtwave" in ln for ln in comments), f.name
    cols = (out / "fields.csv").read_text().splitlines()[3]
    assert cols.startswith("j,re_E_qsvt")


@pytest.mark.parametrize("command,extra", [
    ("solve", {}),
    ("energy", {"shots": 500, "seed": 3}),
    ("spectrum", {}),
    ("power", {"n_x": 3, "filter": "exact", "N_EB": 2}),
    ("gauss", {"n_x": 4, "mu": 0.3, "two_gaussians": True, "n_y": 4}),
    ("verify-oracle", {"oracle": "structured"}),
    ("scan", {"axis": "nx", "n_x_values": [2, 3, 4]}),
])
def test_deterministic_outputs(tmp_path, command, extra):
    cfg = write_config(tmp_path, plots=True, **extra)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run([command, "--config", cfg, "--out", str(a)]) == 0
    assert run([command, "--config", cfg, "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_scan_kappa_in_parallel(tmp_path):
    cfg = write_config(tmp_path, workers=2, kappas=[5, 10, 20, 40])
    out = tmp_path / "o"
    assert run(["scan", "--config", cfg, "--out", str(out), "--axis", "kappa"]) == 0
    report = json.loads((out / "scan.json").read_text())
    assert 0.8 <= report["fits"]["kappa_exponent"] <= 1.2


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path)
    proc = subprocess.run([sys.executable, "-m", "qsvtwave", "verify-oracle", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "oracle.json" in proc.stdout


def test_every_command_has_a_handler():
    from qsvtwave.cli import HANDLERS

    assert set(HANDLERS) == set(COMMANDS)
