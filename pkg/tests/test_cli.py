from __future__ import annotations

import json
import subprocess
import sys

import pytest

from restriktor.cli import main, resolve_threads, run
from restriktor.config import ExperimentConfig, load_config, parse_ini, parse_json
from restriktor.errors import InputError, RestriktorError


def _files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_empty_config_passes(tmp_path):
    status = run(ExperimentConfig(out_dir=str(tmp_path)), echo=lambda _: None)
    assert status == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "PASS" and summary["checks"] == []


def test_ini_parsing_and_relative_model(tmp_path):
    (tmp_path / "cubic.txt").write_text("m = 3\nchi = 1 1/2\n")
    cfg_path = tmp_path / "exp.ini"
    cfg_path.write_text("[general]\nmodel = cubic.txt\nseed = 5\n\n"
                        "[experiment quick]\nkind = knapp\npoints = 6,0.55\n")
    cfg = load_config(cfg_path)
    assert cfg.seed == 5
    assert cfg.model == str(tmp_path / "cubic.txt")
    assert cfg.experiments == [("quick", "knapp", {"points": "6,0.55"})]


def test_ini_errors_carry_location():
    with pytest.raises(InputError, match=r"line\s+2"):
        parse_ini("[general]\nthis is not a key value pair\n")
    with pytest.raises(InputError, match="missing 'kind'"):
        parse_ini("[experiment a]\nx = 1\n")
    with pytest.raises(InputError, match="unknown setting"):
        parse_ini("[general]\nspeed = 3\n")


def test_json_parsing_and_errors():
    cfg = parse_json('{"general": {"seed": 3}, "experiments": [{"kind": "osc", "T": 2}]}')
    assert cfg.seed == 3 and cfg.experiments == [("osc0", "osc", {"T": 2})]
    with pytest.raises(InputError, match="line 3, column"):
        parse_json('{\n"general": {},\n"experiments": [,]}')
    with pytest.raises(InputError, match="kind"):
        parse_json('{"experiments": [{"name": "x"}]}')


def test_unknown_kind_is_rejected(tmp_path):
    cfg = ExperimentConfig(out_dir=str(tmp_path), experiments=[("x", "nonsense", {})])
    with pytest.raises(RestriktorError, match="unknown experiment kind"):
        run(cfg, echo=lambda _: None)


def test_thread_resolution(monkeypatch):
    monkeypatch.delenv("RESTRIKTOR_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("RESTRIKTOR_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("RESTRIKTOR_THREADS", "many")
    with pytest.raises(RestriktorError):
        resolve_threads(None)


def test_invalid_exponent_exits_nonzero(tmp_path, capsys):
    status = main(["knapp", "--points", "3,0.5", "--out-dir", str(tmp_path)])
    assert status == 2
    assert "p' > m+1" in capsys.readouterr().err


def test_missing_model_file(tmp_path, capsys):
    assert main(["osc", "--model", str(tmp_path / "nope.txt"), "--out-dir", str(tmp_path)]) == 2
    assert "model file not found" in capsys.readouterr().err


def test_subcommand_writes_csv_and_summary(tmp_path, capsys):
    status = main(["knapp", "--out-dir", str(tmp_path)])
    assert status == 0
    assert (tmp_path / "knapp.csv").read_text().splitlines()[0]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "PASS"
    assert all(c["status"] == "PASS" for c in summary["checks"])
    assert "PASS" in capsys.readouterr().out


def test_outputs_are_reproducible_across_threads(tmp_path):
    cfg_text = ('{"general": {"seed": 11}, "experiments": ['
                '{"name": "a", "kind": "match", "trials": 50},'
                '{"name": "b", "kind": "geometry", "trials": 40},'
                '{"name": "c", "kind": "decompose", "delta": "2^-6", "samples": 300}]}')
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(cfg_text)
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"run{threads}"
        status = main(["suite", "--config", str(cfg_path), "--out-dir", str(out), "--threads", threads])
        assert status == 0
        outs.append(_files(out))
    assert outs[0] == outs[1]
    assert any(str(p).startswith("a/") for p in outs[0])


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "restriktor", "osc", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "PASS" in res.stdout
