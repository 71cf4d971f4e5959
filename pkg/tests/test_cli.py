import json
import math

import pytest

from membrane_lab import cli
from membrane_lab.errors import NumericFailure


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_args_prints_usage(capsys):
    code, _, err = run([], capsys)
    assert code == 2 and "usage" in err


def test_unknown_flag(capsys):
    code, _, err = run(["transform", "--bogus", "1"], capsys)
    assert code == 2 and "usage" in err


def test_transform(capsys):
    code, out, _ = run(["transform", "--p", "0.5", "--alpha", "1"], capsys)
    assert code == 0
    kv = dict(line.split("=") for line in out.split())
    assert kv["p_tilde"].startswith("0.880797")
    assert abs(float(kv["c_tilde"]) - math.tanh(1)) < 1e-11
    code, out, _ = run(["transform", "--p", "0.25", "0.25", "0.5", "--alpha", "0", "0", "0"], capsys)
    assert "p_tilde_2=0.5" in out


def test_transform_invalid(capsys):
    code, _, err = run(["transform", "--p", "1.5", "--alpha", "0"], capsys)
    assert code == 2 and "error" in err


def test_converge_fig1(tmp_path, capsys):
    code, out, _ = run(["converge", "--scenario", "interval", "--config", "fig1.json", "--out", str(tmp_path)], capsys)
    assert code == 0
    import csv
    rows = list(csv.DictReader(open(tmp_path / "convergence.csv", newline="")))
    for lam in ("0.5", "1", "2"):
        errs = [float(r["error"]) for r in rows if r["g"] == "panel_sup" and r["lam"] == lam]
        assert len(errs) == 5 and all(a > b for a, b in zip(errs, errs[1:]))
    assert {r["version"] for r in rows} == {"0.1.0"}


def test_converge_strict_exit_code(tmp_path, capsys):
    code, _, _ = run(["converge", "--scenario", "interval", "--config", "fig1.json", "--out", str(tmp_path), "--strict"], capsys)
    # the Figure-1 drift (alpha = 2.2) ends above 0.01 at eps = 0.0125
    assert code == 1


def test_simulate_is_byte_identical(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"graph": {"k": 3}, "weights": [0.2, 0.3, 0.5],
                               "simulation": {"eps": 0.05, "dt": 1e-5, "t": 0.2, "n_paths": 2000}}))
    monkeypatch.setenv("MEMBRANE_LAB_THREADS", "1")
    assert run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "5"], capsys)[0] == 0
    monkeypatch.setenv("MEMBRANE_LAB_THREADS", "0")
    assert run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "5"], capsys)[0] == 0
    a = (tmp_path / "a" / "simulate.csv").read_bytes()
    assert a == (tmp_path / "b" / "simulate.csv").read_bytes()
    assert a.startswith(b"name,value,stderr,n_paths,seed")
    run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "6"], capsys)
    assert a != (tmp_path / "c" / "simulate.csv").read_bytes()


@pytest.mark.parametrize("cmd", [["solve-sl"], ["resolvent", "--g", "cos"], ["semigroup"]])
@pytest.mark.parametrize("config", ["star3.json", "star3_infinite.json", "fig1.json"])
def test_other_subcommands(cmd, config, tmp_path, capsys):
    code, _, err = run(cmd + ["--config", config, "--out", str(tmp_path)], capsys)
    assert code == 0, err
    assert any(tmp_path.iterdir())


def test_bad_config(tmp_path, capsys):
    assert run(["solve-sl", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["solve-sl", "--config", str(bad)], capsys)[0] == 2
    drift = tmp_path / "drift.json"
    drift.write_text(json.dumps({"drift": {"edges": [{"type": "wiggle"}]}}))
    assert run(["resolvent", "--config", str(drift), "--out", str(tmp_path)], capsys)[0] == 2


def test_numeric_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise NumericFailure("forced")

    monkeypatch.setitem(cli.COMMANDS, "solve-sl", boom)
    assert run(["solve-sl"], capsys)[0] == 3
