from __future__ import annotations

import hashlib
import json

import pytest

from consensus_formation import cli, metrics

BLOWUP = """[plant]
model = linear
a = 1000 0 0; 0 1000 0; 0 0 1000
[gain]
kind = identity
[reference]
kind = stationary
point = 0 0 0
[leader]
mode = pinned
[simulation]
dt = 0.001
horizon = 2
"""

SHORT = ["--scenario", "crazyflie_triangle", "--horizon", "0.5", "--record-stride", "10"]


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_short_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["run", *SHORT, "--out", str(out)]) == cli.EXIT_OK
    for name in ("trace.csv", "formation_errors.csv", "tracking_errors.csv", "summary.json", "timing.json"):
        assert (out / name).is_file()
    doc = metrics.read_summary(out / "summary.json")
    assert doc["completed"] is True
    assert set(doc["rmse"]) == {"leader", "follower_1", "follower_2", "follower_3"}
    assert "--out" not in doc["reproduce"]
    assert doc["certificate"]["verdict"] == "pass"
    trace = metrics.read_trace(out / "trace.csv", out / "formation_errors.csv")
    assert trace.times[-1] == pytest.approx(0.5)
    assert "leader tracking RMSE" in capsys.readouterr().out


def test_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", *SHORT, "--out", str(a)]) == 0
    assert cli.main(["run", *SHORT, "--out", str(b)]) == 0
    for name in ("trace.csv", "formation_errors.csv", "tracking_errors.csv", "summary.json"):
        assert _digest(a / name) == _digest(b / name)


def test_seed_changes_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", *SHORT, "--seed", "1", "--out", str(a)]) == 0
    assert cli.main(["run", *SHORT, "--seed", "2", "--out", str(b)]) == 0
    assert _digest(a / "trace.csv") != _digest(b / "trace.csv")


def test_mode_flag_equals_positional(tmp_path):
    out = tmp_path / "m"
    assert cli.main(["--mode", "certify-only", "--scenario", "crazyflie_triangle", "--out", str(out)]) == 0
    assert json.loads((out / "certificate.json").read_text())["verdict"] == "pass"


def test_certify_only_identity_gain(tmp_path, capsys):
    out = tmp_path / "c"
    code = cli.main(["certify-only", "--scenario", "crazyflie_triangle", "--gain", "identity", "--out", str(out)])
    assert code == cli.EXIT_OK
    assert "certificate: pass" in capsys.readouterr().out


def test_refuted_gain_is_refused_without_outputs(tmp_path, capsys):
    out = tmp_path / "r"
    assert cli.main(["run", "--scenario", "refuted_gain", "--out", str(out)]) == cli.EXIT_CERTIFICATE
    assert not out.exists()
    assert "refusing" in capsys.readouterr().err
    assert cli.main(["certify-only", "--scenario", "refuted_gain", "--out", str(out)]) == cli.EXIT_CERTIFICATE


def test_override_certificate_runs(tmp_path):
    out = tmp_path / "o"
    code = cli.main(["run", "--scenario", "refuted_gain", "--override-certificate", "--out", str(out)])
    assert code == cli.EXIT_OK
    doc = metrics.read_summary(out / "summary.json")
    assert doc["certificate"]["verdict"] == "fail"
    assert "--override-certificate" in doc["reproduce"]


def test_numeric_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "blow.cfg"
    cfg.write_text(BLOWUP)
    out = tmp_path / "b"
    assert cli.main(["run", "--scenario", str(cfg), "--out", str(out)]) == cli.EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err
    doc = metrics.read_summary(out / "summary.json")
    assert doc["completed"] is False and doc["failure"]


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "crazyflie_triangle", "--bogus"],
    ["run", "--scenario", "no_such_scenario"],
    ["run"],
    ["run", "--scenario", "crazyflie_triangle", "--dt", "fast"],
    ["run", "--mode", "oracle", "--scenario", "integrator_line"],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as info:
        raise SystemExit(cli.main(argv))
    assert info.value.code == cli.EXIT_USAGE


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[simulation]\ndt = 0.01\nsolver = euler\n")
    assert cli.main(["run", "--scenario", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_USAGE
    assert ":3:" in capsys.readouterr().err


def test_output_dir_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "from_env"
    monkeypatch.setenv(cli.OUT_ENV, str(target))
    assert cli.main(["certify-only", "--scenario", "crazyflie_triangle"]) == 0
    assert (target / "certificate.json").is_file()


def test_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    monkeypatch.chdir(tmp_path)
    assert cli.main(["certify-only", "--scenario", "crazyflie_triangle"]) == 0
    assert (tmp_path / cli.DEFAULT_OUT / "certificate.json").is_file()


def test_self_test(capsys):
    assert cli.main(["self-test"]) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert text.count("PASS") == 5 and "FAIL" not in text


def test_oracle_mode(tmp_path):
    out = tmp_path / "or"
    assert cli.main(["--scenario", "integrator_line", "--horizon", "5", "--out", str(out)]) == 0
    doc = json.loads((out / "oracle.json").read_text())
    assert doc["spread"] < 1e-2
    assert len(doc["displacements"]) == 4


def test_sweep(tmp_path):
    out = tmp_path / "sw"
    code = cli.main(["sweep", *SHORT, "--seeds", "0 1 2", "--workers", "2", "--no-trace", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "sweep.json").read_text())
    assert doc["seeds"] == [0, 1, 2] and doc["exit_codes"] == [0, 0, 0]
    for row in doc["rmse"].values():
        assert row["min"] <= row["mean"] <= row["max"]
    for s in (0, 1, 2):
        assert (out / f"seed_{s}" / "summary.json").is_file()
        assert not (out / f"seed_{s}" / "trace.csv").exists()
    single = tmp_path / "single"
    assert cli.main(["run", *SHORT, "--seed", "1", "--no-trace", "--out", str(single)]) == 0
    alone = metrics.read_summary(single / "summary.json")["rmse"]
    assert alone == metrics.read_summary(out / "seed_1" / "summary.json")["rmse"]
