import json
import subprocess
import sys

import pytest

from plapsing.cli import RunConfig, main, resolve_config


def run_cli(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_exponents_example(capsys):
    code, out, _ = run_cli(["exponents", "--N", "3", "--p", "2", "--q", "1.25"], capsys)
    assert code == 0
    res = out["result"]
    assert res["beta_q"] == pytest.approx(3.0)
    assert res["q_star"] == pytest.approx(4 / 3, abs=1e-9)
    assert res["regime"] == "subcritical"
    assert out["config"]["q"] == 1.25


def test_profile_nonexistence_exit_code(capsys):
    code, out, _ = run_cli(["profile", "--N", "3", "--p", "2", "--q", "1.5"], capsys)
    assert code == 2
    assert out["result"]["regime"] == "critical_or_above" and out["result"]["bracket"] is None


def test_eigen_n2(capsys, tmp_path):
    code, out, _ = run_cli(["eigen", "--N", "2", "--p", "1.5", "--tol", "1e-10", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert out["result"]["beta_star"] == pytest.approx(2.1547005383792515, abs=1e-8)
    assert out["result"]["identity_gap"] < 1e-5
    header = (tmp_path / "eigen_profile.csv").read_text().splitlines()[0]
    assert header == "theta,omega,omega_theta"


def test_profile_subcritical(capsys):
    code, out, _ = run_cli(["profile", "--N", "3", "--p", "2", "--q", "1.25"], capsys)
    assert code == 0 and out["result"]["omega0"] == pytest.approx(1.0015, rel=1e-3)


def test_sweep_workers(capsys):
    code, out, _ = run_cli(["sweep", "--N", "3", "--p", "2", "--q", "1.2", "--workers", "2",
                            "--sweep", "1e-3:1e3:7"], capsys)
    assert code == 0 and len(out["result"]["outcomes"]) == 7
    assert set(out["result"]) >= {"params", "q_star", "outcomes"}


def test_verify_barriers_reports_pass_flag(capsys):
    code, out, _ = run_cli(["verify", "--N", "3", "--p", "2", "--q", "1.2", "--suite", "barriers"], capsys)
    assert code == 0
    rep = out["result"]["report"]
    assert rep["power_sharp"]["sign_ok"] and not rep["power_nominal"]["sign_ok"]


def test_pde_flat_removable_exit(capsys, tmp_path):
    code, out, _ = run_cli(["pde", "--N", "2", "--p", "1.5", "--q", "0.95", "--mode", "flat", "--amp", "100",
                            "--eps", "1e-3", "--grid2", "65x17", "--out", str(tmp_path)], capsys)
    assert code == 2 and out["result"]["regime"] == "removable"
    assert (tmp_path / "field_flat.csv").exists()


def test_pde_strong_above_threshold(capsys):
    code, out, _ = run_cli(["pde", "--N", "2", "--p", "1.5", "--q", "0.95", "--mode", "strong"], capsys)
    assert code == 2


@pytest.mark.parametrize("args,flag", [
    (["exponents", "--N", "3", "--p", "4"], "--p"),
    (["exponents", "--N", "3", "--p", "2", "--q", "3"], "--q"),
    (["pde", "--N", "2", "--p", "1.5", "--q", "0.7", "--tol", "-1"], "--tol"),
    (["pde", "--N", "2", "--p", "1.5", "--grid2", "65"], "--grid2"),
    (["exponents", "--p", "2"], "--N"),
])
def test_usage_errors(args, flag, capsys):
    code, out, err = run_cli(args, capsys)
    assert code == 1 and out is None
    assert flag in err and len(err.strip().splitlines()) == 1


def test_config_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 3, "p": 2.0, "q": 1.3}))
    code, out, _ = run_cli(["exponents", "--config", str(cfg), "--q", "1.25"], capsys)
    assert code == 0 and out["config"]["q"] == 1.25


def test_config_round_trip():
    cfg = resolve_config(["pde", "--N", "2", "--p", "1.5", "--q", "0.7", "--grid2", "33x17"])
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.as_dict())))
    assert again == cfg


def test_byte_identical_output():
    args = [sys.executable, "-m", "plapsing", "exponents", "--N", "3", "--p", "2.5", "--q", "1.7"]
    a = subprocess.run(args, capture_output=True, check=True).stdout
    b = subprocess.run(args, capture_output=True, check=True).stdout
    assert a == b and a
