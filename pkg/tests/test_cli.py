"""End-to-end checks of the command line surface.

Everything here drives ``proxcert.cli.main`` in process; one smoke test at
the end exercises the installed console script through a real subprocess.
Exit code contract: 0 all checks passed, 1 usage or configuration error,
2 a check failed or a runtime hypothesis was violated.
"""

import csv
import json
import os
import subprocess
import sys

import pytest

from proxcert.cli import main
from proxcert.problems import get_problem, save_problem
from proxcert.report import TRACE_HEADER, chain_rows_from_csv, read_trace_csv


def read_plain_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return reader.fieldnames, [
            {k: float(v) for k, v in row.items()} for row in reader
        ]


def run_cli(argv):
    # argparse-level failures raise SystemExit instead of returning
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# run: the full happy path.


@pytest.fixture(scope="module")
def accel_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("accel-run")
    code = run_cli([
        "run", "--problem", "lasso-20", "--algorithm", "accel_prox_grad",
        "--theta", "fista", "--step", "fixed:auto", "--iters", "1000",
        "--check", "thm1,rates", "--out-dir", str(out),
    ])
    return code, out


def test_run_exit_code_and_files(accel_run):
    code, out = accel_run
    assert code == 0
    for name in ("trace.csv", "report.json", "run.png"):
        assert (out / name).is_file()
    assert (out / "run.png").stat().st_size > 1000


def test_run_prints_one_line_per_check(accel_run, capsys):
    # the capture buffer is per-test, so rerun a small configuration
    out = capsys
    code = run_cli([
        "run", "--problem", "quad-2d", "--iters", "40",
        "--check", "thm1,anchors", "--out-dir", "/tmp/proxcert-cli-lines",
    ])
    captured = out.readouterr().out
    assert code == 0
    assert "check thm1 (averaged-last): PASS" in captured
    assert "check anchors (anchor-identity): PASS" in captured
    assert "worst_slack=" in captured


def test_trace_csv_schema(accel_run):
    _, out = accel_run
    rows = read_trace_csv(str(out / "trace.csv"))
    assert len(rows) == 1000
    assert list(rows[0].keys()) == TRACE_HEADER
    assert [rows[i]["k"] for i in range(3)] == [0, 1, 2]


def test_chain_columns_round_trip_satisfied(accel_run):
    _, out = accel_run
    rows = read_trace_csv(str(out / "trace.csv"))
    rebuilt = chain_rows_from_csv(rows)
    assert len(rebuilt) == 1000
    assert rebuilt[0].k == 1
    assert all(r.satisfied for r in rebuilt)


def test_report_json_layout(accel_run):
    _, out = accel_run
    rep = read_json(out / "report.json")
    assert rep["command"] == "run"
    cfg = rep["config"]
    assert cfg["problem"] == "lasso-20"
    assert cfg["resolved_problem"].startswith("lasso-20-s")
    assert cfg["algorithm"] == "accel_prox_grad"
    assert cfg["theta"] == "fista"
    assert cfg["step"] == "fixed:auto"
    assert cfg["iters"] == 1000
    assert cfg["checks"] == ["thm1", "rates"]
    assert rep["problem"]["dim"] == 20
    assert rep["problem"]["L"] is not None
    tokens = [c["token"] for c in rep["checks"]]
    assert tokens == ["thm1", "rates"]
    assert all(c["satisfied"] for c in rep["checks"])
    assert rep["hypotheses"]
    assert rep["files"]["trace"].endswith("trace.csv")


def test_auto_check_resolution(tmp_path):
    # smooth exact-conjugate problem, accelerated fixed-step run: every
    # momentum check applies
    out = tmp_path / "auto"
    code = run_cli(["run", "--problem", "quad-2d", "--iters", "30",
                    "--out-dir", str(out)])
    assert code == 0
    rep = read_json(out / "report.json")
    assert rep["config"]["checks"] == ["thm1", "thm2", "anchors", "rates"]
    assert rep["config"]["algorithm"] == "accel_prox_grad"


def test_subgradient_run_with_prop1(tmp_path, capsys):
    out = tmp_path / "subgrad"
    code = run_cli([
        "run", "--problem", "l1reg-2d", "--algorithm", "prox_subgrad",
        "--step", "sqrt:0.5", "--iters", "80", "--check", "prop1,rates",
        "--out-dir", str(out),
    ])
    captured = capsys.readouterr().out
    assert code == 0
    assert "check prop1 (subgradient-chain): PASS" in captured
    rep = read_json(out / "report.json")
    assert [c["token"] for c in rep["checks"]] == ["prop1", "rates"]


def test_normalized_subgradient_steps(tmp_path):
    out = tmp_path / "norm"
    code = run_cli([
        "run", "--problem", "l1reg-2d", "--algorithm", "proj_subgrad",
        "--step", "normalized:sqrt:0.4", "--iters", "60",
        "--check", "rates", "--out-dir", str(out),
    ])
    assert code == 0


def test_backtracking_monotone_with_thm2(tmp_path, capsys):
    out = tmp_path / "bt"
    code = run_cli([
        "run", "--problem", "lasso-2d", "--algorithm", "accel_prox_grad",
        "--step", "backtracking:t_init=auto*10,beta=0.5,monotone=1",
        "--iters", "120", "--check", "thm2", "--out-dir", str(out),
    ])
    captured = capsys.readouterr().out
    assert code == 0
    assert "check thm2 (scaled): PASS" in captured
    rep = read_json(out / "report.json")
    assert any(h.startswith("t=") for h in rep["hypotheses"])


def test_problem_json_path_accepted(tmp_path):
    inst = get_problem("boxqp-2d", seed=3)
    spec_path = tmp_path / "boxqp.json"
    save_problem(inst, str(spec_path))
    out = tmp_path / "fromjson"
    code = run_cli(["run", "--problem", str(spec_path), "--iters", "25",
                    "--out-dir", str(out)])
    assert code == 0
    rep = read_json(out / "report.json")
    assert rep["config"]["resolved_problem"] == inst.name


# ---------------------------------------------------------------------------
# run: configuration errors map to exit 1.


def test_iters_zero_rejected(capsys):
    code = run_cli(["run", "--problem", "quad-1d", "--iters", "0"])
    assert code == 1
    assert "--iters must be at least 1" in capsys.readouterr().err


def test_unknown_problem_rejected(capsys):
    code = run_cli(["run", "--problem", "no-such-problem"])
    assert code == 1
    assert "no-such-problem" in capsys.readouterr().err


def test_unknown_check_token_rejected(capsys):
    code = run_cli(["run", "--problem", "quad-1d", "--check", "thm9"])
    assert code == 1
    err = capsys.readouterr().err
    assert "unknown check 'thm9'" in err
    assert "thm1" in err and "anchors" in err


def test_momentum_check_on_subgradient_run_rejected(capsys):
    code = run_cli(["run", "--problem", "l1reg-2d", "--algorithm",
                    "prox_subgrad", "--check", "thm1"])
    assert code == 1
    assert "momentum runs only" in capsys.readouterr().err


def test_thm1_needs_supported_schedule(capsys):
    code = run_cli(["run", "--problem", "quad-2d", "--algorithm",
                    "accel_prox_grad", "--theta", "two_over_kplus2",
                    "--check", "thm1"])
    assert code == 1
    assert "unit momentum" in capsys.readouterr().err


def test_thm2_rejects_nonmonotone_backtracking(capsys):
    code = run_cli(["run", "--problem", "lasso-2d",
                    "--step", "backtracking:monotone=0", "--check", "thm2"])
    assert code == 1
    assert "non-increasing steps" in capsys.readouterr().err


def test_prox_grad_refuses_momentum_schedule(capsys):
    code = run_cli(["run", "--problem", "quad-1d", "--algorithm", "prox_grad",
                    "--theta", "fista"])
    assert code == 1
    assert "unit momentum" in capsys.readouterr().err


def test_bad_step_spec_rejected(capsys):
    code = run_cli(["run", "--problem", "quad-1d", "--step", "magic:3"])
    assert code == 1
    assert "bad step spec" in capsys.readouterr().err


def test_momentum_algorithm_on_nonsmooth_problem_rejected(capsys):
    code = run_cli(["run", "--problem", "l1reg-2d",
                    "--algorithm", "accel_prox_grad"])
    assert code == 1
    assert "nonsmooth" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# seeds.


def test_seed_env_var_honored(tmp_path, monkeypatch):
    monkeypatch.setenv("PROXCERT_SEED", "11")
    out = tmp_path / "env"
    code = run_cli(["run", "--problem", "quad-2d", "--iters", "10",
                    "--out-dir", str(out)])
    assert code == 0
    rep = read_json(out / "report.json")
    assert rep["config"]["resolved_problem"] == "quad-2d-s11"
    assert rep["config"]["seed"] == 11


def test_explicit_seed_beats_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PROXCERT_SEED", "11")
    out = tmp_path / "cli-seed"
    code = run_cli(["run", "--problem", "quad-2d", "--iters", "10",
                    "--seed", "4", "--out-dir", str(out)])
    assert code == 0
    rep = read_json(out / "report.json")
    assert rep["config"]["resolved_problem"] == "quad-2d-s4"


# ---------------------------------------------------------------------------
# rates.


def test_rates_basic_run(tmp_path, capsys):
    out = tmp_path / "rates"
    code = run_cli(["rates", "--problem", "boxqp-10", "--algorithm",
                    "prox_grad", "--iters", "300", "--out-dir", str(out)])
    captured = capsys.readouterr().out
    assert code == 0
    assert "rate check (rate-basic): PASS" in captured
    assert "tail-half fit: exponent=" in captured
    header, rows = read_plain_csv(str(out / "rates.csv"))
    assert header == ["k", "gap", "bound_1k", "bound_1k2", "bound_thm2", "ratio"]
    assert len(rows) == 300
    # measured gap never beats the worst-case guarantee
    assert all(row["ratio"] <= 1.0 + 1e-9 for row in rows)
    assert (out / "rates.png").stat().st_size > 1000
    rep = read_json(out / "rates.json")
    assert rep["command"] == "rates"
    assert "tail_exponent" in rep["fit"]


def test_rates_rejects_nonsmooth_problem(capsys):
    code = run_cli(["rates", "--problem", "l1reg-2d"])
    assert code == 1
    assert "smooth problem" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# verify-all.


def test_inject_fault_theta_is_rejected(capsys):
    code = run_cli(["verify-all", "--inject-fault", "theta"])
    assert code == 2
    err = capsys.readouterr().err
    assert "hypothesis violation" in err
    assert "validate_theta_pair failed at k=1" in err


def test_verify_all_json_summary(capsys):
    code = run_cli(["verify-all", "--json"])
    captured = capsys.readouterr().out
    assert code == 0
    payload = json.loads(captured)
    assert payload["satisfied"] is True
    assert len(payload["criteria"]) == 12
    assert all(c["passed"] for c in payload["criteria"])
    ids = [c["id"] for c in payload["criteria"]]
    assert ids == sorted(ids)


# ---------------------------------------------------------------------------
# console script.


def test_console_script_smoke(tmp_path):
    out = tmp_path / "script"
    env = dict(os.environ, MPLBACKEND="Agg")
    proc = subprocess.run(
        ["proxcert", "run", "--problem", "quad-1d", "--iters", "15",
         "--out-dir", str(out)],
        capture_output=True, text=True, env=env, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert "wrote" in proc.stdout
    assert (out / "report.json").is_file()


def test_console_script_usage_error_is_exit_1():
    proc = subprocess.run(
        ["proxcert", "run", "--problem", "quad-1d", "--algorithm", "bogus"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 1
    assert "invalid choice" in proc.stderr


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
