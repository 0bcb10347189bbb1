"""End-to-end command behavior through run(): exit codes, file outputs,
manifest integrity, and byte-exact replay."""

import hashlib
import json

import pytest

from sparse_minimax.cli import _parse_grid_text, _resolve_threads, run

RISK_CFG = """
n = 30
p = 12
k = 2
sigma = 1.0
eps = 0.1
estimator_id = oracle
amplitudes = 2.0, 4.0
reps = 3
master_seed = 11
"""

LEMMA_CFG = """
n = 200
p = 50
k = 2
sigma = 1.0
eps = 0.1
"""


@pytest.fixture
def risk_config(tmp_path):
    path = tmp_path / "risk.cfg"
    path.write_text(RISK_CFG)
    return str(path)


def _run_simulate(tmp_path, risk_config, name="out", extra=()):
    out = tmp_path / name
    out.mkdir()
    code = run(["simulate-risk", "--config", risk_config, "--out", str(out), *extra])
    return code, out


def test_simulate_risk_writes_run_directory(tmp_path, risk_config, capsys):
    code, out = _run_simulate(tmp_path, risk_config)
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"risk_oracle.csv", "risk_oracle.tsv", "summary_oracle.json", "manifest.json"}
    csv_lines = (out / "risk_oracle.csv").read_text().splitlines()
    assert csv_lines[0] == "amplitude,replicate,sq_error,estimator,seed"
    assert len(csv_lines) == 1 + 2 * 3  # amplitudes x reps
    assert "minimax_ratio" in capsys.readouterr().out


def test_manifest_hashes_match_files(tmp_path, risk_config):
    from sparse_minimax._kernels import BACKEND

    _, out = _run_simulate(tmp_path, risk_config)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["format"] == "sparse-minimax-manifest-v1"
    assert manifest["subcommand"] == "simulate-risk"
    assert manifest["master_seed"] == 11
    assert manifest["backend"] == BACKEND
    for name, meta in manifest["outputs"].items():
        data = (out / name).read_bytes()
        assert hashlib.sha256(data).hexdigest() == meta["sha256"]
        assert len(data) == meta["bytes"]


def test_summary_echoes_resolved_config(tmp_path, risk_config):
    _, out = _run_simulate(tmp_path, risk_config)
    summary = json.loads((out / "summary_oracle.json").read_text())
    assert summary["config"]["master_seed"] == "11"
    assert summary["estimator"] == "oracle"
    assert summary["manifest"] == "manifest.json"
    assert len(summary["means"]) == 2


def test_seed_flag_overrides_config(tmp_path, risk_config):
    _, a = _run_simulate(tmp_path, risk_config, "a")
    _, b = _run_simulate(tmp_path, risk_config, "b", extra=["--seed", "99"])
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["master_seed"] == 11
    assert mb["master_seed"] == 99
    assert (a / "risk_oracle.csv").read_bytes() != (b / "risk_oracle.csv").read_bytes()


def test_thread_count_never_changes_bytes(tmp_path):
    cfg = tmp_path / "risk.cfg"
    cfg.write_text(RISK_CFG.replace("oracle", "lasso"))
    one = tmp_path / "one"
    eight = tmp_path / "eight"
    one.mkdir()
    eight.mkdir()
    assert run(["simulate-risk", "--config", str(cfg), "--out", str(one), "--threads", "1"]) == 0
    assert run(["simulate-risk", "--config", str(cfg), "--out", str(eight), "--threads", "8"]) == 0
    for name in ("risk_lasso.csv", "risk_lasso.tsv", "summary_lasso.json"):
        assert (one / name).read_bytes() == (eight / name).read_bytes()


def test_replay_confirms_fresh_run(tmp_path, risk_config, capsys):
    _, out = _run_simulate(tmp_path, risk_config)
    assert run(["replay", str(out / "manifest.json")]) == 0
    assert "3/3 files identical" in capsys.readouterr().out


def test_replay_flags_edited_data(tmp_path, risk_config, capsys):
    _, out = _run_simulate(tmp_path, risk_config)
    path = out / "risk_oracle.csv"
    path.write_text(path.read_text().replace("oracle", "oracle2"))
    assert run(["replay", str(out / "manifest.json")]) == 2
    assert "mismatch: risk_oracle.csv" in capsys.readouterr().out


def test_replay_flags_missing_file(tmp_path, risk_config, capsys):
    _, out = _run_simulate(tmp_path, risk_config)
    (out / "risk_oracle.tsv").unlink()
    assert run(["replay", str(out / "manifest.json")]) == 1
    assert "missing output file" in capsys.readouterr().err


def test_replay_rejects_foreign_json(tmp_path, capsys):
    path = tmp_path / "manifest.json"
    path.write_text('{"format": "something-else"}')
    assert run(["replay", str(path)]) == 1
    assert run(["replay", str(tmp_path / "absent.json")]) == 1


def test_replay_warns_on_version_drift(tmp_path, risk_config, capsys):
    _, out = _run_simulate(tmp_path, risk_config)
    path = out / "manifest.json"
    manifest = json.loads(path.read_text())
    manifest["version"] = "0.0.0"
    path.write_text(json.dumps(manifest))
    assert run(["replay", str(path)]) == 0
    assert "comparing anyway" in capsys.readouterr().err


def test_replay_warns_on_backend_drift(tmp_path, risk_config, capsys):
    _, out = _run_simulate(tmp_path, risk_config)
    path = out / "manifest.json"
    manifest = json.loads(path.read_text())
    manifest["backend"] = "somewhere-else"
    path.write_text(json.dumps(manifest))
    # only the label was forged; bytes were made under the live backend
    assert run(["replay", str(path)]) == 0
    assert "low-order float bits may differ" in capsys.readouterr().err


def test_sweep_shares_seeds_across_estimators(tmp_path, risk_config, capsys):
    out = tmp_path / "sweep"
    out.mkdir()
    code = run(["sweep", "--config", risk_config, "--estimators", "oracle,mle", "--out", str(out)])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"risk_oracle.csv", "risk_mle.csv", "sweep_summary.json", "manifest.json"} <= names
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert set(summary["estimators"]) == {"oracle", "mle"}
    for est in ("oracle", "mle"):
        assert "minimax_ratio" in summary["estimators"][est]
    assert run(["replay", str(out / "manifest.json")]) == 0


GOOD_DESIGN = ["--n", "1500", "--p", "50", "--k", "2", "--eps", "2.0", "--restarts", "8"]


def test_diagnose_design_exit_codes(capsys):
    assert run(["diagnose-design", *GOOD_DESIGN]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["holds"] is True
    assert payload["theta_ok"] is True and payload["max_col_norm_ok"] is True
    # wide design: a null-space direction kills the lower eigenvalue bound
    assert run(["diagnose-design", "--n", "30", "--p", "40", "--k", "2", "--eps", "0.1", "--restarts", "4"]) == 2
    assert json.loads(capsys.readouterr().out)["holds"] is False


def test_diagnose_design_writes_replayable_run(tmp_path, capsys):
    out = tmp_path / "diag"
    out.mkdir()
    assert run(["diagnose-design", *GOOD_DESIGN, "--out", str(out)]) == 0
    assert run(["replay", str(out / "manifest.json")]) == 0


def test_check_lemma_registry_row(tmp_path, capsys):
    out = tmp_path / "lemma"
    out.mkdir()
    code = run(["check-lemma", "--lemma", "gauss_max", "--reps", "500", "--out", str(out)])
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    payload = json.loads((out / "lemma_gauss_max.json").read_text())
    assert payload["report"]["lemma_id"] == "gauss_max"
    assert run(["replay", str(out / "manifest.json")]) == 0


def test_check_lemma_grid_file(tmp_path, capsys):
    grid = tmp_path / "grid.txt"
    grid.write_text("p = 50, u = 0.5\np = 200, u = 1.0\n")
    code = run(["check-lemma", "--lemma", "gauss_max", "--reps", "300", "--grid", str(grid)])
    assert code == 0
    text = capsys.readouterr().out
    assert "p=50" in text and "p=200" in text
    assert "2/2 grid points" in text


def test_check_lemma_proof_driver(tmp_path, capsys):
    cfg = tmp_path / "lemma.cfg"
    cfg.write_text(LEMMA_CFG)
    out = tmp_path / "gap"
    out.mkdir()
    code = run(
        ["check-lemma", "--lemma", "gap", "--config", str(cfg), "--reps", "25", "--out", str(out)]
    )
    assert code == 0
    report = json.loads((out / "lemma_gap.json").read_text())["report"]
    assert report["violations"] == 0
    assert report["containment_rate"] == 1.0
    assert run(["replay", str(out / "manifest.json")]) == 0


def test_check_lemma_proof_driver_needs_config(capsys):
    assert run(["check-lemma", "--lemma", "gap"]) == 1
    assert "needs --config" in capsys.readouterr().err


def test_check_lemma_unknown_name(capsys):
    assert run(["check-lemma", "--lemma", "borel_cantelli"]) == 1
    err = capsys.readouterr().err
    assert "unknown lemma" in err
    assert "gap" in err and "gauss_max" in err


def test_bad_experiment_config_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(RISK_CFG.replace("k = 2", "k = 12"))
    out = tmp_path / "out"
    out.mkdir()
    assert run(["simulate-risk", "--config", str(cfg), "--out", str(out)]) == 1
    assert "need 1 <= k < p" in capsys.readouterr().err
    assert list(out.iterdir()) == []  # validation precedes any output


def test_missing_out_directory(tmp_path, risk_config, capsys):
    assert run(["simulate-risk", "--config", risk_config, "--out", str(tmp_path / "nope")]) == 1
    assert "does not exist" in capsys.readouterr().err


def test_unknown_flag_and_missing_subcommand(capsys):
    assert run(["simulate-risk", "--frobnicate"]) == 1
    assert run([]) == 1
    assert run(["--help"]) == 0


def test_grid_text_parser():
    points = _parse_grid_text("# comment\np = 10, u = 0.5\n\nd=3,tau=0.2\n")
    assert points == [{"p": 10, "u": 0.5}, {"d": 3, "tau": 0.2}]
    with pytest.raises(ValueError, match="line 1"):
        _parse_grid_text("p 10\n")
    with pytest.raises(ValueError):
        _parse_grid_text("p = ten\n")
    with pytest.raises(ValueError):
        _parse_grid_text("# nothing\n")


def test_console_script_is_installed():
    import subprocess

    proc = subprocess.run(["sparse-minimax", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "simulate-risk" in proc.stdout


def test_threads_env_wins_over_flag(monkeypatch):
    monkeypatch.setenv("SPARSE_MINIMAX_THREADS", "2")
    assert _resolve_threads(8) == 2
    monkeypatch.setenv("SPARSE_MINIMAX_THREADS", "0")
    with pytest.raises(Exception, match="SPARSE_MINIMAX_THREADS"):
        _resolve_threads(None)
    monkeypatch.delenv("SPARSE_MINIMAX_THREADS")
    assert _resolve_threads(5) == 5
