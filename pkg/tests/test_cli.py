import json

import numpy as np
import pandas as pd

from main import EXIT_CONFIG_ERROR, EXIT_IO_ERROR, EXIT_OK, main

RARE_EVENT_ARGS = ["rare-event", "--model", "uniform_toy", "--estimator", "cmc", "--gamma", "0.9",
                   "--n", "1000", "--replicates", "3", "--seed", "11"]


def test_rare_event_writes_one_row_per_replicate(tmp_path):
    out = tmp_path / "cmc.csv"
    assert main(RARE_EVENT_ARGS + ["--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert frame["replicate"].tolist() == [0, 1, 2]
    assert np.allclose(frame["truth"], 0.1)
    assert frame["estimate"].between(0.0, 1.0).all()


def test_same_seed_same_bytes(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(RARE_EVENT_ARGS + ["--out", str(first)]) == EXIT_OK
    assert main(RARE_EVENT_ARGS + ["--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_json_report_without_timing(tmp_path):
    out = tmp_path / "cmc.json"
    assert main(RARE_EVENT_ARGS + ["--format", "json", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert len(report["records"]) == 3
    assert "wall_clock" not in report["records"][0]
    assert report["config"]["seed"] == 11


def test_experiment_file(tmp_path):
    config = tmp_path / "experiment.env"
    config.write_text("model=uniform_toy\nestimator=cmc\ngamma=0.8\nn=500\nreplicates=2\nseed=4\n")
    out = tmp_path / "from_file.csv"
    assert main(["rare-event", "--config", str(config), "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert len(frame) == 2
    assert (frame["N"] == 500).all()


def test_flags_override_experiment_file(tmp_path):
    config = tmp_path / "experiment.env"
    config.write_text("model=uniform_toy\nestimator=cmc\ngamma=0.8\nn=500\nreplicates=2\n")
    out = tmp_path / "override.csv"
    assert main(["rare-event", "--config", str(config), "--replicates", "4", "--out", str(out)]) == EXIT_OK
    assert len(pd.read_csv(out)) == 4


def test_missing_gamma_is_a_config_error(tmp_path):
    args = ["rare-event", "--model", "uniform_toy", "--estimator", "cmc", "--out", str(tmp_path / "x.csv")]
    assert main(args) == EXIT_CONFIG_ERROR


def test_incompatible_estimator_is_a_config_error(tmp_path):
    args = ["evidence", "--model", "gaussian_mixture", "--estimator", "ce", "--out", str(tmp_path / "x.csv")]
    assert main(args) == EXIT_CONFIG_ERROR


def test_missing_experiment_file(tmp_path):
    assert main(["rare-event", "--config", str(tmp_path / "absent.env")]) == EXIT_CONFIG_ERROR


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(RARE_EVENT_ARGS + ["--out", str(blocker / "out.csv")]) == EXIT_IO_ERROR


def test_evidence_on_toy(tmp_path):
    out = tmp_path / "ns.csv"
    args = ["evidence", "--model", "exponential_toy", "--estimator", "ns", "--particles", "50",
            "--mcmc-steps", "1", "--out", str(out)]
    assert main(args) == EXIT_OK
    frame = pd.read_csv(out)
    assert frame.loc[0, "gamma_or_mode"] == "evidence"


def test_trace_writes_rows(tmp_path):
    out = tmp_path / "trace.csv"
    args = ["trace", "--model", "uniform_toy", "--gamma", "0.9", "--n", "5000", "--n-level", "200",
            "--trace-every", "50", "--out", str(out)]
    assert main(args) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["iteration", "level", "log_omega"]
    assert len(frame) > 0


def test_property_suite(tmp_path, capsys):
    out = tmp_path / "checks.json"
    assert main(["property-suite", "--format", "json", "--out", str(out)]) == EXIT_OK
    checks = json.loads(out.read_text())
    assert len(checks) == 9
    assert all(c["passed"] for c in checks)
    assert "9 passed, 0 failed" in capsys.readouterr().out


def test_table_from_reports(tmp_path):
    reports = tmp_path / "reports"
    for n in ("1000", "2000"):
        args = ["rare-event", "--model", "uniform_toy", "--estimator", "cmc", "--gamma", "0.9", "--n", n,
                "--replicates", "2", "--format", "json", "--out", str(reports / f"cmc_{n}.json")]
        assert main(args) == EXIT_OK
    out = tmp_path / "table.csv"
    assert main(["table", str(reports), "--layout", "rare-event", "--out", str(out)]) == EXIT_OK
    table = pd.read_csv(out)
    assert list(table.columns) == ["gamma_or_mode", "estimator", "N=1000", "N=2000"]
    assert len(table) == 1


def test_table_needs_reports(tmp_path):
    assert main(["table", str(tmp_path), "--out", str(tmp_path / "t.csv")]) == EXIT_CONFIG_ERROR
    assert main(["table", str(tmp_path / "absent"), "--out", str(tmp_path / "t.csv")]) == EXIT_IO_ERROR
