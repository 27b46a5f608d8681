import csv
import json

import pytest

from streamsim.cli import main


@pytest.fixture(scope="module")
def drift_log(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    log = d / "drift.csv"
    assert main(["gen-drift", "--seed", "3", "--n-pre", "150", "--n-post", "150", "--weeks", "3", "--out", str(log)]) == 0
    return log


def test_gen_drift_manifest(drift_log):
    man = json.loads(drift_log.with_suffix(".manifest.json").read_text())
    assert man["n_pre"] == 150 and man["phases"]["post"]["automated_share"] == 0.8


def test_ingest(drift_log, capsys, tmp_path):
    assert main(["ingest", str(drift_log), "--out", str(tmp_path / "norm.csv")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["cases"] == 300 and info["with_start"] == info["events"]
    assert (tmp_path / "norm.csv").read_text() == drift_log.read_text()


def test_run_and_plot(drift_log, tmp_path, capsys):
    plan = tmp_path / "plan.toml"
    plan.write_text(
        f'[input]\npath = "{drift_log}"\n'
        '[experiment]\nk = 3\nreplications = 1\ngrace_period = 50\n'
        '[completion]\nend_activities = ["notify"]\n'
        f'[output]\ndir = "{tmp_path / "runs"}"\n'
    )
    assert main(["run", "--plan", str(plan)]) == 0
    (run_dir,) = (tmp_path / "runs").iterdir()
    assert run_dir.name.startswith("run-seed0-")
    summary = list(csv.reader(open(run_dir / "summary.csv")))
    assert [r[0] for r in summary[1:]] == ["single_batch", "last_batch", "online"]
    assert (run_dir / "skipped.json").exists()
    capsys.readouterr()
    assert main(["plot", str(run_dir), "--out", str(tmp_path / "plots")]) == 0
    assert len(list((tmp_path / "plots").glob("*.svg"))) == 8


def test_evaluate(drift_log, tmp_path, capsys):
    assert main(["evaluate", str(drift_log), str(drift_log), "--out", str(tmp_path / "e.csv")]) == 0
    out = capsys.readouterr().out
    assert "cfld        0.0000" in out and "ctd         0.0000" in out


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--plan", str(tmp_path / "missing.toml")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("case_id,activity,end_ts\nc1,a,not-a-time\n")
    assert main(["ingest", str(bad)]) == 2
    assert main(["frobnicate"]) == 1
    assert main(["plot", str(tmp_path)]) == 2
