import csv
import io
import json
import os

import pytest

from bellcert.cli import (
    EXIT_OK,
    EXIT_PARSE,
    EXIT_TRIVIAL,
    EXIT_USAGE,
    main,
    render_record,
    render_rows,
    run,
)
from bellcert.manifest import MANIFEST_SUFFIX
from bellcert.tomography import read_counts


def _sections(text: str) -> list[list[dict]]:
    """Splits csv output into its blank-line separated tables."""
    return [
        list(csv.DictReader(io.StringIO(chunk)))
        for chunk in text.strip().split("\n\n")
        if chunk.strip()
    ]


def _record(capsys) -> dict:
    (rows,) = _sections(capsys.readouterr().out)
    (row,) = rows
    return row


def test_render_text_record():
    text = render_record({"s": 2.23596123, "closed": True, "c": 5, "x": None}, "text")
    assert "2.23596" in text
    assert "true" in text
    assert text.splitlines()[0].startswith("s ")


def test_render_rows_csv():
    text = render_rows([{"a": 1, "b": 0.1}, {"a": 2, "b": 0.2}], "csv")
    assert text == "a,b\n1,0.1\n2,0.2\n"
    assert render_rows([], "csv") == ""


def test_bounds(capsys):
    assert run(["bounds", "--s", "2.236", "--format", "csv"]) == EXIT_OK
    row = _record(capsys)
    assert float(row["f_state"]) == pytest.approx(0.590075, abs=1e-6)
    assert float(row["f_measurement"]) == pytest.approx(0.895273, abs=1e-6)
    assert row["state_certified"] == "true"


def test_bounds_table(capsys):
    assert run(["bounds", "--table", "--steps", "5", "--format", "csv"]) == EXIT_OK
    (rows,) = _sections(capsys.readouterr().out)
    assert len(rows) == 5
    assert float(rows[0]["s"]) == pytest.approx(2.0)
    assert float(rows[-1]["f_state"]) == pytest.approx(1.0)


def test_bounds_errors():
    assert run(["bounds", "--s", "3.0"]) == EXIT_USAGE
    assert run(["bounds"]) == EXIT_USAGE


def test_certify_tally(capsys):
    assert run(["certify", "--n", "16777216", "--c", "13077840", "--format", "csv"]) == EXIT_OK
    row = _record(capsys)
    assert float(row["s_lower"]) == pytest.approx(2.2341, abs=5e-4)
    assert float(row["f_state"]) == pytest.approx(0.589, abs=2e-3)
    assert row["state_trivial"] == "false"


def test_certify_trivial_tally():
    assert run(["certify", "--n", "100", "--c", "80"]) == EXIT_TRIVIAL


def test_certify_needs_input():
    assert run(["certify"]) == EXIT_USAGE


def test_certify_malformed_log(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# format_version=1\n0,0,0,0,0\n1,0,0,0\n")
    assert run(["certify", str(path)]) == EXIT_PARSE


def test_certify_missing_log(tmp_path):
    assert run(["certify", str(tmp_path / "missing.csv")]) == EXIT_USAGE


def test_simulate_then_certify(tmp_path, capsys):
    log = str(tmp_path / "trials.csv")
    code = run(
        ["simulate", "--n", "8192", "--block-size", "2048", "--report-size", "512",
         "--seed", "7", "--out", log, "--format", "csv"]
    )
    assert code == EXIT_OK
    totals, blocks, windows = _sections(capsys.readouterr().out)
    assert int(totals[0]["n"]) == 8192
    assert len(blocks) == 4
    assert len(windows) == 16
    assert os.path.exists(log + MANIFEST_SUFFIX)

    run(["certify", log, "--format", "csv"])
    row = _record(capsys)
    assert int(row["n"]) == 8192
    assert int(row["c"]) == int(totals[0]["c"])


def test_simulate_with_only_n(tmp_path, capsys):
    log = str(tmp_path / "trials.csv")
    assert run(["simulate", "--n", "1000", "--out", log, "--format", "csv"]) == EXIT_OK
    totals, blocks = _sections(capsys.readouterr().out)
    assert int(totals[0]["n"]) == 1000
    assert len(blocks) == 1


def test_simulate_rejects_inconsistent_block_size(tmp_path):
    log = str(tmp_path / "trials.csv")
    assert run(["simulate", "--n", "1000", "--block-size", "300", "--out", log]) == EXIT_USAGE


def test_simulate_rejects_invalid_noise(tmp_path):
    log = str(tmp_path / "trials.csv")
    assert run(["simulate", "--n", "64", "--bell-fidelity", "1.5", "--out", log]) == EXIT_USAGE


def test_replay_reproduces_trial_log(tmp_path):
    log = str(tmp_path / "trials.csv")
    args = ["simulate", "--n", "4096", "--block-size", "1024", "--seed", "3", "--out", log,
            "--theta-deg", "40", "--readout-ge-b", "0.02"]
    assert run(args) == EXIT_OK
    with open(log, "rb") as f:
        original = f.read()
    os.remove(log)
    assert run(["replay", log + MANIFEST_SUFFIX]) == EXIT_OK
    with open(log, "rb") as f:
        assert f.read() == original


def test_manifest_records_resolved_config(tmp_path):
    out = str(tmp_path / "bounds.csv")
    assert run(["bounds", "--s", "2.5", "--out", out]) == EXIT_OK
    with open(out + MANIFEST_SUFFIX) as f:
        manifest = json.loads(f.read())
    assert manifest["command"] == "bounds"
    assert manifest["outputs"] == [out]
    assert manifest["config"]["noise"]["bell_fidelity"] == 0.859


def test_config_file_and_override(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"distance_m": 10.0}))
    assert run(["timing", "--config", str(config), "--format", "csv"]) == EXIT_OK
    assert _record(capsys)["closed"] == "false"
    assert run(["timing", "--config", str(config), "--distance-m", "32.928", "--format", "csv"]) == EXIT_OK
    row = _record(capsys)
    assert row["closed"] == "true"
    assert float(row["margin_ns"]) == pytest.approx(3.136, abs=1e-3)


def test_timing_short_flags(capsys):
    assert run(["timing", "--distance", "32.928", "--duration", "106.7", "--format", "csv"]) == EXIT_OK
    row = _record(capsys)
    assert row["closed"] == "true"
    assert float(row["budget_ns"]) == pytest.approx(109.836, abs=1e-3)
    assert float(row["margin_ns"]) == pytest.approx(3.136, abs=1e-3)


def test_invalid_config_file(tmp_path):
    config = tmp_path / "config.json"
    config.write_text("{not json")
    assert run(["timing", "--config", str(config)]) == EXIT_USAGE
    config.write_text(json.dumps({"colour": "red"}))
    assert run(["timing", "--config", str(config)]) == EXIT_USAGE


def test_table(capsys):
    assert run(["table", "--s", "2.236", "--n", "100000", "inf", "--format", "csv"]) == EXIT_OK
    (rows,) = _sections(capsys.readouterr().out)
    assert len(rows) == 2
    assert float(rows[1]["s_lower"]) == pytest.approx(2.236)
    assert float(rows[0]["s_lower"]) < 2.236


def test_table_rejects_bad_trial_count():
    assert run(["table", "--n", "zero"]) == EXIT_USAGE


def test_feasibility(capsys):
    assert run(["feasibility", "--s", "2.236", "--format", "csv"]) == EXIT_OK
    row = _record(capsys)
    assert int(row["min_trials"]) > 1000
    assert float(row["s_lower"]) > 2.105823
    assert run(["feasibility", "--s", "2.0"]) == EXIT_USAGE


def test_tomography(tmp_path, capsys):
    counts_path = str(tmp_path / "counts.csv")
    code = run(["tomography", "--shots", "20000", "--counts-out", counts_path, "--format", "csv"])
    assert code == EXIT_OK
    row = _record(capsys)
    assert float(row["fidelity_corrected"]) == pytest.approx(0.859, abs=0.03)
    assert float(row["measurement_fidelity_worst"]) == pytest.approx(0.97167, abs=1e-5)
    assert read_counts(counts_path).shots == 20000
    assert os.path.exists(counts_path + MANIFEST_SUFFIX)


def test_sweep(capsys):
    code = run(
        ["sweep", "--start-deg", "0", "--stop-deg", "180", "--steps", "5", "--trials", "2048",
         "--bell-fidelity", "1", "--readout-eg-a", "0", "--readout-ge-a", "0",
         "--readout-eg-b", "0", "--readout-ge-b", "0", "--format", "csv"]
    )
    assert code == EXIT_OK
    points, peaks = _sections(capsys.readouterr().out)
    assert len(points) == 5
    assert float(peaks[0]["peak0_deg"]) == 45.0


def test_verify(tmp_path, capsys):
    out = str(tmp_path / "verify.csv")
    assert run(["verify", "--format", "csv", "--out", out]) == EXIT_OK
    (rows,) = _sections(capsys.readouterr().out)
    assert all(r["passed"] == "true" for r in rows)
    assert os.path.exists(out)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["launch"],
        ["simulate", "--n", "many"],
        ["bounds", "--s"],
        ["timing", "--format", "xml"],
        ["feasibility"],
    ],
)
def test_usage_errors(argv):
    assert run(argv) == EXIT_USAGE


def test_main_uses_given_argv(capsys):
    assert main(["bounds", "--s", "2.5"]) == EXIT_OK
    assert "f_state" in capsys.readouterr().out
