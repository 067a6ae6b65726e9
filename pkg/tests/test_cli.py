"""Command line: artifact generation, reproducibility, config precedence,
error exit codes, replay transcripts."""

from __future__ import annotations

import json
import socket


from specplan.cli import main


def run_cli(*argv) -> int:
    return main(list(argv))


def test_simulate_reference_scenario(tmp_path, capsys):
    out = tmp_path / "run"
    code = run_cli(
        "simulate", "--n", "10", "--ta", "2", "--tt", "8", "--acc", "1.0",
        "--k", "10", "--seed", "7", "--out", str(out),
    )
    assert code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["TT"] == 26.0
    assert metrics["TO"] == 300
    assert "TT" in capsys.readouterr().out


def test_simulate_k1_equals_sequential_baseline(tmp_path):
    out = tmp_path / "run"
    assert run_cli("simulate", "--acc", "0.3", "--k", "1", "--seed", "5", "--out", str(out)) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["TT"] == 80.0


def test_simulate_rejects_out_of_range_accuracy(tmp_path, capsys):
    assert run_cli("simulate", "--acc", "1.5", "--out", str(tmp_path)) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli("simulate", "--bogus", "1") == 1


def test_simulate_artifacts_are_reproducible(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert run_cli("simulate", "--acc", "0.5", "--k", "6", "--seed", "9", "--out", str(out)) == 0
    assert (out_a / "events.jsonl").read_bytes() == (out_b / "events.jsonl").read_bytes()
    assert (out_a / "metrics.json").read_bytes() == (out_b / "metrics.json").read_bytes()


def test_config_file_supplies_defaults_flags_win(tmp_path):
    config = tmp_path / "conf.yaml"
    config.write_text("acc: 0.0\nk: 10\nseed: 3\n")
    out = tmp_path / "run"
    assert run_cli("simulate", "--config", str(config), "--acc", "1.0", "--out", str(out)) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    # accuracy came from the flag, k from the file
    assert metrics["TT"] == 26.0


def test_analyze_round_trips_simulate_metrics(tmp_path):
    out = tmp_path / "run"
    assert run_cli("simulate", "--acc", "1.0", "--k", "10", "--seed", "7", "--out", str(out)) == 0
    analysis = tmp_path / "analysis"
    assert run_cli("analyze", str(out / "events.jsonl"), "--k", "10", "--out", str(analysis)) == 0
    document = json.loads((analysis / "metrics.json").read_text())
    simulated = json.loads((out / "metrics.json").read_text())
    assert document["metrics"] == simulated
    assert document["breaking_points"] == [-1, 9]
    assert (analysis / "breakdown.csv").read_text().splitlines()[0] == "metric,mean,std,min"


def test_analyze_corrupt_log_reports_line_number(tmp_path, capsys):
    log = tmp_path / "bad.jsonl"
    log.write_text('{"t":0.0,"type":"process_started","index":0,"kind":"A"}\nnot json\n')
    assert run_cli("analyze", str(log), "--out", str(tmp_path / "x")) == 2
    assert "line 2" in capsys.readouterr().err


def test_analyze_empty_log_errors(tmp_path):
    log = tmp_path / "empty.jsonl"
    log.write_text("")
    assert run_cli("analyze", str(log), "--out", str(tmp_path / "x")) == 2


def test_grid_refuses_overwrite_without_force(tmp_path):
    out = tmp_path / "grid"
    args = ("grid", "accuracy-k", "--accs", "1.0", "--ks", "10", "--seeds", "1", "--out", str(out))
    assert run_cli(*args) == 0
    assert run_cli(*args) == 2
    assert run_cli(*args, "--force") == 0


def test_grid_single_seed_zero_std(tmp_path):
    out = tmp_path / "grid"
    assert run_cli("grid", "accuracy-k", "--accs", "0.5", "--ks", "4", "--seeds", "1",
                   "--out", str(out)) == 0
    rows = (out / "accuracy-k_aggregate.csv").read_text().splitlines()
    tt_row = next(row for row in rows if ",TT," in row)
    assert tt_row.split(",")[4] == "0.0"


def test_grid_interruption_study(tmp_path):
    out = tmp_path / "grid"
    assert run_cli("grid", "interruption", "--counts", "0,5", "--sims", "2", "--k", "10",
                   "--acc", "0.5", "--out", str(out)) == 0
    raw = (out / "interruption_raw.csv").read_text().splitlines()
    assert raw[0] == "accuracy,interrupts,seed,TT,ST,TO,SO,MC"
    assert len(raw) == 5


def test_replay_prints_index_ordered_transcript(tmp_path, capsys):
    out = tmp_path / "run"
    assert run_cli("simulate", "--acc", "0.7", "--k", "8", "--seed", "2", "--out", str(out)) == 0
    capsys.readouterr()
    assert run_cli("replay", str(out / "events.jsonl")) == 0
    lines = capsys.readouterr().out.splitlines()
    target_indices = [int(line.split("T#")[1].split(":")[0]) for line in lines if "] T#" in line]
    assert target_indices == sorted(target_indices)
    assert "plan complete" in lines[-1]


def test_replay_empty_log_prints_nothing(tmp_path, capsys):
    log = tmp_path / "empty.jsonl"
    log.write_text("")
    assert run_cli("replay", str(log)) == 0
    assert capsys.readouterr().out == ""


def test_serve_port_in_use_is_runtime_error(capsys):
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        assert run_cli("serve", "--host", "127.0.0.1", "--port", str(port)) == 2
        assert "cannot bind" in capsys.readouterr().err
    finally:
        blocker.close()


def test_missing_command_is_usage_error():
    assert run_cli() == 1
