import json

import pytest

from herdtrack.cli import main

RUN_FILES = ["trajectory.csv", "tracks.jsonl", "commands.jsonl", "ground_truth.jsonl", "report.json"]
FIGURES = ["trajectory.png", "tracking.png", "tiles.png"]


@pytest.fixture(scope="module")
def short_runs(tmp_path_factory):
    """Two identical short runs that reach the camera phases."""
    dirs = []
    for name in ("a", "b"):
        d = tmp_path_factory.mktemp(name)
        assert main(["run", "--seed", "42", "--frames", "900", "--out", str(d)]) == 0
        dirs.append(d)
    return dirs


def test_run_writes_outputs(short_runs):
    d = short_runs[0]
    for name in RUN_FILES + FIGURES:
        assert (d / name).is_file() and (d / name).stat().st_size > 0, name
    assert (d / "trajectory.csv").read_text().splitlines()[0] == "t,ex,ey,ux,uy,phase"
    report = json.loads((d / "report.json").read_text())
    assert report["seed"] == 42 and report["frames"] == 900
    assert 0.0 <= report["trajectory_match"] <= 1.0


def test_run_outputs_are_byte_identical(short_runs):
    a, b = short_runs
    for name in RUN_FILES[:-1]:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    ra, rb = (json.loads((d / "report.json").read_text()) for d in short_runs)
    # throughput is wall-clock and the only field allowed to differ
    ra.pop("throughput_fps"), rb.pop("throughput_fps")
    assert ra == rb


def test_missing_config_exits_2_with_path(tmp_path, capsys):
    missing = tmp_path / "nowhere.yaml"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "o")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_unknown_key_exits_2_naming_key(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("pipeline:\n  detect_evry_n: 3\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "pipeline.detect_evry_n" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["fly"], ["run", "--seed", "x"], ["run", "--frames", "0"], ["evaluate", "only-one"]])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_evaluate_command(short_runs, tmp_path, capsys):
    d = short_runs[0]
    capsys.readouterr()
    out = tmp_path / "metrics.json"
    assert main(["evaluate", str(d / "ground_truth.jsonl"), str(d / "ground_truth.jsonl"), "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["iou_fraction"] == 1.0 and summary["id_switches"] == 0
    assert "per_frame_iou" in json.loads(out.read_text())

    assert main(["evaluate", str(d / "tracks.jsonl"), str(d / "ground_truth.jsonl")]) == 0
    assert json.loads(capsys.readouterr().out)["iou_fraction"] >= 0.9


def test_evaluate_misaligned_exits_1(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    a.write_text('{"frame": 1, "detector_ran": true, "tracks": []}\n')
    b.write_text('{"frame": 2, "detector_ran": true, "tracks": []}\n')
    assert main(["evaluate", str(a), str(b)]) == 1


def test_evaluate_missing_file_exits_2(tmp_path):
    assert main(["evaluate", str(tmp_path / "x"), str(tmp_path / "y")]) == 2


def test_export_tiles(tmp_path, capsys):
    assert main(["export-tiles", "--out", str(tmp_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["tiles"]) == 6
    assert doc["tiles"][0]["tlbr"] == [0, 0, 512, 411]
    assert (tmp_path / "tiles.json").is_file() and (tmp_path / "tiles.png").is_file()
