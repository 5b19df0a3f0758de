"""Replay the recorded CLI scenarios (tests/test_*.yml) and a few file-writing runs."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from netdiff.cli import cli
from netdiff.experiment import load_test_data

SCENARIOS = sorted(p.stem[len("test_"):] for p in Path(__file__).parent.glob("test_*.yml"))


@pytest.fixture
def runner():
    return CliRunner()


@pytest.mark.parametrize("name", SCENARIOS)
def test_recorded_scenario(runner, name):
    scenario = load_test_data(name)
    assert scenario, f"scenario {name} did not load"
    result = runner.invoke(cli, scenario["args"])
    assert result.exit_code == scenario["exit_code"], result.output
    for fragment in scenario["expect"]:
        assert fragment in result.output


def test_trace_to_file_and_render(runner, tmp_path):
    trace = tmp_path / "trace.jsonl"
    result = runner.invoke(
        cli,
        ["simulate", "--agg", "threshold:1/2", "--init", "checkerboard", "--radius", "2",
         "--steps", "3", "--out", str(trace)],
    )
    assert result.exit_code == 0, result.output
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert [r["event"] for r in records] == ["init", "step", "cycle"]
    assert records[0]["window"]["bounds"] == [[-2, 2], [-2, 2]]

    frames = tmp_path / "frames"
    result = runner.invoke(cli, ["render", "--trace", str(trace), "--format", "pgm", "--out", str(frames)])
    assert result.exit_code == 0, result.output
    assert sorted(p.name for p in frames.iterdir()) == ["frame_00000.pgm", "frame_00001.pgm", "frame_00002.pgm"]


def test_experiment_spec_file(runner, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"net": "z2-l1", "init": "one", "seed": 3, "steps": 5, "radius": 2}))
    out = tmp_path / "records.json"
    result = runner.invoke(cli, ["simulate", "--spec", str(spec), "--format", "json", "--out", str(out)])
    assert result.exit_code == 0, result.output
    records = json.loads(out.read_text())
    assert len(records) == 6
    assert records[0]["active"] == [[0, 0]]


def test_pgm_needs_an_output_directory(runner):
    result = runner.invoke(cli, ["simulate", "--agg", "threshold:1/2", "--radius", "1", "--steps", "1", "--format", "pgm"])
    assert result.exit_code == 2


def test_missing_settings_file_falls_back_to_defaults(runner, tmp_path):
    result = runner.invoke(cli, ["--settings", str(tmp_path / "nope.yml"), "classify", "--init", "empty"])
    assert result.exit_code == 0, result.output
    assert '"label": "class-2"' in result.output


def test_monte_carlo_batch_size_comes_from_settings(runner, tmp_path):
    settings = tmp_path / "settings.yml"
    settings.write_text("monte_carlo_runs: 3\nprogress: false\n")
    out = tmp_path / "report.json"
    result = runner.invoke(
        cli,
        ["--settings", str(settings), "simulate", "--init", "one", "--seed", "4", "--steps", "2", "--radius", "2",
         "--monte-carlo", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["n_runs"] == 3
    assert report["horizon"] == 2


def test_one_step_law(runner, tmp_path):
    out = tmp_path / "law.json"
    result = runner.invoke(cli, ["simulate", "--init", "one", "--law", "[[2, 0], [1, 0]]", "--out", str(out)])
    assert result.exit_code == 0, result.output
    law = json.loads(out.read_text())
    assert law["Y"] == [[1, 0], [2, 0]]
    assert {tuple(e["assignment"]): e["exact"] for e in law["law"]} == {(0, 0): "3/4", (1, 0): "1/4"}


def test_law_respects_the_enumeration_limit(runner, tmp_path):
    settings = tmp_path / "settings.yml"
    settings.write_text("enumeration_limit: 1\n")
    result = runner.invoke(
        cli, ["--settings", str(settings), "simulate", "--init", "one", "--law", "[[1, 0], [2, 0]]"]
    )
    assert result.exit_code == 2
    assert '"error": "TooLarge"' in result.output
    result = runner.invoke(cli, ["--settings", str(settings), "simulate", "--init", "one", "--law", "[[1, 0]]"])
    assert result.exit_code == 0, result.output


def test_contagion_threshold(runner, tmp_path):
    out = tmp_path / "estimate.json"
    result = runner.invoke(
        cli,
        ["contagion", "--net", "z2-l1", "--grid", "1/4,1/2", "--max-side", "2", "--radius", "3", "--steps", "20",
         "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    estimate = json.loads(out.read_text())
    assert estimate["estimate"] == "1/4"
    assert estimate["morris_violation"] is False


def test_record_scenario(tmp_path):
    from utils.generate_scenario import record_scenario

    path = record_scenario(
        "All Active", "Everything active is class-1",
        ["classify", "--init", "full"], ['"label": "class-1"'], directory=tmp_path,
    )
    assert path.name == "test_all_active.yml"
    assert path.read_text().startswith("# Everything active is class-1\n")
    replay = load_test_data("all_active", directory=tmp_path)
    assert replay["args"] == ["classify", "--init", "full"]
    assert replay["exit_code"] == 0


def test_incomplete_scenario_is_skipped(tmp_path):
    (tmp_path / "test_partial.yml").write_text("description: no args\n")
    assert load_test_data("partial", directory=tmp_path) == {}
    assert load_test_data("absent", directory=tmp_path) == {}
