import csv
import json
from pathlib import Path

import pytest

from hardylab.cli import main

CONFIGS = sorted((Path(__file__).resolve().parent.parent / "configs").glob("*.json"))

FREE = {"name": "free", "kind": "evolve", "grid": {"half_width": 20, "points": 1024},
        "flow": {"A": 0, "B": 1}, "initial": {"c": 1.0}, "weight": {"kind": "StaticGaussian", "gamma": 0.05},
        "times": {"start": 0, "stop": 1, "count": 5}}

SWEEP = {"name": "sweep", "kind": "carleman", "seed": 0,
         "params": {"operators": ["schrodinger"], "n_bumps": 4, "mus": [1.0], "epss": [0.5, 1.0], "Rs": [1.0, 5.0]}}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_shipped_configs_exist():
    assert len(CONFIGS) >= 8


@pytest.mark.parametrize("config", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_pass(config, tmp_path, capsys):
    assert main(["run", str(config), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    summary = json.loads(next(tmp_path.glob("*_summary.json")).read_text())
    assert summary["passed"] is True


def test_negative_gamma_is_a_config_error(tmp_path, capsys):
    bad = dict(FREE, weight={"kind": "StaticGaussian", "gamma": -1.0})
    assert main(["run", write(tmp_path, bad), "--out", str(tmp_path)]) == 2
    assert "ParameterOutOfRange: weight.gamma" in capsys.readouterr().err


@pytest.mark.parametrize("change", [{"kind": "nonsense"}, {"grid": {"half_width": 20, "points": 100}},
                                    {"times": {"start": 0, "stop": 1, "count": 1}}, {"flow": {"A": -1, "B": 0}}])
def test_invalid_configs_exit_2(tmp_path, change):
    assert main(["run", write(tmp_path, dict(FREE, **change)), "--out", str(tmp_path)]) == 2


def test_missing_and_malformed_files_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["run", str(broken), "--out", str(tmp_path)]) == 2


def test_subcommand_must_match_kind(tmp_path, capsys):
    assert main(["carleman", write(tmp_path, FREE), "--out", str(tmp_path)]) == 2
    assert "kind" in capsys.readouterr().err
    assert main(["evolve", write(tmp_path, FREE), "--out", str(tmp_path)]) == 0


def test_unwritable_output_exits_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", write(tmp_path, FREE), "--out", str(blocker)]) == 2


def test_failed_check_exits_1(tmp_path, capsys):
    # The weight outgrows the spreading Gaussian, so H(t) is infinite after t=0.
    diverging = dict(FREE, kind="convexity", weight={"kind": "StaticGaussian", "gamma": 0.9},
                     times={"start": 0, "stop": 1, "count": 11})
    assert main(["run", write(tmp_path, diverging), "--out", str(tmp_path)]) == 1
    assert "FAIL [convexity]" in capsys.readouterr().out


def test_report_lines(tmp_path, capsys):
    main(["run", write(tmp_path, FREE), "--out", str(tmp_path)])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("PASS [propagator] closed-form agreement")
    assert any(line.startswith("wrote ") and line.endswith("free_summary.json") for line in lines)


def test_sweep_csv_shape_and_plotdata(tmp_path):
    assert main(["carleman", write(tmp_path, SWEEP), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "sweep_sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["bump", "mu", "eps", "R", "operator", "lhs", "rhs", "margin", "pass"]
    assert len(rows) == 1 + 4 * 1 * 2 * 2
    with open(tmp_path / "sweep_plot_margin_heat.csv") as fh:
        heat = list(csv.reader(fh))
    assert heat[0] == ["operator", "R", "mu", "eps", "min_margin_over_rhs"]
    assert len(heat) == 1 + 4


def _sweep_files(tmp_path, monkeypatch, seed, tag):
    monkeypatch.setenv("HARDYLAB_SEED", str(seed))
    out = tmp_path / tag
    assert main(["run", write(tmp_path, SWEEP), "--out", str(out), "--threads", "2"]) == 0
    summary = json.loads((out / "sweep_summary.json").read_text())
    summary.pop("runtimes")
    return (out / "sweep_sweep.csv").read_bytes(), summary


def test_seed_override_is_deterministic(tmp_path, monkeypatch):
    first = _sweep_files(tmp_path, monkeypatch, 7, "a")
    second = _sweep_files(tmp_path, monkeypatch, 7, "b")
    other = _sweep_files(tmp_path, monkeypatch, 8, "c")
    assert first == second
    assert first[1]["seed"] == 7
    assert other[0] != first[0]


def test_bad_seed_override_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv("HARDYLAB_SEED", "seven")
    assert main(["run", write(tmp_path, SWEEP), "--out", str(tmp_path)]) == 2


def test_acceptance_suite_subset(tmp_path, capsys):
    cfg = {"name": "acc", "kind": "acceptance-suite", "params": {"criteria": [1, "semigroup-identities"]}}
    code = main(["acceptance-suite", write(tmp_path, cfg), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0, out
    summary = json.loads((tmp_path / "acc_summary.json").read_text())
    assert summary["passed"] is True
