import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from plaplab.cli import main
from plaplab.experiment import CSV_COLUMNS, ExperimentConfig, run_experiment
from plaplab.fieldio import read_field, write_field
from plaplab.grid import build_grid

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _config(tmp_path, **problem):
    raw = json.loads((CONFIGS / "poisson_sine.json").read_text())
    raw["problem"].update(problem)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def _strip_wall(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


def test_field_roundtrip(tmp_path):
    g = build_grid((-1, 0), (1, 2), 17, 2)
    vals = np.random.default_rng(3).normal(size=g.shape)
    side = write_field(tmp_path / "f", vals, g, "g", p=2.5)
    back, grid, info = read_field(side)
    assert np.array_equal(back, vals) and grid == g
    assert info["meta"] == {"p": 2.5} and info["dims"] == [17, 17]
    raw = np.fromfile(tmp_path / "f.bin", dtype="<f8").reshape(17, 17)
    assert np.array_equal(raw, vals)
    with pytest.raises(ValueError):
        write_field(tmp_path / "bad", vals[:3], g, "g")
    dotted = write_field(tmp_path / "p2_eps0.001_u", vals, g, "u")
    assert dotted.name == "p2_eps0.001_u.json" and (tmp_path / "p2_eps0.001_u.bin").exists()


def test_exponents_command(capsys):
    code = main(["exponents", "--k", "1", "--l", "2", "--n", "3", "--nu", "5", "--p", "2.0",
                 "--cz-model", "const:2"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["q_hat"] == pytest.approx(10.0)
    assert out["p_range"] == pytest.approx([1.5, 2 + 1 / 9])
    assert out["admissible"] is True


def test_exponents_bad_model(capsys):
    assert main(["exponents", "--k", "1", "--l", "2", "--n", "3", "--cz-model", "bogus"]) == 1
    assert "error" in capsys.readouterr().err


def test_oracle_check(capsys):
    assert main(["oracle-check"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_empty_p_list(tmp_path, capsys):
    code = main(["sweep", "--config", str(_config(tmp_path, p=[])), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "p list empty" in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 1


def test_sweep_single_point(tmp_path):
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(CONFIGS / "poisson_sine.json"), "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2
    doc = json.loads((out / "results.json").read_text())
    row = doc["rows"][0]
    assert row["converged"] is True and row["ladder_gap"] <= 0.05
    schema = json.loads(resources.files("plaplab").joinpath("results.schema.json").read_text())
    jsonschema.validate(doc, schema)


def test_solve_then_ladder(tmp_path, capsys):
    out = tmp_path / "o"
    cfg = CONFIGS / "poisson_sine.json"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    dumps = sorted((out / "fields").glob("*_g.json"))
    assert len(dumps) == 1 and len(list((out / "fields").glob("*_u.json"))) == 1
    capsys.readouterr()
    assert main(["ladder", "--field", str(dumps[0]), "--config", str(cfg)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["gap"] <= 0.05 and len(rep["steps"]) >= 1
    report_path = tmp_path / "rep.json"
    u_dump = next((out / "fields").glob("*_u.json"))
    assert main(["ladder", "--field", str(u_dump), "--config", str(cfg), "--out", str(report_path)]) == 0
    assert json.loads(report_path.read_text())["ladder_limit"] == pytest.approx(rep["ladder_limit"])


def test_ladder_missing_settings(tmp_path, capsys):
    g = build_grid((0, 0), (1, 1), 33, 2)
    side = write_field(tmp_path / "g", np.ones(g.shape), g, "g")
    assert main(["ladder", "--field", str(side)]) == 1
    assert "missing" in capsys.readouterr().err


def test_crash_isolation(tmp_path):
    cfg = ExperimentConfig.load(_config(tmp_path, p=[1.9, 2.0], epsilon=[0.0]))
    cfg.grid.resolutions = [33]
    code, rows = run_experiment(cfg, out_dir=tmp_path / "o")
    assert code == 2 and len(rows) == 2
    assert rows[0]["converged"] is False and "InvalidProblem" in rows[0]["error"]
    assert rows[1]["converged"] is True
    text = (tmp_path / "o" / "results.csv").read_text().splitlines()
    assert len(text) == 3 and ",false," in text[1]


def test_parallel_matches_serial(tmp_path):
    cfg = ExperimentConfig.load(_config(tmp_path, p=[1.95, 2.0, 2.05]))
    cfg.grid.resolutions = [33]
    cfg.ladder.steps = 4
    run_experiment(cfg, out_dir=tmp_path / "a", jobs=1)
    run_experiment(cfg, out_dir=tmp_path / "b", jobs=2)
    a = (tmp_path / "a" / "results.csv").read_text()
    b = (tmp_path / "b" / "results.csv").read_text()
    assert _strip_wall(a) == _strip_wall(b)


def test_jobs_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PLAPLAB_JOBS", "2")
    from plaplab import cli
    assert cli._jobs(None) == 2
    assert cli._jobs(3) == 3
    monkeypatch.delenv("PLAPLAB_JOBS")
    assert cli._jobs(None) == 1


def test_power_eps_sweep_config(tmp_path):
    cfg = ExperimentConfig.load(CONFIGS / "power_eps_sweep.json")
    code, rows = run_experiment(cfg, out_dir=tmp_path / "o")
    assert code == 0 and len(rows) == 3
    sups = [r["sup_g"] for r in rows]
    assert (max(sups) - min(sups)) / max(sups) <= 0.10
