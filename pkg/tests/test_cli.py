import json

import pytest
from click.testing import CliRunner

from app.main import cli
from app.utils.export import read_csv
from tests.conftest import GRAPH_PATH, MODEL_PATH, SCENARIO_PATH


@pytest.fixture
def runner():
    return CliRunner()


def base_args(command):
    return [command, "--model", str(MODEL_PATH), "--graph", str(GRAPH_PATH)]


@pytest.fixture
def gains_file(tmp_path, runner):
    """EEt 形式的设计，γ 取大值保证可行"""
    path = tmp_path / "gains.json"
    result = runner.invoke(cli, base_args("design") + ["--gamma", "1e6", "--out", str(path)])
    assert result.exit_code == 0, result.output
    return path


def test_design_example(runner):
    result = runner.invoke(cli, base_args("design") + ["--gamma", "17", "--noise-form", "EtE"])
    assert result.exit_code == 0, result.output
    assert "bound = 16.84" in result.output
    assert "c = 0.0952381 (case_i)" in result.output
    assert "margin = 0.15" in result.output


def test_design_infeasible_gamma(runner):
    result = runner.invoke(cli, base_args("design") + ["--gamma", "16", "--noise-form", "EtE"])
    assert result.exit_code == 2
    assert "bound = 16.84" in result.output


def test_design_case_ii(runner):
    args = base_args("design") + ["--gamma", "1e6", "--noise-form", "EtE", "--c", "0.05", "--case", "ii"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert "(case_ii)" in result.output


def test_design_c_outside_range(runner):
    result = runner.invoke(cli, base_args("design") + ["--gamma", "17", "--c", "0.2"])
    assert result.exit_code == 3


def test_design_writes_certificate(gains_file):
    data = json.loads(gains_file.read_text())
    assert len(data["F"]) == 1 and len(data["F"][0]) == 2
    assert data["certificate"]["feasible"]
    assert data["certificate"]["params"]["noise_form"] == "EEt"


def test_verify_and_cost(runner, gains_file):
    args = base_args("verify") + ["--gains", str(gains_file), "--gamma", "1e6"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert "synchronizing = true" in result.output
    assert "suboptimal = true" in result.output
    assert result.output.count("mode ") == 5

    result = runner.invoke(cli, base_args("cost") + ["--gains", str(gains_file), "--quadrature", "60", "0.01"])
    assert result.exit_code == 0, result.output
    assert "J_2 (lambda = 1)" in result.output
    assert "relative gap" in result.output


def test_verify_zero_gains(runner, tmp_path):
    path = tmp_path / "zero.json"
    path.write_text(json.dumps({"F": [[0.0, 0.0]], "G": [[0.0], [0.0]]}))
    result = runner.invoke(cli, base_args("verify") + ["--gains", str(path)])
    assert result.exit_code == 4
    assert "synchronizing = false" in result.output


def test_verify_gamma_too_small(runner, gains_file):
    result = runner.invoke(cli, base_args("verify") + ["--gains", str(gains_file), "--gamma", "1e-6"])
    assert result.exit_code == 2
    assert "suboptimal = false" in result.output
    assert "J = " in result.output
    assert "bound = " not in result.output


def test_graph_info(runner):
    result = runner.invoke(cli, ["graph-info", "--graph", str(GRAPH_PATH)])
    assert result.exit_code == 0, result.output
    assert "N = 6" in result.output
    assert "connected = true" in result.output
    assert "lambda2 = 1" in result.output
    assert "case_i c range = [0.0952381, 0.125)" in result.output
    assert "case_ii c range = (0, 0.0952381)" in result.output


def test_simulate_writes_csv(runner, gains_file, tmp_path):
    scenario = json.loads(SCENARIO_PATH.read_text())
    scenario.update({"T": 1.0, "dt": 0.01})
    scenario_path = tmp_path / "scenario.json"
    scenario_path.write_text(json.dumps(scenario))
    out = tmp_path / "traj.csv"
    gp = tmp_path / "traj.gp"
    args = base_args("simulate") + ["--gains", str(gains_file), "--scenario", str(scenario_path),
                                    "--out", str(out), "--gnuplot", str(gp)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert "samples = 101" in result.output
    header, rows = read_csv(out)
    assert header[0] == "t"
    assert len(rows) == 101
    assert gp.exists()


def test_sweep_prefers_small_eps(runner):
    args = base_args("sweep") + ["--gamma", "17", "--eps-grid", "1e-3,1e-2", "--noise-form", "EtE"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["certificate"]["params"]["eps"] == pytest.approx(1e-3)


def test_sweep_all_infeasible(runner):
    result = runner.invoke(cli, base_args("sweep") + ["--gamma", "1", "--noise-form", "EtE"])
    assert result.exit_code == 2


def test_single(runner, tmp_path):
    model = {"A": [[-1.0]], "B": [[1.0]], "C1": [[1.0]], "D1": [[0.0, 1.0]], "C2": [[1.0], [0.0]],
             "D2": [[0.0], [1.0]], "E": [[1.0, 0.0]]}
    path = tmp_path / "scalar.json"
    path.write_text(json.dumps(model))
    result = runner.invoke(cli, ["single", "--model", str(path), "--gamma", "100"])
    assert result.exit_code == 0, result.output
    assert "bound = " in result.output
    assert "J = " in result.output


def test_invalid_graph(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"nodes": 3, "edges": [[0, 0, 1.0]]}))
    result = runner.invoke(cli, ["graph-info", "--graph", str(path)])
    assert result.exit_code == 3


def test_disconnected_graph_design(runner, tmp_path):
    path = tmp_path / "split.json"
    path.write_text(json.dumps({"nodes": 4, "edges": [[0, 1, 1.0], [2, 3, 1.0]]}))
    result = runner.invoke(cli, ["design", "--model", str(MODEL_PATH), "--graph", str(path), "--gamma", "17"])
    assert result.exit_code == 3


def test_missing_file(runner, tmp_path):
    result = runner.invoke(cli, ["graph-info", "--graph", str(tmp_path / "nowhere.json")])
    assert result.exit_code == 5


def test_malformed_json(runner, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    result = runner.invoke(cli, ["graph-info", "--graph", str(path)])
    assert result.exit_code == 3


def test_numeric_override_from_env(runner, monkeypatch):
    monkeypatch.setenv("H2NET_NUM_TOL", "riccati.max_iter=oops")
    result = runner.invoke(cli, base_args("design") + ["--gamma", "17"])
    assert result.exit_code == 3
