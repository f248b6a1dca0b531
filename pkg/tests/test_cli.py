import json
import os

import numpy as np
import pytest

from influencegame import ScenarioError
from influencegame.cli import (
    main,
    reference_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from influencegame.fileio import atomic_write_text


def write_scenario(path, document):
    path.write_text(json.dumps(document))
    return str(path)


def single_player_document(cost=0.4, budget=1.0):
    return {
        "network": [[1.0]],
        "schedule": [0.0, 1.0, 2.0],
        "players": [
            {"budget": budget,
             "utility": {"kind": "linear-favor", "rho": [[1.0], [1.0]], "lambda": cost}}
        ],
        "x0": [[0.5]],
        "solver": {"T": 50, "seed": 0},
    }


class TestScenarioRoundTrip:
    def test_reference_scenario_round_trips(self):
        scenario = reference_scenario()
        document = scenario_to_dict(scenario)
        parsed = scenario_from_dict(json.loads(json.dumps(document)))
        assert np.array_equal(parsed.spec.network.adjacency,
                              scenario.spec.network.adjacency)
        assert np.array_equal(parsed.spec.schedule.times, scenario.spec.schedule.times)
        assert np.array_equal(parsed.spec.x0.values, scenario.spec.x0.values)
        assert np.array_equal(parsed.spec.budgets, scenario.spec.budgets)
        for left, right in zip(parsed.spec.utilities, scenario.spec.utilities):
            assert left.kind == right.kind
            assert left.cost_coefficient == right.cost_coefficient
            assert np.array_equal(left.rho, right.rho)
        assert parsed.solver.T == scenario.solver.T
        assert parsed.solver.seed == scenario.solver.seed
        assert parsed.solver.step == scenario.solver.step

    def test_unknown_keys_rejected(self):
        document = single_player_document()
        document["networkx"] = []
        with pytest.raises(ScenarioError, match="networkx"):
            scenario_from_dict(document)

    def test_unknown_nested_keys_rejected(self):
        document = single_player_document()
        document["players"][0]["utility"]["rho_extra"] = 1
        with pytest.raises(ScenarioError):
            scenario_from_dict(document)

    def test_dimension_mismatch_rejected(self):
        document = single_player_document()
        document["x0"] = [[0.5], [0.5]]
        with pytest.raises(ScenarioError):
            scenario_from_dict(document)

    def test_seed_env_override(self, monkeypatch):
        monkeypatch.setenv("INFLUENCE_GAME_SEED", "17")
        assert scenario_from_dict(single_player_document()).solver.seed == 17
        assert reference_scenario().solver.seed == 17


class TestSimulateCommand:
    def test_uniform_start_stays_uniform(self, tmp_path):
        scenario = write_scenario(
            tmp_path / "s.json", scenario_to_dict(reference_scenario())
        )
        plans = tmp_path / "p.json"
        plans.write_text(json.dumps({"plans": [[[0.0] * 3] * 2, [[0.0] * 3] * 2]}))
        out = tmp_path / "traj.csv"
        code = main(["simulate", scenario, str(plans), "--samples", "7",
                     "--out", str(out)])
        assert code == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "time,individual,player,opinion"
        opinions = np.array([float(r.split(",")[3]) for r in rows[1:]])
        np.testing.assert_allclose(opinions, 0.5, atol=1e-12)

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = main(["simulate", str(tmp_path / "absent.json"),
                     str(tmp_path / "p.json"), "--out", str(tmp_path / "o.csv")])
        assert code == 2
        assert "absent.json" in capsys.readouterr().err

    def test_over_budget_plans_exit_3(self, tmp_path, capsys):
        scenario = write_scenario(
            tmp_path / "s.json", scenario_to_dict(reference_scenario())
        )
        plans = tmp_path / "p.json"
        plans.write_text(json.dumps({"plans": [[[2.0] * 3] * 2, [[0.0] * 3] * 2]}))
        code = main(["simulate", scenario, str(plans), "--out", str(tmp_path / "o.csv")])
        assert code == 3
        assert "player 0" in capsys.readouterr().err
        assert not (tmp_path / "o.csv").exists()


class TestSolveCommand:
    def test_scalar_example(self, tmp_path):
        scenario = write_scenario(tmp_path / "s.json", single_player_document())
        out = tmp_path / "report.json"
        assert main(["solve", scenario, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["plan"][0][0] == pytest.approx(0.5, abs=1e-7)
        assert report["objective"] == pytest.approx(0.65, abs=1e-9)

    def test_zero_budget(self, tmp_path):
        scenario = write_scenario(tmp_path / "s.json",
                                  single_player_document(budget=0.0))
        out = tmp_path / "report.json"
        assert main(["solve", scenario, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["plan"] == [[0.0]]

    def test_multiplayer_scenario_exits_4(self, tmp_path, capsys):
        scenario = write_scenario(
            tmp_path / "s.json", scenario_to_dict(reference_scenario())
        )
        assert main(["solve", scenario, "--out", str(tmp_path / "r.json")]) == 4
        assert "equilibrate" in capsys.readouterr().err


class TestEquilibrateCommand:
    def test_builtin_example_writes_outputs(self, tmp_path):
        prefix = str(tmp_path / "run")
        code = main(["equilibrate", "--paper-example", "--T", "10",
                     "--out", prefix])
        assert code == 0
        trace = (tmp_path / "run_trace.csv").read_text()
        result = json.loads((tmp_path / "run_result.json").read_text())
        assert result["iterations"] == 10
        assert len(result["regrets"]) == 2
        assert trace.splitlines()[0].startswith("iteration,player,stage")

    def test_single_iteration(self, tmp_path):
        prefix = str(tmp_path / "one")
        assert main(["equilibrate", "--paper-example", "--T", "1",
                     "--out", prefix]) == 0
        result = json.loads((tmp_path / "one_result.json").read_text())
        assert result["iterations"] == 1
        assert result["exploitability"] > 0.01

    def test_same_seed_byte_identical(self, tmp_path):
        first = str(tmp_path / "a")
        second = str(tmp_path / "b")
        assert main(["equilibrate", "--paper-example", "--T", "8", "--out", first]) == 0
        assert main(["equilibrate", "--paper-example", "--T", "8", "--out", second]) == 0
        assert (tmp_path / "a_trace.csv").read_bytes() == (tmp_path / "b_trace.csv").read_bytes()
        assert (tmp_path / "a_result.json").read_bytes() == (tmp_path / "b_result.json").read_bytes()

    def test_scenario_and_flag_conflict(self, tmp_path):
        scenario = write_scenario(
            tmp_path / "s.json", scenario_to_dict(reference_scenario())
        )
        assert main(["equilibrate", scenario, "--paper-example",
                     "--out", str(tmp_path / "x")]) == 2

    def test_single_player_scenario_exits_4(self, tmp_path):
        scenario = write_scenario(tmp_path / "s.json", single_player_document())
        assert main(["equilibrate", scenario, "--out", str(tmp_path / "x")]) == 4

    def test_complement_utilities_exit_5(self, tmp_path, capsys):
        document = scenario_to_dict(reference_scenario())
        document["players"][1]["utility"]["kind"] = "linear-complement"
        scenario = write_scenario(tmp_path / "s.json", document)
        code = main(["equilibrate", scenario, "--T", "3", "--out", str(tmp_path / "x")])
        assert code == 5
        assert "hypothesis" in capsys.readouterr().err


class TestVerifyCommand:
    def test_gradients_suite_passes(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["verify", "--suite", "gradients", "--seed", "2",
                     "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["passed"] is True
        assert report["suite"] == "gradients"
        printed = json.loads(capsys.readouterr().out)
        assert printed == report

    def test_unknown_suite_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["verify", "--suite", "bogus"])
        assert excinfo.value.code == 2


class TestAtomicWrites:
    def test_overwrite_is_all_or_nothing(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("old")
        atomic_write_text(target, "new contents")
        assert target.read_text() == "new contents"
        assert list(tmp_path.iterdir()) == [target]

    def test_failure_leaves_no_partial_file(self, tmp_path):
        target = tmp_path / "dir-in-the-way"
        target.mkdir()
        with pytest.raises(OSError):
            atomic_write_text(target, "contents")
        assert target.is_dir()
        assert [p.name for p in tmp_path.iterdir()] == ["dir-in-the-way"]
