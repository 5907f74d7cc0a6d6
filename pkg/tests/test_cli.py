"""
Testes da CLI: códigos de saída, artefatos gravados e registro das execuções.
"""

import json

import numpy as np
import pytest

from app.cli import EXIT_BAD_INPUT, EXIT_NUMERICAL, EXIT_OK, run_cli
from app.core.field_io import read_field, write_field
from app.services import diagnostics, run_manager
from tests.conftest import h0, relative_l2


def _last_payload(capsys) -> dict:
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def _write_config(path, payload: dict) -> str:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


EVOLVE_CONFIG = {
    "grid": {"d": 1, "L": 16.0, "n": 256},
    "initial": {"kind": "hermite", "mode": [0]},
    "solver": {"mu": 1, "p": 4.0, "dt": 0.01, "t_end": 0.1, "snapshot_interval": 0.01},
    "diagnostics": {"checkpoint_every": 5, "local_smoothing": True},
}


class TestSchemaAndValidation:
    def test_schema(self, isolated_env, capsys):
        assert run_cli(["schema"]) == EXIT_OK
        schema = json.loads(capsys.readouterr().out)
        assert "solver" in schema["properties"]

    def test_invalid_config_reports_location(self, isolated_env, capsys):
        path = _write_config(isolated_env / "bad.json", {"solver": {"mu": 5}})
        assert run_cli(["evolve", "--config", path]) == EXIT_BAD_INPUT
        assert "solver.mu" in capsys.readouterr().err

    def test_missing_config(self, isolated_env):
        path = str(isolated_env / "absent.json")
        assert run_cli(["evolve", "--config", path]) == EXIT_BAD_INPUT

    def test_missing_input_field(self, isolated_env, capsys):
        out = isolated_env / "out" / "f.nlsh"
        code = run_cli(["propagate", "--input", "absent.nlsh", "--t", "1.0", "--out", str(out)])
        assert code == EXIT_BAD_INPUT
        assert (out.parent / run_manager.FAILURE_FILE).exists()


class TestEvolve:
    def test_writes_artifacts(self, isolated_env, capsys):
        path = _write_config(isolated_env / "evolve.json", EVOLVE_CONFIG)
        out = isolated_env / "evolve"
        assert run_cli(["evolve", "--config", path, "--out", str(out)]) == EXIT_OK
        payload = _last_payload(capsys)
        assert payload["status"] == "completed"

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "evolve"
        assert manifest["domain_checks"]["u0"]["resolution_ok"]
        rows = diagnostics.read_series_csv(out / "series.csv")
        assert rows[0]["t"] == 0.0
        assert read_field(out / "final.nlsh").grid.n == 256
        assert len(list((out / "checkpoints").glob("*.nlsh"))) == 3

        report = json.loads((out / "report.json").read_text())
        assert report["virial"] is not None
        assert report["local_smoothing"]["ratio"] < 1.0

        run = run_manager.get_run(payload["run_id"])
        assert run["status"] == "completed"
        assert run["exit_code"] == 0

    def test_under_resolved_data_fails_numerically(self, isolated_env, capsys):
        config = dict(EVOLVE_CONFIG)
        config["initial"] = {"kind": "gaussian", "width": 0.15}
        config["solver"] = {"mu": 1, "p": 2.0, "dt": 0.01, "t_end": 1.0, "adaptive": False}
        path = _write_config(isolated_env / "rough.json", config)
        out = isolated_env / "rough"
        assert run_cli(["evolve", "--config", path, "--out", str(out)]) == EXIT_NUMERICAL
        failure = json.loads((out / run_manager.FAILURE_FILE).read_text())
        assert failure["details"]["status"] == "resolution_lost"

    def test_blowup_forces_focusing(self, isolated_env, capsys):
        config = {
            "grid": {"d": 1, "L": 16.0, "n": 256},
            "initial": {"kind": "gaussian", "width": 1.0},
            "solver": {"mu": 1, "p": 4.0, "dt": 1e-3, "t_end": 0.1},
        }
        path = _write_config(isolated_env / "blowup.json", config)
        out = isolated_env / "blowup"
        assert run_cli(["blowup", "--config", path, "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "blowup.json").read_text())
        assert report["trapping"] is None
        assert report["blowup"] is None
        assert len(report["virial"]["times"]) == 21
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["solver"]["mu"] == -1


class TestPropagate:
    def test_full_period_in_three_dimensions(self, isolated_env, capsys, cube_grid):
        source = write_field(h0(cube_grid), isolated_env / "h0.nlsh")
        target = isolated_env / "out" / "h0_2pi.nlsh"
        args = ["propagate", "--input", str(source), "--t", str(2 * np.pi), "--out", str(target)]
        assert run_cli(args) == EXIT_OK
        payload = _last_payload(capsys)
        assert payload["max_deviation"] < 1e-10
        assert payload["l2_drift"] < 1e-12
        assert relative_l2(read_field(target), h0(cube_grid) * -1.0) < 1e-10

    def test_generic_time_has_no_deviation(self, isolated_env, capsys, line_grid):
        source = write_field(h0(line_grid), isolated_env / "h0.nlsh")
        target = isolated_env / "out" / "h0_1.nlsh"
        args = ["propagate", "--input", str(source), "--t", "1.0", "--out", str(target)]
        assert run_cli(args) == EXIT_OK
        assert _last_payload(capsys)["max_deviation"] is None


class TestFixtureAndDecompose:
    def test_recovers_planted_bubbles(self, isolated_env, capsys):
        fixture = isolated_env / "fixture" / "two.nlsh"
        args = ["fixture", "--out", str(fixture), "--n", "2048", "--N", "16", "--separation", "8"]
        assert run_cli(args) == EXIT_OK
        frames = json.loads(fixture.with_suffix(".json").read_text())["frames"]
        assert [frame["x0"] for frame in frames] == [[-4.0], [4.0]]
        capsys.readouterr()

        out = isolated_env / "decompose"
        args = ["decompose", "--input", str(fixture), "--levels", "2", "--out", str(out)]
        assert run_cli(args) == EXIT_OK
        payload = _last_payload(capsys)
        assert payload["profiles"] >= 1
        report = json.loads((out / "decomposition.json").read_text())
        assert len(report["profiles"]) == payload["profiles"]
        assert (out / "remainder.nlsh").exists()
        assert (out / "profiles" / "profile_00.nlsh").exists()


class TestVerifyAndBench:
    def test_verify_core(self, isolated_env, capsys):
        out = isolated_env / "verify"
        assert run_cli(["verify", "--suite", "core", "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "verify.json").read_text())
        assert report["passed"]
        assert _last_payload(capsys)["failures"] == []

    def test_bench_table(self, isolated_env, capsys):
        out = isolated_env / "bench"
        args = ["bench", "--sizes", "64,128", "--repeats", "1", "--out", str(out)]
        assert run_cli(args) == EXIT_OK
        rows = json.loads((out / "bench.json").read_text())["rows"]
        assert [row["n"] for row in rows] == [64, 128]
        assert all(row["lens"] > 0 for row in rows)

    def test_runs_are_listed(self, isolated_env, capsys):
        run_cli(["bench", "--sizes", "64", "--repeats", "1", "--out", str(isolated_env / "b")])
        runs = run_manager.list_runs(command="bench")
        assert len(runs) == 1
        assert runs[0]["summary"] == {"sizes": [64]}


@pytest.mark.parametrize("argv", [["evolve"], ["verify", "--suite", "unknown"]])
def test_argparse_errors_exit_two(argv, isolated_env):
    with pytest.raises(SystemExit) as info:
        run_cli(argv)
    assert info.value.code == 2
