"""
Testes do registro de execuções: manifesto, failure.json e banco SQLite.
"""

import json

import numpy as np
import pytest

from app.core.errors import NumericalFailure
from app.models.grid import Field, Grid
from app.services import run_manager
from tests.conftest import h0


class TestCanonicalJson:
    def test_key_order_does_not_change_hash(self):
        a = {"grid": {"n": 64, "d": 1}, "mu": 1}
        b = {"mu": 1, "grid": {"d": 1, "n": 64}}
        assert run_manager.config_hash(a) == run_manager.config_hash(b)

    def test_numpy_values_are_serialized(self):
        text = run_manager.canonical_json({"x": np.float64(0.5), "v": np.arange(2)})
        assert json.loads(text) == {"v": [0, 1], "x": 0.5}

    def test_unknown_type_rejected(self):
        with pytest.raises(TypeError):
            run_manager.canonical_json({"x": object()})


class TestManifest:
    def test_written_with_domain_checks(self, tmp_path, line_grid):
        config = {"t": 1.0}
        manifest = run_manager.write_manifest(
            tmp_path, "evolve-test", "evolve", config, {"u0": h0(line_grid)}
        )
        on_disk = json.loads((tmp_path / run_manager.MANIFEST_FILE).read_text())
        assert on_disk["config_hash"] == run_manager.config_hash(config)
        assert on_disk["domain_checks"]["u0"]["boundary_ok"]
        assert set(manifest["versions"]) == {"python", "numpy", "scipy", "nls_harmonic"}

    def test_flags_field_that_does_not_decay(self, tmp_path):
        grid = Grid(d=1, L=4.0, n=32)
        manifest = run_manager.write_manifest(
            tmp_path, "run", "evolve", {}, {"u0": Field(grid, np.ones(grid.shape))}
        )
        assert not manifest["domain_checks"]["u0"]["boundary_ok"]

    def test_failure_payload(self, tmp_path):
        error = NumericalFailure("passo rejeitado", {"t": 0.25})
        path = run_manager.write_failure(tmp_path, error, 3)
        payload = json.loads(path.read_text())
        assert payload["exit_code"] == 3
        assert payload["details"] == {"t": 0.25}

    def test_failure_from_plain_exception(self, tmp_path):
        payload = json.loads(run_manager.write_failure(tmp_path, ValueError("x"), 2).read_text())
        assert payload["error"] == "ValueError"
        assert payload["details"] == {}


class TestRunRegistry:
    def test_register_and_finish(self, isolated_env):
        run_manager.register_run("evolve-1", "evolve", isolated_env / "out", "abc")
        run = run_manager.get_run("evolve-1")
        assert run["status"] == "running"
        assert run["summary"] is None

        run_manager.finish_run("evolve-1", "completed", 0, {"steps": 10})
        run = run_manager.get_run("evolve-1")
        assert run["status"] == "completed"
        assert run["exit_code"] == 0
        assert run["summary"] == {"steps": 10}

    def test_list_filters(self, isolated_env):
        run_manager.register_run("evolve-1", "evolve", isolated_env)
        run_manager.register_run("verify-1", "verify", isolated_env)
        run_manager.finish_run("verify-1", "failed", 1)
        assert [run["run_id"] for run in run_manager.list_runs()] == ["verify-1", "evolve-1"]
        assert [run["run_id"] for run in run_manager.list_runs(command="evolve")] == ["evolve-1"]
        assert [run["run_id"] for run in run_manager.list_runs(status="failed")] == ["verify-1"]

    def test_missing_run(self, isolated_env):
        assert run_manager.get_run("absent") is None

    def test_new_run_id_prefix(self):
        assert run_manager.new_run_id("bench").startswith("bench-")
