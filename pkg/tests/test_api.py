"""
Testes do painel HTTP somente-leitura.
"""

import json

import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.models.solver import DiagnosticsRow, DiagnosticsSeries
from app.services import diagnostics, run_manager


@pytest.fixture
def client(isolated_env):
    return TestClient(app)


@pytest.fixture
def finished_run(isolated_env):
    out = isolated_env / "runs" / "evolve-1"
    series = DiagnosticsSeries()
    for t in (0.0, 0.1):
        series.append(DiagnosticsRow(t, 1.0, 0.5, 0.5, 1.0, 0.75, 0.5, t))
    diagnostics.write_series_csv(series, out / "series.csv")
    run_manager.write_json(out / "report.json", {"evolution": {"status": "completed"}})
    run_manager.register_run("evolve-1", "evolve", out, "hash")
    run_manager.finish_run("evolve-1", "completed", 0, {"steps": 2})
    return out


class TestHealth:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_root_links(self, client):
        response = client.get("/")
        assert response.status_code == 200
        assert "/api/runs" in response.text


class TestRuns:
    def test_empty_list(self, client):
        response = client.get("/api/runs")
        assert response.status_code == 200
        assert response.json() == []

    def test_list_and_detail(self, client, finished_run):
        runs = client.get("/api/runs", params={"status": "completed"}).json()
        assert [run["run_id"] for run in runs] == ["evolve-1"]
        detail = client.get("/api/runs/evolve-1").json()
        assert detail["summary"] == {"steps": 2}
        assert detail["exit_code"] == 0

    def test_limit_is_validated(self, client):
        assert client.get("/api/runs", params={"limit": 0}).status_code == 422

    def test_stats(self, client, finished_run):
        run_manager.register_run("verify-1", "verify", finished_run)
        stats = client.get("/api/runs/stats").json()
        assert stats["total_runs"] == 2
        assert stats["by_status"] == {"completed": 1, "running": 1}
        assert stats["by_command"] == {"evolve": 1, "verify": 1}

    def test_unknown_run(self, client):
        assert client.get("/api/runs/absent").status_code == 404


class TestArtifacts:
    def test_diagnostics_rows(self, client, finished_run):
        body = client.get("/api/runs/evolve-1/diagnostics").json()
        assert [row["t"] for row in body["rows"]] == [0.0, 0.1]
        assert body["rows"][1]["strichartz_cum"] == 0.1

    def test_report(self, client, finished_run):
        body = client.get("/api/runs/evolve-1/report").json()
        assert body["file"] == "report.json"
        assert body["report"]["evolution"]["status"] == "completed"

    def test_failure_report_is_served(self, client, isolated_env):
        out = isolated_env / "runs" / "evolve-2"
        run_manager.write_json(out / run_manager.FAILURE_FILE, {"exit_code": 3})
        run_manager.register_run("evolve-2", "evolve", out)
        body = client.get("/api/runs/evolve-2/report").json()
        assert body["file"] == run_manager.FAILURE_FILE

    def test_missing_series(self, client, isolated_env):
        run_manager.register_run("verify-2", "verify", isolated_env / "empty")
        assert client.get("/api/runs/verify-2/diagnostics").status_code == 404
        assert client.get("/api/runs/verify-2/report").status_code == 404

    def test_corrupted_report(self, client, isolated_env):
        out = isolated_env / "runs" / "bench-1"
        out.mkdir(parents=True)
        (out / "bench.json").write_text("{", encoding="utf-8")
        run_manager.register_run("bench-1", "bench", out)
        response = client.get("/api/runs/bench-1/report")
        assert response.status_code == 500
        assert json.loads(response.text)["detail"] == "Relatório corrompido"
