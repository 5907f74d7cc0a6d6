"""
API endpoints somente-leitura para as execuções registradas pela CLI.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from fastapi import APIRouter, HTTPException, Query
from pydantic import BaseModel

from app.core import database
from app.core.errors import DomainRejection
from app.services import diagnostics, run_manager

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/runs", tags=["Runs"])

REPORT_FILES = ("decomposition.json", "blowup.json", "report.json", "verify.json", "bench.json")


class RunResponse(BaseModel):
    """Modelo de resposta para execução."""

    id: int
    run_id: str
    command: str
    config_hash: Optional[str]
    status: str
    exit_code: Optional[int]
    output_dir: str
    started_at: str
    finished_at: Optional[str]
    summary: Optional[Dict[str, Any]]


def _find_run(run_id: str) -> Dict[str, Any]:
    run = run_manager.get_run(run_id)
    if not run:
        raise HTTPException(status_code=404, detail=f"Execução {run_id} não encontrada")
    return run


@router.get("", response_model=List[RunResponse])
async def get_runs(
    status: Optional[str] = Query(
        None, description="Filtrar por status (completed, blowup_detected, failed, etc)"
    ),
    command: Optional[str] = Query(None, description="Filtrar por subcomando"),
    limit: int = Query(100, ge=1, le=1000, description="Número máximo de resultados"),
):
    """
    Lista execuções registradas.

    Args:
        status: Filtro opcional por status
        command: Filtro opcional por subcomando
        limit: Limite de resultados

    Returns:
        Lista de execuções, mais recentes primeiro
    """
    try:
        return run_manager.list_runs(status, command, limit)
    except Exception as e:
        logger.error(f"Erro ao buscar execuções: {e}")
        raise HTTPException(status_code=500, detail="Erro ao buscar execuções")


@router.get("/stats")
async def get_runs_stats():
    """Contagem de execuções por status e por subcomando."""
    try:
        return database.db.count_runs()
    except Exception as e:
        logger.error(f"Erro ao buscar estatísticas de execuções: {e}")
        raise HTTPException(status_code=500, detail="Erro ao buscar estatísticas")


@router.get("/{run_id}", response_model=RunResponse)
async def get_run(run_id: str):
    """Detalhe de uma execução."""
    try:
        return _find_run(run_id)
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Erro ao buscar execução {run_id}: {e}")
        raise HTTPException(status_code=500, detail="Erro ao buscar execução")


@router.get("/{run_id}/diagnostics")
async def get_run_diagnostics(run_id: str):
    """
    Linhas da série de diagnósticos (series.csv) de uma execução.

    Returns:
        Colunas e linhas da série
    """
    run = _find_run(run_id)
    series_path = Path(run["output_dir"]) / "series.csv"
    if not series_path.exists():
        raise HTTPException(status_code=404, detail="Execução sem série de diagnósticos")
    try:
        rows = diagnostics.read_series_csv(series_path)
    except DomainRejection as e:
        logger.error(f"Série inválida em {series_path}: {e}")
        raise HTTPException(status_code=500, detail="Série de diagnósticos inválida")
    return {"run_id": run_id, "rows": rows}


@router.get("/{run_id}/report")
async def get_run_report(run_id: str):
    """Relatório JSON da execução (decomposição, certificado, verificação ou evolução)."""
    run = _find_run(run_id)
    output_dir = Path(run["output_dir"])
    for name in REPORT_FILES + (run_manager.FAILURE_FILE,):
        path = output_dir / name
        if path.exists():
            try:
                with open(path, "r", encoding="utf-8") as f:
                    return {"run_id": run_id, "file": name, "report": json.load(f)}
            except json.JSONDecodeError as e:
                logger.error(f"Relatório corrompido em {path}: {e}")
                raise HTTPException(status_code=500, detail="Relatório corrompido")
    raise HTTPException(status_code=404, detail="Execução sem relatório")
