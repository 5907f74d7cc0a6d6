"""
Gerenciador de execuções da CLI.

Escreve manifesto, relatórios JSON e failure.json no diretório de saída e mantém
o registro de execuções no banco SQLite.
"""

import hashlib
import json
import logging
import platform
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import scipy

from app import __version__
from app.core import database
from app.core.errors import NLSHarmonicError
from app.models.grid import Field
from app.services import field_ops

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
FAILURE_FILE = "failure.json"


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Objeto não serializável: {type(value).__name__}")


def canonical_json(obj: Any) -> str:
    """JSON com chaves ordenadas e separadores compactos."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, default=_json_default
    )


def config_hash(obj: Any) -> str:
    """SHA-256 da forma canônica da configuração."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "nls_harmonic": __version__,
    }


def write_json(path: Union[str, Path], payload: Any) -> Path:
    """Grava um relatório JSON legível (indentado, chaves ordenadas)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def new_run_id(command: str) -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    return f"{command}-{stamp}-{uuid.uuid4().hex[:8]}"


def write_manifest(
    out_dir: Union[str, Path],
    run_id: str,
    command: str,
    config: Dict[str, Any],
    fields: Optional[Dict[str, Field]] = None,
) -> Dict[str, Any]:
    """
    Escreve manifest.json antes de qualquer numérica.

    Args:
        out_dir: Diretório de saída da execução
        run_id: Identificador da execução
        command: Subcomando da CLI
        config: Configuração canônica
        fields: Campos de entrada cujas verificações de domínio entram no manifesto

    Returns:
        Conteúdo do manifesto
    """
    manifest = {
        "run_id": run_id,
        "command": command,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": config,
        "config_hash": config_hash(config),
        "versions": versions(),
        "domain_checks": {name: field_ops.domain_checks(f) for name, f in (fields or {}).items()},
    }
    for name, checks in manifest["domain_checks"].items():
        if not checks["boundary_ok"]:
            logger.warning(f"Campo '{name}' não decai na borda: {checks['boundary_ratio']:.3e}")
        if not checks["resolution_ok"]:
            logger.warning(
                f"Campo '{name}' sub-resolvido: cauda {checks['spectral_tail_fraction']:.3e}"
            )
    write_json(Path(out_dir) / MANIFEST_FILE, manifest)
    logger.info(f"Manifesto da execução {run_id} gravado em {out_dir}")
    return manifest


def write_failure(out_dir: Union[str, Path], error: Exception, exit_code: int) -> Path:
    """Grava failure.json com o tipo do erro, a mensagem e os detalhes."""
    if isinstance(error, NLSHarmonicError):
        payload = error.to_dict()
    else:
        payload = {"error": type(error).__name__, "message": str(error), "details": {}}
    payload["exit_code"] = exit_code
    return write_json(Path(out_dir) / FAILURE_FILE, payload)


def register_run(
    run_id: str, command: str, output_dir: Union[str, Path], digest: str = ""
) -> None:
    """Registra o início de uma execução."""
    try:
        database.db.insert_run(run_id, command, digest, str(output_dir))
    except Exception as e:
        logger.error(f"Erro ao registrar execução {run_id}: {e}")


def finish_run(
    run_id: str, status: str, exit_code: int, summary: Optional[Dict[str, Any]] = None
) -> None:
    """Atualiza status, código de saída e resumo de uma execução."""
    try:
        if not database.db.close_run(run_id, status, exit_code, canonical_json(summary or {})):
            logger.warning(f"Execução {run_id} não registrada; término ignorado")
            return
        logger.info(f"Execução {run_id} finalizada: {status} (saída {exit_code})")
    except Exception as e:
        logger.error(f"Erro ao finalizar execução {run_id}: {e}")


def _decode(row: Optional[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
    if row is None:
        return None
    row = dict(row)
    row["summary"] = json.loads(row["summary"]) if row.get("summary") else None
    return row


def list_runs(
    status: Optional[str] = None, command: Optional[str] = None, limit: int = 100
) -> List[Dict[str, Any]]:
    """Lista execuções registradas, mais recentes primeiro."""
    return [_decode(row) for row in database.db.fetch_runs(status, command, limit)]


def get_run(run_id: str) -> Optional[Dict[str, Any]]:
    return _decode(database.db.fetch_run(run_id))
