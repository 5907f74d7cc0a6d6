"""
Registro de execuções da CLI em SQLite.

IMPORTANTE: Não usar ORM (SQLAlchemy). Apenas SQL puro.
SEMPRE usar 'with db.get_connection()' para transações.
"""

import sqlite3
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.core.config import settings

logger = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).parent.parent.parent / "schema.sql"


class Database:
    """Tabela `runs`: uma linha por execução da CLI, do registro ao término."""

    def __init__(self, db_path: str):
        """
        O schema é aplicado na primeira conexão; importar o módulo não toca o disco.

        Args:
            db_path: Caminho para o arquivo do banco SQLite
        """
        self.db_path = db_path
        self._ready = False

    def _prepare(self) -> None:
        if not SCHEMA_PATH.exists():
            logger.error(f"Arquivo schema.sql não encontrado em: {SCHEMA_PATH}")
            raise FileNotFoundError(f"Schema SQL não encontrado: {SCHEMA_PATH}")
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        conn = sqlite3.connect(self.db_path)
        try:
            conn.executescript(SCHEMA_PATH.read_text(encoding="utf-8"))
            conn.commit()
        finally:
            conn.close()
        logger.info(f"Registro de execuções pronto em: {self.db_path}")

    @contextmanager
    def get_connection(self):
        """
        Context manager para obter conexão com o banco.

        Uso:
            with db.get_connection() as conn:
                conn.execute("UPDATE runs SET ...", params)
                conn.commit()
        """
        if not self._ready:
            self._prepare()
            self._ready = True
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        try:
            yield conn
        except Exception as e:
            conn.rollback()
            logger.error(f"Erro na transação do registro de execuções: {e}")
            raise
        finally:
            conn.close()

    def insert_run(self, run_id: str, command: str, config_hash: str, output_dir: str) -> int:
        """Cria a linha da execução com status 'running'; retorna o id."""
        with self.get_connection() as conn:
            cursor = conn.execute(
                """
                INSERT INTO runs (run_id, command, config_hash, status, output_dir)
                VALUES (?, ?, ?, 'running', ?)
                """,
                (run_id, command, config_hash, output_dir),
            )
            conn.commit()
            return cursor.lastrowid

    def close_run(self, run_id: str, status: str, exit_code: int, summary: str) -> bool:
        """
        Grava status final, código de saída e resumo (JSON) com o horário de término.

        Returns:
            False se o run_id não estiver registrado
        """
        with self.get_connection() as conn:
            cursor = conn.execute(
                """
                UPDATE runs
                SET status = ?, exit_code = ?, finished_at = CURRENT_TIMESTAMP, summary = ?
                WHERE run_id = ?
                """,
                (status, exit_code, summary, run_id),
            )
            conn.commit()
            return cursor.rowcount > 0

    def fetch_run(self, run_id: str) -> Optional[Dict[str, Any]]:
        with self.get_connection() as conn:
            row = conn.execute("SELECT * FROM runs WHERE run_id = ?", (run_id,)).fetchone()
        return dict(row) if row else None

    def fetch_runs(
        self, status: Optional[str] = None, command: Optional[str] = None, limit: int = 100
    ) -> List[Dict[str, Any]]:
        """Execuções filtradas por status e subcomando, mais recentes primeiro."""
        conditions = []
        params: List[Any] = []
        if status:
            conditions.append("status = ?")
            params.append(status)
        if command:
            conditions.append("command = ?")
            params.append(command)
        where_clause = " AND ".join(conditions) if conditions else "1=1"
        params.append(int(limit))
        with self.get_connection() as conn:
            rows = conn.execute(
                f"SELECT * FROM runs WHERE {where_clause} ORDER BY id DESC LIMIT ?",
                tuple(params),
            ).fetchall()
        return [dict(row) for row in rows]

    def count_runs(self) -> Dict[str, Any]:
        """Total de execuções e contagens agrupadas por status e por subcomando."""
        with self.get_connection() as conn:
            total = conn.execute("SELECT COUNT(*) FROM runs").fetchone()[0]
            by_status = conn.execute(
                "SELECT status, COUNT(*) FROM runs GROUP BY status ORDER BY status"
            ).fetchall()
            by_command = conn.execute(
                "SELECT command, COUNT(*) FROM runs GROUP BY command ORDER BY command"
            ).fetchall()
        return {
            "total_runs": total,
            "by_status": {row[0]: row[1] for row in by_status},
            "by_command": {row[0]: row[1] for row in by_command},
        }


# Instância global do registro
db = Database(settings.DB_PATH)
