"""
Configuração de logging compartilhada pela CLI e pela API.
"""

import logging
from pathlib import Path
from typing import Optional

from app.core.config import settings

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: Optional[str] = None, log_dir: Optional[str] = None) -> Path:
    """
    Configura o logging com arquivo e saída padrão.

    Args:
        level: Nível de log (padrão: settings.LOG_LEVEL)
        log_dir: Diretório do arquivo de log (padrão: settings.LOG_DIR)

    Returns:
        Caminho do arquivo de log
    """
    logs_dir = Path(log_dir or settings.LOG_DIR)
    logs_dir.mkdir(parents=True, exist_ok=True)
    log_file_path = logs_dir / "nls_harmonic.log"

    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.FileHandler(log_file_path), logging.StreamHandler()],
    )
    return log_file_path
