"""
Configurações da aplicação carregadas a partir do arquivo .env.

Todas as variáveis têm valor padrão para que a CLI e os testes rodem sem .env;
o arquivo .env.example documenta cada uma.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Configurações do NLS Harmônico."""

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=False, extra="ignore"
    )

    # Configurações da API
    API_HOST: str = "127.0.0.1"
    API_PORT: int = 8000

    # Registro de execuções (SQLite) e saídas
    DB_PATH: str = "data/runs.db"
    RUNS_DIR: str = "runs"

    # Logging
    LOG_DIR: str = "logs"
    LOG_LEVEL: str = "INFO"

    # Paralelismo interno das FFTs (1 mantém reduções determinísticas)
    FFT_WORKERS: int = 1

    # Limiares numéricos
    BLOWUP_GRAD_FACTOR: float = 100.0
    ENERGY_DEFECT_TOL: float = 1e-6
    TAIL_FRACTION_TOL: float = 1e-6
    BOUNDARY_RATIO_TOL: float = 1e-8
    FRAME_ORTHOGONALITY_THRESHOLD: float = 64.0


# Instância global de configurações
settings = Settings()
