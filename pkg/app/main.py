"""
Aplicação FastAPI: painel somente-leitura das execuções do NLS Harmônico.
"""

import logging

from fastapi import FastAPI
from fastapi.responses import HTMLResponse

from app import __version__
from app.api import runs
from app.core.config import settings
from app.core.log_setup import configure_logging

configure_logging()

logger = logging.getLogger(__name__)

# Criar instância FastAPI
app = FastAPI(
    title="NLS Harmônico",
    description="Execuções, séries de diagnóstico e relatórios do motor espectral",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc",
)

# Registrar routers da API
app.include_router(runs.router)


@app.on_event("startup")
async def startup_event():
    """Evento executado ao iniciar a aplicação."""
    logger.info("Iniciando painel do NLS Harmônico...")
    logger.info(f"Banco de dados: {settings.DB_PATH}")
    logger.info(f"Diretório de execuções: {settings.RUNS_DIR}")


@app.get("/", response_class=HTMLResponse)
async def root():
    """Rota raiz - página mínima com links para a API."""
    return """
    <html>
        <head>
            <title>NLS Harmônico</title>
        </head>
        <body>
            <h1>NLS Harmônico</h1>
            <p><a href="/api/runs">Execuções registradas</a></p>
            <p><a href="/docs">Documentação da API</a></p>
        </body>
    </html>
    """


@app.get("/health")
async def health_check():
    """Endpoint de health check."""
    return {"status": "healthy", "service": "nls-harmonic", "version": __version__}
