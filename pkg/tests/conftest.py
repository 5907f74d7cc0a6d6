"""
Fixtures compartilhadas: grades, campos de referência e ambiente isolado de execução.
"""

import numpy as np
import pytest

from app.core import database
from app.core.config import settings
from app.models.grid import Field, Grid


def gaussian(grid: Grid, width: float = 1.0, center=None, amplitude: float = 1.0) -> Field:
    """amplitude * exp(-|x - center|^2 / (2 width^2))."""
    c = np.zeros(grid.d) if center is None else np.atleast_1d(np.asarray(center, float))
    r2 = sum((x - a) ** 2 for x, a in zip(grid.coords, c))
    return Field(grid, amplitude * np.exp(-0.5 * r2 / width**2))


def h0(grid: Grid) -> Field:
    """Estado fundamental normalizado pi^(-d/4) exp(-|x|^2/2)."""
    return Field(grid, np.pi ** (-grid.d / 4.0) * np.exp(-0.5 * grid.r2))


def random_smooth(grid: Grid, seed: int, modes: int = 6) -> Field:
    """Combinação aleatória de gaussianas moduladas (banda limitada na prática)."""
    rng = np.random.default_rng(seed)
    values = np.zeros(grid.shape, dtype=np.complex128)
    for _ in range(modes):
        center = rng.uniform(-1.5, 1.5, grid.d)
        width = rng.uniform(0.6, 1.3)
        momentum = rng.uniform(-1.5, 1.5, grid.d)
        weight = rng.normal() + 1j * rng.normal()
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, center))
        phase = sum(k * x for k, x in zip(momentum, grid.coords))
        values += weight * np.exp(-0.5 * r2 / width**2 + 1j * phase)
    return Field(grid, values)


def relative_l2(a: Field, b: Field) -> float:
    diff = np.sqrt(np.sum(np.abs(a.values - b.values) ** 2))
    return float(diff / max(np.sqrt(np.sum(np.abs(b.values) ** 2)), 1e-300))


@pytest.fixture
def line_grid() -> Grid:
    return Grid(d=1, L=16.0, n=256)


@pytest.fixture
def cube_grid() -> Grid:
    return Grid(d=3, L=12.0, n=64)


@pytest.fixture
def isolated_env(tmp_path, monkeypatch):
    """Banco, logs e execuções num diretório temporário."""
    monkeypatch.setattr(settings, "DB_PATH", str(tmp_path / "runs.db"))
    monkeypatch.setattr(settings, "RUNS_DIR", str(tmp_path / "runs"))
    monkeypatch.setattr(settings, "LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setattr(database, "db", database.Database(str(tmp_path / "runs.db")))
    return tmp_path
