"""
Diagnósticos espaço-temporais: norma de Strichartz, suavização local e séries em CSV.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from app.core.errors import DomainRejection
from app.models.solver import SERIES_COLUMNS, DiagnosticsSeries, Trajectory, strichartz_exponent
from app.services import field_ops

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalSmoothingReport:
    """Lado esquerdo, limitante R(1+|I|) sup||u|| sup||H^(1/2)u|| e a razão."""

    functional: float
    bound: float
    ratio: float
    center: List[float]
    R: float

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "functional": self.functional,
            "bound": self.bound,
            "ratio": self.ratio,
            "center": self.center,
            "R": self.R,
        }


def strichartz_norm(trajectory: Trajectory, p: Optional[float] = None) -> float:
    """
    S_I(u) = integral no tempo (trapézio) de integral |u|^q dx, q = p(d+2)/2.

    Raises:
        DomainRejection: Se a rede temporal não for uniforme
    """
    if len(trajectory) < 2:
        return 0.0
    h = trajectory.spacing()
    grid = trajectory.fields[0].grid
    q = strichartz_exponent(grid.d, p)
    integrand = np.array([field_ops.lp_integral(u, q) for u in trajectory.fields])
    return float(integrate.trapezoid(integrand, dx=h))


def local_smoothing_functional(
    trajectory: Trajectory, center=None, R: float = 1.0
) -> LocalSmoothingReport:
    """
    integral_I integral |grad u|^2 <(x - z)/R>^(-3) dx dt e a razão contra o limitante.

    O campo nulo tem funcional 0 e razão 0.
    """
    if R <= 0:
        raise DomainRejection(f"Escala R deve ser positiva: {R}")
    if len(trajectory) < 2:
        raise DomainRejection("Suavização local exige ao menos 2 tempos")
    h = trajectory.spacing()
    grid = trajectory.fields[0].grid
    z = np.zeros(grid.d) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    if z.size == 1 and grid.d > 1:
        z = np.repeat(z, grid.d)
    distance2 = sum((x - c) ** 2 for x, c in zip(grid.coords, z))
    weight = (1.0 + distance2 / R**2) ** -1.5

    densities = []
    for u in trajectory.fields:
        gradient_density = sum(np.abs(g.values) ** 2 for g in field_ops.gradient(u))
        densities.append(field_ops.integrate(grid, weight * gradient_density))
    functional = float(integrate.trapezoid(np.array(densities), dx=h))

    duration = h * (len(trajectory) - 1)
    mass = max(field_ops.l2_norm(u) for u in trajectory.fields)
    half = max(field_ops.h_half_norm(u) for u in trajectory.fields)
    bound = R * (1.0 + duration) * mass * half
    ratio = functional / bound if bound > 0 else 0.0
    return LocalSmoothingReport(
        functional=functional, bound=bound, ratio=ratio, center=z.tolist(), R=float(R)
    )


def write_series_csv(series: DiagnosticsSeries, path: Union[str, Path]) -> Path:
    """Grava a série em CSV com o cabeçalho SERIES_COLUMNS."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SERIES_COLUMNS)
        for row in series.rows:
            writer.writerow([repr(float(value)) for value in row.as_tuple()])
    logger.debug(f"Série com {len(series)} linhas gravada em {path}")
    return path


def read_series_csv(path: Union[str, Path]) -> List[dict]:
    """Lê a série gravada por write_series_csv."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != SERIES_COLUMNS:
            raise DomainRejection(f"Cabeçalho inesperado em {path}: {reader.fieldnames}")
        return [{key: float(value) for key, value in row.items()} for row in reader]


def lattice_trajectory(fields: Sequence, times: Sequence[float]) -> Trajectory:
    """Trajectory a partir de listas paralelas de campos e tempos."""
    if len(fields) != len(times):
        raise DomainRejection("Listas de campos e tempos com tamanhos diferentes")
    trajectory = Trajectory()
    for t, u in zip(times, fields):
        trajectory.append(t, u)
    return trajectory
