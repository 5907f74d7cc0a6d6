"""
Configuração de execução (RunConfig) validada por esquema pydantic.

Chaves desconhecidas são rejeitadas; o esquema publicado é RunConfig.model_json_schema().
"""

from typing import List, Literal, Optional

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict

from app.core.config import settings
from app.core.errors import DomainRejection
from app.core.field_io import read_field
from app.models.grid import Field, Grid
from app.models.solver import Potential, SolverConfig, critical_power
from app.services.hermite import hermite_table
from app.services.variational import ground_state_W


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Spec):
    """Grade [-L, L)^d com n nós por eixo."""

    d: int = pydantic.Field(1, ge=1, le=3)
    L: float = pydantic.Field(16.0, gt=0)
    n: int = pydantic.Field(256, ge=8)

    @pydantic.field_validator("n")
    @classmethod
    def n_power_of_two(cls, n: int) -> int:
        if n & (n - 1) != 0:
            raise ValueError("n deve ser potência de dois")
        return n

    def build(self) -> Grid:
        return Grid(d=self.d, L=self.L, n=self.n)


class PotentialSpec(_Spec):
    """Potencial externo."""

    kind: Literal["harmonic", "free", "bounded", "stark"] = "harmonic"
    amplitude: float = 1.0
    radius: Optional[float] = pydantic.Field(None, gt=0)
    stark_field: List[float] = pydantic.Field(default_factory=list)

    @pydantic.model_validator(mode="after")
    def stark_needs_field(self):
        if self.kind == "stark" and not self.stark_field:
            raise ValueError("potencial stark exige stark_field")
        return self

    def build(self) -> Potential:
        return Potential(
            kind=self.kind,
            amplitude=self.amplitude,
            radius=self.radius,
            stark_field=tuple(self.stark_field),
        )


class InitialDataSpec(_Spec):
    """
    Dado inicial u0.

    kinds:
        gaussian: amplitude * exp(-|x - center|^2 / (2 width^2))
        hermite: amplitude * h_mode (produto tensorial das funções de Hermite)
        ground_state: amplitude * W truncado (d = 3)
        file: campo NLSH1 em path
    """

    kind: Literal["gaussian", "hermite", "ground_state", "file"] = "gaussian"
    amplitude: float = 1.0
    width: float = pydantic.Field(1.0, gt=0)
    center: Optional[List[float]] = None
    mode: Optional[List[int]] = None
    normalization: Literal["intro", "section7"] = "intro"
    taper_radius: Optional[float] = pydantic.Field(None, gt=0)
    taper_width: Optional[float] = pydantic.Field(None, gt=0)
    path: Optional[str] = None

    @pydantic.model_validator(mode="after")
    def file_needs_path(self):
        if self.kind == "file" and not self.path:
            raise ValueError("dado inicial do tipo file exige path")
        if self.mode is not None and any(m < 0 for m in self.mode):
            raise ValueError("índices de modo devem ser não negativos")
        return self

    def build(self, grid: Grid) -> Field:
        """Amostra o dado inicial na grade."""
        if self.kind == "file":
            f = read_field(self.path)
            if f.grid != grid:
                raise DomainRejection(f"Grade do arquivo {f.grid} difere da configurada {grid}")
            return f * self.amplitude
        if self.kind == "ground_state":
            W = ground_state_W(grid, self.normalization, self.taper_radius, self.taper_width)
            return W * self.amplitude
        if self.kind == "hermite":
            mode = list(self.mode or [0] * grid.d)
            if len(mode) != grid.d:
                raise DomainRejection(f"mode com {len(mode)} índices para d={grid.d}")
            table = hermite_table(grid.axis, max(mode))
            values = np.ones(grid.shape)
            for a, m in enumerate(mode):
                shape = [1] * grid.d
                shape[a] = grid.n
                values = values * table[m].reshape(shape)
            return Field(grid, self.amplitude * values)

        center = np.zeros(grid.d) if self.center is None else np.asarray(self.center, float)
        if center.shape != (grid.d,):
            raise DomainRejection(f"center com {center.size} coordenadas para d={grid.d}")
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, center))
        return Field(grid, self.amplitude * np.exp(-0.5 * r2 / self.width**2))


class SolverSpec(_Spec):
    """Parâmetros do integrador (todos os campos de SolverConfig)."""

    mu: Literal[-1, 0, 1] = 1
    p: Optional[float] = pydantic.Field(None, gt=0)
    dt: float = pydantic.Field(1e-3, gt=0)
    t_end: float = pydantic.Field(1.0, gt=0)
    order: Literal[1, 2] = 2
    nonlinear_scale: float = 1.0
    adaptive: bool = True
    energy_tol: float = pydantic.Field(settings.ENERGY_DEFECT_TOL, gt=0)
    tail_tol: float = pydantic.Field(settings.TAIL_FRACTION_TOL, gt=0)
    grad_factor: float = pydantic.Field(settings.BLOWUP_GRAD_FACTOR, gt=1)
    dt_min: float = pydantic.Field(1e-9, gt=0)
    picard_tol: float = pydantic.Field(1e-10, gt=0)
    picard_max: int = pydantic.Field(50, ge=1)
    picard_nodes: int = pydantic.Field(32, ge=2)
    snapshot_interval: Optional[float] = pydantic.Field(None, gt=0)


class DiagnosticsSpec(_Spec):
    """Chaves de diagnóstico e cadência de gravação de estados."""

    series: bool = True
    strichartz: bool = True
    virial: bool = True
    trapping: bool = False
    local_smoothing: bool = False
    smoothing_center: Optional[List[float]] = None
    smoothing_radius: float = pydantic.Field(1.0, gt=0)
    checkpoint_every: int = pydantic.Field(
        0, ge=0, description="Gravar cada k-ésimo instantâneo em NLSH1 (0: apenas o estado final)"
    )


class RunConfig(_Spec):
    """Configuração completa de uma execução da CLI."""

    grid: GridSpec = pydantic.Field(default_factory=GridSpec)
    potential: PotentialSpec = pydantic.Field(default_factory=PotentialSpec)
    initial: InitialDataSpec = pydantic.Field(default_factory=InitialDataSpec)
    solver: SolverSpec = pydantic.Field(default_factory=SolverSpec)
    diagnostics: DiagnosticsSpec = pydantic.Field(default_factory=DiagnosticsSpec)
    output_dir: Optional[str] = None
    suite: Optional[Literal["core", "spectral", "profiles", "all"]] = None

    def solver_config(self) -> SolverConfig:
        """SolverConfig do motor com p padrão da dimensão quando omitido."""
        spec = self.solver
        p = critical_power(self.grid.d) if spec.p is None else spec.p
        return SolverConfig(
            mu=spec.mu,
            p=p,
            dt=spec.dt,
            t_end=spec.t_end,
            order=spec.order,
            potential=self.potential.build(),
            nonlinear_scale=spec.nonlinear_scale,
            adaptive=spec.adaptive,
            energy_tol=spec.energy_tol,
            tail_tol=spec.tail_tol,
            grad_factor=spec.grad_factor,
            dt_min=spec.dt_min,
            picard_tol=spec.picard_tol,
            picard_max=spec.picard_max,
            picard_nodes=spec.picard_nodes,
            snapshot_interval=spec.snapshot_interval,
        )

    def canonical(self) -> dict:
        """Dicionário JSON canônico usado no hash do manifesto."""
        return self.model_dump(mode="json")
