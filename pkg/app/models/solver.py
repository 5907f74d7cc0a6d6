"""
Dataclasses do motor não linear: potencial, configuração, séries e resultados.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import DomainRejection
from app.models.grid import Field

POTENTIAL_KINDS = ("harmonic", "free", "bounded", "stark")
STATUSES = ("completed", "blowup_detected", "step_underflow", "resolution_lost")
SERIES_COLUMNS = (
    "t",
    "mass",
    "energy",
    "e_delta",
    "sigma_norm",
    "sup_norm",
    "virial_f",
    "strichartz_cum",
)


def critical_power(d: int) -> float:
    """Potência padrão: 4/(d-2) em d >= 3, 4 em d = 1, 2."""
    return 4.0 / (d - 2) if d >= 3 else 4.0


def strichartz_exponent(d: int, p: Optional[float] = None) -> float:
    """Expoente espaço-temporal p(d+2)/2 (= 2(d+2)/(d-2) no caso crítico)."""
    power = critical_power(d) if p is None else p
    return power * (d + 2) / 2.0


@dataclass(frozen=True)
class Potential:
    """Potencial externo: harmônico, livre, limitado (seno truncado) ou Stark."""

    kind: str = "harmonic"
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    amplitude: float = 1.0
    radius: Optional[float] = None
    stark_field: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise DomainRejection(f"Potencial desconhecido: {self.kind}", {"kind": self.kind})
        if self.kind == "stark" and not self.stark_field:
            raise DomainRejection("Potencial de Stark exige o vetor de campo E")

    @classmethod
    def capped_sin(cls, amplitude: float = 1.0, radius: Optional[float] = None) -> "Potential":
        return cls(kind="bounded", amplitude=amplitude, radius=radius)

    @classmethod
    def stark(cls, stark_field) -> "Potential":
        return cls(kind="stark", stark_field=tuple(float(e) for e in np.atleast_1d(stark_field)))

    @property
    def is_harmonic(self) -> bool:
        return self.kind == "harmonic"

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "kind": self.kind,
            "amplitude": self.amplitude,
            "radius": self.radius,
            "stark_field": list(self.stark_field),
            "sampled": self.values is not None,
        }


@dataclass(frozen=True)
class SolverConfig:
    """Parâmetros da evolução não linear."""

    mu: int = 1
    p: float = 4.0
    dt: float = 1e-3
    t_end: float = 1.0
    order: int = 2
    potential: Potential = field(default_factory=Potential)
    nonlinear_scale: float = 1.0
    adaptive: bool = True
    energy_tol: float = settings.ENERGY_DEFECT_TOL
    tail_tol: float = settings.TAIL_FRACTION_TOL
    grad_factor: float = settings.BLOWUP_GRAD_FACTOR
    dt_min: float = 1e-9
    picard_tol: float = 1e-10
    picard_max: int = 50
    picard_nodes: int = 32
    snapshot_interval: Optional[float] = None

    def __post_init__(self):
        if self.mu not in (-1, 0, 1):
            raise DomainRejection(f"mu deve ser -1, 0 ou 1: {self.mu}", {"mu": self.mu})
        if not self.p > 0:
            raise DomainRejection(f"p deve ser positivo: {self.p}", {"p": self.p})
        if not self.dt > 0:
            raise DomainRejection(f"dt deve ser positivo: {self.dt}", {"dt": self.dt})
        if not self.t_end > 0:
            raise DomainRejection(f"t_end deve ser positivo: {self.t_end}", {"t_end": self.t_end})
        if self.order not in (1, 2):
            raise DomainRejection(f"Ordem de splitting inválida: {self.order}")
        if self.snapshot_interval is not None and not self.snapshot_interval > 0:
            raise DomainRejection("snapshot_interval deve ser positivo")

    @property
    def coupling(self) -> float:
        """Coeficiente efetivo mu * escala do termo não linear."""
        return self.mu * self.nonlinear_scale

    @property
    def focusing(self) -> bool:
        return self.mu < 0

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "mu": self.mu,
            "p": self.p,
            "dt": self.dt,
            "t_end": self.t_end,
            "order": self.order,
            "potential": self.potential.to_dict(),
            "nonlinear_scale": self.nonlinear_scale,
            "adaptive": self.adaptive,
            "energy_tol": self.energy_tol,
            "tail_tol": self.tail_tol,
            "grad_factor": self.grad_factor,
            "dt_min": self.dt_min,
            "snapshot_interval": self.snapshot_interval,
        }


@dataclass(frozen=True)
class DiagnosticsRow:
    """Uma linha da série de diagnósticos."""

    t: float
    mass: float
    energy: float
    e_delta: float
    sigma_norm: float
    sup_norm: float
    virial_f: float
    strichartz_cum: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, column) for column in SERIES_COLUMNS)

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return dict(zip(SERIES_COLUMNS, self.as_tuple()))


@dataclass
class DiagnosticsSeries:
    """Registros por passo de massa, energia, norma Sigma, virial e Strichartz."""

    rows: List[DiagnosticsRow] = field(default_factory=list)

    def append(self, row: DiagnosticsRow) -> None:
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        if name not in SERIES_COLUMNS:
            raise DomainRejection(f"Coluna desconhecida: {name}")
        return np.array([getattr(row, name) for row in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def __len__(self) -> int:
        return len(self.rows)

    def validate(self) -> None:
        """t estritamente crescente e strichartz_cum não decrescente."""
        if len(self.rows) < 2:
            return
        if np.any(np.diff(self.times) <= 0):
            raise DomainRejection("Tempos da série não são estritamente crescentes")
        if np.any(np.diff(self.column("strichartz_cum")) < 0):
            raise DomainRejection("strichartz_cum decrescente")

    def relative_drift(self, name: str) -> float:
        """max |q(t) - q(0)| / |q(0)|."""
        values = self.column(name)
        reference = abs(values[0]) if values[0] != 0 else 1.0
        return float(np.max(np.abs(values - values[0])) / reference)

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {"columns": list(SERIES_COLUMNS), "rows": [row.as_tuple() for row in self.rows]}


@dataclass
class Trajectory:
    """Campos amostrados em tempos crescentes."""

    times: List[float] = field(default_factory=list)
    fields: List[Field] = field(default_factory=list)

    def append(self, t: float, f: Field) -> None:
        self.times.append(float(t))
        self.fields.append(f)

    def __len__(self) -> int:
        return len(self.times)

    def spacing(self, rtol: float = 1e-8) -> float:
        """
        Passo uniforme da trajetória.

        Raises:
            DomainRejection: Se a amostragem não for uniforme
        """
        if len(self.times) < 2:
            return 0.0
        steps = np.diff(np.asarray(self.times))
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > rtol * abs(steps[0]):
            raise DomainRejection("Amostragem temporal não uniforme", {"steps": steps.tolist()})
        return float(steps[0])


@dataclass
class EvolutionResult:
    """Resultado de uma evolução."""

    final: Field
    series: DiagnosticsSeries
    status: str
    t_final: float
    steps: int = 0
    rejected_steps: int = 0
    dt_final: float = 0.0
    reason: Optional[str] = None
    trajectory: Optional[Trajectory] = None

    @property
    def blowup(self) -> bool:
        return self.status == "blowup_detected"

    def blowup_report(self) -> Optional[dict]:
        if not self.blowup:
            return None
        return {"t": self.t_final, "reason": self.reason, "dt": self.dt_final}

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "status": self.status,
            "t_final": self.t_final,
            "steps": self.steps,
            "rejected_steps": self.rejected_steps,
            "dt_final": self.dt_final,
            "reason": self.reason,
            "blowup": self.blowup_report(),
            "snapshots": len(self.trajectory) if self.trajectory else 0,
        }
