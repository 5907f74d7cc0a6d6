"""
Dataclasses da decomposição em perfis: frames, itens, relatórios e trajetórias de bolha.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from app.core.errors import DomainRejection
from app.models.grid import Field

FRAME_KINDS = ("identity", "concentrating")


def _is_dyadic(N: float) -> bool:
    level = int(round(N))
    return abs(level - N) < 1e-12 and level >= 1 and level & (level - 1) == 0


@dataclass(frozen=True)
class Frame:
    """
    Frame aumentado (t, x0, N, N').

    Identity: (0, 0, 1, 1). Concentrating: N >= 2 diádico, N' em [sqrt(N), N]
    ou N' = 1, |x0| <= C N com C registrado em center_bound.
    """

    kind: str
    t: float = 0.0
    x0: Tuple[float, ...] = ()
    N: int = 1
    Nprime: int = 1
    center_bound: float = 0.0

    def __post_init__(self):
        if self.kind not in FRAME_KINDS:
            raise DomainRejection(f"Tipo de frame desconhecido: {self.kind}")
        center = float(np.linalg.norm(self.x0)) if self.x0 else 0.0
        if self.kind == "identity":
            if self.t != 0.0 or center != 0.0 or self.N != 1 or self.Nprime != 1:
                raise DomainRejection("Frame identidade exige (t, x0, N, N') = (0, 0, 1, 1)")
            return
        if not _is_dyadic(self.N) or self.N < 2:
            raise DomainRejection(f"Frame concentrado exige N >= 2 diádico (N={self.N})")
        if not _is_dyadic(self.Nprime):
            raise DomainRejection(f"N'={self.Nprime} não é diádico")
        if self.Nprime != 1 and not np.sqrt(self.N) <= self.Nprime <= self.N:
            raise DomainRejection(
                f"N'={self.Nprime} fora de [sqrt(N), N] para N={self.N}",
                {"N": self.N, "Nprime": self.Nprime},
            )
        if center > self.center_bound * self.N * (1.0 + 1e-12):
            raise DomainRejection(
                f"|x0|={center} excede C N = {self.center_bound * self.N}",
                {"x0": list(self.x0), "center_bound": self.center_bound},
            )

    @classmethod
    def identity(cls, d: int) -> "Frame":
        return cls(kind="identity", x0=(0.0,) * d)

    @classmethod
    def concentrating(
        cls,
        t: float,
        x0,
        N: int,
        Nprime: int,
        center_bound: Optional[float] = None,
    ) -> "Frame":
        center = tuple(float(c) for c in np.atleast_1d(x0))
        bound = float(np.linalg.norm(center)) / N if center_bound is None else center_bound
        return cls(
            kind="concentrating",
            t=float(t),
            x0=center,
            N=int(N),
            Nprime=int(Nprime),
            center_bound=bound,
        )

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    @property
    def cutoff_radius(self) -> float:
        """Raio N/N' do corte S em coordenadas reescaladas."""
        return self.N / self.Nprime

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "kind": self.kind,
            "t": self.t,
            "x0": list(self.x0),
            "N": self.N,
            "Nprime": self.Nprime,
            "center_bound": self.center_bound,
        }


@dataclass
class ProfileItem:
    """Perfil extraído: frame, phi, nível eps e fração da norma Sigma."""

    frame: Frame
    profile: Field
    eps: float
    sigma_share: float
    score: float = 0.0

    def __post_init__(self):
        if not self.sigma_share > 0:
            raise DomainRejection(f"Fração Sigma deve ser positiva: {self.sigma_share}")

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        report = self.frame.to_dict()
        report.update({"eps": self.eps, "sigma_share": self.sigma_share, "score": self.score})
        return report


@dataclass(frozen=True)
class DecouplingReport:
    """Defeitos de desacoplamento da norma Sigma e da norma L^{p+2}."""

    sigma_defect: float
    potential_defect: float
    bookkeeping_defect: float
    exponent: float

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "sigma_defect": self.sigma_defect,
            "potential_defect": self.potential_defect,
            "bookkeeping_defect": self.bookkeeping_defect,
            "exponent": self.exponent,
        }


@dataclass
class DecompositionResult:
    """Itens extraídos e o resto r^J."""

    items: List[ProfileItem]
    remainder: Field
    input_sigma: float
    remainder_sigma: float
    decoupling: Optional[DecouplingReport] = None

    @property
    def remainder_fraction(self) -> float:
        if self.input_sigma == 0.0:
            return 0.0
        return self.remainder_sigma / self.input_sigma

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "profiles": [item.to_dict() for item in self.items],
            "input_sigma": self.input_sigma,
            "remainder_sigma": self.remainder_sigma,
            "remainder_fraction": self.remainder_fraction,
            "decoupling": self.decoupling.to_dict() if self.decoupling else None,
        }


@dataclass
class BubbleTrajectory:
    """Solução aproximada concentrada numa rede temporal uniforme."""

    times: np.ndarray
    fields: List[Field]
    frame: Frame
    T: float
    in_window: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def lattice_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def __len__(self) -> int:
        return len(self.fields)

    def field_at(self, t: float) -> Field:
        index = int(np.argmin(np.abs(self.times - t)))
        return self.fields[index]


@dataclass
class ResidualReport:
    """Proxies de ||H^(1/2) e|| por tempo e agregados dentro e fora da janela."""

    times: np.ndarray
    residuals: np.ndarray
    in_window: np.ndarray
    lattice_dt: float
    window_aggregate: float
    outside_aggregate: float

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "times": self.times.tolist(),
            "residuals": self.residuals.tolist(),
            "lattice_dt": self.lattice_dt,
            "window_aggregate": self.window_aggregate,
            "outside_aggregate": self.outside_aggregate,
            "max_residual": self.max_residual,
        }
