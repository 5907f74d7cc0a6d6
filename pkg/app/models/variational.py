"""
Dataclasses do módulo variacional: estado fundamental, energias, aprisionamento e virial.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

TRAPPING_CLASSES = ("trapped_below", "trapped_above", "outside_hypotheses")
NORMALIZATIONS = ("intro", "section7")


@dataclass(frozen=True)
class GroundStateProfile:
    """
    Constantes de W(x) = (1 + a|x|^2)^(-(d-2)/2) calculadas pelo oráculo radial.

    Attributes:
        d: Dimensão (apenas 3 na grade)
        a: Coeficiente do colchete (2/(d(d-2)) ou 1/(d(d-2)))
        gradient_squared: ||grad W||_2^2
        critical_integral: ||W||_{2d/(d-2)}^{2d/(d-2)}
        energy_delta: E_Delta(W)
        taper_radius: Raio do corte C^2 (None: sem corte)
        taper_width: Largura da rampa do corte
    """

    d: int
    a: float
    gradient_squared: float
    critical_integral: float
    energy_delta: float
    normalization: str = "intro"
    taper_radius: Optional[float] = None
    taper_width: Optional[float] = None

    @property
    def gradient_norm(self) -> float:
        return float(np.sqrt(self.gradient_squared))

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        return (1.0 + self.a * np.asarray(r, dtype=float) ** 2) ** (-(self.d - 2) / 2.0)

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "d": self.d,
            "a": self.a,
            "normalization": self.normalization,
            "gradient_squared": self.gradient_squared,
            "critical_integral": self.critical_integral,
            "energy_delta": self.energy_delta,
            "taper_radius": self.taper_radius,
            "taper_width": self.taper_width,
        }


@dataclass(frozen=True)
class EnergyReport:
    """Massa, energias e normas de uma só passada de quadraturas."""

    mass: float
    energy: float
    energy_delta: float
    gradient_norm: float
    potential_norm: float

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "mass": self.mass,
            "energy": self.energy,
            "energy_delta": self.energy_delta,
            "gradient_norm": self.gradient_norm,
            "potential_norm": self.potential_norm,
        }


@dataclass(frozen=True)
class TrappingReport:
    """Classificação de aprisionamento de energia contra W."""

    classification: str
    energy: float
    energy_delta: float
    gradient_norm: float
    sigma_norm: float
    threshold_energy: float
    threshold_gradient: float
    delta0: float
    sigma_bound_ok: Optional[bool] = None
    coercivity_gap: Optional[float] = None

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "classification": self.classification,
            "energy": self.energy,
            "energy_delta": self.energy_delta,
            "gradient_norm": self.gradient_norm,
            "sigma_norm": self.sigma_norm,
            "threshold_energy": self.threshold_energy,
            "threshold_gradient": self.threshold_gradient,
            "delta0": self.delta0,
            "sigma_bound_ok": self.sigma_bound_ok,
            "coercivity_gap": self.coercivity_gap,
        }


@dataclass
class VirialSeries:
    """f(t) = integral de |x|^2 |u|^2 com diferenças finitas e o integrando analítico."""

    times: np.ndarray
    f: np.ndarray
    first_difference: np.ndarray
    second_difference: np.ndarray
    analytic_second: np.ndarray
    analytic_first: np.ndarray = field(default_factory=lambda: np.zeros(0))
    agreement_defect: float = 0.0
    agreement_tolerance: float = 0.0

    @property
    def agreement_ok(self) -> bool:
        return self.agreement_defect <= self.agreement_tolerance

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "times": self.times.tolist(),
            "f": self.f.tolist(),
            "first_difference": self.first_difference.tolist(),
            "second_difference": self.second_difference.tolist(),
            "analytic_second": self.analytic_second.tolist(),
            "agreement_defect": self.agreement_defect,
            "agreement_tolerance": self.agreement_tolerance,
            "agreement_ok": self.agreement_ok,
        }


@dataclass(frozen=True)
class VirialCertificate:
    """f(t) <= A + B t + C t^2 / 2 com C < 0; root limita o tempo de vida."""

    A: float
    B: float
    C: float
    root: float
    window: List[float]

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {"A": self.A, "B": self.B, "C": self.C, "root": self.root, "window": self.window}
