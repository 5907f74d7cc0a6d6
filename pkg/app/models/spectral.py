"""
Dataclasses da representação espectral de H e do fator de lente.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from app.models.grid import Field, Grid


@dataclass(frozen=True, eq=False)
class HermiteBasis:
    """Tabela h_m(x_j), m <= K, sobre um eixo da grade."""

    grid: Grid
    K: int
    table: np.ndarray = field(repr=False)
    orthonormality_defect: float = 0.0

    @property
    def modes(self) -> int:
        return self.K + 1

    @property
    def turning_radius(self) -> float:
        """Ponto de retorno clássico do modo mais alto."""
        return float(np.sqrt(2 * self.K + 1))

    def eigenvalues(self) -> np.ndarray:
        """|alpha| + d/2 sobre todos os multi-índices com alpha_i <= K."""
        levels = np.arange(self.modes, dtype=float)
        total = np.zeros((self.modes,) * self.grid.d)
        for a in range(self.grid.d):
            shape = [1] * self.grid.d
            shape[a] = self.modes
            total = total + levels.reshape(shape)
        return total + self.grid.d / 2.0


@dataclass(frozen=True, eq=False)
class SpectrumH:
    """Coeficientes c_alpha = <f, h_alpha>."""

    basis: HermiteBasis
    coefficients: np.ndarray = field(repr=False)
    tail: float = 0.0

    @property
    def mass(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def eigenvalues(self) -> np.ndarray:
        return self.basis.eigenvalues()

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {"K": self.basis.K, "d": self.basis.grid.d, "mass": self.mass, "tail": self.tail}


@dataclass(frozen=True)
class LensFactors:
    """Fatores da transformada de lente para um subpasso tau."""

    t: float
    gamma: float
    s: float

    @property
    def chirp_bound(self) -> float:
        """|gamma| usado no critério de aliasing |gamma| L dx < pi/4."""
        return abs(self.gamma)


@dataclass
class ObservableReport:
    """P(t)f e X(t)f por conjugação, com defeitos."""

    momentum: Tuple[Field, ...]
    position: Tuple[Field, ...]
    defect: float
    norm_identity_defect: float

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {"defect": self.defect, "norm_identity_defect": self.norm_identity_defect}
