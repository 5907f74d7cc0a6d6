"""
Dataclasses para grades periódicas e campos complexos.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Tuple

import numpy as np

from app.core.errors import DomainRejection, NonFiniteValueError


@dataclass(frozen=True)
class Grid:
    """Grade cartesiana uniforme e periódica em [-L, L)^d."""

    d: int
    L: float
    n: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainRejection(f"Dimensão inválida: {self.d}", {"d": self.d})
        if self.n < 8 or self.n & (self.n - 1) != 0:
            raise DomainRejection(
                f"n deve ser potência de dois >= 8, recebido {self.n}", {"n": self.n}
            )
        if not self.L > 0:
            raise DomainRejection(f"L deve ser positivo, recebido {self.L}", {"L": self.L})
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        """Espaçamento entre nós."""
        return 2.0 * self.L / self.n

    @property
    def cell_volume(self) -> float:
        """Peso de quadratura dx^d."""
        return self.dx**self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def k_max(self) -> float:
        """Número de onda de Nyquist pi/dx."""
        return np.pi / self.dx

    @cached_property
    def axis(self) -> np.ndarray:
        """Coordenadas dos nós em um eixo: -L + j*dx."""
        return -self.L + self.dx * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Números de onda pi*m/L na ordem da FFT."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def coords(self) -> Tuple[np.ndarray, ...]:
        """Coordenadas de todos os nós (indexação 'ij')."""
        return tuple(np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        """|x|^2 em todos os nós."""
        return sum(x**2 for x in self.coords)

    @cached_property
    def k_vectors(self) -> Tuple[np.ndarray, ...]:
        """Números de onda por eixo, com broadcast para a forma da grade."""
        vectors = []
        for a in range(self.d):
            shape = [1] * self.d
            shape[a] = self.n
            vectors.append(self.wavenumbers.reshape(shape))
        return tuple(vectors)

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 com broadcast completo."""
        return sum(k**2 for k in self.k_vectors) * np.ones(self.shape)

    def node_coordinates(self, index: Tuple[int, ...]) -> Tuple[float, ...]:
        """Coordenadas do nó de índice multi-dimensional."""
        return tuple(float(self.axis[i]) for i in index)

    def origin_index(self) -> Tuple[int, ...]:
        """Índice do nó x = 0."""
        return (self.n // 2,) * self.d

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {"d": self.d, "L": self.L, "n": self.n, "dx": self.dx}


@dataclass(frozen=True, eq=False)
class Field:
    """Amostras complexas (complex128) de uma função sobre a grade."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise DomainRejection(
                f"Forma {values.shape} incompatível com a grade {self.grid.shape}",
                {"shape": list(values.shape)},
            )
        finite = np.isfinite(values)
        if not finite.all():
            index = tuple(int(i) for i in np.argwhere(~finite)[0])
            coordinates = self.grid.node_coordinates(index)
            raise NonFiniteValueError(
                f"Valor não finito no nó {coordinates}",
                {"index": list(index), "coordinates": list(coordinates)},
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def with_values(self, values: np.ndarray) -> "Field":
        """Novo campo sobre a mesma grade."""
        return Field(self.grid, values)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values))

    def _check_grid(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise DomainRejection("Campos em grades diferentes")

    def __add__(self, other: "Field") -> "Field":
        self._check_grid(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._check_grid(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


@dataclass
class NormReport:
    """Normas de um campo."""

    lp: Dict[float, float]
    h1dot: float
    weight: float
    sigma: float

    @property
    def sigma_squared(self) -> float:
        return self.sigma**2

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "lp": {str(p): value for p, value in self.lp.items()},
            "h1dot": self.h1dot,
            "weight": self.weight,
            "sigma": self.sigma,
        }
