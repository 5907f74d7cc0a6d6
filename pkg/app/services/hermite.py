"""
Cálculo funcional de H = -1/2 Laplaciano + 1/2 |x|^2 na base de Hermite.

Transformadas d-dimensionais são produtos tensoriais de transformadas 1D
(matriz densa (K+1) x n por eixo).
"""

import logging
from functools import lru_cache
from typing import Callable, Dict, List, Optional

import numpy as np

from app.core.errors import DomainRejection
from app.models.grid import Field, Grid
from app.models.spectral import HermiteBasis, SpectrumH
from app.services import field_ops

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-8
HEAT_SUBSTEP = 0.5


def hermite_table(x: np.ndarray, K: int) -> np.ndarray:
    """Funções de Hermite normalizadas h_0..h_K pela recorrência estável."""
    table = np.zeros((K + 1, x.size))
    table[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if K >= 1:
        table[1] = np.sqrt(2.0) * x * table[0]
    for m in range(1, K):
        table[m + 1] = (
            np.sqrt(2.0 / (m + 1)) * x * table[m] - np.sqrt(m / (m + 1.0)) * table[m - 1]
        )
    return table


def max_mode_cap(grid: Grid) -> int:
    """Maior K cujo ponto de retorno sqrt(2K+1) + 4 cabe em L, limitado a n/2."""
    if grid.L <= 5.0:
        return 0
    return int(min(grid.n // 2, np.floor(((grid.L - 4.0) ** 2 - 1.0) / 2.0)))


def default_mode_cap(grid: Grid) -> int:
    """K padrão n/4, reduzido ao maior valor admissível pela largura da grade."""
    K = grid.n // 4
    admissible = max_mode_cap(grid)
    if K > admissible:
        logger.warning(f"K={K} excede a largura da grade; usando K={admissible}")
        K = admissible
    return K


@lru_cache(maxsize=32)
def build_basis(grid: Grid, K: int) -> HermiteBasis:
    """
    Constrói (e guarda em cache) a tabela de Hermite de um eixo.

    Raises:
        DomainRejection: Se K > n/2, se a grade for estreita demais para K,
            ou se a ortonormalidade discreta falhar
    """
    if K < 0 or K > grid.n // 2:
        raise DomainRejection(f"K={K} fora de [0, n/2]", {"K": K, "n": grid.n})
    turning = np.sqrt(2 * K + 1)
    if turning + 4.0 > grid.L:
        raise DomainRejection(
            f"Grade estreita demais para K={K}: ponto de retorno {turning:.2f} + 4 > L={grid.L}",
            {"K": K, "L": grid.L, "turning_radius": float(turning)},
        )

    table = hermite_table(grid.axis, K)
    gram = table @ table.T * grid.dx
    defect = float(np.max(np.abs(gram - np.eye(K + 1))))
    if defect > ORTHONORMALITY_TOL:
        raise DomainRejection(
            f"Ortonormalidade discreta violada (defeito {defect:.2e}) para K={K}",
            {"K": K, "defect": defect},
        )
    logger.debug(f"Base de Hermite construída: K={K}, n={grid.n}, defeito={defect:.2e}")
    return HermiteBasis(grid=grid, K=K, table=table, orthonormality_defect=defect)


def _contract(values: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    for a in range(values.ndim):
        values = np.moveaxis(np.tensordot(matrix, values, axes=([1], [a])), 0, a)
    return values


def hermite_analyze(f: Field, K: Optional[int] = None) -> SpectrumH:
    """
    Coeficientes c_alpha = <f, h_alpha> por quadratura na grade.

    Args:
        f: Campo de entrada
        K: Índice máximo por eixo (padrão: default_mode_cap)

    Returns:
        SpectrumH com a cauda ||f||^2 - sum |c_alpha|^2
    """
    basis = build_basis(f.grid, default_mode_cap(f.grid) if K is None else K)
    coefficients = _contract(f.values, basis.table * f.grid.dx)
    tail = field_ops.l2_norm(f) ** 2 - float(np.sum(np.abs(coefficients) ** 2))
    return SpectrumH(basis=basis, coefficients=coefficients, tail=tail)


def hermite_synthesize(spectrum: SpectrumH) -> Field:
    """sum c_alpha h_alpha nos nós da grade."""
    basis = spectrum.basis
    return Field(basis.grid, _contract(spectrum.coefficients, basis.table.T))


def apply_spectral_multiplier(
    f: Field, F: Callable[[np.ndarray], np.ndarray], K: Optional[int] = None
) -> Field:
    """
    Aplica F(H) via sum F(|alpha| + d/2) c_alpha h_alpha.

    Raises:
        DomainRejection: Se F não for finita no espectro truncado
    """
    spectrum = hermite_analyze(f, K)
    weights = np.asarray(F(spectrum.eigenvalues()), dtype=np.complex128)
    if not np.all(np.isfinite(weights)):
        raise DomainRejection("Multiplicador não finito no espectro truncado")
    return hermite_synthesize(
        SpectrumH(spectrum.basis, weights * spectrum.coefficients, spectrum.tail)
    )


def mehler_heat_kernel(x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    """
    Núcleo de e^{-tH}(x, y) em forma fechada.

    Args:
        x, y: Pontos com a última dimensão igual a d
        t: Tempo positivo
    """
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    d = x.shape[-1]
    sinh = np.sinh(t)
    cosh = np.cosh(t)
    exponent = -(
        (np.sum(x**2, axis=-1) + np.sum(y**2, axis=-1)) * cosh - 2.0 * np.sum(x * y, axis=-1)
    ) / (2.0 * sinh)
    return (2.0 * np.pi * sinh) ** (-d / 2.0) * np.exp(exponent)


def mehler_heat_apply(f: Field, t: float) -> Field:
    """
    e^{-tH} f pela fatoração e^{g|x|^2} e^{sinh(t) Lap/2} e^{g|x|^2}, g = (1 - cosh t)/(2 sinh t).

    Subpassos de no máximo HEAT_SUBSTEP evitam o enrolamento periódico do calor livre.
    """
    if t <= 0:
        raise DomainRejection(f"Tempo de calor deve ser positivo: {t}", {"t": t})
    steps = int(np.ceil(t / HEAT_SUBSTEP))
    tau = t / steps
    chirp = np.exp((1.0 - np.cosh(tau)) / (2.0 * np.sinh(tau)) * f.grid.r2)
    free_heat = np.exp(-0.5 * np.sinh(tau) * f.grid.k2)
    values = f.values
    for _ in range(steps):
        values = chirp * field_ops.ifftn(free_heat * field_ops.fftn(chirp * values))
    return f.with_values(values)


def heat_propagate(
    f: Field, t: float, K: Optional[int] = None, method: str = "hermite"
) -> Field:
    """
    Semigrupo do calor e^{-tH} f.

    Args:
        f: Campo de entrada
        t: Tempo positivo
        K: Corte de modos (método hermite)
        method: "hermite" (multiplicador e^{-t lambda}) ou "mehler" (fatoração do núcleo)
    """
    if t <= 0:
        raise DomainRejection(f"Tempo de calor deve ser positivo: {t}", {"t": t})
    if method == "mehler":
        return mehler_heat_apply(f, t)
    if method != "hermite":
        raise DomainRejection(f"Método de calor desconhecido: {method}")
    return apply_spectral_multiplier(f, lambda lam: np.exp(-t * lam), K)


def smooth_cutoff(lam: np.ndarray) -> np.ndarray:
    """phi(lambda) = 1 para |lambda| <= 1, 0 para |lambda| >= 2, C-infinito entre eles."""
    return 1.0 - field_ops.smooth_step(np.abs(np.asarray(lam, dtype=float)) - 1.0)


def bump_psi(lam: np.ndarray) -> np.ndarray:
    """psi(lambda) = phi(lambda) - phi(2 lambda), suportada em [1/2, 2]."""
    return smooth_cutoff(lam) - smooth_cutoff(2.0 * np.asarray(lam, dtype=float))


def _check_dyadic(N: float) -> int:
    level = int(round(N))
    if N < 1 or abs(level - N) > 1e-12 or level & (level - 1) != 0:
        raise DomainRejection(f"N={N} não é diádico >= 1", {"N": N})
    return level


def dyadic_ladder(grid: Grid, K: Optional[int] = None) -> List[int]:
    """
    Escada diádica 1, 2, ..., N_max com banda não vazia sob o corte K.

    N_max é o maior diádico com N/2 < sqrt(lambda_max), lambda_max = d K + d/2.
    """
    cap = default_mode_cap(grid) if K is None else K
    top = np.sqrt(grid.d * cap + grid.d / 2.0)
    ladder = [1]
    while ladder[-1] < top:
        ladder.append(ladder[-1] * 2)
    return ladder


def bump_band_multiplier(
    lam: np.ndarray, N: int, top: Optional[int] = None
) -> np.ndarray:
    """Multiplicador da banda diádica N (P_1 absorve o fundo; o topo absorve o resto)."""
    root = np.sqrt(lam)
    if N == 1 and top == 1:
        return np.ones_like(root)
    if N == 1:
        return smooth_cutoff(root)
    if top is not None and N == top:
        return 1.0 - smooth_cutoff(2.0 * root / N)
    return bump_psi(root / N)


def littlewood_paley_project(
    f: Field,
    N: float,
    kind: str = "bump",
    band: str = "eq",
    K: Optional[int] = None,
    heat_method: str = "hermite",
) -> Field:
    """
    Projeções de Littlewood-Paley de H.

    Args:
        f: Campo de entrada
        N: Frequência diádica >= 1
        kind: "bump" (psi(sqrt(H)/N)) ou "heat" (diferenças do semigrupo)
        band: "le" (P_{<=N}) ou "eq" (P_N)
        K: Corte de modos
        heat_method: Implementação do semigrupo para kind="heat"

    Raises:
        DomainRejection: Se N < 1 ou não diádico
    """
    level = _check_dyadic(N)
    if band not in ("le", "eq"):
        raise DomainRejection(f"Banda desconhecida: {band}")

    if kind == "heat":
        low = heat_propagate(f, 1.0 / level**2, K, method=heat_method)
        if band == "le":
            return low
        return low - heat_propagate(f, 4.0 / level**2, K, method=heat_method)
    if kind != "bump":
        raise DomainRejection(f"Tipo de projeção desconhecido: {kind}")

    if band == "le":
        return apply_spectral_multiplier(f, lambda lam: smooth_cutoff(np.sqrt(lam) / level), K)
    ladder = dyadic_ladder(f.grid, K)
    return apply_spectral_multiplier(
        f, lambda lam: bump_band_multiplier(lam, level, ladder[-1]), K
    )


def lp_decomposition(f: Field, K: Optional[int] = None) -> Dict[int, Field]:
    """Todas as peças P_N f da escada diádica (somam f no espaço truncado)."""
    spectrum = hermite_analyze(f, K)
    eigenvalues = spectrum.eigenvalues()
    ladder = dyadic_ladder(f.grid, spectrum.basis.K)
    pieces = {}
    for N in ladder:
        weights = bump_band_multiplier(eigenvalues, N, ladder[-1])
        pieces[N] = hermite_synthesize(
            SpectrumH(spectrum.basis, weights * spectrum.coefficients, spectrum.tail)
        )
    return pieces


def square_function(f: Field, K: Optional[int] = None) -> Field:
    """(sum_N |P_N f|^2)^(1/2)."""
    pieces = lp_decomposition(f, K)
    return Field(f.grid, np.sqrt(sum(np.abs(piece.values) ** 2 for piece in pieces.values())))


def bernstein_constants(f: Field, K: Optional[int] = None) -> Dict[int, float]:
    """Constantes medidas C_N = ||P_N f||_inf / (N^(d/2) ||f||_2)."""
    mass = field_ops.l2_norm(f)
    if mass == 0.0:
        return {}
    return {
        N: field_ops.lp_norm(piece, np.inf) / (N ** (f.grid.d / 2.0) * mass)
        for N, piece in lp_decomposition(f, K).items()
    }
