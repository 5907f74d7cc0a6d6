"""
Operações sobre campos: amostragem, derivação espectral, normas e reamostragem.

Derivadas são multiplicadores de Fourier periódicos; quadraturas são somas de
Riemann com peso dx^d. Reamostragem (operadores de escala) usa preenchimento
com zeros / corte no espaço de Fourier.
"""

import logging
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from app.core.config import settings
from app.core.errors import DomainRejection, NonFiniteValueError
from app.models.grid import Field, Grid, NormReport

logger = logging.getLogger(__name__)


def fftn(values: np.ndarray, axes: Optional[Sequence[int]] = None) -> np.ndarray:
    """FFT n-dimensional com o paralelismo configurado."""
    return sfft.fftn(values, axes=axes, workers=settings.FFT_WORKERS)


def ifftn(values: np.ndarray, axes: Optional[Sequence[int]] = None) -> np.ndarray:
    """FFT inversa n-dimensional com o paralelismo configurado."""
    return sfft.ifftn(values, axes=axes, workers=settings.FFT_WORKERS)


def smooth_step(z: np.ndarray) -> np.ndarray:
    """Degrau C-infinito: 0 em z <= 0, 1 em z >= 1; e^{-1/z} / (e^{-1/z} + e^{-1/(1-z)}) no meio."""
    z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.exp(-1.0 / z)
        right = np.exp(-1.0 / (1.0 - z))
        return left / (left + right)


def fourier_multiply(f: Field, multiplier: np.ndarray) -> Field:
    """Aplica um multiplicador de Fourier (na ordem da FFT) ao campo."""
    return f.with_values(ifftn(multiplier * fftn(f.values)))


def sample_function(grid: Grid, fn: Callable[..., np.ndarray]) -> Field:
    """
    Amostra uma função pontual nos nós da grade.

    Args:
        grid: Grade de destino
        fn: Função vetorizada fn(x1, ..., xd) -> valores complexos

    Returns:
        Campo com fn(x_j) em cada nó

    Raises:
        NonFiniteValueError: Se fn não for finita em algum nó
    """
    values = np.broadcast_to(np.asarray(fn(*grid.coords), dtype=np.complex128), grid.shape)
    finite = np.isfinite(values)
    if not finite.all():
        index = tuple(int(i) for i in np.argwhere(~finite)[0])
        coordinates = grid.node_coordinates(index)
        logger.error(f"Função não finita no nó {coordinates}")
        raise NonFiniteValueError(
            f"Função não finita no nó {coordinates}",
            {"index": list(index), "coordinates": list(coordinates)},
        )
    return Field(grid, values)


def integrate(grid: Grid, density: np.ndarray) -> float:
    """Soma de Riemann sum(density) * dx^d."""
    return float(np.sum(density)) * grid.cell_volume


def inner(f: Field, g: Field) -> complex:
    """Produto interno <f, g> = integral de f * conj(g)."""
    return complex(np.vdot(g.values, f.values)) * f.grid.cell_volume


def l2_norm(f: Field) -> float:
    return float(np.sqrt(integrate(f.grid, np.abs(f.values) ** 2)))


def lp_norm(f: Field, p: float) -> float:
    """Norma L^p; p = inf é o máximo do módulo sobre os nós."""
    if np.isinf(p):
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise DomainRejection(f"Expoente p={p} fora de [1, inf]", {"p": p})
    return integrate(f.grid, np.abs(f.values) ** p) ** (1.0 / p)


def lp_integral(f: Field, p: float) -> float:
    """Integral de |f|^p (potência da norma)."""
    return integrate(f.grid, np.abs(f.values) ** p)


def fourier_l2_norm(f: Field) -> float:
    """Norma L^2 calculada no lado de Fourier (Parseval)."""
    spectrum = sfft.fftn(f.values, norm="ortho", workers=settings.FFT_WORKERS)
    return float(np.sqrt(np.sum(np.abs(spectrum) ** 2) * f.grid.cell_volume))


def gradient(f: Field) -> Tuple[Field, ...]:
    """
    Gradiente espectral, exato para campos de banda limitada.

    Returns:
        Tupla com as d derivadas parciais
    """
    spectrum = fftn(f.values)
    return tuple(f.with_values(ifftn(1j * k * spectrum)) for k in f.grid.k_vectors)


def laplacian(f: Field) -> Field:
    return fourier_multiply(f, -f.grid.k2)


def apply_h(f: Field) -> Field:
    """H f = -1/2 Laplaciano f + 1/2 |x|^2 f na grade."""
    return f.with_values(-0.5 * laplacian(f).values + 0.5 * f.grid.r2 * f.values)


def apply_weight(f: Field, power: float) -> Field:
    """
    Multiplica por |x|^(2*power).

    Args:
        f: Campo de entrada
        power: Expoente gamma em [0, 1]

    Returns:
        Campo |x|^(2 gamma) f
    """
    if not 0.0 <= power <= 1.0:
        raise DomainRejection(f"gamma={power} fora de [0, 1]", {"power": power})
    if power == 0.0:
        return f
    return f.with_values(f.grid.r2**power * f.values)


def gradient_norm_squared(values: np.ndarray, grid: Grid) -> float:
    """||grad f||_2^2 por Parseval: sum |k|^2 |F|^2 dx^d / n^d."""
    spectrum = fftn(values)
    return float(np.sum(grid.k2 * np.abs(spectrum) ** 2)) * grid.cell_volume / values.size


def gradient_norm(f: Field) -> float:
    """||grad f||_2."""
    return float(np.sqrt(gradient_norm_squared(f.values, f.grid)))


def weight_norm(f: Field) -> float:
    """||x f||_2."""
    return float(np.sqrt(integrate(f.grid, f.grid.r2 * np.abs(f.values) ** 2)))


def norms(f: Field, ps: Iterable[float] = (2.0,)) -> NormReport:
    """
    Calcula normas L^p, ||grad f||, ||x f|| e a norma Sigma.

    Args:
        f: Campo de entrada
        ps: Expoentes em [1, inf]

    Returns:
        NormReport com sigma^2 = h1dot^2 + weight^2
    """
    h1dot = gradient_norm(f)
    weight = weight_norm(f)
    return NormReport(
        lp={float(p): lp_norm(f, p) for p in ps},
        h1dot=h1dot,
        weight=weight,
        sigma=float(np.sqrt(h1dot**2 + weight**2)),
    )


def sigma_inner(f: Field, g: Field) -> complex:
    """Produto interno de Sigma: <grad f, grad g> + <x f, x g>."""
    gradient_part = sum(inner(a, b) for a, b in zip(gradient(f), gradient(g)))
    weight_part = complex(np.vdot(g.values, f.grid.r2 * f.values)) * f.grid.cell_volume
    return gradient_part + weight_part


def sigma_norm_squared(f: Field) -> float:
    return gradient_norm(f) ** 2 + weight_norm(f) ** 2


def h_half_norm(f: Field) -> float:
    """||H^(1/2) f||_2 pela identidade da forma quadrática <Hf, f> = 1/2 ||f||_Sigma^2."""
    return float(np.sqrt(0.5 * sigma_norm_squared(f)))


def spectral_tail_fraction(f: Field) -> float:
    """
    Fração da energia espectral na oitava superior de algum eixo (|k_a| >= k_max/2).

    Returns:
        Fração em [0, 1]; 0 para o campo nulo
    """
    power = np.abs(fftn(f.values)) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    top = np.zeros(f.grid.shape, dtype=bool)
    for k in f.grid.k_vectors:
        top = top | (np.abs(k) >= 0.5 * f.grid.k_max)
    return float(np.sum(power[top])) / total


def boundary_ratio(f: Field) -> float:
    """Máximo de |f| nas faces da caixa relativo ao pico."""
    peak = float(np.max(np.abs(f.values)))
    if peak == 0.0:
        return 0.0
    edge = 0.0
    for a in range(f.grid.d):
        for index in (0, f.grid.n - 1):
            face = np.take(f.values, index, axis=a)
            edge = max(edge, float(np.max(np.abs(face))))
    return edge / peak


def domain_checks(f: Field) -> dict:
    """Verificações de domínio emitidas com toda execução."""
    ratio = boundary_ratio(f)
    tail = spectral_tail_fraction(f)
    return {
        "grid": f.grid.to_dict(),
        "boundary_ratio": ratio,
        "spectral_tail_fraction": tail,
        "boundary_ok": ratio < settings.BOUNDARY_RATIO_TOL,
        "resolution_ok": tail < settings.TAIL_FRACTION_TOL,
    }


def _as_vector(grid: Grid, point) -> np.ndarray:
    vector = np.zeros(grid.d) if point is None else np.atleast_1d(np.asarray(point, float))
    if vector.shape == (1,) and grid.d > 1:
        vector = np.repeat(vector, grid.d)
    if vector.shape != (grid.d,):
        raise DomainRejection(f"Ponto com dimensão incompatível: {vector.tolist()}")
    return vector


def _integer_scale(scale: float) -> int:
    factor = int(round(scale))
    if factor < 1 or abs(factor - scale) > 1e-12:
        raise DomainRejection(f"Escala {scale} não é inteira positiva", {"scale": scale})
    return factor


def _axis_shape(d: int, axis: int, length: int) -> Tuple[int, ...]:
    shape = [1] * d
    shape[axis] = length
    return tuple(shape)


def translate(f: Field, shift) -> Field:
    """g(x) = f(x - shift), via fase espectral (exato para banda limitada)."""
    vector = _as_vector(f.grid, shift)
    phase = np.exp(-1j * sum(k * s for k, s in zip(f.grid.k_vectors, vector)))
    return fourier_multiply(f, phase)


def compress(f: Field, scale: float, center=None, max_loss: float = 1e-10) -> Field:
    """
    Compressão g(x) = f(N (x - center)) por um fator inteiro N.

    Cada eixo é preenchido com zeros até N*n amostras; a FFT desse vetor
    fornece o espectro de f nos números de onda k/N.

    Raises:
        DomainRejection: Se parte relevante de f cair fora da caixa após a translação
    """
    grid = f.grid
    factor = _integer_scale(scale)
    x0 = _as_vector(grid, center)
    reach = factor * (grid.L - np.abs(x0))
    outside = np.zeros(grid.shape, dtype=bool)
    for a, x in enumerate(grid.coords):
        outside = outside | (np.abs(x) > reach[a])
    total = float(np.sum(np.abs(f.values) ** 2))
    lost = float(np.sum(np.abs(f.values[outside]) ** 2))
    if total > 0.0 and lost > max_loss * total:
        raise DomainRejection(
            f"Suporte transborda a grade na escala N={factor}",
            {"scale": factor, "center": x0.tolist(), "lost_fraction": lost / total},
        )

    n = grid.n
    modes = np.fft.fftfreq(n, d=1.0 / n).astype(int) % (n * factor)
    offset = (factor - 1) * n // 2
    values = f.values
    for a in range(grid.d):
        padded_shape = list(values.shape)
        padded_shape[a] = n * factor
        padded = np.zeros(padded_shape, dtype=np.complex128)
        index = [slice(None)] * grid.d
        index[a] = slice(offset, offset + n)
        padded[tuple(index)] = values
        spectrum = np.take(sfft.fft(padded, axis=a, workers=settings.FFT_WORKERS), modes, axis=a)
        phase = np.exp(-1j * grid.wavenumbers * x0[a]).reshape(_axis_shape(grid.d, a, n))
        values = sfft.ifft(spectrum * phase / factor, axis=a, workers=settings.FFT_WORKERS)
    return f.with_values(values)


def expand(f: Field, scale: float, center=None) -> Tuple[Field, float]:
    """
    Expansão g(y) = f(center + y/N) por um fator inteiro N.

    Interpola f (trigonometricamente) numa grade N vezes mais fina e recorta a
    janela centrada. O conteúdo fora de center + [-L/N, L/N) é descartado.

    Returns:
        Campo expandido e a fração de massa descartada
    """
    grid = f.grid
    factor = _integer_scale(scale)
    x0 = _as_vector(grid, center)
    shifted = translate(f, -x0).values
    n = grid.n
    total = float(np.sum(np.abs(shifted) ** 2))
    window = np.ones(grid.shape, dtype=bool)
    for x in grid.coords:
        window = window & (np.abs(x) < grid.L / factor)
    lost = 0.0 if total == 0.0 else 1.0 - float(np.sum(np.abs(shifted[window]) ** 2)) / total

    modes = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    nyquist = n // 2
    offset = (factor - 1) * n // 2
    values = shifted
    for a in range(grid.d):
        if factor == 1:
            break
        spectrum = sfft.fft(values, axis=a, workers=settings.FFT_WORKERS)
        fine_shape = list(values.shape)
        fine_shape[a] = n * factor
        fine = np.zeros(fine_shape, dtype=np.complex128)
        for position, m in enumerate(modes):
            source = [slice(None)] * grid.d
            source[a] = position
            block = spectrum[tuple(source)]
            if m == -nyquist:
                for target_mode in (-nyquist, nyquist):
                    target = [slice(None)] * grid.d
                    target[a] = target_mode % (n * factor)
                    fine[tuple(target)] += 0.5 * block
            else:
                target = [slice(None)] * grid.d
                target[a] = m % (n * factor)
                fine[tuple(target)] = block
        fine_values = sfft.ifft(fine, axis=a, workers=settings.FFT_WORKERS) * factor
        index = [slice(None)] * grid.d
        index[a] = slice(offset, offset + n)
        values = fine_values[tuple(index)]
    return f.with_values(values), max(lost, 0.0)


def dilate(f: Field, scale: float, center=None) -> Field:
    """Reescala crítica em H^1: N^((d-2)/2) f(N (x - center))."""
    factor = _integer_scale(scale)
    return compress(f, factor, center) * factor ** ((f.grid.d - 2) / 2.0)


def energy_scaling(f: Field, lam: float) -> Field:
    """u^lambda(x) = lambda^((d-2)/2) u(lambda x)."""
    return dilate(f, lam)
