"""
Propagadores lineares: livre, harmônico (lente), oráculo de Mehler e observáveis.

O propagador harmônico reduz t módulo 2*pi (fase global e^{-i pi d m}), aplica
a paridade exata em t = +-pi e divide o restante em subpassos que respeitam
|gamma| L dx < pi/4.
"""

import logging
from typing import Iterable, Optional

import numpy as np

from app.core.errors import DomainRejection
from app.models.grid import Field
from app.models.spectral import LensFactors, ObservableReport
from app.services import field_ops, hermite

logger = logging.getLogger(__name__)

MAX_SUBSTEP = 0.5 * np.pi
MEHLER_MIN_SIN = 0.1
PROPAGATION_METHODS = ("lens", "hermite", "mehler")


def free_propagate(f: Field, t: float) -> Field:
    """e^{it Lap/2} f como multiplicador e^{-it|k|^2/2}."""
    if t == 0:
        return f
    return field_ops.fourier_multiply(f, np.exp(-0.5j * t * f.grid.k2))


def lens_factors(t: float) -> LensFactors:
    """gamma(t) = (cos t - 1)/(2 sin t) = -tan(t/2)/2 e s(t) = sin t."""
    return LensFactors(t=t, gamma=-0.5 * np.tan(0.5 * t), s=np.sin(t))


def reduce_time(t: float):
    """t = 2 pi m + r, r em (-pi, pi]."""
    m = int(np.round(t / (2.0 * np.pi)))
    r = t - 2.0 * np.pi * m
    if r <= -np.pi:
        r += 2.0 * np.pi
        m -= 1
    return m, r


def parity(f: Field) -> Field:
    """f(-x): índice (n - j) mod n em cada eixo."""
    values = f.values
    for a in range(f.grid.d):
        values = np.roll(np.flip(values, axis=a), 1, axis=a)
    return f.with_values(values)


def max_lens_substep(f: Field) -> float:
    """Maior subpasso com |gamma| L dx < pi/4."""
    grid = f.grid
    return min(MAX_SUBSTEP, 2.0 * np.arctan(np.pi / (2.0 * grid.L * grid.dx)))


def _lens_substep(values: np.ndarray, f: Field, tau: float) -> np.ndarray:
    factors = lens_factors(tau)
    chirp = np.exp(1j * factors.gamma * f.grid.r2)
    free = np.exp(-0.5j * factors.s * f.grid.k2)
    return chirp * field_ops.ifftn(free * field_ops.fftn(chirp * values))


def harmonic_propagate(f: Field, t: float) -> Field:
    """
    e^{-itH} f pela transformada de lente.

    Args:
        f: Campo de entrada
        t: Tempo (qualquer real)

    Returns:
        Campo propagado (unitário em L^2)
    """
    d = f.grid.d
    m, r = reduce_time(t)
    phase = np.exp(-1j * np.pi * d * m)
    if abs(abs(r) - np.pi) < 1e-13:
        return parity(f) * (phase * np.exp(-0.5j * r * d))
    if r == 0.0:
        return f * phase

    steps = int(np.ceil(abs(r) / max_lens_substep(f)))
    tau = r / steps
    values = f.values
    for _ in range(steps):
        values = _lens_substep(values, f, tau)
    return f.with_values(phase * values)


def hermite_propagate(f: Field, t: float, K: Optional[int] = None) -> Field:
    """e^{-itH} f como multiplicador e^{-it lambda} na base de Hermite."""
    return hermite.apply_spectral_multiplier(f, lambda lam: np.exp(-1j * t * lam), K)


def mehler_apply_oracle(f: Field, t: float) -> Field:
    """
    Quadratura direta do núcleo de Mehler, eixo a eixo.

    Raises:
        DomainRejection: Se |sin t| <= 0.1
    """
    sine = np.sin(t)
    if abs(sine) <= MEHLER_MIN_SIN:
        raise DomainRejection(
            f"|sin t| = {abs(sine):.3f} <= {MEHLER_MIN_SIN}: quadratura de Mehler não confiável",
            {"t": t},
        )
    m, r = reduce_time(t)
    sine = np.sin(r)
    cosine = np.cos(r)
    x = f.grid.axis
    kernel = (
        np.exp(1j * (0.5 * (x[:, None] ** 2 + x[None, :] ** 2) * cosine - np.outer(x, x)) / sine)
        / np.sqrt(2j * np.pi * sine)
        * f.grid.dx
    )
    values = f.values
    for a in range(f.grid.d):
        values = np.moveaxis(np.tensordot(kernel, values, axes=([1], [a])), 0, a)
    return f.with_values(np.exp(-1j * np.pi * f.grid.d * m) * values)


def propagate(f: Field, t: float, method: str = "lens", K: Optional[int] = None) -> Field:
    """Despacha para uma das três implementações de e^{-itH}."""
    if method == "lens":
        return harmonic_propagate(f, t)
    if method == "hermite":
        return hermite_propagate(f, t, K)
    if method == "mehler":
        return mehler_apply_oracle(f, t)
    raise DomainRejection(f"Método de propagação desconhecido: {method}")


def mehler_kernel(x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    """Núcleo unitário de Mehler e^{-itH}(x, y) para pontos (..., d)."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    d = x.shape[-1]
    m, r = reduce_time(t)
    sine = np.sin(r)
    exponent = (
        0.5 * (np.sum(x**2, axis=-1) + np.sum(y**2, axis=-1)) * np.cos(r)
        - np.sum(x * y, axis=-1)
    ) / sine
    prefactor = np.sqrt(2j * np.pi * sine) ** (-d) * np.exp(-1j * np.pi * d * m)
    return prefactor * np.exp(1j * exponent)


def dispersive_ratio(f: Field, ts: Iterable[float]) -> np.ndarray:
    """
    ||e^{-itH} f||_inf |sin t|^(d/2) / ||f||_1 em cada tempo.

    Raises:
        DomainRejection: Para t múltiplo de pi
    """
    l1 = field_ops.lp_norm(f, 1.0)
    ratios = []
    for t in ts:
        sine = abs(np.sin(t))
        if sine < 1e-12:
            raise DomainRejection(f"t={t} é múltiplo de pi", {"t": t})
        if l1 == 0.0:
            ratios.append(0.0)
            continue
        evolved = harmonic_propagate(f, t)
        ratios.append(field_ops.lp_norm(evolved, np.inf) * sine ** (f.grid.d / 2.0) / l1)
    return np.array(ratios)


def heisenberg_observables(f: Field, t: float) -> ObservableReport:
    """
    P(t) f e X(t) f por conjugação e pela forma fechada.

    P(t) = e^{itH} i grad e^{-itH} = i grad cos t + x sin t
    X(t) = e^{itH} x e^{-itH} = x cos t - i grad sin t
    """
    evolved = harmonic_propagate(f, t)
    evolved_gradient = field_ops.gradient(evolved)
    momentum = tuple(harmonic_propagate(g * 1j, -t) for g in evolved_gradient)
    position = tuple(
        harmonic_propagate(evolved.with_values(x * evolved.values), -t) for x in f.grid.coords
    )

    cosine, sine = np.cos(t), np.sin(t)
    f_gradient = field_ops.gradient(f)
    closed_momentum = [
        f.with_values(1j * g.values * cosine + x * f.values * sine)
        for g, x in zip(f_gradient, f.grid.coords)
    ]
    closed_position = [
        f.with_values(x * f.values * cosine - 1j * g.values * sine)
        for g, x in zip(f_gradient, f.grid.coords)
    ]

    defect = 0.0
    for measured, closed in zip(momentum + position, closed_momentum + closed_position):
        scale = max(field_ops.l2_norm(closed), 1e-300)
        defect = max(defect, field_ops.l2_norm(measured - closed) / scale)

    total = sum(field_ops.l2_norm(p) ** 2 for p in momentum) + sum(
        field_ops.l2_norm(x) ** 2 for x in position
    )
    sigma2 = field_ops.sigma_norm_squared(f)
    identity_defect = abs(total - sigma2) / max(sigma2, 1e-300)
    logger.debug(f"Observáveis em t={t}: defeito={defect:.2e}, identidade={identity_defect:.2e}")
    return ObservableReport(
        momentum=momentum,
        position=position,
        defect=defect,
        norm_identity_defect=identity_defect,
    )
