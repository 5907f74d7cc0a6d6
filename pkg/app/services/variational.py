"""
Estado fundamental W, energias E e E_Delta, classificação de aprisionamento e virial.
"""

import logging
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, special

from app.core.errors import DomainRejection
from app.models.grid import Field, Grid
from app.models.solver import Trajectory, critical_power
from app.models.variational import (
    NORMALIZATIONS,
    EnergyReport,
    GroundStateProfile,
    TrappingReport,
    VirialCertificate,
    VirialSeries,
)
from app.services import field_ops

logger = logging.getLogger(__name__)

DEFAULT_TAPER_MARGIN = 2.0
DEFAULT_TAPER_WIDTH = 4.0
VIRIAL_MIN_SAMPLES = 5


def bracket_coefficient(d: int, normalization: str = "intro") -> float:
    """a em W = (1 + a|x|^2)^(-(d-2)/2): 2/(d(d-2)) ou, na variante alternativa, 1/(d(d-2))."""
    if d < 3:
        raise DomainRejection(f"W exige d >= 3 (d={d})", {"d": d})
    if normalization not in NORMALIZATIONS:
        raise DomainRejection(f"Normalização desconhecida: {normalization}")
    base = 1.0 / (d * (d - 2))
    return 2.0 * base if normalization == "intro" else base


def _smooth_step_derivative(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    inner = (z > 0.0) & (z < 1.0)
    zc = np.clip(z, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        left = np.exp(-1.0 / zc)
        right = np.exp(-1.0 / (1.0 - zc))
        slope = left * right * (1.0 / zc**2 + 1.0 / (1.0 - zc) ** 2) / (left + right) ** 2
    return np.where(inner, slope, 0.0)


def taper(r: np.ndarray, radius: float, width: float) -> np.ndarray:
    """Corte radial: 1 em r <= radius - width, 0 em r >= radius."""
    return 1.0 - field_ops.smooth_step((np.asarray(r, dtype=float) - (radius - width)) / width)


def _taper_derivative(r: np.ndarray, radius: float, width: float) -> np.ndarray:
    z = (np.asarray(r, dtype=float) - (radius - width)) / width
    return -_smooth_step_derivative(z) / width


def _resolve_taper(grid: Grid, radius: Optional[float], width: Optional[float]):
    R = grid.L - DEFAULT_TAPER_MARGIN if radius is None else float(radius)
    w = DEFAULT_TAPER_WIDTH if width is None else float(width)
    if not 0 < w <= R or R > grid.L:
        raise DomainRejection(f"Corte inválido: raio={R}, largura={w}, L={grid.L}")
    return R, w


def energy_functionals(u: Field, mu: int = -1, p: Optional[float] = None) -> EnergyReport:
    """
    Massa, E, E_Delta, ||grad u||_2 e ||u||_{p+2} numa passada.

    E = E_Delta + 1/2 ||x u||^2, E_Delta = 1/2 ||grad u||^2 + 2 mu/(p+2) ||u||_{p+2}^{p+2}.
    """
    grid = u.grid
    power = critical_power(grid.d) if p is None else p
    density = np.abs(u.values) ** 2
    mass = field_ops.integrate(grid, density)
    gradient_squared = field_ops.gradient_norm_squared(u.values, grid)
    weight_squared = field_ops.integrate(grid, grid.r2 * density)
    critical = field_ops.integrate(grid, density ** (0.5 * power + 1.0))
    energy_delta = 0.5 * gradient_squared + 2.0 * mu / (power + 2.0) * critical
    return EnergyReport(
        mass=mass,
        energy=energy_delta + 0.5 * weight_squared,
        energy_delta=energy_delta,
        gradient_norm=float(np.sqrt(gradient_squared)),
        potential_norm=float(critical ** (1.0 / (power + 2.0))),
    )


@lru_cache(maxsize=16)
def radial_oracle(
    d: int = 3,
    normalization: str = "intro",
    taper_radius: Optional[float] = None,
    taper_width: float = DEFAULT_TAPER_WIDTH,
) -> GroundStateProfile:
    """
    Constantes de W (ou de W truncado) por quadratura adaptativa 1D.

    Args:
        d: Dimensão
        normalization: "intro" (a = 2/(d(d-2))) ou "section7" (a = 1/(d(d-2)))
        taper_radius: Raio do corte suave; None integra até o infinito
        taper_width: Largura da rampa do corte
    """
    a = bracket_coefficient(d, normalization)
    exponent = -(d - 2) / 2.0
    critical = 2.0 * d / (d - 2)
    sphere = 2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0)

    def profile(r):
        return (1.0 + a * r * r) ** exponent

    def slope(r):
        return 2.0 * a * r * exponent * (1.0 + a * r * r) ** (exponent - 1.0)

    if taper_radius is None:
        upper = np.inf

        def u(r):
            return profile(r)

        def du(r):
            return slope(r)

    else:
        upper = float(taper_radius)

        def u(r):
            return float(taper(r, taper_radius, taper_width)) * profile(r)

        def du(r):
            c = float(taper(r, taper_radius, taper_width))
            dc = float(_taper_derivative(r, taper_radius, taper_width))
            return dc * profile(r) + c * slope(r)

    points = None if taper_radius is None else [max(taper_radius - taper_width, 0.0)]
    quad_args = {"limit": 200} if points is None else {"limit": 200, "points": points}
    gradient_squared = sphere * integrate.quad(
        lambda r: du(r) ** 2 * r ** (d - 1), 0.0, upper, **quad_args
    )[0]
    critical_integral = sphere * integrate.quad(
        lambda r: abs(u(r)) ** critical * r ** (d - 1), 0.0, upper, **quad_args
    )[0]
    energy_delta = 0.5 * gradient_squared - (1.0 - 2.0 / d) * critical_integral
    logger.debug(
        f"Oráculo radial d={d} ({normalization}): ||grad W||^2={gradient_squared:.6f}, "
        f"E_Delta={energy_delta:.6f}"
    )
    return GroundStateProfile(
        d=d,
        a=a,
        gradient_squared=gradient_squared,
        critical_integral=critical_integral,
        energy_delta=energy_delta,
        normalization=normalization,
        taper_radius=taper_radius,
        taper_width=None if taper_radius is None else taper_width,
    )


def ground_state_W(
    grid: Grid,
    normalization: str = "intro",
    taper_radius: Optional[float] = None,
    taper_width: Optional[float] = None,
) -> Field:
    """
    W amostrado na grade, truncado suavemente em taper_radius (padrão L - 2).

    Raises:
        DomainRejection: Se d < 3
    """
    a = bracket_coefficient(grid.d, normalization)
    R, w = _resolve_taper(grid, taper_radius, taper_width)
    r = np.sqrt(grid.r2)
    values = (1.0 + a * grid.r2) ** (-(grid.d - 2) / 2.0) * taper(r, R, w)
    return Field(grid, values)


def taper_energy_error(grid: Grid, normalization: str = "intro") -> float:
    """Diferença relativa de E_Delta entre W truncado (padrão da grade) e W."""
    R, w = _resolve_taper(grid, None, None)
    full = radial_oracle(grid.d, normalization)
    truncated = radial_oracle(grid.d, normalization, R, w)
    return abs(truncated.energy_delta - full.energy_delta) / abs(full.energy_delta)


def elliptic_residual(W: Field, radius: Optional[float] = None) -> float:
    """
    ||1/2 Lap W + W^((d+2)/(d-2))||_2 restrita a |x| <= radius.

    O padrão exclui a rampa do corte (radius = L - 2 - 4).
    """
    grid = W.grid
    if grid.d < 3:
        raise DomainRejection(f"Equação elíptica exige d >= 3 (d={grid.d})")
    if radius is None:
        R, w = _resolve_taper(grid, None, None)
        radius = R - w
    power = (grid.d + 2.0) / (grid.d - 2.0)
    residual = 0.5 * field_ops.laplacian(W).values + np.abs(W.values) ** (power - 1.0) * W.values
    inside = grid.r2 <= radius**2
    return float(np.sqrt(field_ops.integrate(grid, np.abs(residual[inside]) ** 2)))


def sobolev_ratio(f: Field) -> float:
    """||f||_{2d/(d-2)} / ||grad f||_2 (0 para o campo nulo)."""
    if f.grid.d < 3:
        raise DomainRejection(f"Razão de Sobolev exige d >= 3 (d={f.grid.d})")
    gradient = field_ops.gradient_norm(f)
    if gradient == 0.0:
        return 0.0
    return field_ops.lp_norm(f, 2.0 * f.grid.d / (f.grid.d - 2)) / gradient


def energy_trapping_classify(
    u: Field, profile: Optional[GroundStateProfile] = None
) -> TrappingReport:
    """
    Classifica u (d = 3, focalizante) contra E_Delta(W) e ||grad W||.

    trapped_below: E(u) < E_Delta(W) e ||grad u|| <= ||grad W||
    trapped_above: E(u) < E_Delta(W) e ||grad u|| >= ||grad W||
    outside_hypotheses: caso contrário
    """
    if u.grid.d != 3:
        raise DomainRejection(f"Classificação de aprisionamento exige d = 3 (d={u.grid.d})")
    W = profile or radial_oracle(3)
    report = energy_functionals(u, mu=-1)
    sigma = float(np.sqrt(field_ops.sigma_norm_squared(u)))
    delta0 = 1.0 - report.energy_delta / W.energy_delta

    sigma_ok = None
    gap = None
    if report.energy < W.energy_delta and report.gradient_norm <= W.gradient_norm:
        classification = "trapped_below"
        sigma_ok = sigma <= W.gradient_norm
        if not sigma_ok:
            logger.warning(f"||u||_Sigma = {sigma:.4f} excede ||grad W|| = {W.gradient_norm:.4f}")
    elif report.energy < W.energy_delta:
        classification = "trapped_above"
        gap = (
            0.5 * report.gradient_norm**2
            - report.potential_norm**6
            + delta0 * W.energy_delta
        )
        if gap > 0.0:
            logger.warning(
                f"Lacuna de coercividade positiva ({gap:.3e}) acima do limiar: "
                f"oráculo de W inconsistente com a grade"
            )
    else:
        classification = "outside_hypotheses"

    logger.info(
        f"Aprisionamento: {classification} (E={report.energy:.4f}, "
        f"||grad u||={report.gradient_norm:.4f}, delta0={delta0:.4f})"
    )
    return TrappingReport(
        classification=classification,
        energy=report.energy,
        energy_delta=report.energy_delta,
        gradient_norm=report.gradient_norm,
        sigma_norm=sigma,
        threshold_energy=W.energy_delta,
        threshold_gradient=W.gradient_norm,
        delta0=delta0,
        sigma_bound_ok=sigma_ok,
        coercivity_gap=gap,
    )


def virial_derivative(u: Field) -> float:
    """f'(t) = 2 Im integral de conj(u) x . grad u."""
    total = 0.0
    for x, g in zip(u.grid.coords, field_ops.gradient(u)):
        total += float(np.sum(np.imag(np.conj(u.values) * x * g.values)))
    return 2.0 * total * u.grid.cell_volume


def virial_second_derivative(
    u: Field, mu: int = -1, p: Optional[float] = None, potential: str = "harmonic"
) -> float:
    """
    f''(t) = 2||grad u||^2 - 2||x u||^2 + mu 2dp/(p+2) ||u||_{p+2}^{p+2}.

    Para o potencial livre o termo -2||x u||^2 não aparece.
    """
    if potential not in ("harmonic", "free"):
        raise DomainRejection(f"Virial não definido para o potencial {potential}")
    grid = u.grid
    power = critical_power(grid.d) if p is None else p
    density = np.abs(u.values) ** 2
    value = 2.0 * field_ops.gradient_norm_squared(u.values, grid)
    if potential == "harmonic":
        value -= 2.0 * field_ops.integrate(grid, grid.r2 * density)
    nonlinear = field_ops.integrate(grid, density ** (0.5 * power + 1.0))
    return value + mu * 2.0 * grid.d * power / (power + 2.0) * nonlinear


def virial_diagnostics(
    trajectory: Trajectory,
    mu: int = -1,
    p: Optional[float] = None,
    potential: str = "harmonic",
) -> Tuple[VirialSeries, Optional[VirialCertificate]]:
    """
    Compara diferenças centradas de f(t) com f'' analítico e emite o certificado.

    Args:
        trajectory: Campos em tempos uniformes (pelo menos 5)
        mu, p: Parâmetros da não linearidade
        potential: "harmonic" ou "free"

    Returns:
        VirialSeries e, se f'' <= C < 0 em toda a janela, o VirialCertificate

    Raises:
        DomainRejection: Amostragem não uniforme ou com menos de 5 campos
    """
    if len(trajectory) < VIRIAL_MIN_SAMPLES:
        raise DomainRejection(
            f"Virial exige ao menos {VIRIAL_MIN_SAMPLES} campos ({len(trajectory)} recebidos)"
        )
    h = trajectory.spacing()
    times = np.asarray(trajectory.times)
    f = np.array([field_ops.weight_norm(u) ** 2 for u in trajectory.fields])
    analytic = np.array(
        [virial_second_derivative(u, mu, p, potential) for u in trajectory.fields]
    )
    analytic_first = np.array([virial_derivative(u) for u in trajectory.fields])

    first = (f[2:] - f[:-2]) / (2.0 * h)
    second = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    fourth = (f[4:] - 4.0 * f[3:-1] + 6.0 * f[2:-2] - 4.0 * f[1:-3] + f[:-4]) / h**4
    scale = max(1.0, float(np.max(np.abs(analytic))), float(np.max(np.abs(fourth))))
    defect = float(np.max(np.abs(second - analytic[1:-1])))
    series = VirialSeries(
        times=times,
        f=f,
        first_difference=first,
        second_difference=second,
        analytic_second=analytic,
        analytic_first=analytic_first,
        agreement_defect=defect,
        agreement_tolerance=3.0 * h**2 * scale,
    )
    if not series.agreement_ok:
        logger.warning(
            f"f'' por diferenças difere do analítico: "
            f"{defect:.3e} > {series.agreement_tolerance:.3e}"
        )

    C = float(np.max(analytic))
    if C >= 0.0:
        return series, None
    A = float(f[0])
    B = float(analytic_first[0])
    root = (-B - np.sqrt(B * B - 2.0 * A * C)) / C
    certificate = VirialCertificate(
        A=A, B=B, C=C, root=float(root), window=[float(times[0]), float(times[-1])]
    )
    logger.info(f"Certificado virial: f(t) <= {A:.4f} + {B:.4f} t + {C:.4f} t^2/2, raiz {root:.4f}")
    return series, certificate
