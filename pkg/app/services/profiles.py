"""
Decomposição em perfis: operadores G e S, frames, extração de bolhas,
auditoria de desacoplamento e a solução aproximada concentrada.

Convenções:
    frame_apply(fr, phi) = e^{+itH} G S phi
    (G phi)(x) = N^((d-2)/2) phi(N (x - x0))
    (S phi)(y) = chi(|y| N'/N) phi(y)
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from app.core.config import settings
from app.core.errors import DomainRejection, NumericalFailure
from app.models.grid import Field, Grid
from app.models.profile import (
    BubbleTrajectory,
    DecompositionResult,
    DecouplingReport,
    Frame,
    ProfileItem,
    ResidualReport,
)
from app.models.solver import Potential, SolverConfig, critical_power
from app.services import field_ops, hermite
from app.services.nls_solver import evolve, time_reversed
from app.services.propagators import free_propagate, harmonic_propagate

logger = logging.getLogger(__name__)

SCAN_SAMPLES = 64
DEFAULT_WINDOW = (0.0, np.pi)
BOOKKEEPING_TOL = 1e-9
LATTICE_DIVISOR = 64
RESIDUAL_LATTICE_DIVISOR = 32


def default_nprime(N: int, x0=None) -> int:
    """Menor diádico >= sqrt(N); 1 quando |x0| >= N/4."""
    center = 0.0 if x0 is None else float(np.linalg.norm(np.atleast_1d(x0)))
    if center >= N / 4.0:
        return 1
    return int(2 ** int(np.ceil(np.log2(np.sqrt(N)) - 1e-12)))


def cutoff_apply(phi: Field, N: float, Nprime: float) -> Field:
    """Operador S: multiplica por chi(|y| N'/N)."""
    radius = np.sqrt(phi.grid.r2) * Nprime / N
    return phi.with_values(hermite.smooth_cutoff(radius) * phi.values)


def _scale_power(d: int) -> float:
    return (d - 2) / 2.0


def frame_apply(fr: Frame, phi: Field) -> Field:
    """
    e^{itH} G S phi: corte, reescala, translação e propagação nessa ordem.

    Raises:
        DomainRejection: Se o suporte reescalado transbordar a grade
    """
    if fr.is_identity:
        return phi
    cut = cutoff_apply(phi, fr.N, fr.Nprime)
    concentrated = field_ops.compress(cut, fr.N, fr.x0) * fr.N ** _scale_power(phi.grid.d)
    return harmonic_propagate(concentrated, -fr.t)


def frame_inverse(fr: Frame, f: Field) -> Field:
    """Inverso exato de e^{itH} G (o corte S não é desfeito)."""
    if fr.is_identity:
        return f
    back = harmonic_propagate(f, fr.t)
    expanded, lost = field_ops.expand(back, fr.N, fr.x0)
    if lost > 1e-6:
        logger.debug(f"Expansão na escala N={fr.N} descartou fração {lost:.2e} da massa")
    return expanded * fr.N ** (-_scale_power(f.grid.d))


def _center(fr: Frame, d: int) -> np.ndarray:
    center = np.zeros(d)
    center[: len(fr.x0)] = fr.x0
    return center


def frame_score(a: Frame, b: Frame) -> float:
    """N_a/N_b + N_b/N_a + N_a N_b |t_a - t_b| + sqrt(N_a N_b) |x_a - x_b|."""
    d = max(len(a.x0), len(b.x0), 1)
    separation = float(np.linalg.norm(_center(a, d) - _center(b, d)))
    return (
        a.N / b.N
        + b.N / a.N
        + a.N * b.N * abs(a.t - b.t)
        + np.sqrt(a.N * b.N) * separation
    )


def frames_orthogonal(
    a: Frame, b: Frame, threshold: Optional[float] = None
) -> Tuple[bool, float]:
    """Ortogonal se o escore de divergência excede o limiar (padrão configurado)."""
    limit = settings.FRAME_ORTHOGONALITY_THRESHOLD if threshold is None else threshold
    score = frame_score(a, b)
    return score > limit, score


def extraction_ladder(grid: Grid) -> List[int]:
    """Diádicos N <= k_max/4."""
    ladder = [1]
    while 2 * ladder[-1] <= grid.k_max / 4.0:
        ladder.append(2 * ladder[-1])
    return ladder


def heat_band(f: Field, N: int) -> Field:
    """P~_N f = e^{-H/N^2} f - e^{-4H/N^2} f pela fatoração de Mehler."""
    return hermite.heat_propagate(f, 1.0 / N**2, method="mehler") - hermite.heat_propagate(
        f, 4.0 / N**2, method="mehler"
    )


def _peak(band: Field, t: float, weight: float) -> float:
    return weight * float(np.max(np.abs(harmonic_propagate(band, t).values)))


def _refine_time(band: Field, times: np.ndarray, index: int, weight: float, best: float):
    if index == 0 or index == len(times) - 1:
        return float(times[index]), best
    try:
        result = optimize.minimize_scalar(
            lambda t: -_peak(band, t, weight),
            bracket=(times[index - 1], times[index], times[index + 1]),
            method="golden",
        )
    except ValueError:
        return float(times[index]), best
    if times[0] <= result.x <= times[-1] and -result.fun > best:
        return float(result.x), float(-result.fun)
    return float(times[index]), best


def extract_bubble(
    f: Field,
    window: Sequence[float] = DEFAULT_WINDOW,
    eps: float = 0.1,
    reference: Optional[float] = None,
    samples: int = SCAN_SAMPLES,
) -> Optional[ProfileItem]:
    """
    Procura (N*, t*, x*) maximizando N^(-(d-2)/2) |e^{-itH} P~_N f(x)|.

    Args:
        f: Campo de entrada
        window: Intervalo de tempos da varredura
        eps: Limiar do escore normalizado por ||f||_Sigma
        reference: Norma Sigma de referência (padrão: a de f)
        samples: Número de tempos uniformes antes do refinamento por seção áurea

    Returns:
        ProfileItem ou None se o escore normalizado ficar abaixo de eps
    """
    grid = f.grid
    sigma = float(np.sqrt(field_ops.sigma_norm_squared(f))) if reference is None else reference
    if sigma == 0.0 or not np.any(f.values):
        return None

    t0, t1 = float(window[0]), float(window[1])
    times = np.linspace(t0, t1, samples)
    best_score = -1.0
    best = None
    for N in extraction_ladder(grid):
        band = heat_band(f, N)
        weight = N ** (-_scale_power(grid.d))
        scores = np.array([_peak(band, t, weight) for t in times])
        index = int(np.argmax(scores))
        if scores[index] > best_score:
            best_score = float(scores[index])
            best = (N, index, band, weight)

    N_star, index, band, weight = best
    t_star, best_score = _refine_time(band, times, index, weight, best_score)
    normalized = best_score / sigma
    logger.debug(f"Varredura: N*={N_star}, t*={t_star:.6f}, escore normalizado {normalized:.4f}")
    if normalized < eps:
        return None

    if N_star == 1:
        frame = Frame.identity(grid.d)
        profile = f
    else:
        evolved = harmonic_propagate(band, t_star)
        node = np.unravel_index(int(np.argmax(np.abs(evolved.values))), grid.shape)
        x_star = grid.node_coordinates(tuple(int(i) for i in node))
        frame = Frame.concentrating(t_star, x_star, N_star, default_nprime(N_star, x_star))
        profile = cutoff_apply(frame_inverse(frame, f), frame.N, frame.Nprime)

    share = field_ops.sigma_norm_squared(frame_apply(frame, profile)) / sigma**2
    if share <= 0.0:
        return None
    logger.info(
        f"Bolha extraída: N={frame.N}, N'={frame.Nprime}, t={frame.t:.6f}, x0={frame.x0}, "
        f"fração Sigma {share:.4f}"
    )
    return ProfileItem(frame=frame, profile=profile, eps=eps, sigma_share=share, score=normalized)


def decoupling_audit(
    f: Field, items: Sequence[ProfileItem], remainder: Field, p: Optional[float] = None
) -> DecouplingReport:
    """
    Defeitos de Pitágoras na norma Sigma e na norma L^{p+2}.

    Raises:
        DomainRejection: Se itens e resto não somarem f (contabilidade)
    """
    grid = f.grid
    bubbles = [frame_apply(item.frame, item.profile) for item in items]
    total = remainder.values.copy()
    for bubble in bubbles:
        total = total + bubble.values
    scale = field_ops.l2_norm(f)
    bookkeeping = 0.0
    if scale > 0.0:
        bookkeeping = field_ops.l2_norm(f - Field(grid, total)) / scale
    if bookkeeping > BOOKKEEPING_TOL:
        raise DomainRejection(
            f"Perfis e resto não somam o campo (defeito {bookkeeping:.2e})",
            {"bookkeeping_defect": bookkeeping},
        )

    exponent = (critical_power(grid.d) if p is None else p) + 2.0
    sigma_total = field_ops.sigma_norm_squared(f)
    sigma_parts = sum(field_ops.sigma_norm_squared(b) for b in bubbles)
    sigma_parts += field_ops.sigma_norm_squared(remainder)
    potential_total = field_ops.lp_integral(f, exponent)
    potential_parts = sum(field_ops.lp_integral(b, exponent) for b in bubbles)
    potential_parts += field_ops.lp_integral(remainder, exponent)

    sigma_defect = abs(sigma_total - sigma_parts) / sigma_total if sigma_total > 0 else 0.0
    potential_defect = (
        abs(potential_total - potential_parts) / potential_total if potential_total > 0 else 0.0
    )
    return DecouplingReport(
        sigma_defect=sigma_defect,
        potential_defect=potential_defect,
        bookkeeping_defect=bookkeeping,
        exponent=exponent,
    )


def profile_decompose(
    f: Field,
    Jmax: int,
    eps: float = 0.1,
    window: Sequence[float] = DEFAULT_WINDOW,
) -> DecompositionResult:
    """
    Extrai bolhas sucessivamente, subtraindo e^{itH} G S phi a cada rodada.

    Para em Jmax itens ou quando nenhuma bolha passa do limiar eps.
    """
    if Jmax < 1:
        raise DomainRejection(f"Jmax deve ser >= 1 (Jmax={Jmax})")
    sigma = float(np.sqrt(field_ops.sigma_norm_squared(f)))
    remainder = f
    items: List[ProfileItem] = []
    for level in range(Jmax):
        item = extract_bubble(remainder, window, eps, reference=sigma)
        if item is None:
            logger.info(f"Decomposição encerrada no nível {level}: escore abaixo de eps={eps}")
            break
        items.append(item)
        remainder = remainder - frame_apply(item.frame, item.profile)

    decoupling = decoupling_audit(f, items, remainder)
    remainder_sigma = float(np.sqrt(field_ops.sigma_norm_squared(remainder)))
    logger.info(
        f"Decomposição: {len(items)} perfis, resto {remainder_sigma:.4e} "
        f"(defeito Sigma {decoupling.sigma_defect:.2e})"
    )
    return DecompositionResult(
        items=items,
        remainder=remainder,
        input_sigma=sigma,
        remainder_sigma=remainder_sigma,
        decoupling=decoupling,
    )


def gaussian_profile(grid: Grid, width: float = 1.0 / np.sqrt(2.0)) -> Field:
    """phi(y) = exp(-|y|^2 / (2 width^2)) em coordenadas reescaladas."""
    return Field(grid, np.exp(-0.5 * grid.r2 / width**2))


def plant_bubbles(phi: Field, frames: Sequence[Frame]) -> Tuple[Field, List[ProfileItem]]:
    """Soma de e^{itH} G S phi sobre os frames, com os itens plantados correspondentes."""
    bubbles = [frame_apply(frame, phi) for frame in frames]
    total = bubbles[0]
    for bubble in bubbles[1:]:
        total = total + bubble
    sigma2 = field_ops.sigma_norm_squared(total)
    items = [
        ProfileItem(
            frame=frame,
            profile=phi,
            eps=0.0,
            sigma_share=field_ops.sigma_norm_squared(bubble) / sigma2,
        )
        for frame, bubble in zip(frames, bubbles)
    ]
    return total, items


def plant_two_bubbles(
    grid: Grid, N: int = 64, separation: float = 16.0, width: float = 1.0 / np.sqrt(2.0)
) -> Tuple[Field, List[ProfileItem]]:
    """Fixture de duas bolhas gaussianas em x = -separation/2 e +separation/2 (eixo 1)."""
    frames = []
    for sign in (-1.0, 1.0):
        center = np.zeros(grid.d)
        center[0] = 0.5 * sign * separation
        frames.append(Frame.concentrating(0.0, center, N, default_nprime(N, center)))
    return plant_bubbles(gaussian_profile(grid, width), frames)


def frame_score_sweep(
    phi: Field, base: Frame, partners: Sequence[Frame]
) -> List[Tuple[float, float]]:
    """(escore, defeito Sigma) de pares plantados (base, parceiro)."""
    results = []
    for partner in partners:
        total, items = plant_bubbles(phi, [base, partner])
        report = decoupling_audit(total, items, Field.zeros(phi.grid))
        results.append((frame_score(base, partner), report.sigma_defect))
    return results


def _rescaled_solution(
    phi: Field, frame: Frame, T: float, steps: int, mu: int, p: float, solver_dt: float
) -> List[Field]:
    """v(tau_j), tau_j = j T / steps para j = -steps..steps (solução sem potencial)."""
    d = phi.grid.d
    dtau = T / steps
    if mu == 0:
        return [free_propagate(phi, j * dtau) for j in range(-steps, steps + 1)]

    cfg = SolverConfig(
        mu=mu,
        p=p,
        dt=min(solver_dt, dtau),
        t_end=T,
        potential=Potential(kind="free"),
        nonlinear_scale=float(frame.N) ** (p * (d - 2) / 2.0 - 2.0),
        snapshot_interval=dtau,
    )
    forward = evolve(phi, cfg)
    backward = time_reversed(phi, cfg)
    for result in (forward, backward):
        if result.status != "completed" or len(result.trajectory) != steps + 1:
            raise NumericalFailure(
                f"Solução reescalada v não completou a janela (status={result.status})",
                result.to_dict(),
            )
    return list(reversed(backward.trajectory.fields[1:])) + forward.trajectory.fields


def frequency_cutoff(v: Field, scale: float) -> Field:
    """P_{<=M} de Fourier: multiplicador phi(|k|/M)."""
    return field_ops.fourier_multiply(v, hermite.smooth_cutoff(np.sqrt(v.grid.k2) / scale))


def build_bubble_approximation(
    phi: Field,
    fr: Frame,
    T: float,
    mu: int = 0,
    p: Optional[float] = None,
    lattice_dt: Optional[float] = None,
    tail: float = 2.0,
    solver_dt: float = 1e-3,
) -> BubbleTrajectory:
    """
    Solução aproximada: dentro da janela |t - t_n| <= T N^-2,
    e^{-i(t - t_n)|x0|^2/2} G S P_{<=N~'} v(N^2 (t - t_n)); fora dela, fluxo linear harmônico.

    Args:
        phi: Perfil (dado inicial de v)
        fr: Frame concentrado
        T: Meia largura da janela em unidades de N^-2
        mu, p: Não linearidade de v (mu = 0: v linear livre)
        lattice_dt: Passo da rede temporal (padrão N^-2/64, deve dividir a janela)
        tail: Comprimento de cada cauda linear em unidades de N^-2
        solver_dt: Passo máximo do solver de v

    Raises:
        DomainRejection: Frame identidade, janela inválida ou suporte fora da grade
    """
    if fr.is_identity:
        raise DomainRejection("A solução aproximada exige um frame concentrado")
    if not T > 0 or tail < 0:
        raise DomainRejection(f"Janela inválida: T={T}, cauda={tail}")
    grid = phi.grid
    power = critical_power(grid.d) if p is None else p
    scale = fr.N**-2
    h = scale / LATTICE_DIVISOR if lattice_dt is None else float(lattice_dt)
    steps = int(round(T * scale / h))
    if steps < 1 or abs(steps * h - T * scale) > 1e-9 * T * scale:
        raise DomainRejection(
            f"Passo da rede {h} não divide a janela T N^-2 = {T * scale}",
            {"lattice_dt": h, "window": T * scale},
        )
    tail_steps = int(round(tail * scale / h))
    reach = 2.0 / fr.Nprime + float(np.max(np.abs(fr.x0)) if fr.x0 else 0.0)
    if reach >= grid.L:
        raise DomainRejection(f"Janela do frame sai da grade (alcance {reach:.3f} >= L)")

    v = _rescaled_solution(phi, fr, T, steps, mu, power, solver_dt)
    cutoff_scale = np.sqrt(fr.N / fr.Nprime)
    center_sq = float(np.sum(np.square(fr.x0))) if fr.x0 else 0.0
    power_N = fr.N ** _scale_power(grid.d)

    window_fields = []
    for j, vj in enumerate(v):
        offset = (j - steps) * h
        shaped = cutoff_apply(frequency_cutoff(vj, cutoff_scale), fr.N, fr.Nprime)
        concentrated = field_ops.compress(shaped, fr.N, fr.x0) * power_N
        window_fields.append(concentrated * np.exp(-0.5j * offset * center_sq))

    before = []
    current = window_fields[0]
    for _ in range(tail_steps):
        current = harmonic_propagate(current, -h)
        before.append(current)
    after = []
    current = window_fields[-1]
    for _ in range(tail_steps):
        current = harmonic_propagate(current, h)
        after.append(current)

    fields = list(reversed(before)) + window_fields + after
    offsets = np.arange(-(steps + tail_steps), steps + tail_steps + 1) * h
    in_window = np.abs(offsets) <= T * scale * (1.0 + 1e-12)
    logger.debug(
        f"Aproximação concentrada: N={fr.N}, T={T}, {len(fields)} tempos, dt={h:.3e}"
    )
    return BubbleTrajectory(
        times=fr.t + offsets, fields=fields, frame=fr, T=T, in_window=in_window
    )


def linear_trajectory(f: Field, times: Sequence[float]) -> BubbleTrajectory:
    """e^{-itH} f numa rede de tempos (solução exata da equação linear)."""
    times = np.asarray(times, dtype=float)
    fields = [harmonic_propagate(f, t) for t in times]
    return BubbleTrajectory(
        times=times,
        fields=fields,
        frame=Frame.identity(f.grid.d),
        T=0.0,
        in_window=np.ones(times.size, dtype=bool),
    )


def approximation_residual(
    traj: BubbleTrajectory, mu: int = 0, p: Optional[float] = None
):
    """
    e = i d_t v - H v - mu |v|^p v por diferença centrada, com proxy ||H^(1/2) e||.

    Raises:
        DomainRejection: Rede não uniforme ou mais grossa que N^-2/32
    """
    if len(traj) < 3:
        raise DomainRejection("Resíduo exige ao menos 3 tempos")
    steps = np.diff(traj.times)
    h = float(steps[0])
    if np.any(np.abs(steps - h) > 1e-9 * abs(h)) or h <= 0:
        raise DomainRejection("Rede temporal não uniforme")
    limit = traj.frame.N**-2 / RESIDUAL_LATTICE_DIVISOR
    if h > limit * (1.0 + 1e-12):
        raise DomainRejection(
            f"Rede temporal grossa demais: dt={h:.3e} > N^-2/32 = {limit:.3e}",
            {"lattice_dt": h, "limit": limit},
        )

    grid = traj.fields[0].grid
    power = critical_power(grid.d) if p is None else p
    residuals = []
    for j in range(1, len(traj) - 1):
        u = traj.fields[j]
        derivative = (traj.fields[j + 1].values - traj.fields[j - 1].values) / (2.0 * h)
        error = (
            1j * derivative
            - field_ops.apply_h(u).values
            - mu * np.abs(u.values) ** power * u.values
        )
        residuals.append(field_ops.h_half_norm(Field(grid, error)))
    residuals = np.array(residuals)
    interior = traj.in_window[1:-1]
    return ResidualReport(
        times=traj.times[1:-1],
        residuals=residuals,
        in_window=interior,
        lattice_dt=h,
        window_aggregate=float(h * np.sum(residuals[interior])),
        outside_aggregate=float(h * np.sum(residuals[~interior])),
    )
