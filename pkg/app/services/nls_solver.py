"""
Motor não linear: splitting de Strang/Lie com o propagador exato, monitores de
blowup, solver de Picard (Duhamel) e a transformação de Avron-Herbst.
"""

import logging
from typing import Iterator, Optional, Tuple

import numpy as np

from app.core.errors import ConvergenceError, DomainRejection, NonFiniteValueError
from app.models.grid import Field, Grid
from app.models.solver import (
    DiagnosticsRow,
    DiagnosticsSeries,
    EvolutionResult,
    Potential,
    SolverConfig,
    Trajectory,
    strichartz_exponent,
)
from app.services import field_ops, hermite
from app.services.propagators import free_propagate, harmonic_propagate

logger = logging.getLogger(__name__)

SNAPSHOT_RTOL = 1e-9


def capped_sin_potential(grid: Grid, amplitude: float = 1.0, radius: Optional[float] = None):
    """
    V(x) = A sin(x_1) chi(|x|/R), com chi o corte suave (1 em |x| <= R, 0 em |x| >= 2R).

    Raises:
        DomainRejection: Se o suporte 2R não couber na caixa
    """
    R = grid.L / 4.0 if radius is None else float(radius)
    if not 0 < 2.0 * R < grid.L:
        raise DomainRejection(f"Raio do potencial R={R} incompatível com L={grid.L}", {"R": R})
    return amplitude * np.sin(grid.coords[0]) * hermite.smooth_cutoff(np.sqrt(grid.r2) / R)


def potential_values(grid: Grid, potential: Potential) -> np.ndarray:
    """Amostra real do potencial externo na grade."""
    if potential.kind == "harmonic":
        return 0.5 * grid.r2
    if potential.kind == "free":
        return np.zeros(grid.shape)
    if potential.kind == "stark":
        if len(potential.stark_field) != grid.d:
            raise DomainRejection(
                f"Campo de Stark com dimensão {len(potential.stark_field)} != d={grid.d}"
            )
        return sum(e * x for e, x in zip(potential.stark_field, grid.coords))
    if potential.values is not None:
        values = np.asarray(potential.values, dtype=float)
        if values.shape != grid.shape:
            raise DomainRejection(f"Potencial amostrado com forma {values.shape} != {grid.shape}")
        return values
    return capped_sin_potential(grid, potential.amplitude, potential.radius)


def potential_bound(grid: Grid, values: np.ndarray) -> float:
    """V_max = ||V||_inf + ||grad V||_inf (gradiente espectral)."""
    gradient = field_ops.gradient(Field(grid, values))
    slope = max(float(np.max(np.abs(g.values))) for g in gradient)
    return float(np.max(np.abs(values))) + slope


def _linear_step(values: np.ndarray, grid: Grid, dt: float, harmonic: bool) -> np.ndarray:
    f = Field(grid, values)
    evolved = harmonic_propagate(f, dt) if harmonic else free_propagate(f, dt)
    return evolved.values


def _phase_step(values: np.ndarray, extra: np.ndarray, coupling: float, p: float, dt: float):
    """Fluxo exato de i u_t = (V_extra + c |u|^p) u; |u| é invariante."""
    return values * np.exp(-1j * (extra + coupling * np.abs(values) ** p) * dt)


def nonlinear_phase_step(u: Field, dt: float, mu: float, p: float) -> Field:
    """
    Fluxo exato de i u_t = mu |u|^p u: u e^{-i mu |u|^p dt}.

    Returns:
        Campo com o mesmo módulo pontual
    """
    if dt == 0:
        return u
    return u.with_values(_phase_step(u.values, 0.0, mu, p, dt))


class _Splitting:
    """Operadores de um passo para uma configuração e grade fixas."""

    def __init__(self, grid: Grid, cfg: SolverConfig):
        self.grid = grid
        self.cfg = cfg
        self.harmonic = cfg.potential.is_harmonic
        self.V = potential_values(grid, cfg.potential)
        self.extra = np.zeros(grid.shape) if self.harmonic else self.V
        if cfg.potential.kind == "bounded":
            logger.debug(f"Potencial limitado com V_max={potential_bound(grid, self.V):.4f}")

    def step(self, values: np.ndarray, dt: float) -> np.ndarray:
        cfg = self.cfg
        if cfg.order == 1:
            values = _phase_step(values, self.extra, cfg.coupling, cfg.p, dt)
            return _linear_step(values, self.grid, dt, self.harmonic)
        values = _phase_step(values, self.extra, cfg.coupling, cfg.p, 0.5 * dt)
        values = _linear_step(values, self.grid, dt, self.harmonic)
        return _phase_step(values, self.extra, cfg.coupling, cfg.p, 0.5 * dt)

    def kinetic(self, values: np.ndarray) -> float:
        return 0.5 * field_ops.gradient_norm_squared(values, self.grid)

    def energy(self, values: np.ndarray) -> float:
        density = np.abs(values) ** 2
        potential = field_ops.integrate(self.grid, self.V * density)
        nonlinear = field_ops.integrate(self.grid, density ** (0.5 * self.cfg.p + 1.0))
        return self.kinetic(values) + potential + 2.0 * self.cfg.coupling / (
            self.cfg.p + 2.0
        ) * nonlinear

    def row(self, values: np.ndarray, t: float, cumulative: float) -> DiagnosticsRow:
        grid = self.grid
        density = np.abs(values) ** 2
        kinetic = self.kinetic(values)
        potential = field_ops.integrate(grid, self.V * density)
        virial = field_ops.integrate(grid, grid.r2 * density)
        energy = self.energy(values)
        return DiagnosticsRow(
            t=float(t),
            mass=field_ops.integrate(grid, density),
            energy=energy,
            e_delta=energy - potential,
            sigma_norm=float(np.sqrt(2.0 * kinetic + virial)),
            sup_norm=float(np.sqrt(np.max(density))),
            virial_f=virial,
            strichartz_cum=cumulative,
        )


def strang_step(u: Field, cfg: SolverConfig, dt: Optional[float] = None) -> Field:
    """
    Um passo de splitting (Strang se order = 2, Lie se order = 1).

    Com mu = 0 reduz-se exatamente ao propagador linear.
    """
    splitting = _Splitting(u.grid, cfg)
    return u.with_values(splitting.step(u.values, cfg.dt if dt is None else dt))


def nls_energy(u: Field, cfg: SolverConfig) -> float:
    """E(u) = integral de 1/2 |grad u|^2 + V |u|^2 + 2 mu/(p+2) |u|^(p+2)."""
    return _Splitting(u.grid, cfg).energy(u.values)


def measure_row(u: Field, cfg: SolverConfig, t: float = 0.0, cumulative: float = 0.0):
    """Linha de diagnósticos para um campo isolado."""
    return _Splitting(u.grid, cfg).row(u.values, t, cumulative)


def evolve(u0: Field, cfg: SolverConfig) -> EvolutionResult:
    """
    Evolui u0 até cfg.t_end com passo adaptativo e monitores de blowup.

    Args:
        u0: Dado inicial (numericamente em Sigma)
        cfg: Configuração do solver

    Returns:
        EvolutionResult com a série de diagnósticos (uma linha por passo aceito)
    """
    grid = u0.grid
    splitting = _Splitting(grid, cfg)
    q = strichartz_exponent(grid.d, cfg.p)

    values = u0.values
    t = 0.0
    dt = cfg.dt
    cumulative = 0.0
    integrand = field_ops.integrate(grid, np.abs(values) ** q)
    energy = splitting.energy(values)
    grad0 = np.sqrt(2.0 * splitting.kinetic(values))

    series = DiagnosticsSeries()
    series.append(splitting.row(values, t, cumulative))
    trajectory = None
    snapshot_index = 1
    if cfg.snapshot_interval is not None:
        trajectory = Trajectory()
        trajectory.append(0.0, u0)

    status = "completed"
    reason = None
    steps = 0
    rejected = 0
    horizon = cfg.t_end * (1.0 - 1e-12)
    logger.info(
        f"Iniciando evolução: d={grid.d}, n={grid.n}, mu={cfg.mu}, p={cfg.p}, "
        f"potencial={cfg.potential.kind}, dt={dt}, t_end={cfg.t_end}"
    )

    while t < horizon:
        h = min(dt, cfg.t_end - t)
        next_snapshot = None
        if trajectory is not None:
            next_snapshot = snapshot_index * cfg.snapshot_interval
            if next_snapshot <= cfg.t_end * (1.0 + SNAPSHOT_RTOL):
                h = min(h, next_snapshot - t)

        try:
            trial = splitting.step(values, h)
        except NonFiniteValueError:
            trial = None
        if trial is None or not np.all(np.isfinite(trial)):
            status, reason = "blowup_detected", "non_finite"
            logger.warning(
                f"Valores não finitos em t={t + h:.6f}; mantendo o último estado finito"
            )
            break

        trial_energy = splitting.energy(trial)
        scale = max(abs(energy), splitting.kinetic(values), 1e-300)
        defect = abs(trial_energy - energy) / scale
        if cfg.adaptive and defect > cfg.energy_tol:
            dt = 0.5 * dt
            rejected += 1
            logger.debug(f"Defeito de energia {defect:.2e} em t={t:.6f}; dt reduzido para {dt:.3e}")
            if dt < cfg.dt_min:
                status = "blowup_detected" if cfg.focusing else "step_underflow"
                reason = "dt_underflow"
                logger.warning(f"dt abaixo de dt_min={cfg.dt_min} em t={t:.6f}")
                break
            continue

        values = trial
        t += h
        steps += 1
        energy = trial_energy
        trial_integrand = field_ops.integrate(grid, np.abs(values) ** q)
        cumulative += 0.5 * h * (integrand + trial_integrand)
        integrand = trial_integrand
        series.append(splitting.row(values, t, cumulative))

        if next_snapshot is not None and abs(t - next_snapshot) <= SNAPSHOT_RTOL * max(
            1.0, next_snapshot
        ):
            trajectory.append(next_snapshot, Field(grid, values))
            snapshot_index += 1

        grad = np.sqrt(2.0 * splitting.kinetic(values))
        if grad0 > 0 and grad > cfg.grad_factor * grad0:
            status, reason = "blowup_detected", "gradient"
            logger.warning(
                f"||grad u|| = {grad:.3e} excede {cfg.grad_factor} x inicial em t={t:.6f}"
            )
            break
        tail = field_ops.spectral_tail_fraction(Field(grid, values))
        if tail > cfg.tail_tol:
            if cfg.focusing and grad > 2.0 * grad0:
                status, reason = "blowup_detected", "resolution"
            else:
                status, reason = "resolution_lost", "spectral_tail"
            logger.warning(f"Fração espectral na oitava superior {tail:.2e} em t={t:.6f}")
            break

    logger.info(
        f"Evolução encerrada: status={status}, t={t:.6f}, passos={steps}, rejeitados={rejected}"
    )
    return EvolutionResult(
        final=Field(grid, values),
        series=series,
        status=status,
        t_final=t,
        steps=steps,
        rejected_steps=rejected,
        dt_final=dt,
        reason=reason,
        trajectory=trajectory,
    )


def time_reversed(u0: Field, cfg: SolverConfig) -> EvolutionResult:
    """
    Evolução para tempos negativos: u(-t) = conj(v(t)) com v a solução de dado conj(u0).

    Vale para coeficientes reais (potencial real e mu real).
    """
    forward = evolve(u0.conj(), cfg)
    trajectory = None
    if forward.trajectory is not None:
        trajectory = Trajectory(
            times=[-s for s in forward.trajectory.times],
            fields=[f.conj() for f in forward.trajectory.fields],
        )
    return EvolutionResult(
        final=forward.final.conj(),
        series=forward.series,
        status=forward.status,
        t_final=-forward.t_final,
        steps=forward.steps,
        rejected_steps=forward.rejected_steps,
        dt_final=forward.dt_final,
        reason=forward.reason,
        trajectory=trajectory,
    )


def avron_herbst_transform(w: Field, stark_field, t: float) -> Field:
    """
    u(t, x) = e^{-i E.x t - i |E|^2 t^3 / 6} w(t, x + E t^2 / 2).

    Leva a solução w sem potencial à solução com potencial de Stark V = E.x.
    """
    E = np.atleast_1d(np.asarray(stark_field, dtype=float))
    if E.shape != (w.grid.d,):
        raise DomainRejection(f"Campo de Stark com dimensão {E.size} != d={w.grid.d}")
    shifted = field_ops.translate(w, -0.5 * E * t**2)
    linear = sum(e * x for e, x in zip(E, w.grid.coords))
    phase = np.exp(-1j * linear * t - 1j * float(np.dot(E, E)) * t**3 / 6.0)
    return shifted.with_values(phase * shifted.values)


def _picard_propagator(cfg: SolverConfig):
    if cfg.potential.kind == "harmonic":
        return harmonic_propagate
    if cfg.potential.kind == "free":
        return free_propagate
    raise DomainRejection(f"Picard não suporta o potencial {cfg.potential.kind}")


def picard_iterates(u0: Field, t: float, cfg: SolverConfig) -> Iterator[Tuple[int, float, Field]]:
    """
    Iterados da aplicação de Duhamel u = e^{-isH}u0 - i int_0^s e^{-i(s-r)H} F(u(r)) dr.

    A integral usa a regra do trapézio composta em cfg.picard_nodes intervalos;
    e^{-i(s-r)H} = e^{-isH} e^{irH} permite acumular a soma parcial.

    Yields:
        (iteração, resíduo relativo máximo nos nós, iterado em s = t)
    """
    propagate = _picard_propagator(cfg)
    grid = u0.grid
    nodes = np.linspace(0.0, t, cfg.picard_nodes + 1)
    ds = t / cfg.picard_nodes
    current = [propagate(u0, s).values for s in nodes]
    reference = max(field_ops.l2_norm(u0), 1e-300)
    iteration = 0
    while True:
        iteration += 1
        pulled = [
            propagate(Field(grid, cfg.coupling * np.abs(v) ** cfg.p * v), -s).values
            for v, s in zip(current, nodes)
        ]
        accumulated = np.zeros(grid.shape, dtype=np.complex128)
        updated = [current[0]]
        for j in range(1, len(nodes)):
            accumulated = accumulated + 0.5 * ds * (pulled[j - 1] + pulled[j])
            updated.append(propagate(u0 - Field(grid, 1j * accumulated), nodes[j]).values)
        residual = max(
            np.sqrt(field_ops.integrate(grid, np.abs(new - old) ** 2)) / reference
            for new, old in zip(updated, current)
        )
        current = updated
        if not np.isfinite(residual):
            raise ConvergenceError("Iteração de Picard divergiu", float(residual), iteration)
        logger.debug(f"Picard iteração {iteration}: resíduo {residual:.3e}")
        yield iteration, float(residual), Field(grid, current[-1])


def picard_local_solve(u0: Field, t: float, cfg: SolverConfig) -> Field:
    """
    Ponto fixo da aplicação de Duhamel discretizada.

    Raises:
        ConvergenceError: Sem convergência em cfg.picard_max iterações (t grande demais)
    """
    residual = np.inf
    iteration = 0
    try:
        for iteration, residual, state in picard_iterates(u0, t, cfg):
            if residual < cfg.picard_tol:
                logger.info(
                    f"Picard convergiu em {iteration} iterações (resíduo {residual:.2e})"
                )
                return state
            if iteration >= cfg.picard_max:
                break
    except NonFiniteValueError as e:
        raise ConvergenceError(f"Iterado de Picard não finito: {e}", residual, iteration)
    logger.error(f"Picard sem convergência em t={t}: resíduo {residual:.2e}")
    raise ConvergenceError(
        f"Picard não convergiu em {iteration} iterações (resíduo {residual:.2e})",
        float(residual),
        iteration,
    )
