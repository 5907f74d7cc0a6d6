"""
Suítes de verificação de invariantes executadas por `verify --suite`.

Cada verificação mede um defeito e o compara com a sua tolerância; exceções
viram verificações reprovadas com a mensagem no detalhe.
"""

import logging
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

from app.core.field_io import read_field, write_field
from app.models.grid import Field, Grid
from app.models.profile import Frame
from app.models.solver import SolverConfig
from app.services import diagnostics, field_ops, hermite, nls_solver, profiles, propagators

logger = logging.getLogger(__name__)

SUITE_NAMES = ("core", "spectral", "profiles", "all")


@dataclass
class CheckResult:
    """Resultado de uma verificação."""

    name: str
    value: float
    tolerance: float
    passed: bool
    seconds: float = 0.0
    detail: str = ""

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "seconds": self.seconds,
            "detail": self.detail,
        }


@dataclass
class SuiteReport:
    """Resultados de uma suíte."""

    suite: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> dict:
        """Converte o objeto para dicionário."""
        return {
            "suite": self.suite,
            "passed": self.passed,
            "failures": self.failures,
            "checks": [check.to_dict() for check in self.checks],
        }


def _line_grid() -> Grid:
    return Grid(d=1, L=16.0, n=256)


def _h0(grid: Grid) -> Field:
    return Field(grid, np.pi ** (-grid.d / 4.0) * np.exp(-0.5 * grid.r2))


def _smooth_fields(grid: Grid, count: int, seed: int = 7) -> List[Field]:
    """Gaussianas moduladas com centros, larguras e fases aleatórios."""
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(count):
        center = rng.uniform(-1.5, 1.5, grid.d)
        width = rng.uniform(0.6, 1.2)
        momentum = rng.uniform(-1.0, 1.0, grid.d)
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, center))
        phase = sum(k * x for k, x in zip(momentum, grid.coords))
        values = np.exp(-0.5 * r2 / width**2 + 1j * phase)
        f = Field(grid, values)
        fields.append(f * (1.0 / np.sqrt(field_ops.sigma_norm_squared(f))))
    return fields


def _relative(a: Field, b: Field) -> float:
    return field_ops.l2_norm(a - b) / max(field_ops.l2_norm(b), 1e-300)


# Suíte core: campos, serialização, motor não linear e diagnósticos


def check_parseval() -> Tuple[float, float]:
    f = _smooth_fields(_line_grid(), 1)[0]
    physical = field_ops.l2_norm(f)
    return abs(field_ops.fourier_l2_norm(f) - physical) / physical, 1e-12


def check_quadratic_form() -> Tuple[float, float]:
    defect = 0.0
    for f in _smooth_fields(_line_grid(), 10):
        quadratic = float(np.real(field_ops.inner(field_ops.apply_h(f), f)))
        half_sigma = 0.5 * field_ops.sigma_norm_squared(f)
        defect = max(defect, abs(quadratic - half_sigma) / half_sigma)
    return defect, 1e-8


def check_nlsh1_roundtrip() -> Tuple[float, float]:
    f = _smooth_fields(Grid(d=2, L=8.0, n=32), 1)[0]
    with tempfile.TemporaryDirectory() as tmp:
        restored = read_field(write_field(f, Path(tmp) / "field.nlsh"))
    identical = restored.grid == f.grid and restored.values.tobytes() == f.values.tobytes()
    return (0.0 if identical else 1.0), 0.0


def _defocusing_run():
    grid = _line_grid()
    u0 = Field(grid, 0.5 * np.exp(-0.5 * grid.r2))
    cfg = SolverConfig(mu=1, p=4.0, dt=1e-3, t_end=0.5)
    return nls_solver.evolve(u0, cfg)


def check_mass_conservation() -> Tuple[float, float]:
    return _defocusing_run().series.relative_drift("mass"), 1e-10


def check_energy_conservation() -> Tuple[float, float]:
    return _defocusing_run().series.relative_drift("energy"), 1e-6


def check_strichartz_constant() -> Tuple[float, float]:
    f = _h0(_line_grid())
    trajectory = diagnostics.lattice_trajectory([f] * 5, np.linspace(0.0, 1.0, 5))
    exact = field_ops.lp_integral(f, 6.0)
    return abs(diagnostics.strichartz_norm(trajectory) - exact) / exact, 1e-12


# Suíte spectral: Hermite e propagadores


def check_eigenfunction_phase() -> Tuple[float, float]:
    f = _h0(_line_grid())
    defect = 0.0
    for t in (0.1, 1.0, np.pi / 2, 3.0):
        expected = f * np.exp(-0.5j * t)
        defect = max(defect, _relative(propagators.harmonic_propagate(f, t), expected))
    return defect, 1e-8


def check_parity() -> Tuple[float, float]:
    defect = 0.0
    for f in _smooth_fields(_line_grid(), 5, seed=11):
        expected = propagators.parity(f) * np.exp(-0.5j * np.pi)
        evolved = propagators.harmonic_propagate(f, np.pi)
        defect = max(defect, field_ops.l2_norm(evolved - expected))
    return defect, 1e-6


def check_lens_vs_hermite() -> Tuple[float, float]:
    f = _smooth_fields(_line_grid(), 1, seed=3)[0]
    lens = propagators.propagate(f, 1.0, method="lens")
    return _relative(propagators.propagate(f, 1.0, method="hermite"), lens), 1e-7


def check_lens_vs_mehler() -> Tuple[float, float]:
    f = _smooth_fields(_line_grid(), 1, seed=3)[0]
    lens = propagators.propagate(f, 1.0, method="lens")
    return _relative(propagators.propagate(f, 1.0, method="mehler"), lens), 1e-4


def check_dispersive_bound() -> Tuple[float, float]:
    grid = _line_grid()
    times = np.linspace(0.15, 3.0, 20)
    tests = [_h0(grid), Field(grid, np.exp(-2.0 * grid.r2)), Field(grid, np.exp(-0.1 * grid.r2))]
    worst = max(float(np.max(propagators.dispersive_ratio(f, times))) for f in tests)
    return worst, (2.0 * np.pi) ** -0.5 * 1.05


def check_observable_identity() -> Tuple[float, float]:
    f = _smooth_fields(_line_grid(), 1, seed=5)[0]
    defect = max(
        propagators.heisenberg_observables(f, t).norm_identity_defect for t in (0.3, 1.0, 2.5)
    )
    return defect, 1e-7


def check_hermite_reconstruction() -> Tuple[float, float]:
    f = _smooth_fields(_line_grid(), 1, seed=9)[0]
    return _relative(hermite.hermite_synthesize(hermite.hermite_analyze(f)), f), 1e-8


# Suíte profiles: frames, extração e desacoplamento


def check_frame_inverse() -> Tuple[float, float]:
    grid = Grid(d=1, L=8.0, n=1024)
    phi = profiles.gaussian_profile(grid)
    frame = Frame.concentrating(0.3, [0.5], 8, 4)
    restored = profiles.frame_inverse(frame, profiles.frame_apply(frame, phi))
    return _relative(restored, profiles.cutoff_apply(phi, frame.N, frame.Nprime)), 1e-8


def check_plant_and_recover() -> Tuple[float, float]:
    grid = Grid(d=1, L=8.0, n=1024)
    frame = Frame.concentrating(0.5, [0.5], 8, 4)
    planted, _ = profiles.plant_bubbles(profiles.gaussian_profile(grid), [frame])
    item = profiles.extract_bubble(planted, eps=0.2)
    if item is None or item.frame.is_identity:
        return float("inf"), 1.0
    scale_steps = abs(np.log2(item.frame.N / frame.N))
    offset = abs(item.frame.x0[0] - frame.x0[0]) * frame.N / 2.0
    return max(scale_steps, offset), 1.0


def check_orthogonal_decoupling() -> Tuple[float, float]:
    grid = Grid(d=1, L=16.0, n=8192)
    total, items = profiles.plant_two_bubbles(grid)
    report = profiles.decoupling_audit(total, items, Field.zeros(grid))
    return report.sigma_defect, 0.05


SUITES: Dict[str, List[Callable[[], Tuple[float, float]]]] = {
    "core": [
        check_parseval,
        check_quadratic_form,
        check_nlsh1_roundtrip,
        check_mass_conservation,
        check_energy_conservation,
        check_strichartz_constant,
    ],
    "spectral": [
        check_eigenfunction_phase,
        check_parity,
        check_lens_vs_hermite,
        check_lens_vs_mehler,
        check_dispersive_bound,
        check_observable_identity,
        check_hermite_reconstruction,
    ],
    "profiles": [
        check_frame_inverse,
        check_plant_and_recover,
        check_orthogonal_decoupling,
    ],
}


def run_check(check: Callable[[], Tuple[float, float]]) -> CheckResult:
    name = check.__name__.removeprefix("check_")
    start = time.perf_counter()
    try:
        value, tolerance = check()
        passed = bool(np.isfinite(value) and value <= tolerance)
        detail = ""
    except Exception as e:
        logger.error(f"Verificação {name} falhou com exceção: {e}", exc_info=True)
        value, tolerance, passed, detail = float("nan"), 0.0, False, f"{type(e).__name__}: {e}"
    seconds = time.perf_counter() - start
    status = "ok" if passed else "FALHOU"
    logger.info(f"[{status}] {name}: {value:.3e} (tolerância {tolerance:.1e}, {seconds:.2f}s)")
    return CheckResult(
        name=name,
        value=float(value),
        tolerance=float(tolerance),
        passed=passed,
        seconds=seconds,
        detail=detail,
    )


def run_suite(suite: str) -> SuiteReport:
    """
    Executa uma suíte ('core', 'spectral', 'profiles' ou 'all').

    Raises:
        KeyError: Para nome de suíte desconhecido
    """
    names = list(SUITES) if suite == "all" else [suite]
    report = SuiteReport(suite=suite)
    for name in names:
        logger.info(f"Executando suíte {name}...")
        report.checks.extend(run_check(check) for check in SUITES[name])
    logger.info(f"Suíte {suite}: {len(report.checks)} verificações, falhas: {report.failures}")
    return report
