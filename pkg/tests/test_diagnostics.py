"""
Testes dos diagnósticos espaço-temporais e da série em CSV.
"""

import numpy as np
import pytest
from scipy import integrate

from app.core.errors import DomainRejection
from app.models.grid import Field, Grid
from app.models.solver import SolverConfig, Trajectory
from app.services import diagnostics, field_ops, nls_solver
from app.services.propagators import harmonic_propagate
from tests.conftest import h0


def _ground_state_trajectory(grid: Grid) -> Trajectory:
    times = np.linspace(0.0, 1.0, 11)
    fields = [harmonic_propagate(h0(grid), t) for t in times]
    return diagnostics.lattice_trajectory(fields, times)


class TestStrichartz:
    def test_stationary_modulus(self, line_grid):
        trajectory = _ground_state_trajectory(line_grid)
        exact = field_ops.lp_integral(h0(line_grid), 6.0)
        assert diagnostics.strichartz_norm(trajectory) == pytest.approx(exact, rel=1e-7)

    def test_explicit_power(self, line_grid):
        trajectory = _ground_state_trajectory(line_grid)
        exact = field_ops.lp_integral(h0(line_grid), 3.0)
        assert diagnostics.strichartz_norm(trajectory, p=2.0) == pytest.approx(exact, rel=1e-7)

    def test_single_sample_is_zero(self, line_grid):
        trajectory = diagnostics.lattice_trajectory([h0(line_grid)], [0.0])
        assert diagnostics.strichartz_norm(trajectory) == 0.0

    def test_rejects_non_uniform(self, line_grid):
        f = h0(line_grid)
        trajectory = diagnostics.lattice_trajectory([f] * 3, [0.0, 0.1, 0.3])
        with pytest.raises(DomainRejection):
            diagnostics.strichartz_norm(trajectory)


class TestLocalSmoothing:
    def test_matches_radial_quadrature(self):
        grid = Grid(d=1, L=16.0, n=256)
        report = diagnostics.local_smoothing_functional(_ground_state_trajectory(grid), R=1.0)

        def density(x):
            return x**2 * np.exp(-(x**2)) * (1.0 + x**2) ** -1.5 / np.sqrt(np.pi)

        expected, _ = integrate.quad(density, -np.inf, np.inf)
        assert report.functional == pytest.approx(expected, rel=1e-6)
        assert report.bound == pytest.approx(2.0 * np.sqrt(0.5), rel=1e-8)

    def test_ratio_is_scale_stable(self):
        ratios = {}
        for n in (128, 256):
            trajectory = _ground_state_trajectory(Grid(d=1, L=16.0, n=n))
            ratios[n] = [
                diagnostics.local_smoothing_functional(trajectory, R=R).ratio
                for R in (0.5, 1.0, 2.0)
            ]
        assert max(ratios[256]) / min(ratios[256]) < 2.0
        assert max(ratios[256]) < 1.0
        np.testing.assert_allclose(ratios[128], ratios[256], rtol=1e-4)

    def test_scalar_center_is_broadcast(self):
        grid = Grid(d=2, L=8.0, n=32)
        fields = [h0(grid)] * 3
        trajectory = diagnostics.lattice_trajectory(fields, [0.0, 0.5, 1.0])
        report = diagnostics.local_smoothing_functional(trajectory, center=0.5, R=1.0)
        assert report.center == [0.5, 0.5]

    def test_zero_field(self, line_grid):
        zero = Field.zeros(line_grid)
        trajectory = diagnostics.lattice_trajectory([zero, zero], [0.0, 1.0])
        report = diagnostics.local_smoothing_functional(trajectory)
        assert report.functional == 0.0
        assert report.ratio == 0.0

    def test_rejects_invalid_input(self, line_grid):
        trajectory = _ground_state_trajectory(line_grid)
        with pytest.raises(DomainRejection):
            diagnostics.local_smoothing_functional(trajectory, R=0.0)
        with pytest.raises(DomainRejection):
            diagnostics.local_smoothing_functional(
                diagnostics.lattice_trajectory([h0(line_grid)], [0.0])
            )

    def test_mismatched_lists(self, line_grid):
        with pytest.raises(DomainRejection):
            diagnostics.lattice_trajectory([h0(line_grid)], [0.0, 1.0])


class TestSeriesCsv:
    def test_write_and_read(self, line_grid, tmp_path):
        cfg = SolverConfig(mu=1, p=4.0, dt=0.01, t_end=0.05, adaptive=False)
        series = nls_solver.evolve(h0(line_grid), cfg).series
        path = diagnostics.write_series_csv(series, tmp_path / "out" / "series.csv")
        rows = diagnostics.read_series_csv(path)
        assert len(rows) == len(series)
        assert [row["t"] for row in rows] == pytest.approx(series.times.tolist())
        assert rows[-1]["mass"] == float(series.column("mass")[-1])

    def test_rejects_unexpected_header(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("t,mass\n0.0,1.0\n", encoding="utf-8")
        with pytest.raises(DomainRejection):
            diagnostics.read_series_csv(path)
