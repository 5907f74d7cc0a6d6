"""
Testes dos propagadores lineares e da identidade dos observáveis de Heisenberg.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.errors import DomainRejection
from app.models.grid import Field, Grid
from app.services import field_ops, hermite, propagators
from tests.conftest import gaussian, h0, random_smooth, relative_l2


def _hermite_mode(grid: Grid, m: int) -> Field:
    return Field(grid, hermite.hermite_table(grid.axis, m)[m])


class TestTimeReduction:
    def test_reduces_into_half_open_interval(self):
        m, r = propagators.reduce_time(3 * np.pi)
        assert m == 1
        assert r == pytest.approx(np.pi)

    def test_negative_times(self):
        m, r = propagators.reduce_time(-0.5)
        assert m == 0 and r == -0.5

    def test_lens_gamma_small_time(self):
        factors = propagators.lens_factors(1e-3)
        assert abs(factors.gamma + 1e-3 / 4) < 1e-8
        assert factors.s == pytest.approx(np.sin(1e-3))


class TestHarmonicPropagator:
    @pytest.mark.parametrize("m", [0, 1, 3, 6])
    def test_eigenfunction_phase(self, line_grid, m):
        f = _hermite_mode(line_grid, m)
        t = 1.3
        evolved = propagators.harmonic_propagate(f, t)
        assert relative_l2(evolved, f * np.exp(-1j * t * (m + 0.5))) < 1e-8

    def test_half_period_is_parity(self, line_grid):
        f = random_smooth(line_grid, 3)
        evolved = propagators.harmonic_propagate(f, np.pi)
        expected = propagators.parity(f) * np.exp(-0.5j * np.pi)
        assert relative_l2(evolved, expected) < 1e-12

    def test_full_period_in_three_dimensions(self, cube_grid):
        f = gaussian(cube_grid, width=1.2, center=[0.5, -0.3, 0.2])
        evolved = propagators.harmonic_propagate(f, 2 * np.pi)
        assert relative_l2(evolved, f * -1.0) < 1e-12

    def test_zero_time_is_identity(self, line_grid):
        f = random_smooth(line_grid, 4)
        assert relative_l2(propagators.harmonic_propagate(f, 0.0), f) == 0.0

    @settings(max_examples=15, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        s=st.floats(-3.0, 3.0, allow_nan=False),
        t=st.floats(-3.0, 3.0, allow_nan=False),
    )
    def test_group_law_and_unitarity(self, seed, s, t):
        grid = Grid(d=1, L=16.0, n=256)
        f = random_smooth(grid, seed)
        composed = propagators.harmonic_propagate(propagators.harmonic_propagate(f, t), s)
        direct = propagators.harmonic_propagate(f, s + t)
        assert relative_l2(composed, direct) < 1e-10
        assert field_ops.l2_norm(direct) == pytest.approx(field_ops.l2_norm(f), rel=1e-10)

    def test_matches_hermite_multiplier(self, line_grid):
        f = random_smooth(line_grid, 5)
        lens = propagators.propagate(f, 1.0, method="lens")
        spectral = propagators.propagate(f, 1.0, method="hermite")
        assert relative_l2(lens, spectral) < 1e-7

    def test_reflected_time_has_same_modulus(self, line_grid):
        f = gaussian(line_grid, width=0.8, center=1.0)
        t = 0.9
        forward = propagators.harmonic_propagate(f, t)
        reflected = propagators.harmonic_propagate(f, 2 * np.pi - t)
        np.testing.assert_allclose(np.abs(reflected.values), np.abs(forward.values), atol=1e-9)

    def test_substep_respects_aliasing_bound(self, line_grid):
        tau = propagators.max_lens_substep(h0(line_grid))
        gamma = abs(propagators.lens_factors(tau).gamma)
        assert gamma * line_grid.L * line_grid.dx <= np.pi / 4 + 1e-12


class TestParity:
    def test_mirrors_gaussian(self, line_grid):
        mirrored = propagators.parity(gaussian(line_grid, center=1.0))
        np.testing.assert_allclose(
            mirrored.values, gaussian(line_grid, center=-1.0).values, atol=1e-12
        )

    def test_is_involution(self):
        f = random_smooth(Grid(d=2, L=8.0, n=32), 6)
        twice = propagators.parity(propagators.parity(f))
        assert twice.values.tobytes() == f.values.tobytes()


class TestFreePropagator:
    def test_spreads_gaussian_analytically(self):
        grid = Grid(d=1, L=32.0, n=1024)
        t = 1.5
        evolved = propagators.free_propagate(gaussian(grid), t)
        expected = np.exp(-0.5 * grid.axis**2 / (1 + 1j * t)) / np.sqrt(1 + 1j * t)
        assert relative_l2(evolved, Field(grid, expected)) < 1e-10


class TestMehler:
    def test_oracle_on_ground_state(self, line_grid):
        f = h0(line_grid)
        evolved = propagators.propagate(f, np.pi / 2, method="mehler")
        assert relative_l2(evolved, f * np.exp(-0.25j * np.pi)) < 1e-4

    def test_oracle_matches_lens(self, line_grid):
        f = random_smooth(line_grid, 7)
        oracle = propagators.mehler_apply_oracle(f, 1.0)
        assert relative_l2(oracle, propagators.harmonic_propagate(f, 1.0)) < 1e-4

    def test_oracle_rejects_times_near_half_period(self, line_grid):
        with pytest.raises(DomainRejection):
            propagators.mehler_apply_oracle(h0(line_grid), 3.1)

    def test_kernel_modulus(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(50, 3))
        y = rng.normal(size=(50, 3))
        t = 0.7
        kernel = propagators.mehler_kernel(x, y, t)
        np.testing.assert_allclose(np.abs(kernel), (2 * np.pi * np.sin(t)) ** -1.5, rtol=1e-12)

    def test_unknown_method(self, line_grid):
        with pytest.raises(DomainRejection):
            propagators.propagate(h0(line_grid), 1.0, method="crank")


class TestDispersive:
    @pytest.mark.parametrize("width", [0.25, 0.5, 1.0])
    def test_ratio_below_kernel_bound(self, width):
        grid = Grid(d=1, L=16.0, n=512)
        ratios = propagators.dispersive_ratio(gaussian(grid, width=width), [0.3, 1.0, 2.0, 2.8])
        assert np.all(ratios <= (2 * np.pi) ** -0.5 * 1.05)

    def test_rejects_multiples_of_pi(self, line_grid):
        with pytest.raises(DomainRejection):
            propagators.dispersive_ratio(h0(line_grid), [1.0, np.pi])

    def test_zero_field(self, line_grid):
        ratios = propagators.dispersive_ratio(Field.zeros(line_grid), [1.0])
        assert ratios.tolist() == [0.0]


class TestObservables:
    def test_identity_at_time_zero(self, line_grid):
        report = propagators.heisenberg_observables(random_smooth(line_grid, 8), 0.0)
        assert report.defect < 1e-9
        assert report.norm_identity_defect < 1e-9

    @pytest.mark.parametrize("t", [np.pi / 2, 1.0, 2.4])
    def test_closed_form(self, line_grid, t):
        report = propagators.heisenberg_observables(random_smooth(line_grid, 9), t)
        assert report.defect < 1e-7
        assert report.norm_identity_defect < 1e-7

    def test_quarter_period_swaps_roles(self, line_grid):
        f = gaussian(line_grid, width=0.7, center=0.5)
        report = propagators.heisenberg_observables(f, np.pi / 2)
        (position,) = report.position
        (gradient,) = field_ops.gradient(f)
        assert relative_l2(position, gradient * -1j) < 1e-7
