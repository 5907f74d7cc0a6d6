"""
Testes do cálculo funcional de H na base de Hermite e das projeções de Littlewood-Paley.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.errors import DomainRejection
from app.models.grid import Field, Grid
from app.services import field_ops, hermite
from tests.conftest import h0, random_smooth, relative_l2


class TestBasis:
    def test_discrete_orthonormality(self, line_grid):
        basis = hermite.build_basis(line_grid, 64)
        assert basis.orthonormality_defect < 1e-8
        assert basis.turning_radius + 4.0 <= line_grid.L

    def test_narrow_grid_rejected(self):
        with pytest.raises(DomainRejection):
            hermite.build_basis(Grid(d=1, L=6.0, n=64), 16)

    def test_mode_cap_above_half_n_rejected(self, line_grid):
        with pytest.raises(DomainRejection):
            hermite.build_basis(line_grid, 200)

    def test_default_cap_respects_width(self):
        grid = Grid(d=1, L=8.0, n=256)
        K = hermite.default_mode_cap(grid)
        assert np.sqrt(2 * K + 1) + 4.0 <= grid.L

    def test_eigenvalues_tensorize(self):
        basis = hermite.build_basis(Grid(d=2, L=12.0, n=64), 3)
        eigenvalues = basis.eigenvalues()
        assert eigenvalues[0, 0] == 1.0
        assert eigenvalues[2, 3] == 6.0


class TestAnalyze:
    def test_ground_state_coefficients(self, line_grid):
        spectrum = hermite.hermite_analyze(h0(line_grid))
        coefficients = spectrum.coefficients
        assert coefficients[0] == pytest.approx(1.0, abs=1e-8)
        assert np.max(np.abs(coefficients[1:])) < 1e-8
        assert abs(spectrum.tail) < 1e-8

    def test_first_excited_state(self, line_grid):
        f = Field(line_grid, line_grid.axis * h0(line_grid).values)
        coefficients = hermite.hermite_analyze(f).coefficients
        assert coefficients[1] == pytest.approx(1 / np.sqrt(2), abs=1e-8)
        others = np.delete(np.abs(coefficients), 1)
        assert np.max(others) < 1e-8

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_roundtrip(self, seed):
        grid = Grid(d=1, L=16.0, n=256)
        f = random_smooth(grid, seed)
        restored = hermite.hermite_synthesize(hermite.hermite_analyze(f))
        assert relative_l2(restored, f) < 1e-7

    def test_plancherel(self, line_grid):
        f = random_smooth(line_grid, 4)
        spectrum = hermite.hermite_analyze(f)
        assert spectrum.mass == pytest.approx(field_ops.l2_norm(f) ** 2, rel=1e-10)

    def test_tensorized_ground_state(self):
        grid = Grid(d=2, L=12.0, n=64)
        coefficients = hermite.hermite_analyze(h0(grid), K=8).coefficients
        assert coefficients[0, 0] == pytest.approx(1.0, abs=1e-8)


class TestMultipliers:
    def test_identity_multiplier(self, line_grid):
        f = random_smooth(line_grid, 2)
        result = hermite.apply_spectral_multiplier(f, lambda lam: np.ones_like(lam))
        assert relative_l2(result, f) < 1e-8

    def test_eigenvalue_of_ground_state(self, cube_grid):
        f = h0(cube_grid)
        result = hermite.apply_spectral_multiplier(f, lambda lam: lam, K=6)
        assert relative_l2(result, f * 1.5) < 1e-8

    def test_quadratic_form_identity(self, line_grid):
        f = random_smooth(line_grid, 8)
        half = hermite.apply_spectral_multiplier(f, np.sqrt)
        assert field_ops.l2_norm(half) ** 2 == pytest.approx(
            0.5 * field_ops.sigma_norm_squared(f), rel=1e-8
        )

    def test_composition(self, line_grid):
        f = random_smooth(line_grid, 9)

        def F(lam):
            return np.exp(-0.1 * lam)

        def G(lam):
            return 1.0 / (1.0 + lam)

        composed = hermite.apply_spectral_multiplier(hermite.apply_spectral_multiplier(f, G), F)
        direct = hermite.apply_spectral_multiplier(f, lambda lam: F(lam) * G(lam))
        assert relative_l2(composed, direct) < 1e-9

    def test_self_adjoint(self, line_grid):
        f = random_smooth(line_grid, 10)
        g = random_smooth(line_grid, 11)

        def F(lam):
            return np.cos(lam) / (1.0 + lam)

        left = field_ops.inner(hermite.apply_spectral_multiplier(f, F), g)
        right = field_ops.inner(f, hermite.apply_spectral_multiplier(g, F))
        assert abs(left - right) < 1e-9 * (1.0 + abs(left))

    def test_non_finite_multiplier_rejected(self, line_grid):
        with pytest.raises(DomainRejection):
            hermite.apply_spectral_multiplier(h0(line_grid), lambda lam: 1.0 / (lam - 0.5))


class TestHeat:
    @pytest.mark.parametrize("method", ["hermite", "mehler"])
    @pytest.mark.parametrize("t", [0.1, 1.0, 2.5])
    def test_ground_state_decay(self, line_grid, method, t):
        f = h0(line_grid)
        result = hermite.heat_propagate(f, t, method=method)
        assert relative_l2(result, f * np.exp(-0.5 * t)) < 1e-8

    def test_semigroup(self, line_grid):
        f = random_smooth(line_grid, 12)
        twice = hermite.heat_propagate(hermite.heat_propagate(f, 0.3), 0.7)
        once = hermite.heat_propagate(f, 1.0)
        assert relative_l2(twice, once) < 1e-8

    def test_factorized_matches_multiplier(self, line_grid):
        f = random_smooth(line_grid, 13)
        a = hermite.heat_propagate(f, 0.8, method="mehler")
        b = hermite.heat_propagate(f, 0.8, method="hermite")
        assert relative_l2(a, b) < 1e-7

    @pytest.mark.parametrize("t", [0.1, 0.5, 2.0])
    def test_kernel_dominated_by_free_heat(self, t):
        rng = np.random.default_rng(21)
        x = rng.uniform(-3, 3, size=(200, 2))
        y = rng.uniform(-3, 3, size=(200, 2))
        kernel = hermite.mehler_heat_kernel(x, y, t)
        free = (2 * np.pi * t) ** -1.0 * np.exp(-np.sum((x - y) ** 2, axis=-1) / (2 * t))
        assert np.all(kernel >= 0.0)
        assert np.all(kernel <= free * (1 + 1e-12))

    def test_non_positive_time_rejected(self, line_grid):
        with pytest.raises(DomainRejection):
            hermite.heat_propagate(h0(line_grid), 0.0)


class TestLittlewoodPaley:
    def test_pieces_sum_to_field(self, line_grid):
        f = random_smooth(line_grid, 14)
        pieces = hermite.lp_decomposition(f)
        total = sum((piece.values for piece in pieces.values()), np.zeros(line_grid.shape))
        assert relative_l2(Field(line_grid, total), f) < 1e-8

    def test_square_function_two_sided(self, line_grid):
        f = random_smooth(line_grid, 15)
        mass = field_ops.l2_norm(f)
        square = field_ops.l2_norm(hermite.square_function(f))
        assert mass / np.sqrt(2) * (1 - 1e-9) <= square <= mass * (1 + 1e-9)

    def test_derivative_equivalence(self, line_grid):
        f = random_smooth(line_grid, 16)
        mass = field_ops.l2_norm(f)
        for N, piece in hermite.lp_decomposition(f).items():
            size = field_ops.l2_norm(piece)
            if size < 1e-6 * mass:
                continue
            half = hermite.apply_spectral_multiplier(piece, np.sqrt)
            ratio = field_ops.l2_norm(half) / (N * size)
            assert 0.25 <= ratio <= 4.0, N

    def test_bump_band_support(self, line_grid):
        N = 4
        f = h0(line_grid)
        # h_0 has sqrt(lambda) = 1/sqrt(2), outside [N/2, 2N]
        projected = hermite.littlewood_paley_project(f, N)
        assert field_ops.l2_norm(projected) < 1e-12

    def test_heat_projection_on_eigenfunction(self, line_grid):
        f = h0(line_grid)
        projected = hermite.littlewood_paley_project(f, 2, kind="heat")
        expected = f * (np.exp(-0.5 / 4) - np.exp(-0.5))
        assert relative_l2(projected, expected) < 1e-8

    def test_bernstein_constants_recorded(self, line_grid):
        constants = hermite.bernstein_constants(random_smooth(line_grid, 17))
        assert set(constants) == set(hermite.dyadic_ladder(line_grid))
        assert all(np.isfinite(c) and c >= 0 for c in constants.values())

    @pytest.mark.parametrize("N", [0.5, 3, 0])
    def test_rejects_non_dyadic(self, line_grid, N):
        with pytest.raises(DomainRejection):
            hermite.littlewood_paley_project(h0(line_grid), N)

    def test_cutoff_shape(self):
        lam = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
        values = hermite.smooth_cutoff(lam)
        assert values[0] == 1.0 and values[1] == 1.0
        assert 0.0 < values[2] < 1.0
        assert values[3] == 0.0 and values[4] == 0.0

    def test_cutoff_is_symmetric_about_midpoint(self):
        lam = np.linspace(1.0, 2.0, 101)
        np.testing.assert_allclose(
            hermite.smooth_cutoff(lam) + hermite.smooth_cutoff(3.0 - lam), 1.0, atol=1e-12
        )
        assert hermite.smooth_cutoff(1.5) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("x", [1.2, 1.4137, 1.75])
    def test_cutoff_has_continuous_curvature(self, x):
        def second_difference(h):
            values = hermite.smooth_cutoff(np.array([x - h, x, x + h]))
            return (values[0] - 2.0 * values[1] + values[2]) / h**2

        coarse, fine = second_difference(2e-5), second_difference(1e-5)
        assert abs(coarse) > 1e-2
        assert fine == pytest.approx(coarse, rel=1e-2)

    def test_cutoff_flat_outside_ramp(self):
        lam = np.array([-0.5, 0.999999, 2.000001, 10.0])
        np.testing.assert_array_equal(hermite.smooth_cutoff(lam), [1.0, 1.0, 0.0, 0.0])
