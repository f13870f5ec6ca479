"""Grids, wells, stencils, derivative matrices, quadrature."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hophase import (
    ConfigurationError,
    ExtrapolationError,
    K_MAX,
    apply_derivative,
    centered_stencil,
    derivative_k,
    grid_function,
    make_grid,
    make_stencil,
    piecewise_quadratic_well,
    quadrature,
    quartic_well,
    stencil_radius,
    tabulated_well,
    tabulated_well_from_csv,
    trapezoid_weights,
)
from hophase.core import _derivative_matrix_scaled


class TestGrid:
    def test_spacing(self):
        g = make_grid(0.0, 1.0, 11)
        assert g.h == pytest.approx(0.1)
        assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0

    @pytest.mark.parametrize("a,b,n", [(1.0, 0.0, 5), (0.0, 0.0, 5), (0.0, 1.0, 1)])
    def test_rejects_degenerate(self, a, b, n):
        with pytest.raises(ConfigurationError):
            make_grid(a, b, n)

    def test_rejects_nonfinite_values(self):
        g = make_grid(0.0, 1.0, 5)
        with pytest.raises(ConfigurationError):
            grid_function(g, np.array([0.0, 1.0, np.nan, 0.0, 1.0]))

    def test_shape_mismatch(self):
        g = make_grid(0.0, 1.0, 5)
        with pytest.raises(ConfigurationError):
            grid_function(g, np.zeros(7))


class TestWells:
    def test_quartic_wells_vanish(self):
        w = quartic_well()
        assert w.value(1.0) == 0.0 and w.value(-1.0) == 0.0
        assert w.value(0.0) == 1.0
        assert w.derivative(0.5) == pytest.approx(4 * 0.5 * (0.5**2 - 1))

    def test_piecewise_quadratic(self):
        w = piecewise_quadratic_well()
        assert w.value(1.0) == 0.0 and w.value(-1.0) == 0.0
        assert w.value(0.0) == 1.0
        assert w.value(2.0) == pytest.approx(1.0)

    def test_growth_bound_holds(self):
        assert quartic_well().check_growth_bound()
        assert piecewise_quadratic_well().check_growth_bound()

    def test_tabulated_well_interpolates(self):
        z = np.linspace(-2, 2, 801)
        w = tabulated_well(z, (1 - z**2) ** 2)
        assert w.value(0.37) == pytest.approx((1 - 0.37**2) ** 2, abs=1e-4)

    def test_tabulated_well_out_of_range(self):
        z = np.linspace(-2, 2, 101)
        w = tabulated_well(z, (1 - z**2) ** 2)
        with pytest.raises(ExtrapolationError):
            w.value(3.0)

    def test_tabulated_well_from_csv(self, tmp_path):
        z = np.linspace(-2, 2, 401)
        path = tmp_path / "well.csv"
        np.savetxt(path, np.column_stack([z, (1 - z**2) ** 2]), delimiter=",")
        w = tabulated_well_from_csv(path)
        assert w.value(1.0) == pytest.approx(0.0, abs=1e-8)


class TestStencils:
    @pytest.mark.parametrize("k", range(1, K_MAX + 1))
    def test_centered_annihilates_polynomials(self, k):
        """Exact-rational weights reproduce d^k/dt^k on polynomials up to the
        accuracy order: p(t) = t^m maps to k! * C(m, k) * t^(m-k)."""
        st_ = centered_stencil(k)
        r = stencil_radius(k)
        offsets = np.array(st_.offsets, dtype=float)
        for m in range(k + 2):
            approx = sum(w * o**m for w, o in zip(st_.weights, offsets))
            exact = float(math.factorial(k)) if m == k else 0.0
            assert approx == pytest.approx(exact, abs=1e-9)
        assert len(st_.offsets) == 2 * r + 1

    def test_accuracy_order_at_least_two(self):
        for k in range(1, K_MAX + 1):
            assert centered_stencil(k).accuracy_order >= 2

    def test_rejects_too_few_offsets(self):
        with pytest.raises(ConfigurationError):
            make_stencil(2, (0, 1))

    def test_rejects_k_beyond_cap(self):
        with pytest.raises(ConfigurationError):
            centered_stencil(K_MAX + 1)


class TestDerivativeMatrix:
    @pytest.mark.parametrize("k", range(1, K_MAX + 1))
    def test_exact_on_monomials(self, k):
        """The matrix (boundary rows included) differentiates t^k exactly."""
        g = make_grid(-1.0, 2.0, 41)
        d = apply_derivative(g.nodes**k, g.h, k)
        assert np.allclose(d, float(math.factorial(k)), atol=1e-6)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_refinement_order_two(self, k):
        """Halving h divides the max error by ~4 (order-2 scheme)."""
        errs = []
        for n in (257, 513):
            g = make_grid(0.0, 1.0, n)
            d = apply_derivative(np.sin(g.nodes), g.h, k)
            exact = np.sin(g.nodes + k * np.pi / 2)
            errs.append(np.max(np.abs(d - exact)))
        ratio = errs[0] / errs[1]
        assert 3.5 <= ratio <= 4.5

    def test_too_small_grid_rejected(self):
        with pytest.raises(ConfigurationError):
            _derivative_matrix_scaled(6, 2)  # needs n >= 2k+3

    def test_derivative_k_wraps_grid(self):
        g = make_grid(0.0, 1.0, 33)
        u = grid_function(g, lambda t: t**2)
        d = derivative_k(u, 2)
        assert d.grid is g
        assert np.allclose(d.values, 2.0, atol=1e-8)


class TestQuadrature:
    def test_trapezoid_weights_sum_to_length(self):
        g = make_grid(0.0, 3.0, 31)
        assert trapezoid_weights(g).sum() == pytest.approx(3.0)

    def test_exact_on_linear(self):
        g = make_grid(0.0, 1.0, 17)
        assert quadrature(grid_function(g, lambda t: 2 * t)) == pytest.approx(1.0)

    def test_refinement_order_two(self):
        errs = []
        for n in (129, 257):
            g = make_grid(0.0, 1.0, n)
            q = quadrature(grid_function(g, lambda t: np.exp(t)))
            errs.append(abs(q - (np.e - 1.0)))
        assert 3.5 <= errs[0] / errs[1] <= 4.5

    @given(st.integers(min_value=2, max_value=50), st.floats(min_value=-5, max_value=5), st.floats(min_value=0.1, max_value=5))
    @settings(max_examples=50, deadline=None)
    def test_constant_integrates_to_length(self, n, a, length):
        g = make_grid(a, a + length, n)
        q = quadrature(grid_function(g, np.full(n, 2.5)))
        assert q == pytest.approx(2.5 * length, rel=1e-12)
