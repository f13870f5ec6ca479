"""Discrete energies: oracles, additivity, scaling, exact gradients."""

import numpy as np
import pytest

from hophase import (
    ConfigurationError,
    EnergyParams,
    energy_F_eps,
    energy_gradient,
    energy_profile,
    grid_function,
    make_grid,
    quartic_well,
)

WELL = quartic_well()


class TestOracles:
    def test_quartic_quadrature(self):
        """integral of (1-t^2)^2 over (-1,1) = 16/15; with u(t)=t and k=1 the
        derivative term adds |I| = 2, both at eps=1."""
        g = make_grid(-1.0, 1.0, 2001)
        u = grid_function(g, lambda t: t)
        e = energy_F_eps(u, EnergyParams(1, 1.0, WELL))
        assert e == pytest.approx(16.0 / 15.0 + 2.0, abs=1e-5)

    def test_tanh_profile_energy(self):
        """The k=1 optimal profile tanh(t) has transition energy 8/3."""
        g = make_grid(-12.0, 12.0, 4001)
        v = grid_function(g, np.tanh(g.nodes))
        assert energy_profile(v, 1, WELL) == pytest.approx(8.0 / 3.0, abs=1e-4)

    def test_constant_wells_cost_nothing(self):
        g = make_grid(0.0, 1.0, 101)
        for c in (-1.0, 1.0):
            u = grid_function(g, np.full(g.n, c))
            assert energy_F_eps(u, EnergyParams(2, 0.1, WELL)) == 0.0

    def test_profile_energy_requires_no_eps(self):
        g = make_grid(0.0, 1.0, 101)
        u = grid_function(g, np.zeros(g.n))
        with pytest.raises(ConfigurationError):
            energy_F_eps(u, EnergyParams(1, None, WELL))


class TestSubintervals:
    def test_exact_additivity_at_shared_node(self):
        g = make_grid(0.0, 1.0, 257)
        u = grid_function(g, np.sin(3 * g.nodes) + 0.2 * g.nodes)
        p = EnergyParams(2, 0.25, WELL)
        whole = energy_F_eps(u, p)
        left = energy_F_eps(u, p, sub=(0.0, 0.5))
        right = energy_F_eps(u, p, sub=(0.5, 1.0))
        assert left + right == pytest.approx(whole, rel=1e-14)

    def test_subinterval_outside_grid_rejected(self):
        g = make_grid(0.0, 1.0, 65)
        u = grid_function(g, np.zeros(g.n))
        with pytest.raises(ConfigurationError):
            energy_F_eps(u, EnergyParams(1, 0.1, WELL), sub=(0.5, 1.5))


class TestScaling:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_eps_rescaling_identity(self, k):
        """F_eps is invariant under t -> lambda t, eps -> lambda eps. With
        lambda a power of two and the same nodal values, the discrete energies
        agree to round-off."""
        rng = np.random.default_rng(5)
        n = 97
        vals = np.tanh(np.linspace(-3, 3, n)) + 0.05 * rng.standard_normal(n)
        lam = 4.0
        e1 = energy_F_eps(grid_function(make_grid(-1.0, 1.0, n), vals), EnergyParams(k, 0.125, WELL))
        e2 = energy_F_eps(
            grid_function(make_grid(-lam, lam, n), vals), EnergyParams(k, 0.125 * lam, WELL)
        )
        assert e2 == pytest.approx(e1, rel=1e-12)

    def test_profile_energy_matches_eps_one_scaling(self):
        """energy_profile is the eps-free form: for k=1 it equals F_1 with
        eps = 1 on the same grid."""
        g = make_grid(-4.0, 4.0, 513)
        v = grid_function(g, np.tanh(g.nodes))
        assert energy_profile(v, 1, WELL) == pytest.approx(
            energy_F_eps(v, EnergyParams(1, 1.0, WELL)), rel=1e-14
        )


class TestGradient:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_matches_central_differences(self, k):
        rng = np.random.default_rng(11 + k)
        g = make_grid(-1.0, 1.0, 41)
        vals = np.tanh(2 * g.nodes) + 0.1 * rng.standard_normal(g.n)
        u = grid_function(g, vals)
        p = EnergyParams(k, 0.5, WELL)
        grad = energy_gradient(u, p)
        step = 1e-6
        for idx in rng.choice(g.n, size=8, replace=False):
            plus, minus = vals.copy(), vals.copy()
            plus[idx] += step
            minus[idx] -= step
            fd = (
                energy_F_eps(grid_function(g, plus), p) - energy_F_eps(grid_function(g, minus), p)
            ) / (2 * step)
            assert grad[idx] == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_zero_at_exact_well(self):
        g = make_grid(0.0, 1.0, 101)
        u = grid_function(g, np.ones(g.n))
        assert np.all(energy_gradient(u, EnergyParams(2, 0.1, WELL)) == 0.0)
