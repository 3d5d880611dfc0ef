"""Bessel evaluation, linear solves, and spherical quadrature grids."""

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from pixelfas.errors import ConfigError, SingularMatrixError
from pixelfas.numerics import QuadratureGrid, bessel_j0, build_quadrature, solve_linear


class TestBesselJ0:
    def test_matches_reference_on_dense_grid(self):
        x = np.linspace(0.0, 50.0, 5001)
        err = np.max(np.abs(bessel_j0(x) - scipy.special.j0(x)))
        assert err < 1e-12

    def test_known_values(self):
        assert bessel_j0(0.0) == pytest.approx(1.0, abs=1e-15)
        assert bessel_j0(np.pi) == pytest.approx(-0.304242177644093864, abs=1e-14)
        # first positive zero
        assert abs(bessel_j0(2.40482555769577)) < 1e-13

    @given(st.floats(min_value=-100.0, max_value=100.0))
    def test_even_function(self, x):
        assert bessel_j0(-x) == bessel_j0(x)

    @given(st.floats(min_value=-1e3, max_value=1e3))
    def test_bounded_by_one(self, x):
        assert abs(bessel_j0(x)) <= 1.0 + 1e-14

    def test_array_shape_preserved(self):
        x = np.ones((3, 4))
        assert bessel_j0(x).shape == (3, 4)

    def test_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            bessel_j0(np.nan)
        with pytest.raises(ConfigError):
            bessel_j0(np.inf)


class TestSolveLinear:
    def test_solves_well_conditioned_system(self, rng):
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        a += 8 * np.eye(8)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        x = solve_linear(a, b)
        assert np.allclose(a @ x, b, atol=1e-10)

    def test_singular_matrix_raises_with_config_id(self):
        a = np.zeros((3, 3), dtype=complex)
        with pytest.raises(SingularMatrixError, match="state-7"):
            solve_linear(a, np.ones(3), config_id="state-7")

    @settings(max_examples=30)
    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=2**32 - 1))
    def test_residual_always_small(self, n, seed):
        r = np.random.default_rng(seed)
        a = r.standard_normal((n, n)) + n * np.eye(n)
        b = r.standard_normal(n)
        x = solve_linear(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-8 * max(np.linalg.norm(b), 1.0)


class TestQuadrature:
    @pytest.mark.parametrize("support,measure", [
        ("full-sphere", 4 * np.pi),
        ("upper-hemisphere", 2 * np.pi),
        ("horizon-ring", 2 * np.pi),
    ])
    def test_weights_integrate_unity(self, support, measure):
        grid = build_quadrature(support, n_theta=16, n_phi=32)
        assert np.sum(grid.weights) == pytest.approx(measure, rel=1e-12)

    def test_smooth_integrand_on_sphere(self):
        # integral of cos^2(theta) over the sphere is 4*pi/3
        grid = build_quadrature("full-sphere", n_theta=8, n_phi=16)
        val = np.sum(grid.weights * np.cos(grid.theta) ** 2)
        assert val == pytest.approx(4 * np.pi / 3, rel=1e-12)

    def test_ring_sits_on_horizon(self):
        grid = build_quadrature("horizon-ring", n_phi=90)
        assert np.all(grid.theta == np.pi / 2)

    def test_unknown_support_rejected(self):
        with pytest.raises(ConfigError):
            build_quadrature("lower-left")

    def test_matches_is_exact_comparison(self):
        a = build_quadrature("full-sphere", n_theta=8, n_phi=16)
        b = build_quadrature("full-sphere", n_theta=8, n_phi=16)
        c = build_quadrature("full-sphere", n_theta=8, n_phi=18)
        assert a.matches(b)
        assert not a.matches(c)

    def test_grid_is_frozen(self):
        grid = build_quadrature("full-sphere", n_theta=4, n_phi=8)
        with pytest.raises(AttributeError):
            grid.support = "ring"
