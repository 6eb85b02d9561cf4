import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from laserprop import spectral
from laserprop.spectral import (
    SpectralGrid,
    WaveFunction,
    apply_diag_fourier,
    dense_derivative,
    exp_kinetic,
    exp_potential,
    gradient,
    laplacian,
    make_grid,
    sample,
)


class TestGrid:
    def test_coordinates_and_spacing(self):
        g = make_grid([(-1.0, 3.0)], 8)
        assert g.spacing == [0.5]
        assert_allclose(g.coords[0], -1.0 + 0.5 * np.arange(8))
        assert g.cell_volume == 0.5

    def test_three_dimensional_shape(self):
        g = make_grid([(-1, 1)] * 3, [4, 6, 8])
        assert g.shape == (4, 6, 8)
        assert g.size == 192
        assert g.laplacian_symbol().shape == (4, 6, 8)

    @pytest.mark.parametrize(
        "bounds, points",
        [([(0, 1)], [3]), ([(1, 0)], [8]), ([(0, 1)] * 4, [4] * 4), ([(0, 1)], [8, 8])],
    )
    def test_rejects_bad_input(self, bounds, points):
        with pytest.raises(ValueError):
            SpectralGrid(bounds, points)

    def test_nyquist_first_derivative_is_zero(self):
        g = make_grid([(0, 2 * np.pi)], 16)
        assert g.c1[0][8] == 0.0
        assert g.c2[0][8] == -64.0

    def test_axis_check(self):
        g = make_grid([(0, 1)], 8)
        with pytest.raises(IndexError):
            apply_diag_fourier(WaveFunction(g, np.ones(8)), 1, lambda k: k)


class TestDerivatives:
    def test_trig_derivatives_exact(self):
        g = make_grid([(0, 2 * np.pi)], 32)
        x = g.coords[0]
        u = np.sin(3 * x) + np.cos(5 * x)
        assert_allclose(gradient(g, u)[0].real, 3 * np.cos(3 * x) - 5 * np.sin(5 * x), atol=1e-12)
        assert_allclose(laplacian(g, u).real, -9 * np.sin(3 * x) - 25 * np.cos(5 * x), atol=1e-11)

    def test_laplacian_2d(self):
        g = make_grid([(0, 2 * np.pi), (0, 2 * np.pi)], [16, 24])
        X, Y = g.mesh()
        u = np.sin(2 * X) * np.cos(3 * Y)
        assert_allclose(laplacian(g, u).real, -13 * u, atol=1e-11)

    def test_dense_derivative_matches_fft(self, grid8, rng):
        v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert_allclose(dense_derivative(grid8, 2) @ v, laplacian(grid8, v), atol=1e-12)
        assert_allclose(dense_derivative(grid8, 1) @ v, gradient(grid8, v)[0], atol=1e-12)

    def test_apply_diag_fourier_callable_and_array(self, grid8, rng):
        u = WaveFunction(grid8, rng.standard_normal(8))
        a = apply_diag_fourier(u, 0, lambda k: np.ones_like(k))
        assert_allclose(a.values, u.values, atol=1e-14)
        b = apply_diag_fourier(u, 0, grid8.c2[0])
        assert_allclose(b.values, laplacian(grid8, u.values), atol=1e-12)

    def test_sample(self):
        g = make_grid([(0, 1), (0, 1)], [4, 5])
        vals = sample(g, lambda x, y: x + 10 * y)
        assert vals.shape == (4, 5)
        assert vals[1, 2] == pytest.approx(0.25 + 10 * 0.4)


class TestExponentials:
    def test_exp_kinetic_dense_oracle(self, grid8, rng):
        u = WaveFunction(grid8, rng.standard_normal(8) + 1j * rng.standard_normal(8))
        a, d = 0.3j, 0.7
        oracle = expm(a * dense_derivative(grid8, 2) - d * dense_derivative(grid8, 1)) @ u.values
        assert_allclose(exp_kinetic(u, a, [d]).values, oracle, atol=1e-12)

    def test_pure_drift_is_translation(self):
        g = make_grid([(0, 2 * np.pi)], 64)
        x = g.coords[0]
        u = WaveFunction(g, np.exp(np.cos(x)))
        shifted = exp_kinetic(u, 0.0, [0.4])
        assert_allclose(shifted.values.real, np.exp(np.cos(x - 0.4)), atol=1e-12)

    def test_exp_potential(self, grid8, rng):
        u = WaveFunction(grid8, rng.standard_normal(8))
        phase = 1j * rng.standard_normal(8)
        assert_allclose(exp_potential(u, phase).values, np.exp(phase) * u.values)
        with pytest.raises(ValueError):
            exp_potential(u, np.zeros(5))

    def test_inplace(self, grid8, rng):
        u = WaveFunction(grid8, rng.standard_normal(8))
        ref = exp_kinetic(u, 0.1j)
        out = exp_kinetic(u, 0.1j, inplace=True)
        assert out is u
        assert_allclose(u.values, ref.values)

    @given(a=st.floats(-5, 5), b=st.floats(-5, 5), d=st.floats(-2, 2))
    def test_group_property_and_unitarity(self, a, b, d):
        g = make_grid([(-3, 3)], 16)
        u = WaveFunction(g, np.exp(-g.coords[0] ** 2) + 0j)
        two = exp_kinetic(exp_kinetic(u, 1j * a, [d]), 1j * b)
        one = exp_kinetic(u, 1j * (a + b), [d])
        assert_allclose(two.values, one.values, atol=1e-12)
        assert abs(one.norm() - u.norm()) < 1e-13


class TestBookkeeping:
    def test_fft_counter(self, grid8):
        before = spectral.fft_count()
        laplacian(grid8, np.ones(8))
        assert spectral.fft_count() - before == 2

    def test_workers_setting(self):
        old = spectral.fft_workers()
        spectral.set_fft_workers(2)
        assert spectral.fft_workers() == 2
        spectral.set_fft_workers(old)
        with pytest.raises(ValueError):
            spectral.set_fft_workers(0)

    def test_wavefunction_helpers(self, grid8):
        u = WaveFunction(grid8, 2 * np.ones(8))
        assert u.norm() == pytest.approx(2 * np.sqrt(4.0))
        assert u.normalized().norm() == pytest.approx(1.0)
        c = u.copy()
        c.values[0] = 0
        assert u.values[0] == 2
        assert u.distance(u) == 0.0
