import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from laserprop.field import (
    LaserField,
    MagnusCoefficients,
    TabulatedField,
    bernoulli_rescaled,
    field_moments,
    gauss_legendre,
    magnus_coefficients,
    mu,
    p_parts,
    scalar_phase_parts,
)


def sinusoid_field(rng, dims=None, terms=3):
    d = int(rng.integers(1, 4)) if dims is None else dims
    amp = rng.standard_normal((terms, d))
    omega = rng.uniform(0.5, 8.0, terms)
    phase = rng.uniform(0.0, 6.0, terms)

    def fn(t):
        return np.einsum("kd,...k->...d", amp, np.sin(np.multiply.outer(np.asarray(t), omega) + phase))

    return LaserField(fn, d)


def nested_oracle(field, t, h, eps):
    """c from its definition, with adaptive scipy quadrature for every integral."""
    d = field.dims

    def e(s):
        return field(np.array([s]))[0]

    inner = lambda z, a: quad(lambda x: e(t + x)[a], 0.0, z, epsabs=1e-14)[0]  # noqa: E731
    I1 = sum(quad(lambda z: z * e(t + z)[a] * inner(z, a), 0.0, h, epsabs=1e-14)[0] for a in range(d))
    int_e = np.array([quad(lambda z: e(t + z)[a], 0, h, epsabs=1e-14)[0] for a in range(d)])
    int_ze = np.array([quad(lambda z: z * e(t + z)[a], 0, h, epsabs=1e-14)[0] for a in range(d)])
    return 1j / eps * (2 * I1 - int_e @ int_ze - h / 6 * int_e @ int_e)


class TestLaserField:
    def test_scalar_output_gets_axis(self):
        f = LaserField(np.sin)
        assert f(np.array([0.0, 1.0])).shape == (2, 1)

    def test_polarized_and_constant(self):
        f = LaserField.polarized(lambda t: 2 * t, [1.0, -1.0])
        assert_allclose(f(np.array([3.0])), [[6.0, -6.0]])
        c = LaserField.constant([0.5, 0.0, 1.0])
        assert c.dims == 3
        assert_allclose(c(np.zeros(4)), np.tile([0.5, 0.0, 1.0], (4, 1)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            LaserField(np.sin, dims=2)(np.zeros(3))

    def test_zero_field(self):
        assert not np.any(LaserField.zero(2)(np.linspace(0, 1, 5)))


class TestTabulatedField:
    def test_reproduces_quintic(self):
        times = np.linspace(0, 2, 41)
        poly = lambda t: 1 - t + 0.3 * t**3 - 0.1 * t**5  # noqa: E731
        f = TabulatedField(times, poly(times))
        ts = np.linspace(0.01, 1.99, 37)
        assert_allclose(f(ts)[:, 0], poly(ts), atol=1e-12)

    def test_smooth_field_accuracy(self):
        times = np.linspace(0, 3, 301)
        f = TabulatedField(np.asarray(times), np.stack([np.sin(times), np.cos(times)], 1))
        ts = np.linspace(0.05, 2.95, 50)
        assert np.abs(f(ts) - np.stack([np.sin(ts), np.cos(ts)], 1)).max() < 1e-12

    def test_from_file(self, tmp_path):
        times = np.linspace(0, 1, 11)
        path = tmp_path / "e.txt"
        np.savetxt(path, np.column_stack([times, times**2]))
        f = TabulatedField.from_file(path, degree=3)
        assert f(np.array([0.55]))[0, 0] == pytest.approx(0.3025, abs=1e-13)

    @pytest.mark.parametrize(
        "times, values",
        [(np.array([0, 1, 3, 4, 5, 6, 7.0]), np.zeros(7)), (np.linspace(0, 1, 4), np.zeros(4)),
         (np.linspace(0, 1, 10), np.zeros(9))],
    )
    def test_rejects_bad_tables(self, times, values):
        with pytest.raises(ValueError):
            TabulatedField(times, values)


class TestQuadrature:
    def test_three_point_closed_forms(self):
        h = 0.7
        r = gauss_legendre(3, h)
        assert_allclose(r.weights, h / 18 * np.array([5, 8, 5]), rtol=1e-14)
        assert_allclose(r.knots, h / 2 * (1 + np.sqrt(0.6) * np.array([-1, 0, 1])), rtol=1e-14)

    @given(k=st.integers(1, 12), h=st.floats(0.01, 3.0))
    def test_nested_weights_symmetrise_to_product(self, k, h):
        # the two triangles of [0,h]^2 together give the full product rule
        r = gauss_legendre(k, h)
        assert_allclose(r.nested + r.nested.T, np.outer(r.weights, r.weights), atol=1e-14 * h * h)

    @given(k=st.integers(1, 10), h=st.floats(0.05, 2.0), data=st.data())
    def test_degree_exactness(self, k, h, data):
        n = data.draw(st.integers(0, 2 * k - 1))
        r = gauss_legendre(k, h)
        assert r.weights @ r.knots**n == pytest.approx(h ** (n + 1) / (n + 1), rel=1e-13)

    def test_rescaled_matches_direct(self):
        a = gauss_legendre(5, 1.0).rescaled(0.3)
        b = gauss_legendre(5, 0.3)
        assert_allclose(a.knots, b.knots, rtol=1e-15)
        assert_allclose(a.nested, b.nested, rtol=1e-13)

    def test_needs_a_knot(self):
        with pytest.raises(ValueError):
            gauss_legendre(0)


class TestBernoulli:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_zero_mean(self, n):
        h = 0.37
        val = quad(lambda z: bernoulli_rescaled(n, h, z), 0, h)[0]
        assert abs(val) < 1e-15 * h ** (n + 1) * 10

    def test_degree_four_unsupported(self):
        with pytest.raises(ValueError):
            bernoulli_rescaled(4, 1.0, 0.5)

    def test_symmetry(self):
        h = 1.3
        z = np.linspace(0, h, 7)
        for n in (1, 2, 3):
            assert_allclose(bernoulli_rescaled(n, h, h - z), (-1) ** n * bernoulli_rescaled(n, h, z), atol=1e-15)


class TestMoments:
    def test_polynomial_moments_exact(self):
        coef = np.array([0.3, -1.0, 0.5, 2.0])
        f = LaserField(lambda t: np.polyval(coef, t))
        t, h = 0.4, 0.25
        for n in range(4):
            exact = quad(lambda z: bernoulli_rescaled(n, h, z) * np.polyval(coef, t + z), 0, h, epsabs=1e-16)[0]
            # B_3 times a cubic has degree six, so four knots are needed
            assert mu(n, f, t, h, rule=4)[0] == pytest.approx(exact, rel=1e-13, abs=1e-17)

    def test_constant_field_collapse(self):
        f = LaserField.constant([0.7, -1.2])
        co = magnus_coefficients(f, 0.3, 0.1, 0.5)
        assert_allclose(co.r, [0.7, -1.2], rtol=1e-14)
        for v in (co.s, co.q, co.p):
            assert np.abs(v).max() < 1e-16
        assert abs(co.c) < 1e-15

    def test_c_against_adaptive_quadrature(self):
        f = sinusoid_field(np.random.default_rng(3), dims=2)
        co = magnus_coefficients(f, 0.2, 0.3, 0.1, rule=12)
        assert co.c == pytest.approx(nested_oracle(f, 0.2, 0.3, 0.1), abs=1e-13)

    def test_derived_coefficients(self):
        f = sinusoid_field(np.random.default_rng(4), dims=2)
        co = magnus_coefficients(f, 0.0, 0.2, 0.3)
        assert_allclose(co.s_tilde, co.s - 12 * co.p / 0.04)
        assert co.c_tilde == pytest.approx(co.c - 1j / 0.3 * (co.q @ co.r))

    def test_analytic_moments_bypass_quadrature(self):
        calls = []

        def moments(t, h):
            calls.append((t, h))
            return np.zeros((4, 1)), 0.0

        f = LaserField(lambda t: np.full(np.shape(t), np.nan), 1, moments=moments)
        co = magnus_coefficients(f, 1.0, 0.1, 1.0)
        assert calls == [(1.0, 0.1)]
        assert np.all(co.r == 0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            magnus_coefficients(LaserField.zero(), 0.0, -0.1, 1.0)
        with pytest.raises(ValueError):
            magnus_coefficients(LaserField.zero(), 0.0, 0.1, 0.0)

    def test_zero_constructor(self):
        co = MagnusCoefficients.zero(2, 0.0, 0.1, 1.0)
        assert co.c == 0 and co.r.shape == (2,)

    def test_moments_shapes(self):
        mus, I1 = field_moments(sinusoid_field(np.random.default_rng(0), dims=3), 0.0, 0.1)
        assert mus.shape == (4, 3)
        assert isinstance(I1, float)

    @pytest.mark.parametrize("which, expected", [("s", 3.0), ("q", 5.0), ("p", 5.0)])
    def test_powers_of_h(self, which, expected):
        # windows share their midpoint so the leading derivative stays fixed
        f = LaserField(lambda t: np.sin(3 * t) + 0.5 * np.cos(7 * t))
        hs = 2.0 ** -np.arange(4, 9)
        vals = [abs(getattr(magnus_coefficients(f, 0.3 - h / 2, h, 1.0), which)[0]) for h in hs]
        assert np.polyfit(np.log(hs), np.log(vals), 1)[0] == pytest.approx(expected, abs=0.1)


class TestIndependentRoutes:
    @given(seed=st.integers(0, 10_000))
    def test_phase_parts_sum(self, seed):
        rng = np.random.default_rng(seed)
        f = sinusoid_field(rng)
        t, h, eps = rng.uniform(0, 3), rng.uniform(0.05, 0.6), rng.uniform(0.01, 1.0)
        co = magnus_coefficients(f, t, h, eps, rule=16)
        c31, c32 = scalar_phase_parts(f, t, h, eps, k=16)
        assert abs(co.c - (c31 + c32)) < 1e-12
        p1, p2, p3 = p_parts(f, t, h, rule=16)
        assert_allclose(co.p, p1 + p2 + p3, atol=1e-12)
