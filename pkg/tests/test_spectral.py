import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx

from eulerpoisson.spectral import (
    ConvergenceError,
    Grid,
    WeightFamily,
    helmholtz_inverse_v,
    sech,
)


def test_grid_rejects_non_power_of_two():
    with pytest.raises(ValueError, match="Grid: points must be a power of two"):
        Grid(200.0, 1000)
    with pytest.raises(ValueError, match="Grid"):
        Grid(200.0, 8)
    with pytest.raises(ValueError, match="length"):
        Grid(0.0, 64)


def test_nodes_uniform_and_symmetric():
    g = Grid(10.0, 64)
    assert g.dx == pytest.approx(10.0 / 64)
    assert g.x[0] == -5.0
    np.testing.assert_allclose(np.diff(g.x), g.dx, rtol=1e-13)
    # symmetric about 0 on the torus: x_j and x_{N-j} are negatives
    np.testing.assert_allclose(g.x[1:], -g.x[1:][::-1], atol=1e-12)


def test_derivative_of_sine():
    g = Grid(20.0, 128)
    k = 2 * np.pi / g.length
    f = np.sin(k * g.x)
    assert np.max(np.abs(g.derivative(f) - k * np.cos(k * g.x))) <= 1e-12
    assert np.max(np.abs(g.derivative(f, 2) + k**2 * f)) <= 1e-12
    assert np.max(np.abs(g.derivative(f, 3) + k**3 * np.cos(k * g.x))) <= 1e-12


def test_derivative_of_constant_is_zero():
    g = Grid(20.0, 64)
    for order in (1, 2, 3):
        assert np.max(np.abs(g.derivative(np.ones(64), order))) <= 1e-14


def test_derivative_of_gaussian():
    g = Grid(40.0, 512)
    x = g.x
    f = np.exp(-x * x)
    assert np.max(np.abs(g.derivative(f) + 2 * x * f)) <= 1e-10
    assert np.max(np.abs(g.derivative(f, 2) - (4 * x * x - 2) * f)) <= 1e-10
    assert np.max(np.abs(g.derivative(f, 3) - (12 * x - 8 * x**3) * f)) <= 1e-10


def test_derivative_rejects_bad_order():
    with pytest.raises(ValueError):
        Grid(10.0, 16).derivative(np.zeros(16), 4)


def test_helmholtz_inverse_of_cosine():
    g = Grid(30.0, 256)
    xi = 2 * np.pi * 5 / g.length
    f = np.cos(xi * g.x)
    np.testing.assert_allclose(g.helmholtz_inverse(f), f / (1 + xi**2), atol=1e-14)
    assert not np.any(g.helmholtz_inverse(np.zeros(256)))


def test_helmholtz_inverse_matches_whole_line_kernel():
    # (1/2) int exp(-|x - s|) exp(-s^2) ds in closed form via erfcx
    g = Grid(40.0, 1024)
    x = g.x
    exact = np.sqrt(np.pi) / 4 * np.exp(-x * x) * (erfcx(0.5 - x) + erfcx(0.5 + x))
    got = g.helmholtz_inverse(np.exp(-x * x))
    assert np.max(np.abs(got - exact)) <= 1e-8


def test_helmholtz_v_reduces_to_constant_coefficient(rng):
    g = Grid(40.0, 256)
    f = rng.standard_normal(256)
    f = g.dealias(f)
    np.testing.assert_allclose(
        helmholtz_inverse_v(g, f, np.zeros(256)), g.helmholtz_inverse(f), atol=1e-12
    )


def test_helmholtz_v_constant_shift():
    g = Grid(30.0, 256)
    xi = 2 * np.pi * 3 / g.length
    f = np.cos(xi * g.x)
    got = helmholtz_inverse_v(g, f, np.full(256, 0.4))
    np.testing.assert_allclose(got, f / (1.4 + xi**2), atol=1e-10)


def test_helmholtz_v_residual(rng):
    g = Grid(60.0, 512)
    V = g.dealias(rng.standard_normal(512))
    V = g.helmholtz_inverse(V, 0.5)
    V *= 0.3 / np.max(np.abs(V))
    f = g.dealias(rng.standard_normal(512))
    sol = helmholtz_inverse_v(g, f, V)
    res = -g.derivative(sol, 2) + (1 + V) * sol - f
    assert g.l2(res) <= 1e-10 * g.l2(f)


def test_helmholtz_v_rejects_large_potential():
    g = Grid(10.0, 32)
    with pytest.raises(ValueError, match="1/2"):
        helmholtz_inverse_v(g, np.ones(32), np.full(32, 0.6))


def test_helmholtz_v_reports_nonconvergence(rng):
    g = Grid(60.0, 512)
    with pytest.raises(ConvergenceError):
        helmholtz_inverse_v(g, rng.standard_normal(512), 0.45 * np.sign(np.sin(g.x)), maxiter=1)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=8, max_size=8),
    st.sampled_from([1, 2, 3]),
)
def test_derivative_commutes_with_helmholtz(coeffs, order):
    g = Grid(25.0, 128)
    f = sum(c * np.cos(2 * np.pi * (j + 1) * g.x / g.length + j) for j, c in enumerate(coeffs))
    a = g.derivative(g.helmholtz_inverse(f), order)
    b = g.helmholtz_inverse(g.derivative(f, order))
    scale = max(np.max(np.abs(a)), 1e-300)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(scale, 1.0)


def test_translate_matches_shifted_gaussian():
    g = Grid(40.0, 512)
    f = np.exp(-g.x**2)
    np.testing.assert_allclose(g.translate(f, 3.7), np.exp(-(g.x - 3.7) ** 2), atol=1e-12)


def test_dealias_removes_upper_third():
    g = Grid(10.0, 64)
    top = np.cos(g.xi[-3] * g.x)
    low = np.cos(g.xi[5] * g.x)
    np.testing.assert_allclose(g.dealias(top + low), low, atol=1e-13)


def test_norms():
    g = Grid(2 * np.pi, 256)
    assert g.norms(np.zeros(256)) == (0.0, 0.0, 0.0, 0.0)
    nr = g.norms(np.sin(g.x + np.pi))
    assert nr.l2 == pytest.approx(np.sqrt(np.pi), rel=1e-13)
    assert nr.linf == pytest.approx(1.0, abs=1e-3)
    # |sin|_{H^1}^2 = 2 pi, |sin|_{H^2}^2 = 3 pi
    assert nr.h1 == pytest.approx(np.sqrt(2 * np.pi), rel=1e-12)
    assert nr.h2 == pytest.approx(np.sqrt(3 * np.pi), rel=1e-12)
    g60 = Grid(60.0, 1024)
    assert abs(g60.norms(sech(g60.x)).l2 ** 2 - 2.0) <= 1e-10


def test_sech_is_overflow_free():
    z = np.array([-1e4, -2.0, 0.0, 2.0, 1e4])
    np.testing.assert_allclose(sech(z), [0.0, 1 / np.cosh(2), 1.0, 1 / np.cosh(2), 0.0])


class TestWeight:
    def test_center_values(self):
        w = WeightFamily(20.0, center=3.0)
        assert w(3.0, 0) == 0.0
        assert w(3.0, 1) == 1.0

    def test_saturation(self):
        g = Grid(2000.0, 4096)
        w = WeightFamily(10.0)
        vals = w.eval(g, 0)
        assert abs(vals[0] + 10.0) <= 1e-6 * 10
        assert abs(vals[-1] - 10.0) <= 1e-6 * 10

    def test_rejects_small_scale(self):
        with pytest.raises(ValueError, match="A must be >= 10"):
            WeightFamily(5.0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(10, 500), st.floats(-50, 50))
    def test_derivative_bounds(self, A, center):
        g = Grid(400.0, 1024)
        w = WeightFamily(A, center)
        d1, d2, d3 = (w.eval(g, k) for k in (1, 2, 3))
        assert np.all(np.abs(w.eval(g, 0)) <= A)
        assert np.all(np.abs(d2) <= 2.0 / A * d1 * (1 + 1e-12))
        assert np.all(np.abs(d3) <= 4.0 / A**2 * d1 * (1 + 1e-12))

    def test_derivatives_match_finite_differences(self):
        w = WeightFamily(15.0, center=-2.0)
        x = np.linspace(-60, 60, 41)
        h = 1e-4
        for k in (1, 2, 3):
            fd = (w(x + h, k - 1) - w(x - h, k - 1)) / (2 * h)
            np.testing.assert_allclose(w(x, k), fd, atol=1e-8)
