import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sint
from scipy.special import eval_hermite

from conjcorr import numerics
from conjcorr.errors import (
    HermiteRangeError,
    InvalidRangeError,
    LengthMismatchError,
    NotNormalizedError,
)
from conjcorr.numerics import GridSpec, make_grid
from conjcorr.states import build_custom


def test_step_arithmetic():
    # the three-point grid is below the constructor's resolution floor but GridSpec accepts it
    assert GridSpec(-1.0, 1.0, 3).step == 1.0
    assert GridSpec(0.0, 10.0, 11).step == 1.0
    assert make_grid(-8.0, 8.0, 1024).step == 16.0 / 1023


def test_make_grid_rejects_bad_ranges():
    with pytest.raises(InvalidRangeError):
        make_grid(1.0, 1.0, 64)
    with pytest.raises(InvalidRangeError):
        make_grid(2.0, 1.0, 64)
    with pytest.raises(InvalidRangeError):
        make_grid(-1.0, 1.0, 3)


def test_integrate_examples():
    assert numerics.integrate(np.ones(101), make_grid(0, 1, 101)) == pytest.approx(1.0, abs=1e-14)
    g = make_grid(-8, 8, 1024)
    assert abs(numerics.integrate(np.exp(-g.points ** 2), g) - math.sqrt(math.pi)) < 1e-8
    assert abs(numerics.integrate(np.sin(g.points), g)) < 1e-12
    with pytest.raises(LengthMismatchError):
        numerics.integrate(np.ones(10), g)


def test_simpson_weights_are_symmetric_and_accurate():
    g = make_grid(-2, 3, 400)
    f = np.cos(g.points) * np.exp(-g.points)
    prim = lambda x: np.exp(-x) * (np.sin(x) - np.cos(x)) / 2
    w = numerics.simpson_weights(g)
    assert w @ f == pytest.approx(prim(3.0) - prim(-2.0), rel=1e-8)
    assert np.allclose(w, w[::-1], rtol=0, atol=1e-15)


def _ground(grid):
    return math.pi ** -0.25 * np.exp(-grid.points ** 2 / 2)


def test_ground_gaussian_is_self_reciprocal():
    g = make_grid(-12, 12, 1024)
    wf = build_custom(_ground(g), g)
    out = numerics.fourier_transform(wf)
    assert out.representation == "momentum"
    assert np.max(np.abs(out.amplitudes - _ground(g))) < 1e-12


def test_shift_theorem():
    g = make_grid(-14, 14, 1024)
    beta = 1.7
    wf = build_custom(_ground(g) * np.exp(1j * beta * g.points), g)
    out = numerics.fourier_transform(wf)
    expected = math.pi ** -0.25 * np.exp(-(g.points - beta) ** 2 / 2)
    assert np.max(np.abs(out.amplitudes - expected)) < 1e-12


def test_transform_against_direct_trapezoid_oracle():
    # independent oracle: scipy trapezoid on a much finer grid, no shared code path
    g = make_grid(-10, 10, 1024)
    wf = build_custom(_ground(g), g)
    out = numerics.fourier_transform(wf)
    fine = np.linspace(-10, 10, 20001)
    phi = math.pi ** -0.25 * np.exp(-fine ** 2 / 2)
    for p in (0.0, 0.8, -2.3):
        val = sint.trapezoid(np.exp(-1j * p * fine) * phi, fine) / math.sqrt(2 * math.pi)
        assert abs(out.evaluate(p) - val) < 1e-10
        assert abs(np.imag(out.evaluate(p))) < 1e-12


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=6)
       .filter(lambda c: sum(a * a + b * b for a, b in c) > 1e-3))
def test_round_trip_and_parseval(coeffs):
    g = make_grid(-14, 14, 1024)
    c = np.array([complex(a, b) for a, b in coeffs])
    wf = build_custom(c @ numerics.hermite_functions(c.size - 1, g.points), g)
    mom = numerics.fourier_transform(wf)
    back = numerics.inverse_fourier_transform(mom, g)
    assert math.sqrt(numerics.integrate(np.abs(back.amplitudes - wf.amplitudes) ** 2, g)) < 1e-8
    assert abs(numerics.integrate(mom.density, mom.grid) - numerics.integrate(wf.density, g)) < 1e-8


def test_hermite_examples():
    assert numerics.hermite_function(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-14)
    assert numerics.hermite_function(0, 0.0) == pytest.approx(0.7511, abs=5e-5)
    assert numerics.hermite_function(1, 0.0) == 0.0
    g = make_grid(-12, 12, 1024)
    h5, h3 = numerics.hermite_function(5, g.points), numerics.hermite_function(3, g.points)
    assert abs(numerics.integrate(h5 * h3, g)) < 1e-8
    assert abs(numerics.integrate(h5 * h5, g) - 1) < 1e-8
    with pytest.raises(HermiteRangeError):
        numerics.hermite_function(65, 0.0)
    with pytest.raises(HermiteRangeError):
        numerics.hermite_function(-1, 0.0)


@pytest.mark.parametrize("n", [0, 1, 4, 9])
def test_hermite_against_scipy_polynomials(n):
    x = np.linspace(-5, 5, 41)
    ref = eval_hermite(n, x) * np.exp(-x ** 2 / 2) / math.sqrt(2.0 ** n * math.factorial(n) * math.sqrt(math.pi))
    assert np.max(np.abs(numerics.hermite_function(n, x) - ref)) < 1e-12


def test_hermite_recurrence_residual():
    x = np.linspace(-10, 10, 2001)
    h = numerics.hermite_functions(64, x)
    n = np.arange(1, 64)[:, None]
    resid = x * h[1:-1] - np.sqrt((n + 1) / 2) * h[2:] - np.sqrt(n / 2) * h[:-2]
    assert np.max(np.abs(resid)) < 1e-10


def test_inverse_cdf_examples():
    g = make_grid(-10, 10, 1024)
    normal = np.exp(-g.points ** 2 / 2) / math.sqrt(2 * math.pi)
    assert abs(numerics.inverse_cdf(normal, g)(0.5)) < 1e-10
    gu = make_grid(0, 1, 101)
    assert numerics.inverse_cdf(np.ones(101), gu)(0.25) == pytest.approx(0.25, abs=1e-12)
    h1 = numerics.hermite_function(1, g.points) ** 2
    assert abs(numerics.inverse_cdf(h1, g)(0.5)) < 1e-6
    with pytest.raises(NotNormalizedError):
        numerics.inverse_cdf(2 * normal, g)
    with pytest.raises(InvalidRangeError):
        numerics.inverse_cdf(normal, g)(1.5)


def test_inverse_cdf_against_scipy_normal_quantiles():
    from scipy.stats import norm

    g = make_grid(-10, 10, 1024)
    dens = norm.pdf(g.points)
    qmap = numerics.inverse_cdf(dens, g, slope=-g.points * dens, third=(3 * g.points - g.points ** 3) * dens)
    u = np.array([1e-6, 0.01, 0.3, 0.77, 0.999])
    assert np.max(np.abs(qmap(u) - norm.ppf(u))) < 1e-9


@given(st.floats(0.01, 0.99))
def test_inverse_cdf_composes_to_identity(u):
    g = make_grid(-8, 8, 512)
    dens = numerics.hermite_function(2, g.points) ** 2
    qmap = numerics.inverse_cdf(dens, g)
    x = qmap(u)
    # forward CDF by an independent cumulative trapezoid on a fine grid
    fine = np.linspace(-8, x, 40001)
    F = sint.trapezoid(numerics.hermite_function(2, fine) ** 2, fine)
    x_back = qmap(F)
    assert abs(x_back - x) < g.step


def test_cdf_upper_tail_keeps_precision():
    from scipy.stats import norm

    g = make_grid(-12, 12, 1024)
    dens = norm.pdf(g.points)
    cdf = numerics.CDF(g, dens, -g.points * dens, (3 * g.points - g.points ** 3) * dens)
    assert cdf.sf(6.0) == pytest.approx(norm.sf(6.0), rel=1e-6)
    assert cdf.quantile(norm.sf(6.0), upper=True) == pytest.approx(6.0, abs=1e-8)


def test_seeded_stream():
    a = numerics.seeded_stream(42).random(100)
    assert np.array_equal(a, numerics.seeded_stream(42).random(100))
    assert not np.array_equal(numerics.seeded_stream(1).random(100), numerics.seeded_stream(2).random(100))
    m = numerics.seeded_stream(123).random(10 ** 6).mean()
    assert abs(m - 0.5) < 5 * (12 * 10 ** 6) ** -0.5


def test_substreams_are_distinct_and_reproducible():
    s1 = [r.random(5) for r in numerics.substreams(9, 3)]
    s2 = [r.random(5) for r in numerics.substreams(9, 3)]
    assert all(np.array_equal(a, b) for a, b in zip(s1, s2))
    assert not np.array_equal(s1[0], s1[1])


def test_gaussian_smooth_matches_closed_form():
    # Gaussian convolved with Gaussian: variances add
    g = make_grid(-15, 15, 1024)
    f = np.exp(-g.points ** 2 / 2) / math.sqrt(2 * math.pi)
    x = np.array([-1.0, 0.0, 2.5])
    for sigma in (0.005, 0.7, 2.0):
        s2 = 1 + sigma ** 2
        exact = np.exp(-x ** 2 / (2 * s2)) / math.sqrt(2 * math.pi * s2)
        fn = lambda y: np.exp(-np.asarray(y) ** 2 / 2) / math.sqrt(2 * math.pi)
        assert np.max(np.abs(numerics.gaussian_smooth(g, f, x, sigma, fn) - exact)) < 1e-10
