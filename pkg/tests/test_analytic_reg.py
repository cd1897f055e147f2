import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from distprod.analytic_reg import (
    Epsilon,
    NonRealDomain,
    cauchy_transform,
    poisson,
    poisson_derivative,
    poisson_smoothing,
)
from distprod.distributions import CompactFunction, hat


def _semicircle():
    return CompactFunction(lambda x: np.sqrt(np.clip(1 - x * x, 0, None)), (-1, 1),
                           hoelder_exponent=0.5, name="semicircle")


def _scipy_cauchy(f, z, lo, hi, points=()):
    """``(1/2 pi i) int f/(x - z)`` by scipy on real and imaginary parts."""
    pts = [p for p in points if lo < p < hi] or None

    def part(g):
        return quad(g, lo, hi, points=pts, epsabs=1e-13, epsrel=1e-12, limit=400)[0]

    fx = lambda x: float(f(np.array([x]))[0])  # noqa: E731
    re = part(lambda x: fx(x) * ((x - z.real) / abs(x - z) ** 2))
    im = part(lambda x: fx(x) * (z.imag / abs(x - z) ** 2))
    return complex(re, im) / (2j * math.pi)


def test_epsilon():
    assert Epsilon.from_index(2.0, 10.0).value == pytest.approx(0.01)
    assert float(Epsilon(0.5)) == 0.5
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            Epsilon(bad)
    with pytest.raises(ValueError):
        Epsilon.from_index(0.0, 10.0)


@pytest.mark.parametrize("eps", [1.0, 0.1, 1e-3])
def test_poisson_kernel_mass(eps):
    L = 50.0
    exact = 2.0 * math.atan(L / eps) / math.pi
    got = quad(lambda x: poisson(x, eps), -L, L, points=[0.0], epsabs=1e-13, limit=200)[0]
    assert got == pytest.approx(exact, rel=1e-10)


def test_poisson_derivative_closed_form():
    x = np.linspace(-3, 3, 61)
    eps = 0.3
    assert np.allclose(poisson_derivative(0, x, eps), poisson(x, eps))
    exact = -2 * x * eps / (math.pi * (x * x + eps * eps) ** 2)
    assert np.allclose(poisson_derivative(1, x, eps), exact, rtol=1e-12, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5), st.floats(-4, 4), st.floats(0.05, 2.0))
def test_poisson_derivative_finite_differences(k, x, eps):
    h = 1e-5 * max(eps, abs(x))
    fd = (poisson_derivative(k, x + h, eps) - poisson_derivative(k, x - h, eps)) / (2 * h)
    exact = poisson_derivative(k + 1, x, eps)
    scale = math.factorial(k + 2) / (math.pi * eps ** (k + 2))
    assert float(exact) == pytest.approx(float(fd), abs=1e-6 * scale)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.floats(1e-6, 10), st.floats(1e-4, 1.0))
def test_poisson_derivative_parity(k, x, eps):
    a = poisson_derivative(k, -x, eps)
    b = poisson_derivative(k, x, eps)
    assert float(a) == (-1) ** k * float(b)


def test_poisson_derivative_rejects_bad_input():
    with pytest.raises(ValueError):
        poisson_derivative(-1, 0.0, 0.1)
    with pytest.raises(ValueError):
        poisson(0.0, 0.0)


@pytest.mark.parametrize("z", [0.3 + 0.2j, -0.7 + 1e-3j, 2.0 + 0.5j, 0.0 + 1.0j, 0.5 - 0.1j, 3.0 + 0.0j])
@pytest.mark.parametrize("which", ["hat", "semicircle"])
def test_cauchy_transform_matches_scipy(z, which):
    f = hat() if which == "hat" else _semicircle()
    got = cauchy_transform(f, z)
    ref = _scipy_cauchy(f, z, -1.0, 1.0, points=[0.0, z.real])
    assert abs(got - ref) <= 1e-9 * max(1.0, abs(ref))


def test_cauchy_transform_even_function_on_imaginary_axis_is_real():
    for y in (0.1, 1.0, 5.0):
        v = cauchy_transform(hat(), 1j * y)
        assert abs(v.imag) < 1e-14
        assert v.real > 0


def test_cauchy_transform_real_point_in_support_rejected():
    with pytest.raises(NonRealDomain):
        cauchy_transform(hat(), 0.5 + 0j)


def test_cauchy_transform_large_z_asymptotic():
    z = 1000.0 * np.exp(0.7j)
    got = cauchy_transform(hat(), z)
    lead = -1.0 / (2j * math.pi * z)  # int hat = 1
    assert abs(got - lead) / abs(lead) < 1e-5


@pytest.mark.parametrize("x", [-0.5, 0.0, 0.25, 0.9, 1.5])
@pytest.mark.parametrize("eps", [0.3, 0.01])
def test_jump_equals_poisson_smoothing(x, eps):
    f = hat()
    jump = cauchy_transform(f, x + 1j * eps) - cauchy_transform(f, x - 1j * eps)
    assert abs(jump.imag) < 1e-12
    sm = poisson_smoothing(f, np.array([x]), eps)[0]
    assert jump.real == pytest.approx(sm, abs=1e-11)


@pytest.mark.parametrize("x", [-0.6, 0.0, 0.3])
def test_poisson_smoothing_matches_scipy(x):
    f = _semicircle()
    eps = 0.05
    ref = quad(lambda y: float(f(np.array([y]))[0]) * eps / (math.pi * ((y - x) ** 2 + eps**2)),
               -1, 1, points=[x], epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    assert poisson_smoothing(f, np.array([x]), eps)[0] == pytest.approx(ref, abs=1e-10)


def test_poisson_smoothing_converges_pointwise():
    f = hat()
    x = np.array([-0.5, 0.2, 0.7])
    errs = [np.max(np.abs(poisson_smoothing(f, x, e) - f(x))) for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


def test_poisson_smoothing_derivative_against_finite_differences():
    f = _semicircle()
    eps, h = 0.1, 1e-5
    x = np.array([-0.4, 0.1, 0.8])
    fd = (poisson_smoothing(f, x + h, eps) - poisson_smoothing(f, x - h, eps)) / (2 * h)
    assert np.allclose(poisson_smoothing(f, x, eps, derivative=1), fd, atol=1e-6)


def test_poisson_smoothing_shape_is_preserved():
    out = poisson_smoothing(hat(), np.zeros((3, 2)), 0.1)
    assert out.shape == (3, 2)
