import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from _oracles import A, F, phi_reference, simpson_integral
from distprod.mollifier import (
    DeltaFamily,
    DivergentConstant,
    FourierBumpSpec,
    MollifierSpec,
    a_constant,
    bump_derivative,
    default_bump,
    delta_n,
    dirichelet_check,
    family_action,
    make_mollifier,
    mollifier_from_fourier,
    phi_derivative,
    phi_fourier,
    positivity_check,
)


@pytest.mark.parametrize("m", [0, 2, 4, 6])
def test_normalization_matches_oracle(m):
    spec = make_mollifier(m)
    assert spec.F == pytest.approx(F[m], rel=1e-11)
    assert spec.F_error < 1e-10
    assert simpson_integral(spec, -1.0, 1.0) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("m", [-2, 1, 3])
def test_rejects_bad_power(m):
    with pytest.raises(ValueError):
        make_mollifier(m)


def test_generator_shape():
    spec = make_mollifier(2)
    x = np.linspace(-1.5, 1.5, 301)
    v = spec(x)
    assert np.all(v[np.abs(x) >= 1] == 0.0)
    assert np.allclose(v, v[::-1])
    assert spec(np.array([0.0]))[0] == 0.0
    assert np.allclose(v, phi_reference(2)(x), rtol=1e-10)
    assert spec.support == (-1.0, 1.0)


@pytest.mark.parametrize("key", sorted(A))
def test_moment_constants_match_oracle(key):
    i, j, m = key
    c = a_constant(make_mollifier(m), i, j)
    assert c.value == pytest.approx(A[key], rel=1e-9)
    assert c.error_estimate < 1e-9 * max(1.0, c.value)
    assert float(c) == c.value


@pytest.mark.parametrize("m, i, j", [(2, 1, 3), (2, 1, 4), (2, 2, 5), (4, 1, 5), (6, 1, 7)])
def test_divergent_constants_raise(m, i, j):
    with pytest.raises(DivergentConstant) as info:
        a_constant(make_mollifier(m), i, j)
    assert (info.value.m, info.value.i, info.value.j) == (m, i, j)


def test_principal_value_of_odd_moment_is_zero():
    assert a_constant(make_mollifier(2), 1, 3, principal_value=True).value == 0.0


@pytest.mark.parametrize("m, i, j", [(2, 1, 1), (4, 1, 3), (4, 2, 7)])
def test_convergent_odd_moments_vanish(m, i, j):
    assert abs(a_constant(make_mollifier(m), i, j).value) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([0, 2, 4]), st.integers(0, 4), st.floats(-0.95, 0.95))
def test_bump_derivatives_against_finite_differences(m, k, x):
    h = 1e-5
    fd = (bump_derivative(m, k, np.array([x + h])) - bump_derivative(m, k, np.array([x - h]))) / (2 * h)
    exact = bump_derivative(m, k + 1, np.array([x]))
    scale = max(1.0, float(np.max(np.abs(bump_derivative(m, k + 2, np.linspace(-0.99, 0.99, 2001))))))
    assert exact[0] == pytest.approx(fd[0], abs=1e-7 * scale)


def test_derivatives_vanish_outside_support():
    x = np.array([-1.0, 1.0, 1.5, -3.0])
    for k in range(5):
        assert np.all(phi_derivative(make_mollifier(2), k, x) == 0.0)


def test_delta_n_scaling_and_mass():
    spec = make_mollifier(2)
    for beta, n in [(0.5, 16.0), (1.0, 10.0), (2.0, 3.0)]:
        w = n**-beta
        mass = simpson_integral(lambda x: delta_n(spec, beta, n, x), -w, w)
        assert mass == pytest.approx(1.0, rel=1e-9)
        assert delta_n(spec, beta, n, np.array([0.5 * w]))[0] == pytest.approx(n**beta * spec(np.array([0.5]))[0])


def test_spec_dict_and_validation():
    spec = make_mollifier(4)
    d = spec.to_dict()
    assert d["m"] == 4 and d["F"] == pytest.approx(F[4])
    with pytest.raises(ValueError):
        MollifierSpec(4, -1.0)


# ---------------------------------------------------------------------------
# Fourier side
# ---------------------------------------------------------------------------


def test_default_bump_is_admissible():
    b = default_bump()
    assert 2 * math.pi * b(np.array([0.0]))[0] == pytest.approx(1.0, rel=1e-15)
    assert b(np.array([1.0, -1.0, 2.0])).tolist() == [0.0, 0.0, 0.0]


@pytest.mark.parametrize(
    "bad",
    [
        lambda k: np.where(np.abs(k) < 1.1, 1 / (2 * math.pi), 0.0),  # support too wide
        lambda k: np.where(np.abs(k) < 1, (1 + 0.1 * k) / (2 * math.pi), 0.0),  # not even
        lambda k: np.where(np.abs(k) < 1, 0.5 * (1 - k * k), 0.0),  # wrong value at 0
    ],
)
def test_bump_validation(bad):
    with pytest.raises(ValueError):
        FourierBumpSpec(bad)


@pytest.mark.parametrize("k", [0.0, 0.5, 2.0, 5.0, 12.0])
def test_phi_fourier_of_compact_generator_matches_scipy(k):
    spec = make_mollifier(2)
    ref = quad(lambda x: float(spec(np.array([x]))[0]), 0, 1, weight="cos", wvar=k,
               epsabs=1e-14, epsrel=1e-13)[0] / math.pi
    assert phi_fourier(spec, np.array([k]))[0] == pytest.approx(ref, abs=1e-12)


def test_phi_fourier_normalization():
    for m in (2, 4):
        assert 2 * math.pi * phi_fourier(make_mollifier(m), np.array([0.0]))[0] == pytest.approx(1.0, rel=1e-12)


def test_fourier_mollifier_spline_matches_exact():
    fm = mollifier_from_fourier()
    x = np.array([0.0, 0.37, 1.0, 2.5, 6.5, 17.3, 120.0])
    assert np.allclose(fm(x), fm.exact(x), rtol=0, atol=1e-9)
    assert fm(np.array([0.0]))[0] == pytest.approx(fm.exact(np.array([0.0]))[0], rel=1e-10)


def test_fourier_mollifier_round_trip():
    fm = mollifier_from_fourier()
    k = np.array([0.0, 0.3, 0.8])
    assert np.allclose(phi_fourier(fm, k), default_bump()(k), atol=1e-6)


def test_positivity():
    assert positivity_check(make_mollifier(2))
    assert not positivity_check(mollifier_from_fourier())


# ---------------------------------------------------------------------------
# delta families
# ---------------------------------------------------------------------------

SCHEDULE = [10.0 * 2**j for j in range(10)]


@pytest.mark.parametrize("m", [2, 4])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_dirichelet_conditions_compact(m, beta):
    rep = dirichelet_check(DeltaFamily(make_mollifier(m), beta), SCHEDULE)
    assert rep.passed, rep.to_dict()
    assert rep.C1[-1] <= rep.C1[0] * (1 + 1e-6)


def test_dirichelet_conditions_fourier_family():
    rep = dirichelet_check(DeltaFamily(mollifier_from_fourier(), 1.0), [10.0 * 2**j for j in range(6)])
    assert rep.mass_ok and rep.tails_ok
    assert rep.to_dict()["passed"] == rep.passed


def test_dirichelet_check_rejects_unnormalized_family():
    rep = dirichelet_check(DeltaFamily(make_mollifier(2), 1.0, power=0.5), SCHEDULE)
    assert not rep.mass_ok and not rep.passed


@pytest.mark.parametrize(
    "f, f0, order",
    [
        (lambda x: 1.0 + np.sqrt(np.abs(x)), 1.0, 0.5),
        (lambda x: np.maximum(0.0, 1.0 - np.abs(x)), 1.0, 1.0),
        (lambda x: np.cos(3 * x) + x, 1.0, 2.0),
    ],
)
def test_family_action_converges(f, f0, order):
    fam = DeltaFamily(make_mollifier(2), 1.0)
    errs = [abs(family_action(fam, f, n).value - f0) for n in SCHEDULE]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # error ~ n**-order from the local behaviour of f at 0
    observed = math.log(errs[-2] / errs[-1]) / math.log(2.0)
    assert observed == pytest.approx(order, rel=0.05)
