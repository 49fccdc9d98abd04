import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hml.numeric import (
    DEFAULT_PREC,
    Precision,
    QuadratureError,
    QuadratureResult,
    oscillatory_integrate,
    oscillatory_integrate_vec,
    transition_h,
    transition_h_d1_vec,
    transition_h_vec,
)


def test_precision_contract():
    assert DEFAULT_PREC.bits == 128
    assert Precision(64).doubled().bits == 128
    with pytest.raises(ValueError):
        Precision(53)
    assert Precision(100).eps(4) == mpmath.ldexp(1, -96)


def test_quadrature_result_invariants():
    with pytest.raises(ValueError):
        QuadratureResult(1.0, -1.0, 1)
    with pytest.raises(ValueError):
        QuadratureResult(1.0, 0.0, 0)


@pytest.mark.parametrize("u, expected", [(0, 0), (1, 1), (0.5, 0.5)])
def test_transition_fixed_points(u, expected):
    assert transition_h(u) == expected
    with mpmath.workprec(128):
        assert transition_h(mpmath.mpf(u)) == expected


@pytest.mark.parametrize("u", [-0.1, 1.0001, float("nan")])
def test_transition_domain(u):
    with pytest.raises(ValueError):
        transition_h(u)


def test_transition_symmetry_grid_high_precision():
    prec = Precision(128)
    with prec.ctx():
        worst = max(abs(transition_h(u) + transition_h(1 - u) - 1)
                    for u in (mpmath.mpf(j) / 1001 for j in range(1, 1001)))
    assert worst <= prec.eps(16)


def test_transition_monotone_and_vector_agrees():
    u = np.linspace(0, 1, 2001)
    hv = transition_h_vec(u)
    assert np.all(np.diff(hv) >= 0)
    inner = (u > 0.05) & (u < 0.95)
    assert np.all(np.diff(hv[inner]) > 0)
    # float64 saturates near the ends; strictness there needs more bits
    with mpmath.workprec(2048):
        near = [transition_h(mpmath.mpf(j) / 1000) for j in (1, 2, 3, 997, 998, 999)]
    assert near[0] < near[1] < near[2] and near[3] < near[4] < near[5] < 1
    scalar = np.array([transition_h(float(t)) for t in u])
    assert np.max(np.abs(hv - scalar)) < 1e-15


@pytest.mark.parametrize("u0", [1e-3, 1 - 1e-3])
def test_transition_flat_at_endpoints(u0):
    step = 1e-4
    with mpmath.workprec(200):
        for order in (1, 2, 3):
            d = mpmath.diff(lambda t: transition_h(mpmath.mpf(t)), mpmath.mpf(u0), order, h=step)
            assert abs(d) < 1e-6


def test_transition_derivative_matches_differences():
    u = np.linspace(0.05, 0.95, 91)
    step = 1e-6
    fd = (transition_h_vec(u + step) - transition_h_vec(u - step)) / (2 * step)
    assert np.max(np.abs(fd - transition_h_d1_vec(u))) < 1e-6


@given(st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=200, deadline=None)
def test_transition_symmetry_property(u):
    assert abs(transition_h(u) + transition_h(1 - u) - 1) < 1e-15


def test_integrate_constant():
    prec = Precision(128)
    res = oscillatory_integrate(lambda t: mpmath.mpf(1), 0, 1, 0, prec)
    assert abs(res.value - 1) <= prec.eps(8)
    assert res.error_estimate >= 0 and res.panels_used >= 1


def test_integrate_full_periods_cancel():
    with mpmath.workprec(160):
        two_pi = 2 * mpmath.pi
    res = oscillatory_integrate(lambda t: mpmath.cos(100 * t), 0, two_pi, 100)
    assert abs(res.value) <= max(res.error_estimate, mpmath.mpf(2) ** -100)


def test_integrate_linear():
    res = oscillatory_integrate(lambda t: t, 1, 2)
    with DEFAULT_PREC.ctx():
        assert abs(res.value - mpmath.mpf(3) / 2) < DEFAULT_PREC.eps(8)


def test_polynomial_exactness_degree_20():
    prec = Precision(128)
    with prec.ctx(16):
        coeffs = [mpmath.mpf(j + 1) / (j + 3) * (-1) ** j for j in range(21)]
        exact = mpmath.fsum(c * (mpmath.mpf(2) ** (j + 1) - 1) / (j + 1) for j, c in enumerate(coeffs))
    res = oscillatory_integrate(lambda t: mpmath.polyval(coeffs[::-1], t), 1, 2, 0, prec)
    with prec.ctx():
        assert abs(res.value - exact) <= prec.eps(8) * abs(exact)


def test_doubling_precision_does_not_hurt():
    f = lambda t: mpmath.exp(-t) * mpmath.sin(7 * t)
    with mpmath.workprec(400):
        exact = (7 - mpmath.exp(-3) * (mpmath.sin(21) + 7 * mpmath.cos(21))) / 50
    errs = []
    for bits in (64, 128, 256):
        res = oscillatory_integrate(f, 0, 3, 7, Precision(bits))
        with mpmath.workprec(400):
            errs.append(abs(res.value - exact))
    assert errs[1] <= errs[0] and errs[2] <= errs[1]


def test_vector_integrator_oscillatory():
    res = oscillatory_integrate_vec(lambda t: np.cos(200 * t) * t, 0.0, 3.0, 200)
    exact = (3 * math.sin(600) / 200) + (math.cos(600) - 1) / 200 ** 2
    assert abs(res.value - exact) < 1e-12


def test_vector_integrator_gives_up():
    with pytest.raises(QuadratureError):
        oscillatory_integrate_vec(lambda t: np.sign(t - 0.3), 0.0, 1.0, rel_tol=1e-15, max_panels=8)
