import cmath
import math

import mpmath
import pytest

from hml.modforms import hecke_eigenforms
from hml.numeric import Precision
from hml.petersson import (
    HarmonicBasis,
    SingularSystem,
    default_cmax,
    harmonic_average,
    kloosterman,
    solve_harmonic_weights,
    trace_rhs,
)


def brute_kloosterman(m, n, c):
    total = 0j
    for a in range(c):
        if math.gcd(a, c) == 1:
            inv = pow(a, -1, c) if c > 1 else 0
            total += cmath.exp(2j * math.pi * (inv * m + a * n) / c)
    return total


@pytest.mark.parametrize("m, n, c, expected", [(1, 1, 1, 1), (1, 1, 3, -1), (1, 1, 2, 1)])
def test_kloosterman_examples(m, n, c, expected):
    assert abs(kloosterman(m, n, c) - expected) < 1e-30


def test_kloosterman_symmetry_bound_and_brute_force():
    for m in range(1, 21):
        for n in range(1, 21):
            for c in range(1, 51, 3):
                s = kloosterman(m, n, c)
                assert s == kloosterman(n, m, c)
                assert abs(s) <= c
                b = brute_kloosterman(m, n, c)
                assert abs(b.imag) < 1e-9 and abs(float(s) - b.real) < 1e-9


def test_kloosterman_rejects_zero_modulus():
    with pytest.raises(ValueError):
        kloosterman(1, 1, 0)


def test_default_cmax_passes_transition():
    for m, n, k in [(1, 1, 12), (3, 7, 24), (50, 50, 60)]:
        c = default_cmax(m, n, k) - 20
        assert 4 * math.pi * math.sqrt(m * n) / c <= (k - 1) / 4
        assert c == 1 or 4 * math.pi * math.sqrt(m * n) / (c - 1) > (k - 1) / 4


def test_trace_small_mn_is_delta():
    for k in (48, 60):
        for m, n in [(1, 1), (1, 2), (2, 2)]:
            ev = trace_rhs(m, n, k)
            assert abs(ev.value - (m == n)) <= 1e-8
            assert ev.tail_bound >= 0


def test_trace_tail_decreases():
    a = trace_rhs(2, 3, 24, 10)
    b = trace_rhs(2, 3, 24, 20)
    assert b.tail_bound < a.tail_bound


def test_trace_rejects_bad_input():
    with pytest.raises(ValueError):
        trace_rhs(0, 1, 24)
    with pytest.raises(ValueError):
        trace_rhs(1, 1, 13)


def test_weight12_single_weight(basis12):
    (w,) = basis12.weights
    assert w > 0
    # for k = 12 the Bessel factor decays only like c^-12, so truncation dominates
    t50 = trace_rhs(1, 1, 12, 50)
    assert abs(w - t50.value) <= t50.tail_bound + basis12.weight_tail
    one, two = trace_rhs(1, 1, 12, 400), trace_rhs(1, 2, 12, 400)
    with mpmath.workprec(128):
        ratio = two.value / one.value
        assert abs(ratio - basis12.forms[0].lambda_(2)) <= 4 * (one.tail_bound + two.tail_bound)
    assert abs(ratio + 24 / 2 ** 5.5) < 1e-15


def test_empty_basis():
    b = solve_harmonic_weights(14, [])
    assert b.dim == 0 and b.weights == ()
    assert harmonic_average(b, []) == 0


def test_weight24_held_out_pair(basis24):
    assert basis24.dim == 2 and all(w > 0 for w in basis24.weights)
    avg = harmonic_average(basis24, [f.lambda_(2) * f.lambda_(3) for f in basis24.forms])
    assert abs(avg - trace_rhs(2, 3, 24).value) <= 1e-6


def test_weight24_many_pairs_tight(basis24):
    with mpmath.workprec(160):
        for m in range(2, 7):
            for n in range(m, 9):
                avg = harmonic_average(basis24, [f.lambda_(m) * f.lambda_(n) for f in basis24.forms])
                assert abs(avg - trace_rhs(m, n, 24).value) <= 1e-20


def test_weights_sum_near_one_for_large_k():
    basis = solve_harmonic_weights(48, hecke_eigenforms(48, 10))
    assert abs(harmonic_average(basis, [1] * basis.dim) - 1) < 1e-8
    pair = harmonic_average(basis, [f.lambda_(1) * f.lambda_(2) for f in basis.forms])
    assert abs(pair) < 1e-8


def test_cmax_stability():
    forms = hecke_eigenforms(24, 4)
    a = solve_harmonic_weights(24, forms, c_max=12)
    b = solve_harmonic_weights(24, forms, c_max=24)
    for wa, wb in zip(a.weights, b.weights):
        assert abs(wa - wb) <= a.weight_tail


def test_harmonic_average_single_and_mismatch(basis12):
    with mpmath.workprec(160):
        assert harmonic_average(basis12, [3]) == 3 * basis12.weights[0]
    with pytest.raises(ValueError):
        harmonic_average(basis12, [1, 2])


def test_singular_system_detected():
    (f,) = hecke_eigenforms(12, 4)
    with pytest.raises(SingularSystem):
        solve_harmonic_weights(12, [f, f])


def test_basis_shape():
    b = HarmonicBasis(12, (), ())
    assert b.dim == 0 and b.n_max == 0
    assert Precision(64).bits == 64
