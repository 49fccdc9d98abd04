import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from hml.modforms import (
    EigenvalueClustering,
    charpoly,
    cusp_dim,
    delta_series,
    divisor_count,
    eisenstein,
    hecke_eigenforms,
    hecke_matrix,
    miller_basis,
    series_mul,
)
from hml.numeric import Precision


def naive_mul(a, b, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[: n - i]):
                out[i + j] += x * y
    return out


@lru_cache(maxsize=None)
def eta24(n):
    """q prod (1-q^m)^24 via Euler's pentagonal series, naive products."""
    euler = [0] * n
    j = 0
    while True:
        hits = [(p, s) for p, s in ((j * (3 * j - 1) // 2, (-1) ** j), (j * (3 * j + 1) // 2, (-1) ** j)) if p < n]
        if not hits:
            break
        for p, s in hits:
            euler[p] = s
        j += 1
    e2 = naive_mul(euler, euler, n)
    e4 = naive_mul(e2, e2, n)
    e8 = naive_mul(e4, e4, n)
    e24 = naive_mul(naive_mul(e8, e8, n), e8, n)
    return [0] + e24[: n - 1]


def sigma_series(r, scale, n):
    return [1] + [scale * sum(d ** r for d in range(1, m + 1) if m % d == 0) for m in range(1, n)]


def test_eisenstein_examples():
    assert list(eisenstein("E4", 3).coeffs) == [1, 240, 2160]
    assert list(eisenstein("E6", 2).coeffs) == [1, -504]
    assert list(eisenstein("E4", 1).coeffs) == [1]
    with pytest.raises(ValueError):
        eisenstein("E8", 3)


def test_series_mul_matches_naive_across_sizes():
    import random
    rng = random.Random(7)
    for n in (1, 5, 40, 300):
        a = [rng.randrange(-10 ** 30, 10 ** 30) for _ in range(n)]
        b = [rng.randrange(-10 ** 5, 10 ** 5) for _ in range(n)]
        assert series_mul(a, b, n) == naive_mul(a, b, n)


@given(st.lists(st.integers(-10 ** 40, 10 ** 40), min_size=1, max_size=80),
       st.lists(st.integers(-10 ** 40, 10 ** 40), min_size=1, max_size=80))
@settings(max_examples=60, deadline=None)
def test_series_mul_property(a, b):
    n = min(len(a), len(b))
    assert series_mul(a, b, n) == naive_mul(a, b, n)


def test_delta_against_eta_product():
    assert list(delta_series(60).coeffs) == eta24(60)


@pytest.mark.parametrize("k, expected", [(12, 1), (14, 0), (24, 2), (26, 1), (36, 3), (38, 2), (48, 4), (200, 16)])
def test_cusp_dim(k, expected):
    assert cusp_dim(k) == expected


def test_miller_examples():
    (f,) = miller_basis(12, 4)
    assert list(f.coeffs) == [0, 1, -24, 252]
    f1, f2 = miller_basis(24, 5)
    assert list(f1.coeffs[:3]) == [0, 1, 0] and list(f2.coeffs[:3]) == [0, 0, 1]
    assert miller_basis(14, 3) == []
    with pytest.raises(ValueError):
        miller_basis(13, 10)
    with pytest.raises(ValueError):
        miller_basis(10, 10)


@pytest.mark.parametrize("k", [36, 48, 60])
def test_miller_echelon(k):
    d = cusp_dim(k)
    basis = miller_basis(k, d + 5)
    for i, f in enumerate(basis, 1):
        assert [f[j] for j in range(1, d + 1)] == [int(i == j) for j in range(1, d + 1)]
        assert f[0] == 0


def test_hecke_matrix_examples():
    b12 = miller_basis(12, 10)
    assert hecke_matrix(12, 2, b12) == [[-24]]
    assert hecke_matrix(12, 3, b12) == [[252]]
    assert hecke_matrix(14, 2, []) == []


@pytest.mark.parametrize("k", [24, 36, 48])
def test_hecke_operators_commute(k):
    d = cusp_dim(k)
    basis = miller_basis(k, 7 * d + 2)
    mats = {p: [[Fraction(v) for v in row] for row in hecke_matrix(k, p, basis)] for p in (2, 3, 5, 7)}

    def mul(A, B):
        return [[sum(A[i][t] * B[t][j] for t in range(d)) for j in range(d)] for i in range(d)]

    for p, q in combinations(mats, 2):
        assert mul(mats[p], mats[q]) == mul(mats[q], mats[p])


def test_hecke_matrix_needs_enough_coefficients():
    with pytest.raises(ValueError):
        hecke_matrix(24, 7, miller_basis(24, 6))


def test_weight12_eigenvalue():
    (f,) = hecke_eigenforms(12, 3, Precision(128))
    with mpmath.workprec(128):
        expected = mpmath.mpf(-24) / mpmath.mpf(2) ** (mpmath.mpf(11) / 2)
        assert abs(f.lambda_(2) - expected) < mpmath.mpf(2) ** -120
    assert f.lambda_(1) == 1


def test_weight24_against_characteristic_polynomial():
    T2 = hecke_matrix(24, 2, miller_basis(24, 8))
    trace = T2[0][0] + T2[1][1]
    det = T2[0][0] * T2[1][1] - T2[0][1] * T2[1][0]
    cp = charpoly(T2)
    assert cp == [Fraction(1), Fraction(-trace), Fraction(det)]
    forms = hecke_eigenforms(24, 2)
    with mpmath.workprec(128):
        a2 = [f.lambda_(2) * mpmath.mpf(2) ** (mpmath.mpf(23) / 2) for f in forms]
        assert abs(a2[0] + a2[1] - trace) < 1e-20 * abs(trace)
        assert abs(a2[0] * a2[1] - det) < 1e-20 * abs(det)
    assert forms[0].lambda_(2) < forms[1].lambda_(2)


@pytest.mark.parametrize("k, factors", [
    (16, ["E4"]), (18, ["E6"]), (20, ["E4", "E4"]), (22, ["E4", "E6"]), (26, ["E4", "E4", "E6"]),
])
def test_one_dimensional_weights_match_product_oracle(k, factors):
    n = 150
    oracle = eta24(n + 1)
    for name in factors:
        oracle = naive_mul(oracle, sigma_series(3 if name == "E4" else 5, 240 if name == "E4" else -504, n + 1), n + 1)
    (f,) = hecke_eigenforms(k, n)
    assert list(f.a) == oracle[1:]


def test_every_form_normalized():
    for k in (12, 24, 36):
        for f in hecke_eigenforms(k, 10):
            assert f.lambda_(1) == 1


def test_empty_space_and_bad_input():
    assert hecke_eigenforms(14, 10) == []
    with pytest.raises(ValueError):
        hecke_eigenforms(24, 1)
    with pytest.raises(ValueError):
        hecke_eigenforms(23, 10)
    assert issubclass(EigenvalueClustering, ArithmeticError)


@pytest.fixture(scope="module")
def forms48():
    return hecke_eigenforms(48, 600)


def _primes(n):
    return [p for p in range(2, n + 1) if all(p % q for q in range(2, int(p ** 0.5) + 1))]


def test_multiplicativity(forms48):
    n_max = 600
    tol = mpmath.mpf(2) ** -64
    with mpmath.workprec(128):
        for f in forms48:
            for m in range(2, 40):
                for n in range(m + 1, n_max // m + 1):
                    if math.gcd(m, n) == 1:
                        assert abs(f.lambda_(m * n) - f.lambda_(m) * f.lambda_(n)) <= tol


def test_hecke_recursion(forms48):
    tol = mpmath.mpf(2) ** -64
    with mpmath.workprec(128):
        for f in forms48:
            for p in _primes(600):
                pj, prev = p, mpmath.mpf(1)
                while pj * p <= 600:
                    assert abs(f.lambda_(p) * f.lambda_(pj) - f.lambda_(pj * p) - prev) <= tol
                    prev, pj = f.lambda_(pj), pj * p


def test_deligne(forms48):
    d = divisor_count(600)
    slack = mpmath.mpf(2) ** -64
    for f in forms48:
        for n in range(1, 601):
            assert abs(f.lambda_(n)) <= d[n] + slack
