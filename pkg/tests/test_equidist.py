import math

import mpmath
import numpy as np
import pytest

from hml.bessel import omega_phase
from hml.equidist import (
    OMEGA_FLOOR,
    SIN_THRESHOLD,
    DegeneratePhase,
    EquidistReport,
    count_Z,
    discrepancy,
    equidist_report,
    erdos_turan_bound,
    erdos_turan_min,
    exp_sums,
    h_derivative,
    h_fractional_parts,
    h_value,
    interval_discrepancy_bruteforce,
    members_Z,
    paper_parameters,
    star_discrepancy,
    vdc_bound,
)
from hml.voronoi import big_omega


def test_h_value_at_sqrt2_point():
    kappa = 50
    with mpmath.workprec(200):
        x = mpmath.mpf(kappa) ** 2 / (16 * mpmath.pi ** 2)
        expected = (kappa * (1 - mpmath.pi / 4) - mpmath.pi / 4) / (2 * mpmath.pi)
        assert abs(h_value(1, x, kappa) - expected) < 1e-30
    with pytest.raises(ValueError):
        h_value(1, 0.1, 50)


def test_fractional_parts_fill_interval_and_h_increases():
    fr = np.sort(h_fractional_parts(1, 10 ** 4, 1000, 50))
    gaps = np.diff(np.concatenate([[fr[-1] - 1], fr]))
    assert gaps.max() <= 0.05
    hs = [h_value(n, 1000, 50) for n in range(1, 200)]
    assert all(a < b for a, b in zip(hs, hs[1:]))


def test_star_discrepancy_examples():
    m = 37
    assert star_discrepancy((np.arange(1, m + 1) - 0.5) / m) == pytest.approx(0.5)
    # every point at 0: the anchored count jumps straight to M
    assert star_discrepancy(np.zeros(m)) == m
    assert star_discrepancy(np.array([])) == 0


def test_bracket_against_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        pts = rng.random(int(rng.integers(5, 60)))
        d = star_discrepancy(pts)
        assert d - 1e-12 <= interval_discrepancy_bruteforce(pts) <= 2 * d + 1e-12


def test_discrepancy_small_at_desk_scale():
    d_star, lo, hi = discrepancy(10 ** 4, 500, 40)
    assert lo == d_star and hi == 2 * d_star
    assert hi / 10 ** 4 <= 0.1
    with pytest.raises(ValueError):
        discrepancy(4, 500, 40)


def test_count_Z_examples():
    assert count_Z(4, 500, 40) in (0, 1)
    with pytest.raises(ValueError):
        count_Z(3, 500, 40)
    N = 10 ** 4
    _, _, hi = discrepancy(N, 500, 40)
    assert abs(count_Z(N, 500, 40) - (N - 4) / 20) <= hi


@pytest.mark.slow
def test_count_Z_large_N_ratio():
    N = 10 ** 5
    assert 0.8 <= count_Z(N, 1000, 50) / ((N - 4) / 20) <= 1.2


def test_members_satisfy_lower_bound_chain():
    for x, kappa in ((500, 40), (2000, 99)):
        for n in members_Z(3000, x, kappa):
            assert math.sin(omega_phase(kappa, 4 * math.pi * math.sqrt(2 * n * x))) >= SIN_THRESHOLD - 1e-12
            assert big_omega(n, x, kappa) >= OMEGA_FLOOR


def test_erdos_turan_single_term_and_lower_bracket():
    N, x, kappa = 2000, 500, 40
    s = exp_sums(N, 1, x, kappa)
    assert erdos_turan_bound(N, 1, x, kappa) == pytest.approx(N / 2 + 3 * s[0], rel=1e-14)
    with mpmath.workprec(128):
        direct = abs(mpmath.fsum(mpmath.expjpi(2 * h_value(n, x, kappa)) for n in range(1, N + 1)))
    assert abs(s[0] - float(direct)) < 1e-9
    _, lo, _ = discrepancy(N, x, kappa)
    for R in (1, 4, 16, 64):
        assert erdos_turan_bound(N, R, x, kappa) >= lo
    best, R = erdos_turan_min(N, x, kappa)
    assert 1 <= R <= 64 and best >= lo
    with pytest.raises(ValueError):
        erdos_turan_bound(N, 0, x, kappa)


def test_h_derivatives_match_differences():
    x, kappa, xi = 700.0, 45, 50.0
    step = 1e-3
    hv = lambda t: float(h_value(1, t * x, kappa))  # h(n) depends on n only through n x
    fd1 = (hv(xi + step) - hv(xi - step)) / (2 * step)
    fd2 = (hv(xi + step) - 2 * hv(xi) + hv(xi - step)) / step ** 2
    assert abs(fd1 - h_derivative(1, xi, x, kappa)) < 1e-6
    assert abs(fd2 - h_derivative(2, xi, x, kappa)) < 1e-4


def test_vdc_bound_dominates_direct_sums():
    x, kappa, N = 500, 40, 4000
    for r in (1, 2, 5):
        with mpmath.workprec(128):
            direct = abs(mpmath.fsum(mpmath.expjpi(2 * r * h_value(n, x, kappa))
                                     for n in range(N // 2 + 1, N + 1)))
        assert vdc_bound(N / 2, N, r, 2, x, kappa) >= float(direct)
    assert vdc_bound(10, 11, 1, 2, x, kappa) >= 1


def test_vdc_lambda_scales_with_r():
    # with p = 2, P = 2: bound = L mu lam^(1/2) + lam^(-1/2), so lam can be read off two r values
    x, kappa, a, b = 500, 40, 100.0, 300.0
    grid = np.linspace(a, b, 10 ** 4)
    lam1 = np.abs(h_derivative(2, grid, x, kappa)).min()
    lam2 = np.abs(2 * h_derivative(2, grid, x, kappa)).min()
    assert lam2 == pytest.approx(2 * lam1, rel=1e-15)
    b1, b2 = vdc_bound(a, b, 1, 2, x, kappa), vdc_bound(a, b, 2, 2, x, kappa)
    mu = np.abs(h_derivative(2, grid, x, kappa)).max() / lam1
    assert b1 == pytest.approx((b - a) * mu * lam1 ** 0.5 + lam1 ** -0.5, rel=1e-6)
    assert b2 == pytest.approx((b - a) * mu * (2 * lam1) ** 0.5 + (2 * lam1) ** -0.5, rel=1e-6)


def test_vdc_guards():
    with pytest.raises(ValueError):
        vdc_bound(1, 1.5, 1, 2, 500, 40)
    with pytest.raises(ValueError):
        vdc_bound(1, 10, 1, 1, 500, 40)
    with pytest.raises(ValueError):
        h_derivative(0, 1.0, 500, 40)
    assert issubclass(DegeneratePhase, ArithmeticError)


def test_paper_parameters():
    with mpmath.workprec(200):
        x = mpmath.e ** mpmath.e ** 3
    p, N, R = paper_parameters(x)
    assert p == 3
    with mpmath.workprec(200):
        assert N == int(mpmath.floor(mpmath.cbrt(x)))
        assert R == int(mpmath.floor(x ** (mpmath.mpf(1) / 21)))
    p, N, R = paper_parameters(1e10)
    ll = math.log(math.log(1e10))
    assert p == math.floor((ll + 3) / 2)
    assert N <= math.exp(math.log(1e10) / (ll - 2))
    with pytest.raises(ValueError):
        paper_parameters(10)


def test_report_fields():
    rep = equidist_report(3000, 500, 40, R_max=16)
    assert rep.d_lower <= rep.d_upper == 2 * rep.d_star
    assert rep.z_count >= 0 and rep.et_bound >= rep.d_lower
    assert rep.z_expected == (3000 - 4) / 20
    with pytest.raises(ValueError):
        EquidistReport(1, 1, 5, 0, 0, 1, 2, 1, 0, 1, 0, 0, ())
