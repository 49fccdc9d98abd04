"""Sharp sums S(x,f), their harmonic moments and the associated main terms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .modforms import Eigenform
from .numeric import DEFAULT_PREC, Precision
from .petersson import HarmonicBasis, harmonic_average, trace_rhs
from .voronoi import SmoothingParams, big_omega, big_omega_vec, omega_max, w_tilde_table

__all__ = [
    "MomentReport",
    "InsufficientTable",
    "RegimeError",
    "sharp_sum",
    "first_moment",
    "second_moment",
    "second_main_series",
    "variance",
    "uniform_bound_monitor",
    "diag_term",
    "moment_report",
    "smoothed_second_moment_routes",
    "first_moment_via_trace",
    "SERIES_CUTOFF",
    "EPSILON",
]

SERIES_CUTOFF = 10 ** 5
EPSILON = 0.1


class InsufficientTable(ValueError):
    pass


class RegimeError(ValueError):
    pass


def _sign(k: int) -> int:
    return -1 if (k // 2) % 2 else 1


def _range(x) -> tuple[int, int]:
    xm = mpmath.mpf(x)
    return int(mpmath.ceil(xm)), int(mpmath.floor(2 * xm))


def sharp_sum(f: Eigenform, x):
    """sum of lambda(n) over integers x <= n <= 2x (endpoints included)."""
    with mpmath.workprec(f.prec_bits + 32):
        lo, hi = _range(x)
        lo = max(lo, 1)
        if hi < lo:
            return mpmath.mpf(0)
        if hi > f.n_max:
            raise InsufficientTable(f"need lambda(n) up to {hi}, table has {f.n_max}")
        total = mpmath.fsum(f.lam[lo - 1:hi])
    with mpmath.workprec(f.prec_bits):
        return +total


def _check_regime(k: int, x, upper=None):
    if float(x) < k * k / (8 * math.pi ** 2):
        raise RegimeError(f"x={float(x)} below k^2/(8 pi^2)={k * k / (8 * math.pi ** 2):.4f}")
    return upper is None or float(x) <= upper


def first_moment(basis: HarmonicBasis, x):
    """(<S(x,f)>, (-1)^(k/2) 4 sqrt(2 pi) Omega(1,x) x^(1/4))."""
    k = basis.k
    _check_regime(k, x)
    prec = basis.forms[0].prec_bits if basis.dim else DEFAULT_PREC.bits
    with mpmath.workprec(prec + 16):
        xm = mpmath.mpf(x)
        main = _sign(k) * 4 * mpmath.sqrt(2 * mpmath.pi) * big_omega(1, xm, mpmath.mpf(k - 1)) * mpmath.root(xm, 4)
        value = harmonic_average(basis, [sharp_sum(f, x) for f in basis.forms]) if basis.dim else mpmath.mpf(0)
    with mpmath.workprec(prec):
        return +value, +main


def second_main_series(x, kappa, cutoff: int = SERIES_CUTOFF, start: int = 1) -> tuple[float, float]:
    """(32 pi sqrt(x) sum_{start<=n<=cutoff} Omega^2/n^(3/2), tail bound)."""
    x = float(x)
    n = np.arange(start, cutoff + 1, dtype=float)
    om = big_omega_vec(n, x, float(kappa))
    terms = om * om / n ** 1.5
    s = math.fsum(terms.tolist())
    tail = omega_max() ** 2 * 2 / math.sqrt(cutoff)
    scale = 32 * math.pi * math.sqrt(x)
    return scale * s, scale * tail


def second_moment(basis: HarmonicBasis, x, series_cutoff: int = SERIES_CUTOFF, delta=None,
                  epsilon: float = EPSILON):
    """(<S^2>, main term, diagonal term) with delta defaulting to x^(1/2) k^(3/5)."""
    k = basis.k
    _check_regime(k, x)
    prec = basis.forms[0].prec_bits if basis.dim else DEFAULT_PREC.bits
    with mpmath.workprec(prec + 16):
        value = harmonic_average(basis, [sharp_sum(f, x) ** 2 for f in basis.forms]) if basis.dim else mpmath.mpf(0)
    main, _ = second_main_series(x, k - 1, series_cutoff)
    if delta is None:
        delta = float(x) ** 0.5 * k ** 0.6
    diag = diag_term(k, x, delta, epsilon)
    with mpmath.workprec(prec):
        return +value, main, diag


def diag_term(k: int, x, delta, epsilon: float = EPSILON) -> float:
    """4 pi^2 x^2 sum_{n <= delta^2 k^eps / x} w~(n)^2, the diagonal contribution (D)."""
    x = float(x)
    p = SmoothingParams(float(delta), x, k)
    n_top = int(math.floor(float(delta) ** 2 * k ** epsilon / x))
    if n_top < 1:
        return 0.0
    tab = w_tilde_table(p, n_top)
    return 4 * math.pi ** 2 * x * x * math.fsum((tab * tab).tolist())


def variance(basis: HarmonicBasis, x, series_cutoff: int = SERIES_CUTOFF):
    """(<S^2> - <S>^2 (2 - <1>), second main term without n = 1).

    With the computed normalization <1> = 1 + eta, <(S - <S>)^2> equals
    <S^2> - <S>^2 (2 - <1>) exactly.
    """
    k = basis.k
    _check_regime(k, x)
    prec = basis.forms[0].prec_bits if basis.dim else DEFAULT_PREC.bits
    with mpmath.workprec(prec + 16):
        if basis.dim:
            sums = [sharp_sum(f, x) for f in basis.forms]
            one = mpmath.fsum(basis.weights)
            m1 = harmonic_average(basis, sums)
            m2 = harmonic_average(basis, [s * s for s in sums])
            value = m2 - m1 * m1 * (2 - one)
        else:
            value = mpmath.mpf(0)
    main, _ = second_main_series(x, k - 1, series_cutoff, start=2)
    with mpmath.workprec(prec):
        return +value, main


def uniform_bound_monitor(basis: HarmonicBasis, x_grid: Sequence) -> list[tuple[float, float]]:
    """[(x, max_f |S(x,f)| / x^(1/3))] over the grid."""
    out = []
    for x in x_grid:
        _check_regime(basis.k, x)
        if basis.dim == 0:
            out.append((float(x), 0.0))
            continue
        best = max(abs(float(sharp_sum(f, x))) for f in basis.forms)
        out.append((float(x), best / float(x) ** (1 / 3)))
    return out


@dataclass(frozen=True)
class MomentReport:
    k: int
    x: float
    dim: int
    first: float
    first_main: float
    second: float
    second_main: float
    second_tail: float
    variance: float
    variance_main: float
    s_over_x13: float
    diag_term: float
    delta_used: float
    prec_bits: int

    def __post_init__(self):
        if self.second < 0:
            raise ValueError("second moment must be nonnegative")

    @property
    def first_err(self) -> float:
        return abs(self.first - self.first_main)

    @property
    def second_err(self) -> float:
        return abs(self.second - self.second_main)


def moment_report(basis: HarmonicBasis, x, series_cutoff: int = SERIES_CUTOFF,
                  epsilon: float = EPSILON, with_diag: bool = True) -> MomentReport:
    k = basis.k
    first, first_main = first_moment(basis, x)
    delta = float(x) ** 0.5 * k ** 0.6
    prec = basis.forms[0].prec_bits if basis.dim else DEFAULT_PREC.bits
    with mpmath.workprec(prec + 16):
        sums = [sharp_sum(f, x) for f in basis.forms]
        second = harmonic_average(basis, [s * s for s in sums]) if basis.dim else mpmath.mpf(0)
        one = mpmath.fsum(basis.weights) if basis.dim else mpmath.mpf(0)
        var = second - first * first * (2 - one)
    second_main, tail = second_main_series(x, k - 1, series_cutoff)
    var_main = second_main - 32 * math.pi * math.sqrt(float(x)) * float(big_omega(1, float(x), k - 1)) ** 2
    ratio = max((abs(float(s)) for s in sums), default=0.0) / float(x) ** (1 / 3)
    diag = diag_term(k, x, delta, epsilon) if with_diag else float("nan")
    return MomentReport(
        k=k, x=float(x), dim=basis.dim, first=float(first), first_main=float(first_main),
        second=float(second), second_main=second_main, second_tail=tail, variance=float(var),
        variance_main=var_main, s_over_x13=ratio, diag_term=diag, delta_used=delta, prec_bits=prec,
    )


def first_moment_via_trace(k: int, x, prec: Precision = DEFAULT_PREC):
    """Independent route to <S(x,f)>: sum of the trace-formula right side over x <= n <= 2x."""
    lo, hi = _range(x)
    with prec.ctx(16):
        total = mpmath.fsum(trace_rhs(1, n, k, prec=prec).value for n in range(max(lo, 1), hi + 1))
    with prec.ctx():
        return +total


def smoothed_second_moment_routes(basis: HarmonicBasis, x, delta, n_top: int | None = None,
                                  prec: Precision = DEFAULT_PREC):
    """Two evaluations of <(2 pi (-1)^(k/2) x sum_{n<=N} lambda(n) w~(n))^2>.

    Route one averages the squared truncated transform over the eigenbasis.
    Route two expands the square and replaces <lambda(m) lambda(n)> by the
    trace formula, i.e. diagonal plus Kloosterman (off-diagonal) parts.
    Returns (direct, diagonal, offdiagonal).
    """
    k = basis.k
    p = SmoothingParams(float(delta), float(x), k)
    if n_top is None:
        n_top = max(1, int(math.floor(float(delta) ** 2 * k ** EPSILON / float(x))))
    tab = w_tilde_table(p, n_top)
    with prec.ctx(16):
        scale = 2 * mpmath.pi * mpmath.mpf(x)
        wt = [mpmath.mpf(float(v)) for v in tab]
        vals = []
        for f in basis.forms:
            vals.append((scale * mpmath.fsum(f.lam[i] * wt[i] for i in range(n_top))) ** 2)
        direct = harmonic_average(basis, vals)
        diag = mpmath.mpf(0)
        off = mpmath.mpf(0)
        for m in range(1, n_top + 1):
            for n in range(m, n_top + 1):
                t = trace_rhs(m, n, k, prec=prec).value
                mult = 1 if m == n else 2
                if m == n:
                    diag += wt[m - 1] ** 2
                    t -= 1
                off += mult * t * wt[m - 1] * wt[n - 1]
        diag *= scale ** 2
        off *= scale ** 2
    with prec.ctx():
        return +direct, +diag, +off
