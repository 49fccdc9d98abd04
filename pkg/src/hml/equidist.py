"""Equidistribution of the phases h(n) = omega(4 pi sqrt(2nx))/(2 pi) modulo one."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
import sympy

from .bessel import omega_phase
from .numeric import DEFAULT_PREC, Precision
from .voronoi import big_omega

__all__ = [
    "EquidistReport",
    "DegeneratePhase",
    "Z_LO",
    "Z_HI",
    "SIN_THRESHOLD",
    "OMEGA_FLOOR",
    "h_value",
    "h_fractional_parts",
    "count_Z",
    "members_Z",
    "star_discrepancy",
    "interval_discrepancy_bruteforce",
    "discrepancy",
    "exp_sums",
    "erdos_turan_bound",
    "erdos_turan_min",
    "h_derivative",
    "vdc_bound",
    "paper_parameters",
    "equidist_report",
]

Z_LO = 9 / 40
Z_HI = 11 / 40
SIN_THRESHOLD = 2 ** 0.5 * (7 / 4) ** -0.75 * 101 / 100
OMEGA_FLOOR = (8 * math.pi ** 2) ** -0.75 * (7 / 4) ** -0.75 / 100
START = 4


class DegeneratePhase(ArithmeticError):
    pass


def h_value(n: int, x, kappa, prec: Precision = DEFAULT_PREC):
    with prec.ctx(16):
        nx = mpmath.mpf(n) * mpmath.mpf(x)
        kap = mpmath.mpf(kappa)
        if not 32 * mpmath.pi ** 2 * nx > kap * kap:
            raise ValueError("h_value requires 32 pi^2 n x > kappa^2")
        val = omega_phase(kap, 4 * mpmath.pi * mpmath.sqrt(2 * nx)) / (2 * mpmath.pi)
    with prec.ctx():
        return +val


def h_fractional_parts(n_lo: int, n_hi: int, x, kappa, prec: Precision = DEFAULT_PREC) -> np.ndarray:
    """{h(n)} for n_lo <= n <= n_hi as float64 (phases reduced at high precision)."""
    out = np.empty(max(0, n_hi - n_lo + 1))
    for i, n in enumerate(range(n_lo, n_hi + 1)):
        with prec.ctx(16):
            h = h_value(n, x, kappa, prec)
            out[i] = float(h - mpmath.floor(h))
    return out


def members_Z(N: int, x, kappa, prec: Precision = DEFAULT_PREC) -> list[int]:
    """n in [4, N] with {h(n)} in [9/40, 11/40]."""
    if N < START:
        raise ValueError("N must be >= 4")
    lo, hi = mpmath.mpf(9) / 40, mpmath.mpf(11) / 40
    out = []
    for n in range(START, N + 1):
        with prec.ctx(16):
            h = h_value(n, x, kappa, prec)
            fr = h - mpmath.floor(h)
            if lo <= fr <= hi:
                out.append(n)
    return out


def count_Z(N: int, x, kappa, prec: Precision = DEFAULT_PREC) -> int:
    return len(members_Z(N, x, kappa, prec))


def star_discrepancy(points: np.ndarray, scale: float | None = None) -> float:
    """Anchored discrepancy sup_u |#{p < u} - scale*u| on the count scale.

    ``scale`` defaults to the number of points.
    """
    u = np.sort(np.asarray(points, dtype=float))
    m = u.size
    if m == 0:
        return 0.0
    s = float(m) if scale is None else float(scale)
    i = np.arange(m + 1, dtype=float)
    left = np.concatenate([[0.0], u])
    right = np.concatenate([u, [1.0]])
    # on [u_(i), u_(i+1)) the count is i; the extremes sit at the two ends
    return float(np.max(np.maximum(np.abs(i - s * left), np.abs(i - s * right))))


def interval_discrepancy_bruteforce(points: np.ndarray, scale: float | None = None) -> float:
    """sup over closed [a,b] of |#{p in [a,b]} - scale*(b-a)|, by enumeration (O(M^2))."""
    u = np.sort(np.asarray(points, dtype=float))
    m = u.size
    s = float(m) if scale is None else float(scale)
    ends = np.concatenate([[0.0], u, [1.0]])
    best = 0.0
    for i in range(len(ends)):
        a = ends[i]
        for j in range(i, len(ends)):
            b = ends[j]
            closed = np.count_nonzero((u >= a) & (u <= b))
            opened = np.count_nonzero((u > a) & (u < b))
            best = max(best, abs(closed - s * (b - a)), abs(opened - s * (b - a)))
    return best


def discrepancy(N: int, x, kappa, prec: Precision = DEFAULT_PREC) -> tuple[float, float, float]:
    """(D*, D*, 2 D*) for {h(n)}, 4 <= n <= N, against the measure (N-4)(b-a)."""
    if N < START + 1:
        raise ValueError("N must be >= 5")
    pts = h_fractional_parts(START, N, x, kappa, prec)
    d = star_discrepancy(pts, scale=N - START)
    return d, d, 2 * d


def exp_sums(N: int, R: int, x, kappa, n_start: int = 1, prec: Precision = DEFAULT_PREC) -> np.ndarray:
    """|sum_{n_start<=n<=N} e(r h(n))| for r = 1..R."""
    fr = h_fractional_parts(n_start, N, x, kappa, prec)
    r = np.arange(1, R + 1, dtype=float)[:, None]
    # fractional parts are exact to double precision, so r*fr keeps ~1e-14 absolute phase error
    ph = np.exp(2j * np.pi * np.mod(r * fr[None, :], 1.0))
    return np.abs(ph.sum(axis=1))


def erdos_turan_bound(N: int, R: int, x, kappa, prec: Precision = DEFAULT_PREC, sums: np.ndarray | None = None) -> float:
    """N/(R+1) + 3 sum_{r<=R} |sum_{n<=N} e(r h(n))|/r."""
    if R < 1:
        raise ValueError("R must be >= 1")
    if sums is None:
        sums = exp_sums(N, R, x, kappa, prec=prec)
    r = np.arange(1, R + 1, dtype=float)
    return N / (R + 1) + 3 * math.fsum((sums[:R] / r).tolist())


def erdos_turan_min(N: int, x, kappa, R_max: int = 64, prec: Precision = DEFAULT_PREC) -> tuple[float, int]:
    """Minimum of the bound over R <= R_max and the minimizing R."""
    sums = exp_sums(N, R_max, x, kappa, prec=prec)
    vals = [erdos_turan_bound(N, R, x, kappa, sums=sums) for R in range(1, R_max + 1)]
    i = int(np.argmin(vals))
    return vals[i], i + 1


_xi, _X, _K = sympy.symbols("xi X K", positive=True)
_H_EXPR = sympy.sqrt(32 * sympy.pi ** 2 * _X * _xi - _K ** 2) / (4 * sympy.pi * _xi)


@lru_cache(maxsize=None)
def _h_derivative_fn(p: int):
    # h'(xi) = (32 pi^2 x xi - kappa^2)^(1/2) / (4 pi xi), so h^(p) is the (p-1)-th derivative of it
    expr = sympy.diff(_H_EXPR, _xi, p - 1)
    return sympy.lambdify((_xi, _X, _K), expr, "numpy")


def h_derivative(p: int, xi, x, kappa):
    """p-th derivative of h in n, for p >= 1."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return _h_derivative_fn(p)(np.asarray(xi, dtype=float), float(x), float(kappa))


def vdc_bound(a: float, b: float, r: int, p: int, x, kappa, samples: int = 10 ** 4) -> float:
    """(b-a) mu^(2/P) lam^(1/(2P-2)) + (b-a)^(1-2/P) lam^(-1/(2P-2)), P = 2^(p-1).

    lam and mu*lam are the min and max of |r h^(p)| on [a,b].
    """
    if b - a < 1:
        raise ValueError("need b - a >= 1")
    if p < 2:
        raise ValueError("need p >= 2")
    grid = np.linspace(a, b, samples)
    vals = r * h_derivative(p, grid, x, kappa)
    if np.any(np.sign(vals) != np.sign(vals[0])) or np.any(vals == 0):
        raise DegeneratePhase("h^(p) changes sign on [a,b]")
    mag = np.abs(vals)
    lo_i, hi_i = int(np.argmin(mag)), int(np.argmax(mag))
    lam, top = mag[lo_i], mag[hi_i]
    # refine the extremes on the neighbouring sample cells
    for idx, better in ((lo_i, min), (hi_i, max)):
        nb = grid[max(idx - 1, 0): idx + 2]
        fine = np.abs(r * h_derivative(p, np.linspace(nb[0], nb[-1], 3 * len(nb)), x, kappa))
        if better is min:
            lam = min(lam, float(fine.min()))
        else:
            top = max(top, float(fine.max()))
    mu = top / lam
    P = 2 ** (p - 1)
    L = b - a
    return L * mu ** (2 / P) * lam ** (1 / (2 * P - 2)) + L ** (1 - 2 / P) * lam ** (-1 / (2 * P - 2))


def paper_parameters(x) -> tuple[int, int, int]:
    """(p, N, R) = (floor((log log x + 3)/2), floor(x^(1/(2p-3))), floor(x^(1/((2p-3)(2P-1)))))."""
    with mpmath.workprec(256):
        xm = mpmath.mpf(x)
        if xm <= mpmath.e ** mpmath.e:
            raise ValueError("need x > e^e")
        ll = mpmath.log(mpmath.log(xm))
        # x = e^(e^3) rounds a hair off log log x = 3 in floating input
        near = mpmath.nint(ll)
        if abs(ll - near) < mpmath.mpf(10) ** -12:
            ll = near
        p = int(mpmath.floor((ll + 3) / 2))
        P = 2 ** (p - 1)
        N = int(mpmath.floor(mpmath.power(xm, mpmath.mpf(1) / (2 * p - 3))))
        R = int(mpmath.floor(mpmath.power(xm, mpmath.mpf(1) / ((2 * p - 3) * (2 * P - 1)))))
    return p, N, R


@dataclass(frozen=True)
class EquidistReport:
    x: float
    kappa: float
    N: int
    z_count: int
    z_expected: float
    d_star: float
    d_lower: float
    d_upper: float
    et_bound: float
    et_R: int
    omega_min_on_Z: float
    sin_min_on_Z: float
    params: tuple

    def __post_init__(self):
        if not self.d_lower <= self.d_upper:
            raise ValueError("discrepancy bracket inverted")


def equidist_report(N: int, x, kappa, R_max: int = 64, prec: Precision = DEFAULT_PREC) -> EquidistReport:
    zs = members_Z(N, x, kappa, prec)
    d_star, d_lo, d_hi = discrepancy(N, x, kappa, prec)
    et, R = erdos_turan_min(N, x, kappa, R_max, prec)
    om = [float(big_omega(n, float(x), float(kappa))) for n in zs]
    sn = [math.sin(omega_phase(float(kappa), 4 * math.pi * math.sqrt(2 * n * float(x)))) for n in zs]
    try:
        params = paper_parameters(x)
    except ValueError:
        params = ()
    return EquidistReport(
        x=float(x), kappa=float(kappa), N=N, z_count=len(zs), z_expected=(N - START) / 20,
        d_star=d_star, d_lower=d_lo, d_upper=d_hi, et_bound=et, et_R=R,
        omega_min_on_Z=min(om, default=float("inf")), sin_min_on_Z=min(sn, default=float("inf")),
        params=params,
    )
