"""Off-diagonal machinery: the window g, the sums S1/S2, Poisson duals and stationary phase.

Conventions: the summation variable of S1/S2 is u (an integer), the Bessel
argument is y = 4 pi sqrt(m u)/c, and the Poisson dual frequency is n.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .bessel import bessel_j, bessel_j_vec, omega_phase, omega_phase_vec
from .numeric import (
    DEFAULT_PREC,
    Precision,
    gauss_legendre,
    oscillatory_integrate,
    oscillatory_integrate_vec,
    transition_h,
    transition_h_d1_vec,
    transition_h_vec,
)

__all__ = [
    "OffDiagParams",
    "PartitionSpec",
    "NoStationaryPoint",
    "TruncationInsufficient",
    "EPSILON",
    "window_scale",
    "g_window",
    "g_window_vec",
    "phase_F",
    "phase_F_vec",
    "stationary_point",
    "y0_envelope",
    "half_scale",
    "partition_spec",
    "bump",
    "bump_vec",
    "bump_d1_vec",
    "G_amplitude_vec",
    "dual_integral",
    "regime",
    "above_transition_bound",
    "summand_vec",
    "s_sum_direct",
    "poisson_sides",
    "poisson_check",
    "offdiag_bound_report",
    "OffDiagBound",
]

EPSILON = 0.001


class NoStationaryPoint(ArithmeticError):
    pass


class TruncationInsufficient(ArithmeticError):
    pass


@dataclass(frozen=True)
class OffDiagParams:
    k: int
    x: float
    delta: float
    m: int = 1
    c: int = 1
    t: float = 1.0
    n: int = 1
    epsilon: float = EPSILON

    @property
    def kappa(self) -> int:
        return self.k - 1

    def admissible(self) -> list[str]:
        """Names of violated standing assumptions (empty when all hold)."""
        bad = []
        if self.x < self.k ** 2 / (8 * math.pi ** 2):
            bad.append("x >= k^2/(8 pi^2)")
        if not math.sqrt(self.x) <= self.delta:
            bad.append("x^(1/2) <= delta")
        if self.m > window_scale(self):
            bad.append("m <= delta^2 k^eps / x")
        if self.c > 100 * self.delta ** 2 / (self.x * self.k ** (1 - self.epsilon)):
            bad.append("c <= 100 delta^2/(x k^(1-eps))")
        if not 1 <= self.t <= 2:
            bad.append("t in [1,2]")
        return bad


def window_scale(P: OffDiagParams) -> float:
    """B = delta^2 k^eps / x."""
    return P.delta ** 2 * P.k ** P.epsilon / P.x


# -- the window g -------------------------------------------------------------

def _g_edges(P: OffDiagParams):
    B = window_scale(P)
    return P.k / 10, P.k / 2, 2 * B, 10 * B


def g_window_vec(y, P: OffDiagParams) -> np.ndarray:
    """Rise on [k/10, k/2] and fall on [2B, 10B], both linear in log y.

    Written as a product so that an empty plateau (2B < k/2) still yields a
    smooth bump supported in [k/10, 10B].
    """
    y = np.asarray(y, dtype=float)
    a, b, c, d = _g_edges(P)
    out = np.zeros_like(y)
    inside = (y > a) & (y < d)
    ly = np.log(y[inside])
    rise = transition_h_vec((ly - math.log(a)) / math.log(b / a))
    fall = transition_h_vec((math.log(d) - ly) / math.log(d / c))
    out[inside] = rise * fall
    return out


def g_window(y, P: OffDiagParams) -> float:
    return float(g_window_vec(np.array([float(y)]), P)[0])


# -- phase and stationary point -------------------------------------------------

def _alpha(P: OffDiagParams) -> float:
    return P.c * P.c * P.x * P.t / P.m


def phase_F(y, P: OffDiagParams):
    """(F, F', F'') at y; F(y) = cn y^2/(8 pi m) - omega(c sqrt(xt) y / sqrt m)."""
    mp = isinstance(y, mpmath.mpf)
    lib = mpmath if mp else math
    pi = mpmath.pi if mp else math.pi
    kap = mpmath.mpf(P.kappa) if mp else float(P.kappa)
    alpha = mpmath.mpf(P.c) ** 2 * mpmath.mpf(P.x) * mpmath.mpf(P.t) / P.m if mp else _alpha(P)
    z = lib.sqrt(alpha) * y
    if not z > kap:
        raise ValueError("phase_F requires c^2 x t y^2/m > kappa^2")
    q = alpha - kap * kap / (y * y)
    a = P.c * P.n / (4 * pi * P.m)
    F = a * y * y / 2 - omega_phase(kap, z)
    F1 = a * y - lib.sqrt(q)
    F2 = a - kap * kap / (y ** 3) / lib.sqrt(q)
    return F, F1, F2


def phase_F_vec(y: np.ndarray, P: OffDiagParams) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    a = P.c * P.n / (4 * math.pi * P.m)
    return a * y * y / 2 - omega_phase_vec(float(P.kappa), math.sqrt(_alpha(P)) * y)


def y0_envelope(P: OffDiagParams) -> tuple[float, float]:
    """(4 pi sqrt(m x t)/n, 10 k^(1+eps) delta^2/x^2)."""
    return (4 * math.pi * math.sqrt(P.m * P.x * P.t) / P.n,
            10 * P.k ** (1 + P.epsilon) * P.delta ** 2 / P.x ** 2)


def stationary_point(P: OffDiagParams, prec: Precision = DEFAULT_PREC):
    """Root of F' on [k/10, 10B] by bisection then Newton."""
    if P.n <= 0:
        raise NoStationaryPoint("need n >= 1")
    a, _, _, d = _g_edges(P)
    lo_dom = P.kappa / math.sqrt(_alpha(P)) * (1 + 1e-12)
    lo, hi = max(a, lo_dom), d
    if not lo < hi:
        raise NoStationaryPoint("window empty")
    # F' is increasing where F'' > 0; a sign change is required
    f_lo, f_hi = phase_F(lo, P)[1], phase_F(hi, P)[1]
    if f_lo * f_hi > 0:
        raise NoStationaryPoint(f"F' has constant sign on [{lo:.4g}, {hi:.4g}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = phase_F(mid, P)[1]
        if (fm < 0) == (f_lo < 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-9 * hi:
            break
    with prec.ctx(16):
        y = mpmath.mpf(0.5 * (lo + hi))
        tol = mpmath.ldexp(y, -prec.bits // 2)
        for _ in range(100):
            _, f1, f2 = phase_F(y, P)
            step = f1 / f2
            y -= step
            if abs(step) < tol:
                break
    with prec.ctx():
        return +y


# -- smooth partition of unity --------------------------------------------------

@dataclass(frozen=True)
class PartitionSpec:
    L: float
    y0: float

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")


def half_scale(P: OffDiagParams) -> float:
    """L = k^eps max(1, m/(c n))."""
    return P.k ** P.epsilon * max(1.0, P.m / (P.c * P.n))


def partition_spec(P: OffDiagParams, prec: Precision = DEFAULT_PREC) -> PartitionSpec:
    return PartitionSpec(half_scale(P), float(stationary_point(P, prec)))


def _bump_pos_vec(l: int, xi: np.ndarray, L: float, alpha: float) -> np.ndarray:
    s = xi - alpha
    if l == 0:
        s = np.abs(s)
        out = np.zeros_like(s)
        out[s <= L] = 1.0
        mid = (s > L) & (s < 2 * L)
        out[mid] = transition_h_vec(2.0 - s[mid] / L)
        return out
    lo, md, hi = 2.0 ** (l - 1) * L, 2.0 ** l * L, 2.0 ** (l + 1) * L
    out = np.zeros_like(s)
    up = (s > lo) & (s <= md)
    dn = (s > md) & (s < hi)
    out[up] = transition_h_vec(s[up] / lo - 1.0)
    out[dn] = transition_h_vec(2.0 - s[dn] / md)
    return out


def bump_vec(l: int, xi, L: float, alpha: float) -> np.ndarray:
    """b_l^{L,alpha}(xi); negative l mirror positive ones about alpha.

    Falling edges use h(1-u) in place of 1-h(u), which keeps the tails
    accurate far below double-precision epsilon.
    """
    xi = np.asarray(xi, dtype=float)
    if l < 0:
        return _bump_pos_vec(-l, 2 * alpha - xi, L, alpha)
    return _bump_pos_vec(l, xi, L, alpha)


def bump(l: int, xi, L: float, alpha: float):
    if isinstance(xi, mpmath.mpf):
        s = xi - alpha
        if l < 0:
            s, l = -s, -l
        if l == 0:
            s = abs(s)
            if s <= L:
                return mpmath.mpf(1)
            if s >= 2 * L:
                return mpmath.mpf(0)
            return transition_h(2 - s / L)
        lo, md, hi = mpmath.ldexp(L, l - 1), mpmath.ldexp(L, l), mpmath.ldexp(L, l + 1)
        if s <= lo or s >= hi:
            return mpmath.mpf(0)
        if s <= md:
            return transition_h(s / lo - 1)
        return transition_h(2 - s / md)
    return float(bump_vec(l, np.array([float(xi)]), L, alpha)[0])


def bump_d1_vec(l: int, xi, L: float, alpha: float) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    sign = 1.0
    if l < 0:
        xi, l, sign = 2 * alpha - xi, -l, -1.0
    s = xi - alpha
    out = np.zeros_like(s)
    if l == 0:
        a = np.abs(s)
        mid = (a > L) & (a < 2 * L)
        out[mid] = -np.sign(s[mid]) * transition_h_d1_vec(a[mid] / L - 1.0) / L
        return sign * out
    lo, md, hi = 2.0 ** (l - 1) * L, 2.0 ** l * L, 2.0 ** (l + 1) * L
    up = (s > lo) & (s <= md)
    dn = (s > md) & (s < hi)
    out[up] = transition_h_d1_vec(s[up] / lo - 1.0) / lo
    out[dn] = -transition_h_d1_vec(s[dn] / md - 1.0) / md
    return sign * out


# -- dual integrals -------------------------------------------------------------

def G_amplitude_vec(y: np.ndarray, P: OffDiagParams, i: int) -> np.ndarray:
    """G_1 or G_2 at y (zero outside the support of g)."""
    y = np.asarray(y, dtype=float)
    q = _alpha(P) * y * y - P.kappa ** 2
    out = np.zeros_like(y)
    g = g_window_vec(y, P)
    ok = (g != 0) & (q > 0)
    yo, qo = y[ok], q[ok]
    jk = bessel_j_vec(float(P.kappa), yo)
    if i == 1:
        out[ok] = P.c ** 1.5 * P.m ** -0.75 * yo * qo ** -0.75 * g[ok] * jk
    elif i == 2:
        out[ok] = P.c ** 3.5 * P.m ** -1.75 * P.x * yo ** 3 * qo ** -1.75 * g[ok] * jk
    else:
        raise ValueError("i must be 1 or 2")
    return out


def _G_mp(y, P: OffDiagParams, i: int, prec: Precision):
    q = mpmath.mpf(P.c) ** 2 * P.x * P.t / P.m * y * y - P.kappa ** 2
    g = mpmath.mpf(g_window(float(y), P))
    if g == 0 or q <= 0:
        return mpmath.mpf(0)
    jk = bessel_j(P.kappa, y, prec)
    if i == 1:
        return mpmath.mpf(P.c) ** 1.5 * mpmath.power(P.m, -0.75) * y * mpmath.power(q, -0.75) * g * jk
    return mpmath.mpf(P.c) ** 3.5 * mpmath.power(P.m, -1.75) * P.x * y ** 3 * mpmath.power(q, -1.75) * g * jk


def _support(P: OffDiagParams) -> tuple[float, float]:
    a, _, _, d = _g_edges(P)
    lo_dom = P.kappa / math.sqrt(_alpha(P))
    return max(a, lo_dom), d


def _phase_rate(P: OffDiagParams, a: float, b: float) -> float:
    return abs(P.c * P.n / (4 * math.pi * P.m)) * max(abs(a), abs(b)) + math.sqrt(_alpha(P))


def dual_integral(P: OffDiagParams, i: int, windowed: bool = False, prec: Precision | None = None,
                  spec: PartitionSpec | None = None, rel_tol: float = 1e-11) -> complex:
    """int G_i(y) e^{iF(y)} dy over supp g, or over [y0-2L, y0+2L] against b_0."""
    lo, hi = _support(P)
    if windowed:
        if spec is None:
            spec = partition_spec(P)
        lo, hi = max(lo, spec.y0 - 2 * spec.L), min(hi, spec.y0 + 2 * spec.L)
        if not lo < hi:
            return 0j
    rate = _phase_rate(P, lo, hi)
    brk = []
    if spec is not None:
        brk = [spec.y0 - spec.L, spec.y0, spec.y0 + spec.L]
    if prec is None:
        def f(y):
            amp = G_amplitude_vec(y, P, i)
            if windowed:
                amp = amp * bump_vec(0, y, spec.L, spec.y0)
            return amp * np.exp(1j * phase_F_vec(y, P))

        return oscillatory_integrate_vec(f, lo, hi, freq_hint=rate, breakpoints=brk,
                                         rel_tol=rel_tol, abs_tol=1e-300).value

    def fm(y):
        amp = _G_mp(y, P, i, prec)
        if amp == 0:
            return mpmath.mpc(0)
        if windowed:
            amp *= bump(0, y, mpmath.mpf(spec.L), mpmath.mpf(spec.y0))
        return amp * mpmath.expj(phase_F(y, P)[0])

    # g is a float64 function, so the mp path shares the float tolerance
    res = oscillatory_integrate(fm, lo, hi, freq_hint=rate, prec=prec, breakpoints=brk, rel_tol=rel_tol)
    return complex(res.value)


def regime(P: OffDiagParams, spec: PartitionSpec) -> str | None:
    """Which case of the three-regime split applies to (y0, L), if any."""
    k, e = P.k, P.epsilon
    edge = k ** (1 / 3 + e)
    if spec.y0 + 2 * spec.L <= k - edge:
        return "i"
    if spec.y0 - 10 * spec.L >= k + edge:
        return "iii"
    if spec.y0 + 2 * spec.L >= k - edge and spec.y0 - 10 * spec.L <= k + edge:
        return "ii"
    return None


def above_transition_bound(P: OffDiagParams) -> float:
    """Envelope for the dual integral when the window sits past the Bessel transition."""
    x, k, c, m, n, t = P.x, P.k, P.c, P.m, P.n, P.t
    gap = 4 * math.pi * math.sqrt(m * x * t) / k - n
    if gap <= 0:
        raise ValueError("needs n < 4 pi sqrt(m x t)/k")
    return (x ** -1.125 * k ** -0.25 * c ** -0.5 * m ** 0.125 * n ** 0.5 * gap ** -0.25
            + x ** -0.625 * k ** -2.25 * m ** 0.125 * n ** 2 * gap ** -2.25)


# -- S1 / S2 and Poisson ----------------------------------------------------------

def _u_range(P: OffDiagParams) -> tuple[float, float]:
    a, _, _, d = _g_edges(P)
    scale = (P.c / (4 * math.pi)) ** 2 / P.m
    return a * a * scale, d * d * scale


def summand_vec(u: np.ndarray, P: OffDiagParams, i: int) -> np.ndarray:
    """phi_i(u): the S_i summand before the additive character (S2 carries the factor x)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    y = 4 * math.pi * np.sqrt(np.maximum(P.m * u, 0.0)) / P.c
    g = g_window_vec(y, P)
    q = 16 * math.pi ** 2 * u * P.x * P.t - P.kappa ** 2
    ok = (g != 0) & (q > 0) & (u > 0)
    z = 4 * math.pi * np.sqrt(u[ok] * P.x * P.t)
    core = np.sin(omega_phase_vec(float(P.kappa), z)) * g[ok] * bessel_j_vec(float(P.kappa), y[ok])
    if i == 1:
        out[ok] = q[ok] ** -0.75 * core
    elif i == 2:
        out[ok] = P.x * u[ok] * q[ok] ** -1.75 * core
    else:
        raise ValueError("i must be 1 or 2")
    return out


def s_sum_direct(P: OffDiagParams, i: int, n_cap: int | None = None, prec: Precision = DEFAULT_PREC):
    """sum over units a mod c of |sum_u phi_i(u) e(a u/c)|."""
    u_lo, u_hi = _u_range(P)
    need = int(math.floor(u_hi))
    if n_cap is None:
        n_cap = need
    if n_cap < need:
        raise TruncationInsufficient(f"n_cap {n_cap} below support end {need}")
    u = np.arange(max(1, int(math.ceil(u_lo))), n_cap + 1)
    vals = summand_vec(u.astype(float), P, i)
    nz = vals != 0
    u, vals = u[nz], vals[nz]
    with prec.ctx(16):
        total = mpmath.mpf(0)
        for a in range(1, P.c + 1):
            if math.gcd(a, P.c) != 1:
                continue
            s = mpmath.fsum(mpmath.mpf(float(v)) * mpmath.expjpi(mpmath.mpf(2 * ((a * int(uu)) % P.c)) / P.c)
                            for uu, v in zip(u, vals))
            total += abs(s)
    with prec.ctx():
        return +total


def poisson_sides(P: OffDiagParams, b: int, i: int = 1, tol: float = 2.0 ** -60,
                  run: int = 10, max_terms: int = 4000) -> tuple[complex, complex, int]:
    """(sum_l phi(b + l c), (1/c) sum_lt e(lt b/c) int phi(u) e(-lt u/c) du, dual terms used)."""
    u_lo, u_hi = _u_range(P)
    c = P.c
    l0 = math.ceil((u_lo - b) / c)
    l1 = math.floor((u_hi - b) / c)
    pts = np.array([b + l * c for l in range(l0, l1 + 1) if b + l * c > 0], dtype=float)
    lhs = math.fsum(summand_vec(pts, P, i).tolist()) if pts.size else 0.0

    # fixed panels, shared across frequencies: enough to resolve the fastest dual oscillation too
    xg, wg = gauss_legendre(32)
    lo, hi = max(u_lo, 1e-12), u_hi
    inner = math.sqrt(P.x * P.t / lo) + 2 * math.sqrt(P.m / lo) / c

    def integrals(lt_max: int, panels: int):
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        weights = (half[:, None] * wg[None, :]).ravel()
        phi = summand_vec(nodes, P, i) * weights
        keep = phi != 0
        phi, nodes = phi[keep], nodes[keep]
        step = np.exp(-2j * math.pi * nodes / c)
        out = {0: complex(np.sum(phi))}
        cur = phi.astype(complex)
        for lt in range(1, lt_max + 1):
            # phi is real, so the -lt integral is the conjugate of the +lt one
            cur = cur * step
            if lt % 64 == 0:
                cur = phi * np.exp(-2j * math.pi * lt * nodes / c)
            out[lt] = complex(np.sum(cur))
            out[-lt] = out[lt].conjugate()
        return out, float(np.sum(np.abs(phi)))

    def panels_for(lt_max: int) -> int:
        freq = inner + lt_max / c
        return max(64, int(math.ceil((hi - lo) * freq)) * 2)

    lt_max = max(run, 2 * int(math.ceil(c * inner)) + run)
    while True:
        res, mass = integrals(lt_max, panels_for(lt_max))
        res2, _ = integrals(lt_max, 2 * panels_for(lt_max))
        quad_err = max(abs(res[j] - res2[j]) for j in res)
        floor = max(tol, 1e-14 * mass, 4 * quad_err)
        tail = [max(abs(res2[lt]), abs(res2[-lt])) for lt in range(lt_max - run + 1, lt_max + 1)]
        if all(v <= floor for v in tail):
            res = res2
            break
        if 2 * lt_max > max_terms:
            raise TruncationInsufficient(f"dual terms still above {floor:.2e} at |lt| = {lt_max}")
        lt_max *= 2
    rhs = sum(cmath.exp(2j * math.pi * lt * b / c) * res[lt] for lt in sorted(res)) / c
    return complex(lhs), complex(rhs), lt_max


def poisson_check(P: OffDiagParams, a: int, i: int = 1) -> float:
    """|LHS - RHS| / (|LHS| + 2^-40) for the residue class b = a mod c."""
    if math.gcd(a, P.c) != 1:
        raise ValueError("a must be coprime to c")
    lhs, rhs, _ = poisson_sides(P, a % P.c, i)
    return abs(lhs - rhs) / (abs(lhs) + 2.0 ** -40)


# -- four-term bound ----------------------------------------------------------------

@dataclass(frozen=True)
class OffDiagBound:
    k: int
    x: float
    delta: float
    epsilon: float
    terms: tuple

    @property
    def total(self) -> float:
        return math.fsum(self.terms)


def offdiag_bound_report(k: int, x: float, delta: float, epsilon: float = EPSILON) -> OffDiagBound:
    """k^(-8/3) D^2 + k^(-3/2+e) D^(3/2) + x^(-1/2) k^(1/6+2e) D + x^(-3/2) k^(-5/6+4e) D^3."""
    top = x ** (2 / 3) * k ** (1 / 3 - epsilon)
    if not math.sqrt(x) * (1 - 1e-12) <= delta <= top * (1 + 1e-12):
        raise ValueError(f"need x^(1/2) <= delta <= x^(2/3) k^(1/3-eps) (= {top:.4g})")
    e = epsilon
    terms = (
        k ** (-8 / 3) * delta ** 2,
        k ** (-1.5 + e) * delta ** 1.5,
        x ** -0.5 * k ** (1 / 6 + 2 * e) * delta,
        x ** -1.5 * k ** (-5 / 6 + 4 * e) * delta ** 3,
    )
    return OffDiagBound(k, x, delta, epsilon, terms)
