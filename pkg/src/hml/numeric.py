"""Precision contract, the smooth transition function and panel quadrature.

Two quadrature backends share one panel strategy: ``oscillatory_integrate``
evaluates the integrand pointwise on mpmath reals at a requested precision,
``oscillatory_integrate_vec`` hands whole node arrays to a vectorized float64
integrand. Both use Gauss-Legendre panels of order 16 with an order-32
comparison on the same panel as error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import special

__all__ = [
    "Precision",
    "DEFAULT_PREC",
    "QuadratureResult",
    "QuadratureError",
    "transition_h",
    "transition_h_vec",
    "transition_h_d1_vec",
    "gauss_legendre",
    "oscillatory_integrate",
    "oscillatory_integrate_vec",
]


@dataclass(frozen=True)
class Precision:
    """Working mantissa precision in bits."""

    bits: int = 128

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 64:
            raise ValueError(f"precision must be an integer >= 64 bits, got {self.bits}")

    def ctx(self, extra: int = 0):
        return mpmath.workprec(self.bits + extra)

    def eps(self, guard: int = 0):
        """2^(-bits+guard) as an mpf."""
        return mpmath.ldexp(mpmath.mpf(1), -self.bits + guard)

    def doubled(self) -> "Precision":
        return Precision(2 * self.bits)


DEFAULT_PREC = Precision(128)


@dataclass(frozen=True)
class QuadratureResult:
    value: object
    error_estimate: object
    panels_used: int

    def __post_init__(self):
        if self.panels_used < 1:
            raise ValueError("panels_used must be >= 1")
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be >= 0")


class QuadratureError(ArithmeticError):
    """Panel refinement hit its cap with the error estimate still too large."""


# -- transition function ------------------------------------------------------

def transition_h(u):
    """C-infinity step from 0 to 1 on [0,1], with h(u) + h(1-u) = 1.

    Accepts Python floats/ints (float arithmetic) or mpf (current mpmath precision).
    """
    if isinstance(u, mpmath.mpf):
        if u < 0 or u > 1:
            raise ValueError(f"transition_h: u={u} outside [0,1]")
        if u == 0:
            return mpmath.mpf(0)
        if u == 1:
            return mpmath.mpf(1)
        if 2 * u == 1:
            return mpmath.mpf(1) / 2
        a = mpmath.exp(-1 / u)
        b = mpmath.exp(-1 / (1 - u))
        return a / (a + b)
    u = float(u)
    if not 0.0 <= u <= 1.0 or math.isnan(u):
        raise ValueError(f"transition_h: u={u} outside [0,1]")
    if u == 0.0:
        return 0.0
    if u == 1.0:
        return 1.0
    if u == 0.5:
        return 0.5
    # ratio form avoids underflow of both exponentials near the ends
    d = 1.0 / u - 1.0 / (1.0 - u)
    if d > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(d))


def transition_h_vec(u: np.ndarray) -> np.ndarray:
    """Vectorized float64 h; values are clipped to [0,1] first."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    out = np.empty_like(u)
    inner = (u > 0.0) & (u < 1.0)
    out[u <= 0.0] = 0.0
    out[u >= 1.0] = 1.0
    ui = u[inner]
    d = 1.0 / ui - 1.0 / (1.0 - ui)
    # logistic form keeps full relative accuracy in both tails
    out[inner] = special.expit(-d)
    return out


def transition_h_d1_vec(u: np.ndarray) -> np.ndarray:
    """Derivative h'(u), vectorized float64; zero outside (0,1)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inner = (u > 0.0) & (u < 1.0)
    ui = u[inner]
    d = 1.0 / ui - 1.0 / (1.0 - ui)
    dd = 1.0 / (1.0 - ui) ** 2 + 1.0 / ui ** 2
    # h = 1/(1+e^d), h' = -e^d/(1+e^d)^2 * d' = -d'/(4 cosh^2(d/2))
    with np.errstate(over="ignore"):
        out[inner] = dd / (4.0 * np.cosh(0.5 * d) ** 2)
    return out


# -- Gauss-Legendre nodes -----------------------------------------------------

@lru_cache(maxsize=None)
def _gl_mp(order: int, bits: int):
    """Nodes and weights on [-1,1] at the given precision (Newton on P_n)."""
    with mpmath.workprec(bits + 32):
        nodes, weights = [], []
        for i in range(1, order + 1):
            x = mpmath.cos(mpmath.pi * (i - mpmath.mpf(1) / 4) / (order + mpmath.mpf(1) / 2))
            for _ in range(200):
                p0, p1 = mpmath.mpf(1), x
                for j in range(2, order + 1):
                    p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
                dp = order * (x * p1 - p0) / (x * x - 1)
                step = p1 / dp
                x -= step
                if abs(step) < mpmath.ldexp(1, -(bits + 24)):
                    break
            p0, p1 = mpmath.mpf(1), x
            for j in range(2, order + 1):
                p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
            dp = order * (x * p1 - p0) / (x * x - 1)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    return tuple(nodes), tuple(weights)


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Float64 nodes and weights on [-1,1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


LOW_ORDER = 16
HIGH_ORDER = 32


def _initial_edges(a, b, freq_hint, breakpoints, min_panels):
    # one panel per oscillation period keeps >= 16 nodes per period
    n = max(1, int(math.ceil(float(b - a) * float(freq_hint) / (2 * math.pi))), min_panels)
    pts = sorted({float(p) for p in breakpoints if float(a) < float(p) < float(b)})
    cuts = [float(a)] + pts + [float(b)]
    total = float(b - a)
    edges = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        m = max(1, int(math.ceil(n * (hi - lo) / total)))
        edges.extend(lo + (hi - lo) * j / m for j in range(m))
    edges.append(float(b))
    return edges


def oscillatory_integrate_vec(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    freq_hint: float = 0.0,
    *,
    breakpoints: Sequence[float] = (),
    rel_tol: float = 1e-12,
    abs_tol: float = 0.0,
    min_panels: int = 1,
    max_panels: int = 1 << 18,
) -> QuadratureResult:
    """Integrate a vectorized float64 (real or complex) integrand over [a,b]."""
    if not a < b:
        raise ValueError("need a < b")
    x16, w16 = gauss_legendre(LOW_ORDER)
    x32, w32 = gauss_legendre(HIGH_ORDER)
    xs = np.concatenate([x16, x32])
    edges = np.asarray(_initial_edges(a, b, freq_hint, breakpoints, min_panels))
    lo, hi = edges[:-1], edges[1:]
    done_val, done_err, done_abs = [], [], []
    panels = 0
    while True:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        pts = mid[:, None] + half[:, None] * xs[None, :]
        vals = np.asarray(f(pts.ravel())).reshape(pts.shape)
        g16 = half * (vals[:, :LOW_ORDER] @ w16)
        g32 = half * (vals[:, LOW_ORDER:] @ w32)
        err = np.abs(g32 - g16)
        # tolerance relative to int |f|: panel sums of an oscillatory f cancel
        mass = half * (np.abs(vals[:, LOW_ORDER:]) @ w32)
        scale = sum(done_abs) + float(np.sum(mass))
        budget = max(abs_tol, rel_tol * scale)
        ok = err <= budget * (hi - lo) / (b - a) + 1e-300
        done_val.append(g32[ok])
        done_err.append(err[ok])
        done_abs.append(float(np.sum(mass[ok])))
        panels += int(np.count_nonzero(ok))
        if ok.all():
            break
        bad_lo, bad_hi = lo[~ok], hi[~ok]
        if panels + 2 * bad_lo.size > max_panels:
            raise QuadratureError(
                f"quadrature did not converge on [{a},{b}] with {max_panels} panels "
                f"(remaining error {float(np.sum(err[~ok])):.3e})"
            )
        bmid = 0.5 * (bad_lo + bad_hi)
        lo = np.concatenate([bad_lo, bmid])
        hi = np.concatenate([bmid, bad_hi])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
    allv = np.concatenate(done_val)
    value = complex(math.fsum(allv.real), math.fsum(allv.imag)) if np.iscomplexobj(allv) \
        else math.fsum(allv)
    return QuadratureResult(value, float(math.fsum(np.concatenate(done_err))), panels)


def oscillatory_integrate(
    f: Callable,
    a,
    b,
    freq_hint=0,
    prec: Precision = DEFAULT_PREC,
    *,
    breakpoints: Sequence = (),
    rel_tol=None,
    abs_tol=None,
    min_panels: int = 1,
    max_panels: int = 1 << 12,
) -> QuadratureResult:
    """Integrate an mpmath integrand over [a,b] at ``prec`` bits.

    Default tolerance is 2^(-bits+8) relative to the integral of |f|.
    """
    with prec.ctx(16):
        a = mpmath.mpf(a)
        b = mpmath.mpf(b)
        if not a < b:
            raise ValueError("need a < b")
        rtol = prec.eps(8) if rel_tol is None else mpmath.mpf(rel_tol)
        atol = mpmath.mpf(0) if abs_tol is None else mpmath.mpf(abs_tol)
        n16, w16 = _gl_mp(LOW_ORDER, prec.bits + 16)
        n32, w32 = _gl_mp(HIGH_ORDER, prec.bits + 16)
        edges = [mpmath.mpf(e) for e in _initial_edges(a, b, freq_hint, breakpoints, min_panels)]
        edges[0], edges[-1] = a, b
        # keep exact breakpoints where given
        for p in breakpoints:
            p = mpmath.mpf(p)
            for i, e in enumerate(edges):
                if abs(e - p) < mpmath.mpf(1e-12) * (b - a):
                    edges[i] = p
        todo = list(zip(edges[:-1], edges[1:]))
        accepted = []
        while todo:
            evaluated = []
            for lo, hi in todo:
                half = (hi - lo) / 2
                mid = (hi + lo) / 2
                g16 = half * mpmath.fsum(w * f(mid + half * x) for x, w in zip(n16, w16))
                v32 = [f(mid + half * x) for x in n32]
                g32 = half * mpmath.fsum(w * v for v, w in zip(v32, w32))
                mass = half * mpmath.fsum(w * abs(v) for v, w in zip(v32, w32))
                evaluated.append((lo, hi, g32, abs(g32 - g16), mass))
            scale = mpmath.fsum(v[4] for v in accepted + evaluated)
            budget = max(atol, rtol * scale)
            todo = []
            for lo, hi, val, err, mass in evaluated:
                if err <= budget * (hi - lo) / (b - a) or err == 0:
                    accepted.append((lo, hi, val, err, mass))
                else:
                    m = (lo + hi) / 2
                    todo.extend([(lo, m), (m, hi)])
            if len(accepted) + len(todo) > max_panels:
                raise QuadratureError(
                    f"quadrature did not converge on [{a},{b}] with {max_panels} panels"
                )
        accepted.sort(key=lambda r: r[0])
        value = mpmath.fsum(r[2] for r in accepted)
        err = mpmath.fsum(r[3] for r in accepted)
    with prec.ctx():
        return QuadratureResult(+value, +err, len(accepted))
