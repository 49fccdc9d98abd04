"""Smoothing weight w, its Bessel transform, Omega(n,x) and the Voronoi transform."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .bessel import bessel_j, bessel_j_vec, omega_phase, omega_phase_vec
from .modforms import Eigenform
from .numeric import (
    DEFAULT_PREC,
    Precision,
    QuadratureResult,
    oscillatory_integrate,
    oscillatory_integrate_vec,
    transition_h,
    transition_h_d1_vec,
    transition_h_vec,
)

__all__ = [
    "SmoothingParams",
    "CutoffTooSmall",
    "w_delta",
    "w_delta_vec",
    "w_delta_d1_vec",
    "w_tilde",
    "w_tilde_quad",
    "w_tilde_table",
    "w_tilde_asymptotic",
    "w_tilde_ibp",
    "big_omega",
    "big_omega_vec",
    "omega_max",
    "default_cutoff",
    "voronoi_transform",
    "smoothed_sum",
    "transform_tail_estimate",
    "CUTOFF_K",
]

CUTOFF_K = 16
_SQRT_FACTOR = 2 * math.sqrt(2) / math.sqrt(math.pi)


@dataclass(frozen=True)
class SmoothingParams:
    delta: float
    x: float
    k: int

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("delta must be >= 1")

    @property
    def kappa(self) -> int:
        return self.k - 1


class CutoffTooSmall(ArithmeticError):
    pass


def w_delta(t, p: SmoothingParams):
    """Smooth weight: rises on [1, 1+1/delta], 1 on the plateau, falls on [2-1/delta, 2]."""
    if isinstance(t, mpmath.mpf):
        d = mpmath.mpf(p.delta)
        if t <= 1 or t >= 2:
            return mpmath.mpf(0)
        if t < 1 + 1 / d:
            return transition_h(d * (t - 1))
        if t > 2 - 1 / d:
            return transition_h(d * (2 - t))
        return mpmath.mpf(1)
    t = float(t)
    d = float(p.delta)
    if t <= 1.0 or t >= 2.0:
        return 0.0
    if t < 1.0 + 1.0 / d:
        return transition_h(min(1.0, d * (t - 1.0)))
    if t > 2.0 - 1.0 / d:
        return transition_h(min(1.0, d * (2.0 - t)))
    return 1.0


def w_delta_vec(t: np.ndarray, delta: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return transition_h_vec(delta * (t - 1.0)) * transition_h_vec(delta * (2.0 - t))


def w_delta_d1_vec(t: np.ndarray, delta: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    up = transition_h_vec(delta * (t - 1.0))
    down = transition_h_vec(delta * (2.0 - t))
    return delta * (transition_h_d1_vec(delta * (t - 1.0)) * down
                    - up * transition_h_d1_vec(delta * (2.0 - t)))


def _w_breaks(delta: float):
    return (1.0 + 1.0 / delta, 2.0 - 1.0 / delta)


def w_tilde_quad(n: int, p: SmoothingParams, rel_tol: float = 1e-12) -> QuadratureResult:
    """Float64 quadrature of int_1^2 w(t) J_{k-1}(4 pi sqrt(n x t)) dt."""
    if n < 1:
        raise ValueError("n must be positive")
    nx = n * float(p.x)
    nu = float(p.kappa)
    c = 4 * math.pi * math.sqrt(nx)
    delta = float(p.delta)

    def f(t):
        return w_delta_vec(t, delta) * bessel_j_vec(nu, c * np.sqrt(t))

    lo, hi = _w_breaks(delta)
    # the transition zones need at least a few panels of width ~1/delta
    return oscillatory_integrate_vec(
        f, 1.0, 2.0, freq_hint=2 * math.pi * math.sqrt(nx),
        breakpoints=(lo, hi, 1 + 0.5 / delta, 2 - 0.5 / delta),
        rel_tol=rel_tol, abs_tol=1e-300,
    )


def w_tilde(n: int, p: SmoothingParams, prec: Precision | None = None):
    """w~ at xi = n x/(k^2+delta^2), i.e. int_1^2 w(t) J_{k-1}(4 pi sqrt(n x t)) dt.

    ``prec=None`` selects the float64 path; otherwise the integrand is evaluated
    pointwise with the mpmath Bessel dispatcher at ``prec``.
    """
    if prec is None:
        return w_tilde_quad(n, p).value
    with prec.ctx(16):
        c = 4 * mpmath.pi * mpmath.sqrt(mpmath.mpf(n) * mpmath.mpf(p.x))
        lo, hi = _w_breaks(float(p.delta))

        def f(t):
            w = w_delta(t, p)
            if w == 0:
                return mpmath.mpf(0)
            return w * bessel_j(p.kappa, c * mpmath.sqrt(t), prec)

        res = oscillatory_integrate(
            f, 1, 2, freq_hint=float(2 * math.pi * math.sqrt(n * float(p.x))), prec=prec,
            breakpoints=(lo, hi),
        )
    return res.value


def w_tilde_table(p: SmoothingParams, n_cutoff: int) -> np.ndarray:
    """w~(n) for n = 1..n_cutoff (index 0 is n=1), float64."""
    return np.array([w_tilde_quad(n, p).value for n in range(1, n_cutoff + 1)])


def big_omega(n, x, kappa):
    """2(32pi^2 - k^2/(nx))^(-3/4) sin w(4pi sqrt(2nx)) - (16pi^2 - k^2/(nx))^(-3/4) sin w(4pi sqrt(nx))."""
    if isinstance(x, mpmath.mpf) or isinstance(kappa, mpmath.mpf):
        nx = mpmath.mpf(n) * x
        kap = mpmath.mpf(kappa)
        if not 16 * mpmath.pi ** 2 * nx > kap ** 2:
            raise ValueError("big_omega requires 16 pi^2 n x > kappa^2")
        r = kap * kap / nx
        p2 = 32 * mpmath.pi ** 2 - r
        p1 = 16 * mpmath.pi ** 2 - r
        t2 = 2 * mpmath.power(p2, -0.75) * mpmath.sin(omega_phase(kap, 4 * mpmath.pi * mpmath.sqrt(2 * nx)))
        t1 = mpmath.power(p1, -0.75) * mpmath.sin(omega_phase(kap, 4 * mpmath.pi * mpmath.sqrt(nx)))
        return t2 - t1
    nx = float(n) * float(x)
    kap = float(kappa)
    if not 16 * math.pi ** 2 * nx > kap ** 2:
        raise ValueError("big_omega requires 16 pi^2 n x > kappa^2")
    r = kap * kap / nx
    t2 = 2 * (32 * math.pi ** 2 - r) ** -0.75 * math.sin(omega_phase(kap, 4 * math.pi * math.sqrt(2 * nx)))
    t1 = (16 * math.pi ** 2 - r) ** -0.75 * math.sin(omega_phase(kap, 4 * math.pi * math.sqrt(nx)))
    return t2 - t1


def big_omega_vec(n: np.ndarray, x: float, kappa: float) -> np.ndarray:
    nx = np.asarray(n, dtype=float) * float(x)
    if np.any(16 * math.pi ** 2 * nx <= kappa ** 2):
        raise ValueError("big_omega requires 16 pi^2 n x > kappa^2")
    r = kappa * kappa / nx
    t2 = 2 * (32 * math.pi ** 2 - r) ** -0.75 * np.sin(omega_phase_vec(kappa, 4 * math.pi * np.sqrt(2 * nx)))
    t1 = (16 * math.pi ** 2 - r) ** -0.75 * np.sin(omega_phase_vec(kappa, 4 * math.pi * np.sqrt(nx)))
    return t2 - t1


def omega_max() -> float:
    """Envelope of |Omega(n,x)| valid whenever x >= k^2/(8 pi^2)."""
    return 2 * (24 * math.pi ** 2) ** -0.75 + (8 * math.pi ** 2) ** -0.75


def w_tilde_asymptotic(n: int, p: SmoothingParams) -> float:
    """(2 sqrt2/sqrt pi) Omega(n,x) (nx)^(-3/4)."""
    nx = n * float(p.x)
    return _SQRT_FACTOR * big_omega(n, float(p.x), float(p.kappa)) * nx ** -0.75


def w_tilde_ibp(n: int, p: SmoothingParams, rel_tol: float = 1e-9) -> float:
    """The integrated-by-parts integral representation of w~(n) (no asymptotics).

    The float64 phase carries ~sqrt(nx)*1e-16 absolute noise and the integrand
    peaks in the transition zones, so tolerances much below 1e-10 relative to
    int |f| are unreachable here.
    """
    nx = n * float(p.x)
    kap = float(p.kappa)
    delta = float(p.delta)
    a = 16 * math.pi ** 2 * nx
    if a <= kap * kap:
        raise ValueError("needs 16 pi^2 n x > kappa^2")

    def f(t):
        q = a * t - kap * kap
        w = w_delta_vec(t, delta)
        brace = 12 * math.pi ** 2 * nx / q * t * w - w - t * w_delta_d1_vec(t, delta)
        return brace * q ** -0.75 * np.sin(omega_phase_vec(kap, 4 * math.pi * np.sqrt(nx * t)))

    lo, hi = _w_breaks(delta)
    res = oscillatory_integrate_vec(
        f, 1.0, 2.0, freq_hint=2 * math.pi * math.sqrt(nx),
        breakpoints=(lo, hi, 1 + 0.5 / delta, 2 - 0.5 / delta), rel_tol=rel_tol, abs_tol=1e-300,
    )
    return _SQRT_FACTOR * res.value


def default_cutoff(p: SmoothingParams, K: int = CUTOFF_K) -> int:
    return int(math.ceil((p.k ** 2 + float(p.delta) ** 2) * K / float(p.x)))


def voronoi_transform(
    f: Eigenform,
    x,
    p: SmoothingParams,
    n_cutoff: int | None = None,
    prec: Precision = DEFAULT_PREC,
    table: np.ndarray | None = None,
    tail_tol: float = 2.0 ** -40,
    epsilon: float = 0.001,
):
    """2 pi (-1)^(k/2) x sum_{n<=n_cutoff} lambda(n) w~(n).

    ``table`` may carry precomputed w~ values (shared across forms of one weight).
    Raises CutoffTooSmall when ``transform_tail_estimate`` exceeds ``tail_tol``.
    """
    if float(p.delta) > float(x) ** (1 - epsilon):
        raise ValueError("voronoi_transform needs delta <= x^(1-eps)")
    if n_cutoff is None:
        n_cutoff = default_cutoff(p)
    if f.n_max < n_cutoff:
        raise ValueError(f"eigenform table reaches {f.n_max} < n_cutoff {n_cutoff}")
    if table is None:
        table = w_tilde_table(p, n_cutoff)
    table = np.asarray(table[:n_cutoff])
    tail = transform_tail_estimate(table, x)
    if tail > tail_tol:
        raise CutoffTooSmall(f"estimated tail {tail:.3e} beyond n_cutoff={n_cutoff} exceeds {tail_tol:.3e}")
    sign = -1 if (f.k // 2) % 2 else 1
    with prec.ctx(16):
        s = mpmath.fsum(f.lam[i] * mpmath.mpf(float(table[i])) for i in range(n_cutoff))
        value = sign * 2 * mpmath.pi * mpmath.mpf(x) * s
    with prec.ctx():
        return +value


def transform_tail_estimate(table: np.ndarray, x) -> float:
    """Size of the omitted terms, proxied by the last half of the table.

    Past the cutoff |w~| decays faster than any power, so the terms beyond it
    weigh less than the final half block; each term is weighted by the
    Deligne bound d(n) <= 2 sqrt(n).
    """
    n = len(table)
    if n < 2:
        return float("inf")
    idx = np.arange(n // 2 + 1, n + 1, dtype=float)
    block = np.abs(table[n // 2:])
    return float(2 * math.pi * float(x) * np.sum(block * 2 * np.sqrt(idx)))


def smoothed_sum(f: Eigenform, x, p: SmoothingParams):
    """sum_n lambda(n) w(n/x), the quantity the transform reproduces exactly."""
    lo = math.floor(float(x)) + 1
    hi = math.ceil(2 * float(x)) - 1
    with mpmath.workprec(f.prec_bits + 16):
        xs = mpmath.mpf(x)
        return mpmath.fsum(f.lam[n - 1] * w_delta(mpmath.mpf(n) / xs, p) for n in range(lo, hi + 1))
