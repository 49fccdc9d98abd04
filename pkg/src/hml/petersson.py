"""Kloosterman sums, the Petersson trace formula and harmonic weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath

from .bessel import bessel_j_series
from .modforms import Eigenform
from .numeric import DEFAULT_PREC, Precision

__all__ = [
    "TraceEval",
    "HarmonicBasis",
    "SingularSystem",
    "kloosterman",
    "kloosterman_residues",
    "default_cmax",
    "trace_tail_bound",
    "trace_rhs",
    "solve_harmonic_weights",
    "harmonic_average",
]


@lru_cache(maxsize=65536)
def kloosterman_residues(m: int, n: int, c: int) -> tuple:
    """Multiplicities of each residue r = a*m + a n (mod c) over units a."""
    counts = [0] * c
    for a in range(c):
        if math.gcd(a, c) != 1:
            continue
        inv = pow(a, -1, c) if c > 1 else 0
        counts[(inv * m + a * n) % c] += 1
    return tuple(counts)


def kloosterman(m: int, n: int, c: int, prec: Precision = DEFAULT_PREC):
    """S(m,n;c) as a real number (the sine parts cancel in conjugate pairs)."""
    if c < 1:
        raise ValueError("modulus must be positive")
    counts = kloosterman_residues(m % c, n % c, c)
    with prec.ctx(16):
        total = mpmath.fsum(
            cnt * mpmath.cospi(mpmath.mpf(2 * r) / c) for r, cnt in enumerate(counts) if cnt
        )
    with prec.ctx():
        return +total


def default_cmax(m: int, n: int, k: int) -> int:
    """Smallest c with 4 pi sqrt(mn)/c <= (k-1)/4, plus 20."""
    c0 = max(1, math.ceil(16 * math.pi * math.sqrt(m * n) / (k - 1)))
    while 4 * math.pi * math.sqrt(m * n) / c0 > (k - 1) / 4:
        c0 += 1
    return c0 + 20


def trace_tail_bound(m: int, n: int, k: int, c_max: int, prec: Precision = DEFAULT_PREC):
    """Bound for the omitted terms c > c_max.

    Uses |S| <= c and |J_nu(z)| <= (z/2)^nu / Gamma(nu+1), summed against
    c^(-nu) by an integral comparison.
    """
    nu = k - 1
    with prec.ctx(16):
        z1 = 2 * mpmath.pi * mpmath.sqrt(m * n)
        if c_max < 1:
            return mpmath.inf
        head = mpmath.power(z1 / c_max, nu) / mpmath.gamma(nu + 1)
        tail = 2 * mpmath.pi * head * (1 + mpmath.mpf(c_max) / (nu - 1))
    with prec.ctx():
        return +tail


@dataclass(frozen=True)
class TraceEval:
    m: int
    n: int
    c_max: int
    value: object
    tail_bound: object


def trace_rhs(m: int, n: int, k: int, c_max: int | None = None, prec: Precision = DEFAULT_PREC) -> TraceEval:
    """delta_mn + 2 pi (-1)^(k/2) sum_{c<=c_max} S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c)."""
    if m < 1 or n < 1:
        raise ValueError("m, n must be positive")
    if k < 12 or k % 2:
        raise ValueError("need even k >= 12")
    if c_max is None:
        c_max = default_cmax(m, n, k)
    sign = -1 if (k // 2) % 2 else 1
    with prec.ctx(32):
        root = 4 * mpmath.pi * mpmath.sqrt(m * n)
        terms = []
        for c in range(1, c_max + 1):
            s = kloosterman(m, n, c, Precision(prec.bits + 32))
            if s == 0:
                continue
            j = bessel_j_series(k - 1, root / c, Precision(prec.bits + 32))
            terms.append(s * j / c)
        total = (1 if m == n else 0) + sign * 2 * mpmath.pi * mpmath.fsum(terms)
    tail = trace_tail_bound(m, n, k, c_max, prec)
    with prec.ctx():
        return TraceEval(m, n, c_max, +total, tail)


class SingularSystem(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    """Eigenbasis of S_k with harmonic weights omega(f)."""

    k: int
    forms: tuple
    weights: tuple
    weight_tail: object = 0
    residual: object = 0

    @property
    def dim(self) -> int:
        return len(self.forms)

    @property
    def n_max(self) -> int:
        return min((f.n_max for f in self.forms), default=0)


def solve_harmonic_weights(
    k: int,
    forms: Sequence[Eigenform],
    c_max: int | None = None,
    prec: Precision = DEFAULT_PREC,
) -> HarmonicBasis:
    """Solve sum_f omega(f) lambda_f(n) = trace_rhs(1, n) for n = 1..dim."""
    d = len(forms)
    if d == 0:
        return HarmonicBasis(k, (), ())
    work = Precision(prec.bits + 64)
    rhs_evals = [trace_rhs(1, n, k, c_max, work) for n in range(1, d + 1)]
    with work.ctx():
        A = mpmath.matrix(d, d)
        for i in range(d):
            for j, f in enumerate(forms):
                A[i, j] = f.lambda_(i + 1)
        b = mpmath.matrix([e.value for e in rhs_evals])
        try:
            w = mpmath.lu_solve(A, b)
        except ZeroDivisionError as exc:
            raise SingularSystem(str(exc)) from exc
        res = A * w - b
        rel = mpmath.norm(res, mpmath.inf) / max(mpmath.norm(b, mpmath.inf), mpmath.mpf(1))
        if rel > mpmath.mpf(10) ** -10:
            raise SingularSystem(f"harmonic weight system residual {rel} too large")
        # propagate the trace-formula tail through the solve
        inv_norm = mpmath.norm(mpmath.inverse(A), mpmath.inf)
        tail = inv_norm * max(e.tail_bound for e in rhs_evals)
    with prec.ctx():
        weights = tuple(+w[i] for i in range(d))
        return HarmonicBasis(k, tuple(forms), weights, +tail, +rel)


def harmonic_average(basis: HarmonicBasis, values: Sequence):
    """sum_f omega(f) value_f."""
    if len(values) != basis.dim:
        raise ValueError(f"expected {basis.dim} values, got {len(values)}")
    if basis.dim == 0:
        return mpmath.mpf(0)
    with mpmath.workprec(max(mpmath.mp.prec, basis.forms[0].prec_bits) + 16):
        return mpmath.fsum(w * v for w, v in zip(basis.weights, values))
