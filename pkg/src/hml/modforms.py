"""Exact q-expansions, the level-one cusp form basis and Hecke eigenforms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
import mpmath
import numpy as np

from .numeric import DEFAULT_PREC, Precision

__all__ = [
    "QSeries",
    "Eigenform",
    "BasisDescriptor",
    "EigenvalueClustering",
    "cusp_dim",
    "series_mul",
    "eisenstein",
    "delta_series",
    "miller_basis",
    "hecke_matrix",
    "charpoly",
    "hecke_eigenforms",
    "divisor_count",
]

KRONECKER_MIN = 32


# -- integer series arithmetic ----------------------------------------------

def _schoolbook(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    out = [0] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            for j, bj in enumerate(b[: n - i]):
                out[i + j] += ai * bj
    return out


def _pack(coeffs: Sequence[int], width: int) -> gmpy2.mpz:
    # signed digits: add 2^(width-1) to each digit so the bytes are non-negative,
    # then subtract the same offset from the packed integer
    nbytes = width // 8
    off = 1 << (width - 1)
    buf = b"".join((c + off).to_bytes(nbytes, "little") for c in coeffs)
    total = gmpy2.mpz(int.from_bytes(buf, "little"))
    return total - _offset(len(coeffs), width)


def _offset(n: int, width: int) -> gmpy2.mpz:
    # sum_{i<n} 2^(width-1) 2^(i*width)
    rep = (gmpy2.mpz(1) << (n * width)) - 1
    return (rep // ((gmpy2.mpz(1) << width) - 1)) << (width - 1)


def _unpack(value: gmpy2.mpz, n: int, width: int) -> list[int]:
    nbytes = width // 8
    off = 1 << (width - 1)
    shifted = int(value + _offset(n, width))
    buf = shifted.to_bytes(n * nbytes + 1, "little")
    return [
        int.from_bytes(buf[i * nbytes:(i + 1) * nbytes], "little") - off for i in range(n)
    ]


def series_mul(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    """Exact truncated product of two integer coefficient lists, first n terms.

    Small sizes use the schoolbook loop; larger ones pack both series into one
    integer each (Kronecker substitution) and multiply with GMP.
    """
    a = list(a[:n])
    b = list(b[:n])
    if not a or not b:
        return [0] * n
    if min(len(a), len(b)) <= KRONECKER_MIN:
        out = _schoolbook(a, b, n)
        return out
    bits_a = max(abs(c).bit_length() for c in a)
    bits_b = max(abs(c).bit_length() for c in b)
    width = bits_a + bits_b + max(len(a), len(b)).bit_length() + 2
    width = (width + 7) // 8 * 8
    prod = _pack(a, width) * _pack(b, width)
    out = _unpack(prod, len(a) + len(b) - 1, width)[:n]
    return out + [0] * (n - len(out))


@dataclass(frozen=True)
class QSeries:
    """Exact q-expansion c(0..N-1) of a weight-``weight`` form."""

    weight: int
    coeffs: tuple

    @property
    def ncoeffs(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    def __add__(self, other: "QSeries") -> "QSeries":
        if self.weight != other.weight:
            raise ValueError("adding series of different weight")
        n = min(self.ncoeffs, other.ncoeffs)
        return QSeries(self.weight, tuple(x + y for x, y in zip(self.coeffs[:n], other.coeffs[:n])))

    def __sub__(self, other: "QSeries") -> "QSeries":
        return self + other.scale(-1)

    def scale(self, c: int) -> "QSeries":
        return QSeries(self.weight, tuple(c * x for x in self.coeffs))

    def __mul__(self, other: "QSeries") -> "QSeries":
        n = min(self.ncoeffs, other.ncoeffs)
        return QSeries(self.weight + other.weight, tuple(series_mul(self.coeffs, other.coeffs, n)))

    def __pow__(self, e: int) -> "QSeries":
        if e < 0:
            raise ValueError("negative power")
        result = QSeries(0, (1,) + (0,) * (self.ncoeffs - 1))
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result


def cusp_dim(k: int) -> int:
    """dim S_k(SL2(Z)) for even k >= 0."""
    if k % 2 or k < 0:
        return 0
    if k < 12:
        return 0
    return k // 12 - 1 if k % 12 == 2 else k // 12


def _sigma(r: int, n: int) -> list[int]:
    s = [0] * n
    for d in range(1, n):
        p = d ** r
        for m in range(d, n, d):
            s[m] += p
    return s


def eisenstein(series_id: str, N: int) -> QSeries:
    if N < 1:
        raise ValueError("N must be >= 1")
    if series_id == "E4":
        s = _sigma(3, N)
        return QSeries(4, tuple([1] + [240 * v for v in s[1:]]))
    if series_id == "E6":
        s = _sigma(5, N)
        return QSeries(6, tuple([1] + [-504 * v for v in s[1:]]))
    raise ValueError(f"unknown Eisenstein series {series_id!r}")


def delta_series(N: int) -> QSeries:
    """Delta = (E4^3 - E6^2)/1728."""
    e4 = eisenstein("E4", N)
    e6 = eisenstein("E6", N)
    num = e4 ** 3 - e6 * e6
    out = []
    for c in num.coeffs:
        q, r = divmod(c, 1728)
        if r:
            raise ArithmeticError("Delta coefficient not divisible by 1728")
        out.append(q)
    return QSeries(12, tuple(out))


def _miller_exponents(k: int) -> tuple[int, int, int]:
    """(d, a, b) with k = 12 d + 4 a + 6 b and d = dim S_k."""
    table = {0: (0, 0), 2: (2, 1), 4: (1, 0), 6: (0, 1), 8: (2, 0), 10: (1, 1)}
    a, b = table[k % 12]
    d = (k - 4 * a - 6 * b) // 12
    return d, a, b


def miller_basis(k: int, N: int) -> list[QSeries]:
    """Integral echelon basis of S_k: f_i = q^i + O(q^(d+1)) for i = 1..d."""
    if k % 2 or k < 12:
        raise ValueError("miller_basis needs even k >= 12")
    d, a, b = _miller_exponents(k)
    if d == 0:
        return []
    if N < d + 2:
        raise ValueError(f"need N >= dim+2 = {d + 2}")
    e4 = eisenstein("E4", N)
    e6 = eisenstein("E6", N)
    delta = delta_series(N)
    one = QSeries(0, (1,) + (0,) * (N - 1))
    base = one
    if a:
        base = base * (e4 ** a)
    if b:
        base = base * e6
    e6sq = e6 * e6
    # tails[i] = E6^(2i) * base
    tails = [base]
    for _ in range(d - 1):
        tails.append(tails[-1] * e6sq)
    rows = []
    dpow = delta
    for j in range(1, d + 1):
        rows.append(list((dpow * tails[d - j]).coeffs))
        if j < d:
            dpow = dpow * delta
    # rows[j-1] = q^j + ...; clear entries above the diagonal, bottom-up
    for j in range(d, 0, -1):
        pivot = rows[j - 1]
        for i in range(j - 1, 0, -1):
            r = rows[i - 1]
            c = r[j]
            if c:
                rows[i - 1] = [u - c * v for u, v in zip(r, pivot)]
    return [QSeries(k, tuple(r)) for r in rows]


def hecke_matrix(k: int, p: int, basis: Sequence[QSeries]) -> list[list[int]]:
    """Matrix of T_p on the echelon basis: column j holds T_p f_j in the basis."""
    d = len(basis)
    if d == 0:
        return []
    if basis[0].ncoeffs < p * d + 1:
        raise ValueError(f"basis precision {basis[0].ncoeffs} < p*dim+1 = {p * d + 1}")
    pk = p ** (k - 1)
    mat = [[0] * d for _ in range(d)]
    for j, f in enumerate(basis):
        for i in range(1, d + 1):
            v = f[p * i]
            if i % p == 0:
                v += pk * f[i // p]
            mat[i - 1][j] = v
    return mat


def charpoly(mat: Sequence[Sequence[int]]) -> list[Fraction]:
    """Characteristic polynomial det(xI - M), coefficients from x^d down to x^0.

    Faddeev-LeVerrier over the rationals.
    """
    d = len(mat)
    M = [[Fraction(v) for v in row] for row in mat]
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * d for _ in range(d)]
    ident = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for kk in range(1, d + 1):
        # Mk = M (M_{k-1} + c_{k-1} I)
        prev = [[Mk[i][j] + coeffs[-1] * ident[i][j] for j in range(d)] for i in range(d)]
        Mk = [[sum(M[i][l] * prev[l][j] for l in range(d)) for j in range(d)] for i in range(d)]
        c = -sum(Mk[i][i] for i in range(d)) / kk
        coeffs.append(c)
    return coeffs


def divisor_count(n_max: int) -> list[int]:
    """d(n) for 0 <= n <= n_max (index 0 unused)."""
    d = [0] * (n_max + 1)
    for i in range(1, n_max + 1):
        for m in range(i, n_max + 1, i):
            d[m] += 1
    return d


@dataclass(frozen=True)
class BasisDescriptor:
    k: int
    dim: int
    n_max: int


class EigenvalueClustering(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class Eigenform:
    """A normalized Hecke eigenform of weight k.

    ``a`` and ``lam`` are tuples indexed by n-1 for 1 <= n <= n_max; ``a`` holds
    exact integers when the space is one-dimensional, mpf values otherwise.
    """

    k: int
    field_tag: int
    a: tuple
    lam: tuple
    prec_bits: int
    _f64: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n_max(self) -> int:
        return len(self.lam)

    def lambda_(self, n: int):
        return self.lam[n - 1]

    def coeff(self, n: int):
        return self.a[n - 1]

    def lam_f64(self) -> np.ndarray:
        """Float64 copy of lambda(1..n_max) (index 0 is n=1)."""
        if self._f64 is None:
            object.__setattr__(self, "_f64", np.array([float(v) for v in self.lam]))
        return self._f64


def _normalizers(k: int, n_max: int, bits: int) -> list:
    with mpmath.workprec(bits):
        h = -mpmath.mpf(k - 1) / 2
        return [mpmath.exp(h * mpmath.log(n)) for n in range(1, n_max + 1)]


def _refine_eigenpair(M, mu, v, bits):
    """Newton on (M - mu I) v = 0 with v[0] = 1, at ``bits`` precision."""
    d = M.rows
    with mpmath.workprec(bits):
        for _ in range(60):
            r = M * v - mu * v
            # unknowns: mu and v[1:]
            J = mpmath.matrix(d, d)
            for i in range(d):
                J[i, 0] = -v[i]
                for j in range(1, d):
                    J[i, j] = M[i, j] - (mu if i == j else 0)
            delta = mpmath.lu_solve(J, -r)
            mu += delta[0]
            for j in range(1, d):
                v[j] += delta[j]
            scale = max(abs(mu), 1)
            if abs(delta[0]) <= scale * mpmath.ldexp(1, -bits + 8):
                break
    return mu, v


def hecke_eigenforms(k: int, n_max: int, prec: Precision = DEFAULT_PREC) -> list[Eigenform]:
    """All normalized eigenforms of S_k with lambda(n) for n <= n_max, sorted by lambda(2)."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    if k % 2 or k < 12:
        raise ValueError("need even k >= 12")
    d = cusp_dim(k)
    if d == 0:
        return []
    N = max(n_max + 1, 2 * d + 1)
    basis = miller_basis(k, N)
    guard = 32
    if d == 1:
        coeffs = basis[0].coeffs[1:n_max + 1]
        norms = _normalizers(k, n_max, prec.bits + guard)
        with mpmath.workprec(prec.bits + guard):
            lam = [mpmath.mpf(c) * s for c, s in zip(coeffs, norms)]
        with prec.ctx():
            lam = tuple(+v for v in lam)
        lam = (mpmath.mpf(1),) + lam[1:]
        return [Eigenform(k, 0, tuple(coeffs), lam, prec.bits)]

    T2 = hecke_matrix(k, 2, basis)
    # bits of cancellation: |c_i(n)| against n^((k-1)/2), weighted by the
    # Deligne-size eigenvector entries |v_i| <= d(i) i^((k-1)/2)
    half_k = (k - 1) / 2
    log2_v = [math.log2(max(1, sum(1 for t in range(1, i + 1) if i % t == 0))) + half_k * math.log2(i)
              for i in range(1, d + 1)]
    cancel = 0.0
    for n in range(1, n_max + 1):
        m = max(basis[i][n].bit_length() + log2_v[i] for i in range(d)) if any(
            basis[i][n] for i in range(d)) else 0
        cancel = max(cancel, m - half_k * math.log2(n))
    work = prec.bits + int(math.ceil(cancel)) + 64 + 2 * d.bit_length()
    # balance with exact powers of two so eigenvector entries are O(d(i))
    shifts = [int(round(half_k * math.log2(i))) for i in range(1, d + 1)]
    with mpmath.workprec(work):
        S = mpmath.matrix(d, d)
        for i in range(d):
            for j in range(d):
                S[i, j] = mpmath.ldexp(mpmath.mpf(T2[i][j]), shifts[j] - shifts[i])
    with mpmath.workprec(max(256, 2 * prec.bits)):
        evals, evecs = mpmath.eig(S)
        pairs = []
        for idx in range(d):
            vec = mpmath.matrix([mpmath.re(evecs[i, idx]) for i in range(d)])
            pairs.append((mpmath.re(evals[idx]), vec / vec[0]))
    refined = []
    for mu, vec in pairs:
        with mpmath.workprec(work):
            mu = mpmath.mpf(mu)
            vec = mpmath.matrix([mpmath.mpf(v) for v in vec])
        mu, vec = _refine_eigenpair(S, mu, vec, work)
        with mpmath.workprec(work):
            vec = mpmath.matrix([mpmath.ldexp(vec[i], shifts[i]) for i in range(d)])
        refined.append((mu, vec))
    refined.sort(key=lambda p: p[0])
    with mpmath.workprec(work):
        for (m1, _), (m2, _) in zip(refined, refined[1:]):
            if abs(m2 - m1) < mpmath.ldexp(max(abs(m1), 1), -prec.bits // 2):
                raise EigenvalueClustering(f"T2 eigenvalues {m1} and {m2} too close")
    norms = _normalizers(k, n_max, prec.bits + guard)
    cols = [basis[i].coeffs[1:n_max + 1] for i in range(d)]
    forms = []
    for tag, (mu, vec) in enumerate(refined):
        # fixed-point integer combination keeps the cancellation exact
        with mpmath.workprec(work):
            V = [int(mpmath.nint(mpmath.ldexp(vec[i], work))) for i in range(d)]
        A = [sum(V[i] * cols[i][j] for i in range(d)) for j in range(n_max)]
        with mpmath.workprec(prec.bits + guard):
            a_vals = [mpmath.ldexp(mpmath.mpf(x), -work) for x in A]
            lam = [av * s for av, s in zip(a_vals, norms)]
        with prec.ctx():
            lam = tuple(+v for v in lam)
            a_vals = tuple(+v for v in a_vals)
        lam = (mpmath.mpf(1),) + lam[1:]
        forms.append(Eigenform(k, tag, a_vals, lam, prec.bits))
    return forms
