"""Bessel J of large real order, the phase omega and regime classification.

The precision-boosted power series is the reference evaluation; the two-term
oscillatory asymptotic is a fast path with an explicit error envelope. For
bulk float64 work (quadrature nodes) ``bessel_j_vec`` defers to scipy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from .numeric import DEFAULT_PREC, Precision

__all__ = [
    "BesselRegime",
    "RegimeInfo",
    "PrecisionExhausted",
    "classify_regime",
    "bessel_j_series",
    "bessel_j_oscillatory",
    "bessel_j",
    "bessel_j_tagged",
    "bessel_j_vec",
    "omega_phase",
    "omega_d1",
    "omega_d2",
    "omega_phase_vec",
    "OSC_EPS",
    "SUB_DELTA",
    "BOOST_CAP_BITS",
]

OSC_EPS = 0.05     # oscillatory regime starts at nu + nu^(1/3 + OSC_EPS)
SUB_DELTA = 0.3    # subtransition regime ends at (nu+1) - (nu+1)^(1/3 + SUB_DELTA)
BOOST_CAP_BITS = 1 << 16
SERIES_AFFORDABLE_BITS = 4096


class PrecisionExhausted(ArithmeticError):
    pass


class BesselRegime(enum.Enum):
    TINY = "tiny"
    SUBTRANSITION = "subtransition"
    TRANSITION = "transition"
    OSCILLATORY = "oscillatory"


@dataclass(frozen=True)
class RegimeInfo:
    tag: BesselRegime
    tiny_max: float
    subtransition_max: float
    oscillatory_min: float


def classify_regime(nu, z) -> RegimeInfo:
    nu, z = float(nu), float(z)
    tiny_max = (nu + 1) / 4
    sub_max = (nu + 1) - (nu + 1) ** (1 / 3 + SUB_DELTA)
    osc_min = nu + nu ** (1 / 3 + OSC_EPS)
    if z <= tiny_max:
        tag = BesselRegime.TINY
    elif z <= sub_max:
        tag = BesselRegime.SUBTRANSITION
    elif z >= osc_min:
        tag = BesselRegime.OSCILLATORY
    else:
        tag = BesselRegime.TRANSITION
    return RegimeInfo(tag, tiny_max, sub_max, osc_min)


def _boost_bits(z) -> int:
    return int(math.ceil(float(z) * math.log2(math.e))) + 64


def bessel_j_series(nu, z, prec: Precision = DEFAULT_PREC, cap_bits: int = BOOST_CAP_BITS):
    """J_nu(z) from its power series, summed with ceil(z log2 e)+64 guard bits."""
    if z < 0:
        raise ValueError("bessel_j_series needs z >= 0")
    if nu < 0:
        raise ValueError("bessel_j_series needs nu >= 0")
    boost = _boost_bits(z)
    if boost > cap_bits:
        raise PrecisionExhausted(f"series boost {boost} bits exceeds cap {cap_bits}")
    with mpmath.workprec(prec.bits + boost):
        nu = mpmath.mpf(nu)
        z = mpmath.mpf(z)
        if z == 0:
            res = mpmath.mpf(1) if nu == 0 else mpmath.mpf(0)
        else:
            half = z / 2
            q = half * half
            term = mpmath.power(half, nu) / mpmath.gamma(nu + 1)
            total = term
            biggest = abs(term)
            # relative to the running max at boosted precision: the boost is what
            # absorbs cancellation, so the cutoff has to sit below it too
            thresh = mpmath.ldexp(1, -prec.bits - boost - 16)
            l = 0
            while True:
                l += 1
                term = -term * q / (l * (nu + l))
                total += term
                a = abs(term)
                if a > biggest:
                    biggest = a
                # terms decrease monotonically once l(nu+l) > q
                if l * (nu + l) > q and a <= thresh * biggest:
                    break
            res = total
    with prec.ctx():
        return +res


def omega_phase(nu, z):
    """(z^2-nu^2)^(1/2) - nu*arctan((z^2/nu^2-1)^(1/2)) - pi/4, for z > nu."""
    if isinstance(z, mpmath.mpf) or isinstance(nu, mpmath.mpf):
        nu, z = mpmath.mpf(nu), mpmath.mpf(z)
        if not z > nu:
            raise ValueError("omega_phase requires z > nu")
        r = mpmath.sqrt((z - nu) * (z + nu))
        return r - nu * mpmath.atan(r / nu) - mpmath.pi / 4
    nu, z = float(nu), float(z)
    if not z > nu:
        raise ValueError("omega_phase requires z > nu")
    r = math.sqrt((z - nu) * (z + nu))
    return r - nu * math.atan(r / nu) - math.pi / 4


def omega_d1(nu, z):
    if not z > nu:
        raise ValueError("omega_d1 requires z > nu")
    if isinstance(z, mpmath.mpf) or isinstance(nu, mpmath.mpf):
        return mpmath.sqrt((z - nu) * (z + nu)) / z
    return math.sqrt((z - nu) * (z + nu)) / z


def omega_d2(nu, z):
    if not z > nu:
        raise ValueError("omega_d2 requires z > nu")
    if isinstance(z, mpmath.mpf) or isinstance(nu, mpmath.mpf):
        return nu * nu / (z * z * mpmath.sqrt((z - nu) * (z + nu)))
    return nu * nu / (z * z * math.sqrt((z - nu) * (z + nu)))


def omega_phase_vec(nu: float, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    r = np.sqrt((z - nu) * (z + nu))
    return r - nu * np.arctan(r / nu) - math.pi / 4


def bessel_j_oscillatory(nu, z, prec: Precision = DEFAULT_PREC):
    """Two-term large-argument asymptotic and its error envelope 10 z^4/(z^2-nu^2)^(13/4)."""
    with prec.ctx(16):
        nu = mpmath.mpf(nu)
        z = mpmath.mpf(z)
        if z < nu + mpmath.power(nu, mpmath.mpf(1) / 3 + OSC_EPS):
            raise ValueError(f"oscillatory asymptotic needs z >= nu + nu^(1/3+{OSC_EPS})")
        s = (z - nu) * (z + nu)
        w = omega_phase(nu, z)
        amp = mpmath.sqrt(2 / mpmath.pi)
        val = amp * mpmath.power(s, -0.25) * mpmath.cos(w) + amp * mpmath.power(s, -0.75) * (
            mpmath.mpf(1) / 8 + mpmath.mpf(5) / 24 * nu * nu / s
        ) * mpmath.sin(w)
        err = 10 * z ** 4 * mpmath.power(s, -mpmath.mpf(13) / 4)
    with prec.ctx():
        return +val, +err


def bessel_j_tagged(nu, z, prec: Precision = DEFAULT_PREC):
    """Dispatcher returning (value, error_bound, method, regime)."""
    if nu <= 0:
        raise ValueError("bessel_j needs nu > 0")
    if z < 0:
        raise ValueError("bessel_j needs z >= 0")
    info = classify_regime(nu, z)
    if info.tag is not BesselRegime.OSCILLATORY or _boost_bits(z) <= SERIES_AFFORDABLE_BITS:
        val = bessel_j_series(nu, z, prec)
        return val, prec.eps(), "series", info.tag
    val, err = bessel_j_oscillatory(nu, z, prec)
    return val, err, "asymptotic", info.tag


def bessel_j(nu, z, prec: Precision = DEFAULT_PREC):
    return bessel_j_tagged(nu, z, prec)[0]


def bessel_j_vec(nu: float, z: np.ndarray) -> np.ndarray:
    """Float64 J_nu on arrays (scipy's Amos routines)."""
    return special.jv(nu, np.asarray(z, dtype=float))
