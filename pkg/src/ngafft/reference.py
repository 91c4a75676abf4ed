"""Extended-precision reference reals.

Every ground-truth quantity in the package (reference solutions, twiddle
constants before rounding, error norms) is a ``RefReal``: an MPFR float
with a 128-bit significand.  MPFR rounds every basic operation and every
elementary function correctly, so the arithmetic below is correctly rounded
at reference precision.
"""
from __future__ import annotations

from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr

RefReal = type(mpfr(0))

#: significand bits carried by every RefReal (binary128 has 113)
REF_PRECISION = 128


def ensure_precision() -> None:
    """Pin the calling thread's MPFR context to reference precision.

    gmpy2 contexts are thread-local and new threads start at 53 bits, so
    every entry point that does reference arithmetic calls this first.
    """
    ctx = gmpy2.get_context()
    if ctx.precision != REF_PRECISION:
        ctx.precision = REF_PRECISION


ensure_precision()


def ref(x) -> RefReal:
    """Convert an int, float, Fraction, string or mpfr to a RefReal."""
    ensure_precision()
    if isinstance(x, Fraction):
        return mpfr(x.numerator) / mpfr(x.denominator)
    return mpfr(x)


def ref_add(a, b):
    ensure_precision()
    return a + b


def ref_sub(a, b):
    ensure_precision()
    return a - b


def ref_mul(a, b):
    ensure_precision()
    return a * b


def ref_div(a, b):
    ensure_precision()
    # MPFR follows IEEE semantics here: x/0 -> signed inf, 0/0 -> nan
    return gmpy2.div(a, b)


def ref_sqrt(x):
    ensure_precision()
    return gmpy2.sqrt(x)


def ref_exp(x):
    ensure_precision()
    return gmpy2.exp(x)


def ref_cos(x):
    ensure_precision()
    return gmpy2.cos(x)


def ref_sin(x):
    ensure_precision()
    return gmpy2.sin(x)


def ref_pi() -> RefReal:
    ensure_precision()
    return gmpy2.const_pi()


def ulp(x) -> RefReal:
    """Unit in the last place of ``x`` at reference precision."""
    ensure_precision()
    if x == 0:
        return mpfr(2) ** (gmpy2.get_context().emin)
    e, _ = gmpy2.frexp(x)
    return gmpy2.mul_2exp(mpfr(1), int(e) - REF_PRECISION)


def cos_sin_2pi(num: int, den: int) -> tuple[RefReal, RefReal]:
    """Return ``(cos(2*pi*num/den), sin(2*pi*num/den))`` at reference precision.

    The angle is reduced to the first octant with exact rational arithmetic
    first, so quarter and half turns give exact 0 and +-1 instead of values
    of order 1e-39.  Tapered formats never round a nonzero value to zero,
    which makes that distinction visible downstream.
    """
    ensure_precision()
    t = Fraction(num, den) % 1
    # sin(2pi t) = cos(2pi (1/4 - t)), and the reflections below are exact
    c_sign = s_sign = 1
    if t > Fraction(1, 2):
        t = 1 - t
        s_sign = -1
    if t > Fraction(1, 4):
        t = Fraction(1, 2) - t
        c_sign = -1
    swap = t > Fraction(1, 8)
    if swap:
        t = Fraction(1, 4) - t
    if t == 0:
        c, s = mpfr(1), mpfr(0)
    else:
        with gmpy2.context(gmpy2.get_context(), precision=REF_PRECISION + 64):
            angle = 2 * gmpy2.const_pi() * t.numerator / t.denominator
            c_wide, s_wide = gmpy2.cos(angle), gmpy2.sin(angle)
        c, s = mpfr(c_wide), mpfr(s_wide)
    if swap:
        c, s = s, c
    return c_sign * c, s_sign * s


# -- array helpers --------------------------------------------------------

def ref_array(values) -> np.ndarray:
    """Object array of RefReal built from an iterable or ndarray."""
    ensure_precision()
    arr = np.asarray(values)
    out = np.empty(arr.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(arr.reshape(-1).tolist()):
        flat[i] = ref(v)
    return out


def ref_zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(mpfr(0))
    return out


def ref_from_float(x: np.ndarray) -> np.ndarray:
    """Exact conversion of a float64 array into RefReal objects."""
    ensure_precision()
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(x.reshape(-1).tolist()):
        flat[i] = mpfr(v)
    return out


def ref_to_float(x: np.ndarray) -> np.ndarray:
    """Round RefReal objects to nearest float64 (for display and plotting)."""
    x = np.asarray(x, dtype=object)
    return np.array([float(v) for v in x.reshape(-1)], dtype=np.float64).reshape(x.shape)


def ref_isfinite(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=object)
    return np.array([gmpy2.is_finite(v) for v in x.reshape(-1)], dtype=bool).reshape(x.shape)
