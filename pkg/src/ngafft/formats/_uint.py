"""uint64 helpers shared by the codecs and the arithmetic kernels."""
import numpy as np

U64 = np.uint64
ZERO = U64(0)
ONE = U64(1)


def u64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint64)


def _amount(s) -> np.ndarray:
    # numpy yields 0 for shifts of 64 or more; negative amounts never occur here
    return np.minimum(np.asarray(s, dtype=np.int64), 64).astype(np.uint64)


def shl(x, s) -> np.ndarray:
    return np.left_shift(u64(x), _amount(s))


def shr(x, s) -> np.ndarray:
    return np.right_shift(u64(x), _amount(s))


def low_mask(s) -> np.ndarray:
    """``2**s - 1`` for s in [0, 64]."""
    return shl(ONE, s) - ONE


def bit_length(x) -> np.ndarray:
    # each 32-bit half converts to float64 exactly, and frexp(0) has exponent 0
    x = u64(x)
    hi = np.frexp((x >> U64(32)).astype(np.float64))[1]
    lo = np.frexp((x & U64(0xFFFFFFFF)).astype(np.float64))[1]
    return np.where(hi > 0, hi + 32, lo).astype(np.int64)


def mul_wide(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Full 126-bit product of two operands below 2**63, as (hi, lo) words."""
    lo_mask = U64(0xFFFFFFFF)
    a1, a0 = a >> U64(32), a & lo_mask
    b1, b0 = b >> U64(32), b & lo_mask
    p00 = a0 * b0
    mid = a0 * b1 + a1 * b0
    lo = p00 + (mid << U64(32))
    carry = (lo < p00).astype(np.uint64)
    hi = a1 * b1 + (mid >> U64(32)) + carry
    return hi, lo
