"""Bit-exact decoding and correctly rounded encoding, vectorised over uint64.

Every value is handled in an unpacked form: a class code, a sign, a binary
exponent and a 63-bit significand whose leading one sits at bit 62, so a
finite value equals ``sig * 2**(exp - 62)``.  Encoders additionally take a
direction flag saying whether the exact value lies slightly above (+1) or
below (-1) the given significand, by less than one unit of its bit 0.  That
flag only matters for exact ties at the rounding position.
"""
from __future__ import annotations

import functools
from typing import NamedTuple

import numpy as np

from ._uint import ONE, U64, bit_length, low_mask, shl, shr, u64
from .descriptor import Family, Format

ZERO, FINITE, INF, NAN = 0, 1, 2, 3

SIG_TOP = 62
_FRAC_MASK = U64((1 << SIG_TOP) - 1)
_HIDDEN = U64(1 << SIG_TOP)


class Unpacked(NamedTuple):
    cls: np.ndarray  # uint8 class code
    neg: np.ndarray  # bool
    exp: np.ndarray  # int64
    sig: np.ndarray  # uint64, leading bit at SIG_TOP for FINITE


def _round_tail(prefix, a, body, dirn):
    """Round-to-nearest-even of the bit string ``prefix || body`` keeping ``a`` body bits."""
    kept = shr(body, 64 - a)
    rbit = shr(body, 63 - a) & ONE
    rest = body & low_mask(63 - a)
    pattern = shl(prefix, a) | kept
    tie_up = (dirn > 0) | ((dirn == 0) & ((pattern & ONE) == ONE))
    up = (rbit == ONE) & ((rest != 0) | tie_up)
    return pattern + up.astype(np.uint64)


class Codec:
    fmt: Format
    n: int

    def __init__(self, fmt: Format):
        self.fmt = fmt
        self.n = fmt.width
        self.mask = U64((1 << self.n) - 1) if self.n < 64 else U64(0xFFFFFFFFFFFFFFFF)
        self.sign_bit = U64(1 << (self.n - 1))
        self._table = None

    # decoding -----------------------------------------------------------
    def decode(self, bits) -> Unpacked:
        bits = u64(bits)
        if self.n <= 16:
            if self._table is None:
                self._table = self._decode(np.arange(1 << self.n, dtype=np.uint64))
            idx = bits.astype(np.intp)
            return Unpacked(*(t[idx] for t in self._table))
        return self._decode(bits)

    def _decode(self, bits) -> Unpacked:
        raise NotImplementedError

    def encode(self, u: Unpacked, dirn=None) -> np.ndarray:
        raise NotImplementedError

    # exact sign manipulation ---------------------------------------------
    def negate(self, bits) -> np.ndarray:
        raise NotImplementedError

    def absolute(self, bits) -> np.ndarray:
        raise NotImplementedError

    @property
    def zero(self) -> np.uint64:
        return U64(0)

    @property
    def nan(self) -> np.uint64:
        raise NotImplementedError

    def max_finite(self) -> np.uint64:
        raise NotImplementedError


class IEEECodec(Codec):
    """IEEE-754-style layouts: binary16/32/64, bfloat16, OFP8 E4M3 and E5M2."""

    _LAYOUT = {
        (Family.IEEE, 16): (5, 10),
        (Family.IEEE, 32): (8, 23),
        (Family.IEEE, 64): (11, 52),
        (Family.BFLOAT16, 16): (8, 7),
        (Family.OFP8_E5M2, 8): (5, 2),
        (Family.OFP8_E4M3, 8): (4, 3),
    }

    def __init__(self, fmt: Format):
        super().__init__(fmt)
        self.ebits, self.mbits = self._LAYOUT[(fmt.family, fmt.width)]
        self.bias = (1 << (self.ebits - 1)) - 1
        self.emask = (1 << self.ebits) - 1
        self.mmask = (1 << self.mbits) - 1
        # E4M3 spends only the all-ones pattern on NaN and has no infinities
        self.has_inf = fmt.family is not Family.OFP8_E4M3
        self.emin = 1 - self.bias
        if self.has_inf:
            self.emax = self.emask - 1 - self.bias
            self._max_mag = (self.emask << self.mbits) - 1
        else:
            self.emax = self.emask - self.bias
            self._max_mag = (self.emask << self.mbits) | (self.mmask - 1)

    @property
    def nan(self):
        if self.has_inf:
            return U64((self.emask << self.mbits) | (1 << (self.mbits - 1)))
        return U64((self.emask << self.mbits) | self.mmask)

    @property
    def inf(self):
        return U64(self.emask << self.mbits)

    def max_finite(self):
        return U64(self._max_mag)

    def _decode(self, bits):
        m = U64(self.mbits)
        neg = (bits >> U64(self.n - 1)) == ONE
        E = ((bits >> m) & U64(self.emask)).astype(np.int64)
        M = bits & U64(self.mmask)
        top = E == self.emask
        if self.has_inf:
            nan = top & (M != 0)
            inf = top & (M == 0)
        else:
            nan = top & (M == U64(self.mmask))
            inf = np.zeros(bits.shape, dtype=bool)
        zero = (E == 0) & (M == 0)
        sub = (E == 0) & (M != 0)
        bl = bit_length(M)
        sig = np.where(
            sub,
            shl(M, 63 - bl),
            (M | U64(1 << self.mbits)) << U64(SIG_TOP - self.mbits),
        )
        exp = np.where(sub, self.emin - self.mbits + bl - 1, E - self.bias)
        cls = np.full(bits.shape, FINITE, dtype=np.uint8)
        cls[zero] = ZERO
        cls[inf] = INF
        cls[nan] = NAN
        special = cls != FINITE
        sig = np.where(special, U64(0), sig)
        exp = np.where(special, 0, exp).astype(np.int64)
        return Unpacked(cls, neg, exp, sig)

    def encode(self, u, dirn=None):
        cls, neg, exp, sig = u
        if dirn is None:
            dirn = np.zeros(np.shape(cls), dtype=np.int8)
        e = np.clip(exp, self.emin - 80, self.emax + 2)
        qexp = np.maximum(e, self.emin)
        shift = (SIG_TOP - self.mbits) + (qexp - e)
        kept = shr(sig, shift)
        rbit = shr(sig, shift - 1) & ONE
        rest = sig & low_mask(shift - 1)
        tie_up = (dirn > 0) | ((dirn == 0) & ((kept & ONE) == ONE))
        up = (rbit == ONE) & ((rest != 0) | tie_up)
        mag = shl(u64(qexp - self.emin), self.mbits) + kept + up.astype(np.uint64)
        over = (e > self.emax) | (mag > U64(self._max_mag))
        sign = np.where(neg, U64(self.sign_bit), U64(0))
        over_pat = (sign | self.inf) if self.has_inf else np.full(np.shape(cls), self.nan)
        out = np.where(over, over_pat, sign | mag)
        out = np.where(cls == ZERO, sign, out)
        inf_pat = (sign | self.inf) if self.has_inf else np.full(np.shape(cls), self.nan)
        out = np.where(cls == INF, inf_pat, out)
        out = np.where(cls == NAN, self.nan, out)
        return u64(out)

    def negate(self, bits):
        bits = u64(bits)
        flipped = bits ^ self.sign_bit
        return np.where(self.isnan(bits), self.nan, flipped)

    def absolute(self, bits):
        bits = u64(bits)
        return np.where(self.isnan(bits), self.nan, bits & ~self.sign_bit & self.mask)

    def isnan(self, bits):
        E = (bits >> U64(self.mbits)) & U64(self.emask)
        M = bits & U64(self.mmask)
        if self.has_inf:
            return (E == U64(self.emask)) & (M != 0)
        return (E == U64(self.emask)) & (M == U64(self.mmask))


class _TaperedCodec(Codec):
    """Shared machinery of posits and linear takums (two's-complement formats)."""

    @property
    def nan(self):
        return self.sign_bit

    def max_finite(self):
        return U64(self.sign_bit - ONE)

    def negate(self, bits):
        return (U64(0) - u64(bits)) & self.mask

    def absolute(self, bits):
        bits = u64(bits)
        return np.where((bits & self.sign_bit) != 0, self.negate(bits), bits)

    def _magnitude(self, bits):
        bits = u64(bits)
        neg = (bits & self.sign_bit) != 0
        return neg, np.where(neg, self.negate(bits), bits)

    def _finish(self, u, pattern, sat_hi, sat_lo):
        cls, neg = u.cls, u.neg
        maxpos = U64(self.sign_bit - ONE)
        pattern = np.where(sat_hi | (pattern >= self.sign_bit), maxpos, pattern)
        # nonzero reals never round to zero
        pattern = np.where(sat_lo | (pattern == 0), ONE, pattern)
        pattern = np.where(neg, self.negate(pattern), pattern)
        out = np.where(cls == FINITE, pattern, U64(0))
        # infinities are not reals: they, like NaN, become NaR
        out = np.where((cls == NAN) | (cls == INF), self.sign_bit, out)
        return u64(out)


class PositCodec(_TaperedCodec):
    """Posits per the 2022 standard: es = 2 at every width."""

    ES = 2

    def _decode(self, bits):
        neg, mag = self._magnitude(bits)
        n = self.n
        y = mag << U64(65 - n)
        first = (y >> U64(63)) == ONE
        run = np.where(first, 64 - bit_length(~y), 64 - bit_length(y))
        run = np.minimum(run, n - 1)
        r = np.where(first, run - 1, -run)
        rest = shl(y, run + 1)
        e = (rest >> U64(62)).astype(np.int64)
        frac = rest << U64(2)
        sig = _HIDDEN | (frac >> U64(2))
        exp = 4 * r + e
        cls = np.full(bits.shape, FINITE, dtype=np.uint8)
        cls[mag == 0] = ZERO
        cls[u64(bits) == self.sign_bit] = NAN
        special = cls != FINITE
        return Unpacked(
            cls,
            neg & ~special,
            np.where(special, 0, exp).astype(np.int64),
            np.where(special, U64(0), sig),
        )

    def encode(self, u, dirn=None):
        cls, neg, exp, sig = u
        if dirn is None:
            dirn = np.zeros(np.shape(cls), dtype=np.int8)
        keep = self.n - 1
        r = np.right_shift(exp, 2)
        e = (exp & 3).astype(np.uint64)
        rc = np.clip(r, -keep, keep - 2)
        reglen = np.where(rc >= 0, rc + 2, 1 - rc)
        sat_hi = r >= self.n - 2  # at or beyond maxpos = 2**(4*(n-2))
        sat_lo = r < 2 - self.n  # below minpos = 2**(-4*(n-2))
        prefix = np.where(rc >= 0, low_mask(rc + 1) << ONE, ONE)
        a = np.maximum(keep - reglen, 0)
        body = (e << U64(62)) | (sig & _FRAC_MASK)
        pattern = _round_tail(prefix, a, body, dirn)
        return self._finish(u, pattern, sat_hi, sat_lo)


class TakumCodec(_TaperedCodec):
    """Linear takums: sign, direction bit, 3-bit regime, characteristic, mantissa."""

    CMIN, CMAX = -255, 254

    def _decode(self, bits):
        neg, mag = self._magnitude(bits)
        x = mag << U64(64 - self.n)  # zero-pads short widths
        D = ((x >> U64(62)) & ONE).astype(np.int64)
        R = ((x >> U64(59)) & U64(7)).astype(np.int64)
        r = np.where(D == 1, R, 7 - R)
        C = (shr(x, 59 - r) & low_mask(r)).astype(np.int64)
        c = np.where(D == 1, (1 << r) - 1 + C, -(1 << (r + 1)) + 1 + C)
        mant = shl(x, 5 + r)
        sig = _HIDDEN | (mant >> U64(2))
        cls = np.full(np.shape(bits), FINITE, dtype=np.uint8)
        cls[mag == 0] = ZERO
        cls[u64(bits) == self.sign_bit] = NAN
        special = cls != FINITE
        return Unpacked(
            cls,
            neg & ~special,
            np.where(special, 0, c).astype(np.int64),
            np.where(special, U64(0), sig),
        )

    def encode(self, u, dirn=None):
        cls, neg, exp, sig = u
        if dirn is None:
            dirn = np.zeros(np.shape(cls), dtype=np.int8)
        sat_hi = exp > self.CMAX
        sat_lo = exp < self.CMIN
        c = np.clip(exp, self.CMIN, self.CMAX)
        D = c >= 0
        r = bit_length(u64(np.where(D, c + 1, -c))) - 1
        C = np.where(D, c - (1 << r) + 1, c + (1 << (r + 1)) - 1)
        R = np.where(D, r, 7 - r)
        prefix = u64((D.astype(np.int64) << 3) | R)
        frac = (sig & _FRAC_MASK) << U64(2)
        body = shl(u64(C), 64 - r) | shr(frac, r)
        lost = (frac & low_mask(r)) != 0
        dirn = np.where(lost, np.int8(1), dirn)
        pattern = _round_tail(prefix, self.n - 5, body, dirn)
        return self._finish(u, pattern, sat_hi, sat_lo)


@functools.lru_cache(maxsize=None)
def codec_for(fmt: Format) -> Codec:
    if fmt.family is Family.POSIT:
        return PositCodec(fmt)
    if fmt.family is Family.TAKUM_LINEAR:
        return TakumCodec(fmt)
    return IEEECodec(fmt)
