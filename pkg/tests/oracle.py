"""Independent rounding oracles for the format tests.

Nothing here imports the package's codecs: values are decoded from bit
strings into Fractions straight from the field definitions, and rounding is
done either by table lookup against exact midpoints (8/16-bit formats) or by
building the infinitely long encoding and rounding the bit string (32/64-bit
tapered formats).
"""
from __future__ import annotations

import math
from bisect import bisect_left
from fractions import Fraction
from functools import lru_cache

import numpy as np

NAN = float("nan")
INF = float("inf")

# name -> (kind, width, exponent bits, mantissa bits)
LAYOUTS = {
    "e4m3": ("e4m3", 8, 4, 3),
    "e5m2": ("ieee", 8, 5, 2),
    "float16": ("ieee", 16, 5, 10),
    "bfloat16": ("ieee", 16, 8, 7),
    "float32": ("ieee", 32, 8, 23),
    "float64": ("ieee", 64, 11, 52),
    **{f"posit{n}": ("posit", n, 0, 0) for n in (8, 16, 32, 64)},
    **{f"takum{n}": ("takum", n, 0, 0) for n in (8, 16, 32, 64)},
}


def width(name):
    return LAYOUTS[name][1]


def tapered(name):
    return LAYOUTS[name][0] in ("posit", "takum")


def nan_pattern(name):
    kind, n, e, m = LAYOUTS[name]
    if kind == "e4m3":
        return 0x7F
    if kind == "ieee":
        return ((1 << e) - 1) << m | 1 << (m - 1)
    return 1 << (n - 1)


def inf_pattern(name, negative=False):
    kind, n, e, m = LAYOUTS[name]
    if kind == "e4m3":
        return nan_pattern(name)
    if kind != "ieee":
        return 1 << (n - 1)
    return (negative << (n - 1)) | (((1 << e) - 1) << m)


# -- decoders --------------------------------------------------------------

def _decode_ieee(p, n, ebits, mbits, e4m3):
    sign = p >> (n - 1)
    e = (p >> mbits) & ((1 << ebits) - 1)
    m = p & ((1 << mbits) - 1)
    bias = (1 << (ebits - 1)) - 1
    if e == (1 << ebits) - 1:
        if e4m3:
            if m == (1 << mbits) - 1:
                return NAN
        else:
            return NAN if m else (-INF if sign else INF)
    if e == 0:
        mag = Fraction(m, 1 << mbits) * Fraction(2) ** (1 - bias)
        if mag == 0:
            return -0.0 if sign else Fraction(0)
    else:
        mag = (1 + Fraction(m, 1 << mbits)) * Fraction(2) ** (e - bias)
    return -mag if sign else mag


def _decode_posit(p, n):
    if p == 0:
        return Fraction(0)
    if p == 1 << (n - 1):
        return NAN
    neg = p >> (n - 1)
    if neg:
        p = (-p) & ((1 << n) - 1)
    bits = format(p, f"0{n}b")[1:]
    run = len(bits) - len(bits.lstrip(bits[0]))
    k = run - 1 if bits[0] == "1" else -run
    rest = bits[run + 1:]
    e = int((rest[:2] + "00")[:2], 2)
    frac = rest[2:]
    f = Fraction(int(frac, 2), 1 << len(frac)) if frac else Fraction(0)
    mag = (1 + f) * Fraction(2) ** (4 * k + e)
    return -mag if neg else mag


def _decode_takum(p, n):
    if p == 0:
        return Fraction(0)
    if p == 1 << (n - 1):
        return NAN
    neg = p >> (n - 1)
    if neg:
        p = (-p) & ((1 << n) - 1)
    bits = format(p, f"0{n}b") + "0" * 12
    d = bits[1] == "1"
    big_r = int(bits[2:5], 2)
    r = big_r if d else 7 - big_r
    c_field = int(bits[5:5 + r] or "0", 2)
    c = (1 << r) - 1 + c_field if d else -(1 << (r + 1)) + 1 + c_field
    mant = bits[5 + r:n]
    f = Fraction(int(mant, 2), 1 << len(mant)) if mant else Fraction(0)
    mag = (1 + f) * Fraction(2) ** c
    return -mag if neg else mag


def decode(name, p):
    """Exact value: a Fraction, or a float for -0, +-inf and NaN/NaR."""
    kind, n, e, m = LAYOUTS[name]
    if kind == "posit":
        return _decode_posit(p, n)
    if kind == "takum":
        return _decode_takum(p, n)
    return _decode_ieee(p, n, e, m, kind == "e4m3")


# -- table rounding (8/16 bits) --------------------------------------------

class Table:
    """Positive candidates and the exact rounding boundaries between them."""

    def __init__(self, name):
        kind, n, e, m = LAYOUTS[name]
        self.name = name
        pos = []  # (value, pattern) for positive finite non-zero values
        for p in range(1, 1 << (n - 1)):
            v = decode(name, p)
            if isinstance(v, Fraction):
                pos.append((v, p))
        pos.sort()
        if tapered(name):
            cands = pos
            # the rounding boundary of neighbouring encodings p, p+1 is the
            # (n+1)-bit encoding 2p+1
            mids = [_decode_wide(kind, n + 1, 2 * p + 1) for _, p in pos[:-1]]
        else:
            top, prev = pos[-1][0], pos[-2][0]
            cands = [(Fraction(0), 0)] + pos + [(None, inf_pattern(name))]
            mids = [(a[0] + b[0]) / 2 for a, b in zip(cands[:-2], cands[1:-1])]
            mids.append(top + (top - prev) / 2)
        self.values = [v for v, _ in cands]
        self.patterns = [p for _, p in cands]
        self.mids = mids
        self.mids_f64 = np.array([float(x) for x in mids])
        assert all(Fraction(float(x)) == x for x in mids)
        self.patterns_arr = np.array(self.patterns, dtype=np.uint64)

    def round_positive(self, v: Fraction) -> int:
        i = bisect_left(self.mids, v)
        if i < len(self.mids) and self.mids[i] == v:
            a, b = self.patterns[i], self.patterns[i + 1]
            return a if a % 2 == 0 else b
        return self.patterns[i]


def _decode_wide(kind, n, p):
    return _decode_posit(p, n) if kind == "posit" else _decode_takum(p, n)


@lru_cache(maxsize=None)
def table(name) -> Table:
    return Table(name)


def apply_sign(name, pattern, negative):
    n = width(name)
    if not negative:
        return pattern
    if tapered(name):
        return (-pattern) & ((1 << n) - 1)
    if pattern == nan_pattern(name):
        return pattern
    return pattern | 1 << (n - 1)


# -- bit-string rounding (any width, tapered) -------------------------------

def _round_bits(prefix: str, tail_nonzero: bool, n: int) -> int:
    """RNE of an infinite positive encoding given its first bits after the sign."""
    keep = prefix[: n - 1]
    q = int(keep, 2)
    guard = prefix[n - 1] == "1"
    sticky = "1" in prefix[n:] or tail_nonzero
    if guard and (sticky or q & 1):
        q += 1
    return min(max(q, 1), (1 << (n - 1)) - 1)


def _fraction_bits(f: Fraction, count: int) -> tuple[str, bool]:
    q, r = divmod(f.numerator << count, f.denominator)
    return format(q, f"0{count}b") if count else "", r != 0


def _encode_posit(v: Fraction, n):
    scale = v.numerator.bit_length() - v.denominator.bit_length()
    if Fraction(2) ** scale > v:
        scale -= 1
    k, e = divmod(scale, 4)
    f = v / Fraction(2) ** scale - 1
    regime = "1" * (k + 1) + "0" if k >= 0 else "0" * (-k) + "1"
    frac, rest = _fraction_bits(f, n + 4)
    return regime + format(e, "02b") + frac, rest


def _encode_takum(v: Fraction, n):
    c = v.numerator.bit_length() - v.denominator.bit_length()
    if Fraction(2) ** c > v:
        c -= 1
    if c > 254:
        return None, "max"
    if c < -255:
        return None, "min"
    f = v / Fraction(2) ** c - 1
    if c >= 0:
        r = (c + 1).bit_length() - 1
        field, head = c - (1 << r) + 1, "1" + format(r, "03b")
    else:
        r = (-c).bit_length() - 1
        field, head = c + (1 << (r + 1)) - 1, "0" + format(7 - r, "03b")
    cbits = format(field, f"0{r}b") if r else ""
    frac, rest = _fraction_bits(f, n + 4)
    return head + cbits + frac, rest


def round_fraction(name, x) -> int:
    """Pattern nearest to the exact value ``x`` (Fraction or float special)."""
    n = width(name)
    if isinstance(x, float):
        if math.isnan(x):
            return nan_pattern(name)
        if math.isinf(x):
            return inf_pattern(name, x < 0)
        assert x == 0
        return apply_sign(name, 0, math.copysign(1, x) < 0 and not tapered(name))
    if x == 0:
        return 0
    neg, v = x < 0, abs(x)
    if n <= 16:
        return apply_sign(name, table(name).round_positive(v), neg)
    kind = LAYOUTS[name][0]
    if kind == "posit":
        bits, rest = _encode_posit(v, n)
        q = _round_bits(bits, rest, n)
    elif kind == "takum":
        bits, rest = _encode_takum(v, n)
        if bits is None:
            q = (1 << (n - 1)) - 1 if rest == "max" else 1
        else:
            q = _round_bits(bits, rest, n)
    else:
        q = _round_ieee(name, v)
    return apply_sign(name, q, neg)


def _round_ieee(name, v: Fraction) -> int:
    kind, n, ebits, mbits = LAYOUTS[name]
    bias = (1 << (ebits - 1)) - 1
    e = v.numerator.bit_length() - v.denominator.bit_length()
    if Fraction(2) ** e > v:
        e -= 1
    e = max(e, 1 - bias)
    scaled = v / Fraction(2) ** (e - mbits)
    q, r = divmod(scaled.numerator, scaled.denominator)
    if 2 * r > scaled.denominator or (2 * r == scaled.denominator and q & 1):
        q += 1
    if q >= 1 << (mbits + 1):
        q >>= 1
        e += 1
    biased = e + bias if q >> mbits else 0
    if biased >= (1 << ebits) - 1:
        return inf_pattern(name)
    return biased << mbits | (q & ((1 << mbits) - 1))


def exact_op(op, a, b):
    """Exact result of a binary op on decoded values; floats carry the specials."""
    decode_a, decode_b = a, b
    fin_a = Fraction(a) if isinstance(a, Fraction) or a == 0 else None
    fin_b = Fraction(b) if isinstance(b, Fraction) or b == 0 else None
    if fin_a is not None and fin_b is not None:
        a, b = fin_a, fin_b
        if not (op == "div" and b == 0):
            r = {"add": a + b, "sub": a - b, "mul": a * b, "div": a / b if b else 0}[op]
            if r != 0:
                return r
    fa, fb = float(decode_a), float(decode_b)
    with np.errstate(all="ignore"):
        r = {"add": np.add, "sub": np.subtract, "mul": np.multiply, "div": np.divide}[op](
            np.float64(fa), np.float64(fb))
    return float(r)


def expected(name, op, pa, pb) -> int:
    return round_fraction(name, exact_op(op, decode(name, pa), decode(name, pb)))


# -- vectorised table oracle (8/16 bits) ------------------------------------

@lru_cache(maxsize=None)
def values_f64(name) -> np.ndarray:
    """float64 value of every pattern (exact for widths <= 16)."""
    return np.array([float(decode(name, p)) for p in range(1 << width(name))])


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def round_f64_pairs(name, s, err, exact_quotient=None):
    """Round the exact values ``s + err`` (or ``exact_quotient`` at ties) into ``name``.

    ``s`` is the float64 rounding of the exact value and ``err`` the exact
    remainder (sign only matters).  Only valid for widths <= 16 where every
    rounding boundary is a float64.
    """
    t = table(name)
    s = np.asarray(s, dtype=np.float64)
    err = np.asarray(err, dtype=np.float64)
    neg = s < 0
    err = np.where(neg, -err, err)
    mag = np.abs(s)
    idx = np.searchsorted(t.mids_f64, mag, side="left")
    mid_at = t.mids_f64[np.minimum(idx, len(t.mids_f64) - 1)]
    tie_zone = (idx < len(t.mids_f64)) & (mid_at == mag)
    lo = t.patterns_arr[np.minimum(idx, len(t.patterns_arr) - 1)]
    hi = t.patterns_arr[np.minimum(idx + 1, len(t.patterns_arr) - 1)]
    even = np.where(lo % 2 == 0, lo, hi)
    out = np.where(tie_zone, np.where(err > 0, hi, np.where(err < 0, lo, even)), lo)
    n = width(name)
    if tapered(name):
        out = np.where(neg, (-out.astype(np.int64)) & ((1 << n) - 1), out).astype(np.uint64)
        out = np.where(s == 0, 0, out)
        out = np.where(~np.isfinite(s), 1 << (n - 1), out)
    else:
        nanp = nan_pattern(name)
        signed = np.where(neg & (out != nanp), out | (1 << (n - 1)), out)
        out = np.where(s == 0, np.where(np.signbit(s), 1 << (n - 1), 0), signed)
        out = np.where(np.isinf(s), np.where(s < 0, inf_pattern(name, True), inf_pattern(name)), out)
        out = np.where(np.isnan(s), nanp, out)
    return out.astype(np.uint64)


def vector_expected(name, op, pa, pb):
    """Oracle results for arrays of pattern pairs of an 8/16-bit format."""
    vals = values_f64(name)
    a, b = vals[pa.astype(np.int64)], vals[pb.astype(np.int64)]
    with np.errstate(all="ignore"):
        if op in ("add", "sub"):
            s, err = two_sum(a, b if op == "add" else -b)
            err = np.where(np.isfinite(s), err, 0.0)
        elif op == "mul":
            s, err = a * b, np.zeros_like(a)  # exact in float64 for these widths
        else:
            s = a / b
            err = np.zeros_like(a)
            # at a rounding boundary decide the side exactly
            t = table(name)
            fin = np.isfinite(s) & (s != 0)
            cand = np.nonzero(fin & np.isin(np.abs(s), t.mids_f64))[0]
            for i in cand:
                exact = Fraction(a[i]) / Fraction(b[i])
                err[i] = float(np.sign(exact - Fraction(s[i])))
    return round_f64_pairs(name, s, err)
