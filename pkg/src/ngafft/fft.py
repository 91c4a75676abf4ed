"""Format-generic complex FFT.

Every addition and multiplication goes through an arithmetic backend
(:mod:`ngafft.arith`), so the same code computes an in-format transform and
its reference-precision counterpart.  Lengths are factored into ascending
primes; each prime up to 31 is a decimation-in-time stage with a direct
prime-length DFT, and a larger prime factor is handled by Bluestein's chirp-z
algorithm over a power-of-two convolution.  Twiddles and chirps are evaluated
at reference precision and rounded once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import reference as _ref
from .arith import arith_for
from .formats import Format

MAX_RADIX = 31
FORWARD, INVERSE = "forward", "inverse"


class CArray(NamedTuple):
    """Complex array as separate real and imaginary arrays of one backend."""

    re: np.ndarray
    im: np.ndarray

    @property
    def shape(self):
        return np.shape(self.re)


def factorize(n: int) -> list[int]:
    """Prime factors of ``n`` in ascending order."""
    out, p = [], 2
    while p * p <= n:
        while n % p == 0:
            out.append(p)
            n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _cmul(A, ar, ai, br, bi):
    return (A.sub(A.mul(ar, br), A.mul(ai, bi)),
            A.add(A.mul(ar, bi), A.mul(ai, br)))


def _twiddle_table(n: int, sign: int, A) -> CArray:
    """round(exp(sign * 2*pi*i*k/n)) for k = 0..n-1."""
    cs = [_ref.cos_sin_2pi(sign * k, n) for k in range(n)]
    re = np.empty(n, dtype=object)
    im = np.empty(n, dtype=object)
    re[:], im[:] = [c for c, _ in cs], [s for _, s in cs]
    return CArray(A.from_ref(re), A.from_ref(im))


class _Stage:
    """n = p * m: m-point sub-transforms, twiddles, then p-point DFTs."""

    def __init__(self, n: int, sign: int, fmt):
        self.n = n
        self.p = p = factorize(n)[0]
        self.m = m = n // p
        self.child = _kernel(m, sign, fmt) if m > 1 else None
        table = _kernel_table(n, sign, fmt)
        r = np.arange(1, p)[:, None]
        k1 = np.arange(1, m)[None, :]
        idx = (r * k1) % n
        self.tw = CArray(table.re[idx], table.im[idx])
        # p-point DFT matrix W_p^(r*k) for r, k >= 1, as rows of W_n
        rk = (np.arange(1, p)[:, None] * np.arange(1, p)[None, :]) % p
        self.dft = CArray(table.re[rk * m], table.im[rk * m])

    def strategy(self):
        return (self.p,) + (self.child.strategy() if self.child else ())

    def apply(self, re, im, A):
        p, m = self.p, self.m
        lead = re.shape[:-1]
        # x[j*p + r] -> z[..., r, j]
        zr = re.reshape(*lead, m, p).swapaxes(-1, -2)
        zi = im.reshape(*lead, m, p).swapaxes(-1, -2)
        if self.child is not None:
            zr, zi = self.child.apply(zr, zi, A)
        if m > 1 and p > 1:
            zr, zi = np.array(zr, copy=True), np.array(zi, copy=True)
            tr, ti = _cmul(A, zr[..., 1:, 1:], zi[..., 1:, 1:], self.tw.re, self.tw.im)
            zr[..., 1:, 1:], zi[..., 1:, 1:] = tr, ti
        xr, xi = self._dft(zr, zi, A)
        return xr.reshape(*lead, self.n), xi.reshape(*lead, self.n)

    def _dft(self, zr, zi, A):
        """p-point DFT along axis -2; output row k2 holds X[k1 + m*k2]."""
        p = self.p
        if p == 2:
            a, b = (zr[..., 0, :], zi[..., 0, :]), (zr[..., 1, :], zi[..., 1, :])
            return (np.stack([A.add(a[0], b[0]), A.sub(a[0], b[0])], axis=-2),
                    np.stack([A.add(a[1], b[1]), A.sub(a[1], b[1])], axis=-2))
        # k = 0: plain sum; k >= 1: accumulate w^(r*k) * z_r for r = 1..p-1
        s0r, s0i = zr[..., 0, :], zi[..., 0, :]
        accr = np.broadcast_to(zr[..., :1, :], zr.shape[:-2] + (p - 1, zr.shape[-1]))
        acci = np.broadcast_to(zi[..., :1, :], accr.shape)
        for r in range(1, p):
            cr, ci = zr[..., r, :], zi[..., r, :]
            s0r, s0i = A.add(s0r, cr), A.add(s0i, ci)
            wr = self.dft.re[r - 1][:, None]
            wi = self.dft.im[r - 1][:, None]
            tr, ti = _cmul(A, cr[..., None, :], ci[..., None, :], wr, wi)
            accr, acci = A.add(accr, tr), A.add(acci, ti)
        return (np.concatenate([s0r[..., None, :], accr], axis=-2),
                np.concatenate([s0i[..., None, :], acci], axis=-2))


class _Bluestein:
    """Prime n > MAX_RADIX as a chirp-z convolution of power-of-two length."""

    def __init__(self, n: int, sign: int, fmt):
        A = arith_for(fmt)
        self.n = n
        self.size = size = 1 << (2 * n - 2).bit_length()
        q = (np.arange(n) ** 2) % (2 * n)
        chirp = [_ref.cos_sin_2pi(sign * int(k), 2 * n) for k in q]
        cr = np.array([c for c, _ in chirp], dtype=object)
        ci = np.array([s for _, s in chirp], dtype=object)
        self.chirp = CArray(A.from_ref(cr), A.from_ref(ci))
        # filter b[j] = conj(chirp[|j|]) laid out circularly, transformed and
        # divided by the padding length at reference precision, rounded once
        R = arith_for(None)
        br, bi = R.zeros(size), R.zeros(size)
        br[:n], bi[:n] = cr, -ci
        br[size - n + 1:], bi[size - n + 1:] = cr[1:][::-1], -ci[1:][::-1]
        Br, Bi = _kernel(size, -1, None).apply(br, bi, R)
        inv = _ref.ref(1) / size
        self.filt = CArray(A.from_ref(Br * inv), A.from_ref(Bi * inv))
        self.fwd = _kernel(size, -1, fmt)
        self.bwd = _kernel(size, +1, fmt)

    def strategy(self):
        return (("bluestein", self.n, self.size),)

    def _chirp_mul(self, re, im, A):
        re, im = np.array(re, copy=True), np.array(im, copy=True)
        tr, ti = _cmul(A, re[..., 1:], im[..., 1:], self.chirp.re[1:], self.chirp.im[1:])
        re[..., 1:], im[..., 1:] = tr, ti
        return re, im

    def apply(self, re, im, A):
        n = self.n
        ar, ai = self._chirp_mul(re, im, A)
        pad = ar.shape[:-1] + (self.size - n,)
        ar = np.concatenate([ar, A.zeros(pad)], axis=-1)
        ai = np.concatenate([ai, A.zeros(pad)], axis=-1)
        ar, ai = self.fwd.apply(ar, ai, A)
        ar, ai = _cmul(A, ar, ai, self.filt.re, self.filt.im)
        ar, ai = self.bwd.apply(ar, ai, A)
        return self._chirp_mul(ar[..., :n], ai[..., :n], A)


class _Identity:
    def strategy(self):
        return ()

    def apply(self, re, im, A):
        return re, im


@lru_cache(maxsize=None)
def _kernel_table(n: int, sign: int, fmt) -> CArray:
    return _twiddle_table(n, sign, arith_for(fmt))


@lru_cache(maxsize=None)
def _kernel(n: int, sign: int, fmt):
    if n == 1:
        return _Identity()
    factors = factorize(n)
    if len(factors) == 1 and n > MAX_RADIX:
        return _Bluestein(n, sign, fmt)
    return _Stage(n, sign, fmt)


@dataclass(frozen=True, eq=False)
class FftPlan:
    """A prepared transform of one length, direction and format (None = reference)."""

    length: int
    direction: str
    fmt: Format | None
    strategy: tuple = field(repr=True)
    _kernel: object = field(repr=False)
    _scale: object = field(repr=False)

    @property
    def twiddles(self) -> CArray:
        """Rounded exp(-+2*pi*i*k/n), k = 0..n-1, as used by the first stage."""
        return _kernel_table(self.length, -1 if self.direction == FORWARD else 1, self.fmt)


@lru_cache(maxsize=None)
def plan_fft(n: int, direction: str = FORWARD, fmt: Format | None = None) -> FftPlan:
    """Plan a length-``n`` transform; identical arguments return the same plan."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"FFT length must be a positive integer, got {n!r}")
    if direction not in (FORWARD, INVERSE):
        raise ValueError(f"direction must be {FORWARD!r} or {INVERSE!r}")
    n = int(n)
    _ref.ensure_precision()
    sign = -1 if direction == FORWARD else 1
    kernel = _kernel(n, sign, fmt)
    scale = arith_for(fmt).const(_ref.ref(1) / n) if direction == INVERSE else None
    return FftPlan(n, direction, fmt, kernel.strategy(), kernel, scale)


def execute(plan: FftPlan, data: CArray, arith=None) -> CArray:
    """Transform along the last axis (leading axes are independent transforms).

    Forward is the unnormalised DFT; inverse is the conjugate transform
    followed by an in-format multiplication with round(1/n).  ``arith`` may
    substitute an instrumented backend of the plan's format.
    """
    A = arith if arith is not None else arith_for(plan.fmt)
    if A.fmt != plan.fmt:
        raise ValueError("backend format differs from the plan's format")
    re, im = data
    if np.shape(re) != np.shape(im):
        raise ValueError("real and imaginary parts differ in shape")
    if np.ndim(re) == 0 or np.shape(re)[-1] != plan.length:
        raise ValueError(f"expected last axis of length {plan.length}, got shape {np.shape(re)}")
    _ref.ensure_precision()
    out_re, out_im = plan._kernel.apply(np.asarray(re), np.asarray(im), A)
    if plan.direction == INVERSE:
        out_re, out_im = A.mul(out_re, plan._scale), A.mul(out_im, plan._scale)
    return CArray(out_re, out_im)


def fft(data: CArray, fmt: Format | None = None) -> CArray:
    return execute(plan_fft(np.shape(data.re)[-1], FORWARD, fmt), data)


def ifft(data: CArray, fmt: Format | None = None) -> CArray:
    return execute(plan_fft(np.shape(data.re)[-1], INVERSE, fmt), data)


def fft2(data: CArray, direction: str = FORWARD, fmt: Format | None = None, arith=None) -> CArray:
    """2-D transform of the last two axes: every row, then every column."""
    re, im = data
    if np.ndim(re) < 2 or 0 in np.shape(re)[-2:]:
        raise ValueError("fft2 needs a non-empty matrix")
    rows, cols = np.shape(re)[-2:]
    re, im = execute(plan_fft(cols, direction, fmt), CArray(re, im), arith)
    t = execute(plan_fft(rows, direction, fmt), CArray(re.swapaxes(-1, -2), im.swapaxes(-1, -2)), arith)
    return CArray(t.re.swapaxes(-1, -2), t.im.swapaxes(-1, -2))


def dft_direct(data: CArray, direction: str = FORWARD) -> CArray:
    """O(n^2) DFT at reference precision (a test oracle and for tiny sizes)."""
    _ref.ensure_precision()
    re, im = (np.asarray(a, dtype=object) for a in data)
    n = re.shape[-1]
    sign = -1 if direction == FORWARD else 1
    cs = [_ref.cos_sin_2pi(sign * k, n) for k in range(n)]
    out_re = np.empty(re.shape, dtype=object)
    out_im = np.empty(re.shape, dtype=object)
    for k in range(n):
        c = np.array([cs[(j * k) % n][0] for j in range(n)], dtype=object)
        s = np.array([cs[(j * k) % n][1] for j in range(n)], dtype=object)
        out_re[..., k] = (re * c - im * s).sum(axis=-1)
        out_im[..., k] = (re * s + im * c).sum(axis=-1)
    if direction == INVERSE:
        out_re, out_im = out_re / n, out_im / n
    return CArray(out_re, out_im)
