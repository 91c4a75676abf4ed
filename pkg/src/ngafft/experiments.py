"""Image round-trip FFT and audio STFT experiments, and the shared error metric."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import gmpy2
import numpy as np

from . import reference as _ref
from .arith import arith_for
from .fft import FORWARD, INVERSE, CArray, execute, fft2, plan_fft
from .formats import Format

INF = gmpy2.mpfr("inf")


# -- error metric -----------------------------------------------------------

def interleave(c: CArray) -> np.ndarray:
    """Complex array as one flat real vector re0, im0, re1, im1, ..."""
    re, im = np.asarray(c.re).reshape(-1), np.asarray(c.im).reshape(-1)
    out = np.empty(2 * re.size, dtype=re.dtype)
    out[0::2], out[1::2] = re, im
    return out


def relative_error(out, ref, fmt: Format | None = None):
    """||out - ref||_2 / ||ref||_2 at reference precision; inf if out is not all finite.

    ``out`` holds bit patterns of ``fmt`` (or RefReal values when ``fmt`` is
    None); ``ref`` holds RefReal values.  Complex inputs are interleaved.
    """
    _ref.ensure_precision()
    if isinstance(out, CArray):
        out = interleave(out)
    if isinstance(ref, CArray):
        ref = interleave(ref)
    out, ref = np.asarray(out).reshape(-1), np.asarray(ref, dtype=object).reshape(-1)
    if out.size != ref.size:
        raise ValueError(f"length mismatch: {out.size} vs {ref.size}")
    A = arith_for(fmt)
    if not A.isfinite(out).all():
        return INF
    vals = A.to_ref(out)
    num = gmpy2.fsum([d * d for d in (vals - ref)])
    den = gmpy2.fsum([r * r for r in ref])
    if den == 0:
        return gmpy2.mpfr(0) if num == 0 else INF
    return gmpy2.sqrt(num / den)


# -- images -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _levels(scale: int):
    """k/scale at reference precision for every 8-bit level k."""
    _ref.ensure_precision()
    return np.array([_ref.ref(Fraction(k, scale)) for k in range(scale + 1)], dtype=object)


@lru_cache(maxsize=None)
def _levels_in(scale: int, fmt):
    return arith_for(fmt).from_ref(_levels(scale))


@dataclass(frozen=True, eq=False)
class ImageSample:
    """RGB image as 8-bit channel codes; sample value = code / 255."""

    codes: np.ndarray  # uint8, shape (3, height, width)
    name: str = ""

    def __post_init__(self):
        c = np.asarray(self.codes)
        if c.ndim != 3 or c.shape[0] != 3 or c.dtype != np.uint8 or 0 in c.shape:
            raise ValueError("image codes must be a non-empty uint8 array of shape (3, h, w)")

    @property
    def height(self) -> int:
        return self.codes.shape[1]

    @property
    def width(self) -> int:
        return self.codes.shape[2]

    @property
    def planes(self) -> np.ndarray:
        """Channel planes in [0, 1] as RefReal."""
        return _levels(255)[self.codes]

    def planes_in(self, fmt: Format | None) -> np.ndarray:
        """Planes rounded once into ``fmt``."""
        return _levels_in(255, fmt)[self.codes]


def image_roundtrip(img: ImageSample, fmt: Format | None, arith=None) -> np.ndarray:
    """Real parts after fft2 then inverse fft2 of every channel, in ``fmt``."""
    A = arith if arith is not None else arith_for(fmt)
    x = img.planes_in(fmt)
    spec = fft2(CArray(x, A.zeros(x.shape)), FORWARD, fmt, arith)
    return fft2(spec, INVERSE, fmt, arith).re


def run_image_roundtrip(img: ImageSample, fmt: Format | None):
    """Relative error of the reconstructed planes against the original planes."""
    return relative_error(image_roundtrip(img, fmt), img.planes, fmt)


# -- audio ------------------------------------------------------------------

@dataclass(frozen=True)
class StftParams:
    window_size: int = 2048
    hop_size: int = 1024
    window: str = "hann"
    zero_pad_factor: int = 2

    def __post_init__(self):
        if self.window != "hann":
            raise ValueError("only the Hann window is supported")
        if not (1 <= self.hop_size <= self.window_size) or self.zero_pad_factor < 1:
            raise ValueError("need 1 <= hop_size <= window_size and zero_pad_factor >= 1")

    @property
    def segment_length(self) -> int:
        return self.window_size * self.zero_pad_factor

    def columns(self, num_samples: int) -> int:
        if num_samples < self.window_size:
            raise ValueError(f"audio shorter than one window ({num_samples} < {self.window_size})")
        return (num_samples - self.window_size) // self.hop_size + 1


@dataclass(frozen=True, eq=False)
class AudioSample:
    """Mono samples in [-1, 1] (exact binary fractions) and their sample rate."""

    samples: np.ndarray  # float64
    sample_rate: int = 44100
    name: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("audio must be a non-empty 1-D array")
        if not np.all(np.abs(s) <= 1):
            raise ValueError("audio samples must lie in [-1, 1]")


@lru_cache(maxsize=None)
def hann_window(length: int, fmt) -> np.ndarray:
    """Periodic Hann window 0.5 * (1 - cos(2 pi n / L)) in ``fmt``.

    The cosine is evaluated at reference precision and rounded once; the
    subtraction and the halving are in-format operations.
    """
    A = arith_for(fmt)
    cos = np.array([_ref.cos_sin_2pi(n, length)[0] for n in range(length)], dtype=object)
    return A.mul(A.const(_ref.ref(Fraction(1, 2))), A.sub(A.const(1), A.from_ref(cos)))


def stft(audio: AudioSample, p: StftParams, fmt: Format | None, arith=None) -> CArray:
    """STFT matrix: one column per frame, rows = window_size * zero_pad_factor."""
    A = arith if arith is not None else arith_for(fmt)
    cols = p.columns(audio.samples.size)
    x = A.from_float(audio.samples)
    starts = np.arange(cols) * p.hop_size
    frames = x[starts[:, None] + np.arange(p.window_size)[None, :]]
    frames = A.mul(frames, hann_window(p.window_size, fmt))
    pad = A.zeros((cols, p.segment_length - p.window_size))
    seg = np.concatenate([frames, pad], axis=1)
    spec = execute(plan_fft(p.segment_length, FORWARD, fmt), CArray(seg, A.zeros(seg.shape)), arith)
    return CArray(spec.re.T, spec.im.T)


def run_stft(audio: AudioSample, p: StftParams, fmt: Format | None, reference: CArray | None = None):
    """Relative error of the in-format STFT against the reference-precision STFT."""
    if reference is None:
        reference = stft(audio, p, None)
    return relative_error(stft(audio, p, fmt), reference, fmt)
