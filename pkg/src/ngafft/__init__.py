"""Number-format FFT benchmark laboratory.

Emulated OFP8, bfloat16, IEEE, posit and takum arithmetic, an FFT that runs
in any of them, and the heat, Poisson, image and audio accuracy sweeps.
"""
from .arith import REFERENCE, arith_for
from .fft import CArray, fft, fft2, ifft, plan_fft
from .formats import ALL_FORMATS, Format, parse_format

__all__ = ["ALL_FORMATS", "CArray", "Format", "REFERENCE", "arith_for", "fft", "fft2", "ifft",
           "parse_format", "plan_fft"]
