"""Forward-then-inverse FFT of a random signal in each 16-bit format,
measured against the same transform at reference precision."""
import sys

import numpy as np

from ngafft import CArray, fft, ifft
from ngafft.experiments import relative_error
from ngafft.formats import BFLOAT16, FLOAT16, POSIT16, TAKUM16, ops
from ngafft.reference import ref_from_float

n = int(sys.argv[1]) if len(sys.argv) > 1 else 240
x = np.random.default_rng(0).uniform(-1, 1, n)

ref_in = CArray(ref_from_float(x), ref_from_float(np.zeros(n)))
ref_out = ifft(fft(ref_in))

for fmt in (FLOAT16, BFLOAT16, POSIT16, TAKUM16):
    data = CArray(ops.from_float(fmt, x), ops.from_float(fmt, np.zeros(n)))
    out = ifft(fft(data, fmt), fmt)
    err = relative_error(out, ref_out, fmt)
    print(f"{fmt.name:9} n={n}: relative error {float(err):.3e}")
