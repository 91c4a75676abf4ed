"""Round a few numbers into every format and show how tapered formats trade
range for precision near 1."""
import numpy as np

from ngafft.formats import ALL_FORMATS, ops

values = np.array([1 / 3, 1.0 + 2**-12, 1e-6, 3e4, 1e12])

print(f"{'format':10}" + "".join(f"{v:>16.6g}" for v in values))
for fmt in ALL_FORMATS:
    back = ops.to_float(fmt, ops.from_float(fmt, values))
    print(f"{fmt.name:10}" + "".join(f"{b:>16.9g}" for b in back))

# relative spacing of representable numbers around 1 and around 1e4
print()
for fmt in ALL_FORMATS:
    gaps = []
    for x in (1.0, 1e4):
        p = ops.from_float(fmt, np.array([x]))
        a, b = ops.to_ref(fmt, np.concatenate([p, p + np.uint64(1)]))
        gaps.append(float((b - a) / a))
    print(f"{fmt.name:10} ulp/x at 1: {gaps[0]:9.2e}   at 1e4: {gaps[1]:9.2e}")
