"""Heat equation at a single grid point: the error of every format, plus
the solution profile for one of them."""
import numpy as np

from ngafft import pde
from ngafft.experiments import relative_error
from ngafft.formats import FLOAT16, FLOAT32, POSIT16, POSIT32, TAKUM16, TAKUM32, ops

problem = pde.HeatProblem(nx=100, nt=20)
reference = pde.solve_heat(problem)

for fmt in (FLOAT16, POSIT16, TAKUM16, FLOAT32, POSIT32, TAKUM32):
    u = pde.solve_heat(problem, fmt)
    print(f"{fmt.name:9} error {float(relative_error(u, reference, fmt)):.3e}")

u = ops.to_float(POSIT16, pde.solve_heat(problem, POSIT16))
print("\nposit16 profile (every 10th point):")
print(np.array2string(u[::10], precision=4))
