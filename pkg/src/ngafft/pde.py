"""Spectral solvers for the 1-D heat equation and the 2-D Poisson equation.

Both solvers run on an arithmetic backend, so the reference solution is the
same operation sequence at reference precision.  Inputs (initial data,
source terms, physical constants) are evaluated at reference precision and
rounded once into the target format; everything after that is in-format.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import reference as _ref
from .arith import arith_for
from .fft import FORWARD, INVERSE, CArray, execute, plan_fft
from .formats import Format

#: default thermal diffusivity; see the README for why it is not 1
DEFAULT_ALPHA = 1e-7
INTEGRATORS = ("forward_euler", "exponential")


def _exact(x) -> Fraction:
    """Decimal parameters (0.1, 1e-7) as the exact rationals they spell."""
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class HeatProblem:
    nx: int
    nt: int
    alpha: float = DEFAULT_ALPHA
    sigma: float = 0.1
    integrator: str = "forward_euler"

    def __post_init__(self):
        if self.nx < 1 or self.nt < 1:
            raise ValueError("heat problem needs nx >= 1 and nt >= 1")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if not (self.alpha > 0 and self.sigma > 0):
            raise ValueError("alpha and sigma must be positive")

    @property
    def points(self) -> int:
        return self.nx + 1


@dataclass(frozen=True)
class PoissonProblem:
    nx: int
    sigma: float = 0.1

    def __post_init__(self):
        if self.nx < 2:
            raise ValueError("Poisson problem needs nx >= 2")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


# -- heat equation ----------------------------------------------------------

def heat_initial_reference(p: HeatProblem) -> np.ndarray:
    """exp(-(x_i - 1/2)^2 / (2 sigma^2)) at x_i = i/(nx+1), i = 0..nx, as RefReal."""
    _ref.ensure_precision()
    s2 = 2 * _exact(p.sigma) ** 2
    out = np.empty(p.points, dtype=object)
    for i in range(p.points):
        d = Fraction(i, p.points) - Fraction(1, 2)
        out[i] = _ref.ref_exp(-_ref.ref(d * d / s2))
    return out


def heat_initial_condition(p: HeatProblem, fmt: Format | None = None) -> np.ndarray:
    return arith_for(fmt).from_ref(heat_initial_reference(p))


def heat_wavenumbers(n: int) -> np.ndarray:
    """Signed mode numbers s(k): k for k <= n/2, else k - n."""
    k = np.arange(n)
    return np.where(k <= n // 2, k, k - n)


@lru_cache(maxsize=256)
def _heat_spectrum(nx: int, sigma: float, fmt):
    A = arith_for(fmt)
    u0 = A.from_ref(heat_initial_reference(HeatProblem(nx, 1, sigma=sigma)))
    return execute(plan_fft(nx + 1, FORWARD, fmt), CArray(u0, A.zeros(u0.shape)))


def solve_heat(p: HeatProblem, fmt: Format | None = None, *, arith=None, steps: int | None = None) -> np.ndarray:
    """Fourier-spectral solution at t = 1 (real part, nx+1 points).

    Each of the nt + 1 steps multiplies mode k by 1 - alpha kappa_k^2 dt
    (forward Euler) or by exp(-alpha kappa_k^2 dt) (exponential integrator).

    ``steps`` overrides the number of Euler steps (default nt + 1) for
    stability studies; ``arith`` substitutes an instrumented backend.
    """
    A = arith if arith is not None else arith_for(fmt)
    fmt = A.fmt
    n = p.points
    if arith is None:
        spec = _heat_spectrum(p.nx, p.sigma, fmt)
    else:
        u0 = A.from_ref(heat_initial_reference(p))
        spec = execute(plan_fft(n, FORWARD, fmt), CArray(u0, A.zeros(u0.shape)), arith=A)
    two_pi = A.const(2 * _ref.ref_pi())
    kappa = A.mul(two_pi, A.from_ref(heat_wavenumbers(n).astype(object)))
    kappa2 = A.mul(kappa, kappa)
    dt = A.const(_ref.ref(Fraction(1, p.nt + 1)))
    alpha = A.const(_ref.ref(_exact(p.alpha)))
    decay = A.mul(A.mul(alpha, kappa2), dt)
    if p.integrator == "exponential":
        g = A.exp(A.neg(decay))
    else:
        g = A.sub(A.const(1), decay)
    re, im = spec
    for _ in range(p.nt + 1 if steps is None else steps):
        re, im = A.mul(re, g), A.mul(im, g)
    return execute(plan_fft(n, INVERSE, fmt), CArray(re, im), arith=A).re


# -- Poisson equation ---------------------------------------------------------

@lru_cache(maxsize=64)
def poisson_rhs_reference(p: PoissonProblem) -> np.ndarray:
    """f(x_j, y_k) = exp(-r^2/(2 s^2)) (r^2 - 2 s^2) / s^4 on the nx-by-nx interior.

    Cached and shared between formats; treat the result as read-only.
    """
    _ref.ensure_precision()
    s2 = _exact(p.sigma) ** 2
    h = Fraction(1, p.nx + 1)
    d2 = [(j * h - Fraction(1, 2)) ** 2 for j in range(1, p.nx + 1)]
    out = np.empty((p.nx, p.nx), dtype=object)
    for j, dx in enumerate(d2):
        for k, dy in enumerate(d2):
            r2 = dx + dy
            out[j, k] = _ref.ref_exp(-_ref.ref(r2 / (2 * s2))) * _ref.ref((r2 - 2 * s2) / (s2 * s2))
    return out


def poisson_rhs(p: PoissonProblem, fmt: Format | None = None) -> np.ndarray:
    return arith_for(fmt).from_ref(poisson_rhs_reference(p))


def _dst1(A, v, scale):
    """Im(FFT(odd extension of scale * v)) along the last axis.

    scale = -1/(n+1) gives the sine-series coefficients
    b_k = 2/(n+1) sum_j v_j sin(pi j k/(n+1)); scale = -1/2 gives the
    synthesis sum_k b_k sin(pi j k/(n+1)).  Scaling before the transform keeps
    every intermediate at the magnitude of the data rather than of its sums.
    """
    lead, n = v.shape[:-1], v.shape[-1]
    v = A.mul(v, scale)
    z = A.zeros(lead + (1,))
    ext = np.concatenate([z, v, z, A.neg(v[..., ::-1])], axis=-1)
    spec = execute(plan_fft(2 * (n + 1), FORWARD, A.fmt), CArray(ext, A.zeros(ext.shape)), arith=A)
    return spec.im[..., 1:n + 1]


def _dst2(A, v, scale):
    v = _dst1(A, v, scale)
    return _dst1(A, v.swapaxes(-1, -2), scale).swapaxes(-1, -2)


def solve_poisson(p: PoissonProblem, fmt: Format | None = None, *, arith=None) -> np.ndarray:
    """Sine-spectral solution of -Lap u = f with zero Dirichlet data (nx-by-nx interior)."""
    A = arith if arith is not None else arith_for(fmt)
    n = p.nx
    f = A.from_ref(poisson_rhs_reference(p))
    coeff = _dst2(A, f, A.const(_ref.ref(Fraction(-1, n + 1))))
    pi = A.const(_ref.ref_pi())
    pk = A.mul(pi, A.from_ref(np.arange(1, n + 1).astype(object)))
    pk2 = A.mul(pk, pk)
    lam = A.add(pk2[:, None], pk2[None, :])
    coeff = A.div(coeff, lam)
    return _dst2(A, coeff, A.const(_ref.ref(Fraction(-1, 2))))


def reference_solution(problem, **kwargs) -> np.ndarray:
    """The same solver at reference precision."""
    if isinstance(problem, HeatProblem):
        return solve_heat(problem, None, **kwargs)
    if isinstance(problem, PoissonProblem):
        return solve_poisson(problem, None, **kwargs)
    raise TypeError(f"unknown problem {problem!r}")
