"""Interchangeable array arithmetic backends.

The FFT, the PDE solvers and the experiments are written once against this
small interface and run either in a target format (:class:`FormatArith`,
arrays of bit patterns) or at reference precision (:class:`RefArith`,
object arrays of RefReal).  Swapping the backend is the only difference
between an in-format run and its reference solution.
"""
from __future__ import annotations

from collections import Counter
from functools import lru_cache

import numpy as np

from . import reference as _ref
from .formats import Format, ops


class FormatArith:
    """Correctly rounded arithmetic on uint64 bit-pattern arrays of ``fmt``."""

    def __init__(self, fmt: Format):
        self.fmt = fmt

    @property
    def name(self) -> str:
        return self.fmt.name

    def const(self, x):
        """Round one exact or RefReal constant into the format (0-d array)."""
        return ops.from_ref(self.fmt, x)

    def from_ref(self, values) -> np.ndarray:
        return ops.from_ref(self.fmt, values)

    def from_float(self, x) -> np.ndarray:
        return ops.from_float(self.fmt, x)

    def to_ref(self, a) -> np.ndarray:
        return ops.to_ref(self.fmt, a)

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.uint64)

    def add(self, a, b):
        return ops.add(self.fmt, a, b)

    def sub(self, a, b):
        return ops.sub(self.fmt, a, b)

    def mul(self, a, b):
        return ops.mul(self.fmt, a, b)

    def div(self, a, b):
        return ops.div(self.fmt, a, b)

    def neg(self, a):
        return ops.neg(self.fmt, a)

    def exp(self, a):
        return ops.exp(self.fmt, a)

    def isfinite(self, a) -> np.ndarray:
        return ops.isfinite(self.fmt, a)

    def __repr__(self):
        return f"FormatArith({self.fmt.name})"


class RefArith:
    """The same interface at reference precision on object arrays of RefReal."""

    fmt = None
    name = "reference"

    def const(self, x):
        return _ref.ref(x)

    def from_ref(self, values) -> np.ndarray:
        return np.array(values, dtype=object)

    def from_float(self, x) -> np.ndarray:
        return _ref.ref_from_float(x)

    def to_ref(self, a) -> np.ndarray:
        return np.asarray(a, dtype=object)

    def zeros(self, shape) -> np.ndarray:
        return _ref.ref_zeros(shape)

    def add(self, a, b):
        _ref.ensure_precision()
        return np.add(a, b, dtype=object)

    def sub(self, a, b):
        _ref.ensure_precision()
        return np.subtract(a, b, dtype=object)

    def mul(self, a, b):
        _ref.ensure_precision()
        return np.multiply(a, b, dtype=object)

    def div(self, a, b):
        _ref.ensure_precision()
        return np.divide(a, b, dtype=object)

    def neg(self, a):
        return np.negative(a, dtype=object)

    def exp(self, a):
        _ref.ensure_precision()
        return np.vectorize(_ref.ref_exp, otypes=[object])(a)

    def isfinite(self, a) -> np.ndarray:
        return _ref.ref_isfinite(a)

    def __repr__(self):
        return "RefArith()"


REFERENCE = RefArith()


@lru_cache(maxsize=None)
def _format_arith(fmt: Format) -> FormatArith:
    return FormatArith(fmt)


def arith_for(fmt: Format | None):
    """Backend for ``fmt``; ``None`` selects reference precision."""
    return REFERENCE if fmt is None else _format_arith(fmt)


class CountingArith:
    """Wraps a backend and records every arithmetic call and its element count."""

    _COUNTED = ("add", "sub", "mul", "div", "neg", "exp", "const", "from_ref")

    def __init__(self, inner):
        self.inner = inner
        self.fmt = inner.fmt
        self.name = inner.name
        self.counts: Counter = Counter()
        self.trace: list[tuple[str, tuple]] = []

    def __getattr__(self, attr):
        fn = getattr(self.inner, attr)
        if attr not in self._COUNTED:
            return fn

        def counted(*args):
            out = fn(*args)
            shape = np.shape(out)
            self.counts[attr] += int(np.prod(shape)) if shape else 1
            self.trace.append((attr, shape))
            return out

        return counted
