"""Single values in a target format and scalar wrappers around the array ops."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .descriptor import Format, parse_format


@dataclass(frozen=True)
class TargetScalar:
    """One value of ``fmt``, held as its ``fmt.width``-bit pattern."""

    bits: int
    fmt: Format

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.fmt.width):
            raise ValueError(f"{self.bits:#x} is not a {self.fmt.width}-bit pattern")

    def __str__(self) -> str:
        digits = self.fmt.width // 4
        return f"{self.fmt.name}:0x{self.bits:0{digits}X}"

    @classmethod
    def parse(cls, text: str) -> "TargetScalar":
        """Inverse of ``str()``: ``"posit8:0x40"`` -> TargetScalar."""
        name, _, hexpart = text.partition(":")
        return cls(int(hexpart, 16), parse_format(name))

    def to_ref(self):
        return to_ref(self)

    def __float__(self) -> float:
        return float(ops.to_float(self.fmt, np.uint64(self.bits)))


def _wrap(fmt: Format, bits) -> TargetScalar:
    return TargetScalar(int(np.asarray(bits).reshape(-1)[0]), fmt)


def _same_format(a: TargetScalar, b: TargetScalar) -> Format:
    if a.fmt != b.fmt:
        raise TypeError(f"mixed formats: {a.fmt.name} and {b.fmt.name}")
    return a.fmt


def round_to_format(x, fmt: Format) -> TargetScalar:
    """Round a RefReal (or exact int/Fraction/float) to the nearest value of ``fmt``."""
    return _wrap(fmt, ops.from_ref(fmt, [x]))


def to_ref(x: TargetScalar):
    """Exact RefReal value of ``x``; NaR and NaN map to NaN."""
    return ops.to_ref(x.fmt, np.array([x.bits], dtype=np.uint64))[0]


def _binary(op, a: TargetScalar, b: TargetScalar) -> TargetScalar:
    fmt = _same_format(a, b)
    return _wrap(fmt, op(fmt, np.uint64(a.bits), np.uint64(b.bits)))


def t_add(a, b):
    return _binary(ops.add, a, b)


def t_sub(a, b):
    return _binary(ops.sub, a, b)


def t_mul(a, b):
    return _binary(ops.mul, a, b)


def t_div(a, b):
    return _binary(ops.div, a, b)


def _unary(op, a: TargetScalar) -> TargetScalar:
    return _wrap(a.fmt, op(a.fmt, np.array([a.bits], dtype=np.uint64)))


def t_neg(a):
    return _unary(ops.neg, a)


def t_abs(a):
    return _unary(ops.absolute, a)


def t_sqrt(a):
    return _unary(ops.sqrt, a)


def t_exp(a):
    return _unary(ops.exp, a)


def t_cos(a):
    return _unary(ops.cos, a)


def t_sin(a):
    return _unary(ops.sin, a)


def t_compare(a: TargetScalar, b: TargetScalar) -> int | None:
    """-1, 0 or 1 by real value; None when either side is NaN/NaR."""
    fmt = _same_format(a, b)
    pair = np.array([a.bits, b.bits], dtype=np.uint64)
    if ops.isnan(fmt, pair).any():
        return None
    ka, kb = ops.order_key(fmt, pair).tolist()
    return (ka > kb) - (ka < kb)
