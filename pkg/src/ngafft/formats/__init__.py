"""Machine-number formats: descriptors, bit-exact codecs and correctly rounded arithmetic."""
from . import ops
from .descriptor import (
    ALL_FORMATS,
    BFLOAT16,
    E4M3,
    E5M2,
    FLOAT16,
    FLOAT32,
    FLOAT64,
    POSIT8,
    POSIT16,
    POSIT32,
    POSIT64,
    TAKUM8,
    TAKUM16,
    TAKUM32,
    TAKUM64,
    Family,
    Format,
    parse_format,
    parse_format_list,
)
from .scalar import (
    TargetScalar,
    round_to_format,
    t_abs,
    t_add,
    t_compare,
    t_cos,
    t_div,
    t_exp,
    t_mul,
    t_neg,
    t_sin,
    t_sqrt,
    t_sub,
    to_ref,
)

__all__ = [
    "ALL_FORMATS", "BFLOAT16", "E4M3", "E5M2", "FLOAT16", "FLOAT32", "FLOAT64",
    "POSIT8", "POSIT16", "POSIT32", "POSIT64", "TAKUM8", "TAKUM16", "TAKUM32", "TAKUM64",
    "Family", "Format", "TargetScalar", "ops", "parse_format", "parse_format_list",
    "round_to_format", "to_ref", "t_abs", "t_add", "t_compare", "t_cos", "t_div",
    "t_exp", "t_mul", "t_neg", "t_sin", "t_sqrt", "t_sub",
]
