"""Identifiers for the thirteen machine-number formats under test."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Family(str, enum.Enum):
    IEEE = "ieee"
    OFP8_E4M3 = "ofp8_e4m3"
    OFP8_E5M2 = "ofp8_e5m2"
    BFLOAT16 = "bfloat16"
    POSIT = "posit"
    TAKUM_LINEAR = "takum_linear"


_VALID_WIDTHS = {
    Family.IEEE: (16, 32, 64),
    Family.OFP8_E4M3: (8,),
    Family.OFP8_E5M2: (8,),
    Family.BFLOAT16: (16,),
    Family.POSIT: (8, 16, 32, 64),
    Family.TAKUM_LINEAR: (8, 16, 32, 64),
}


@dataclass(frozen=True, order=True)
class Format:
    """A (family, width) pair.  Only the 13 combinations under test are valid."""

    family: Family
    width: int

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        if self.width not in _VALID_WIDTHS[family]:
            raise ValueError(f"no {family.value} format with width {self.width}")

    @property
    def name(self) -> str:
        if self.family is Family.IEEE:
            return f"float{self.width}"
        if self.family is Family.OFP8_E4M3:
            return "e4m3"
        if self.family is Family.OFP8_E5M2:
            return "e5m2"
        if self.family is Family.BFLOAT16:
            return "bfloat16"
        if self.family is Family.POSIT:
            return f"posit{self.width}"
        return f"takum{self.width}"

    @property
    def tapered(self) -> bool:
        return self.family in (Family.POSIT, Family.TAKUM_LINEAR)

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Format({self.name})"


E4M3 = Format(Family.OFP8_E4M3, 8)
E5M2 = Format(Family.OFP8_E5M2, 8)
BFLOAT16 = Format(Family.BFLOAT16, 16)
FLOAT16 = Format(Family.IEEE, 16)
FLOAT32 = Format(Family.IEEE, 32)
FLOAT64 = Format(Family.IEEE, 64)
POSIT8 = Format(Family.POSIT, 8)
POSIT16 = Format(Family.POSIT, 16)
POSIT32 = Format(Family.POSIT, 32)
POSIT64 = Format(Family.POSIT, 64)
TAKUM8 = Format(Family.TAKUM_LINEAR, 8)
TAKUM16 = Format(Family.TAKUM_LINEAR, 16)
TAKUM32 = Format(Family.TAKUM_LINEAR, 32)
TAKUM64 = Format(Family.TAKUM_LINEAR, 64)

#: all formats, grouped by width the way the result figures are
ALL_FORMATS: tuple[Format, ...] = (
    E4M3, E5M2, POSIT8, TAKUM8,
    FLOAT16, BFLOAT16, POSIT16, TAKUM16,
    FLOAT32, POSIT32, TAKUM32,
    FLOAT64, POSIT64, TAKUM64,
)

_ALIASES = {
    "ofp8_e4m3": E4M3, "float8_e4m3": E4M3,
    "ofp8_e5m2": E5M2, "float8_e5m2": E5M2,
    "bf16": BFLOAT16,
    "half": FLOAT16, "binary16": FLOAT16,
    "single": FLOAT32, "binary32": FLOAT32,
    "double": FLOAT64, "binary64": FLOAT64,
}
_BY_NAME = {f.name: f for f in ALL_FORMATS}
for _n in (8, 16, 32, 64):
    _BY_NAME[f"takum_linear{_n}"] = Format(Family.TAKUM_LINEAR, _n)


def parse_format(name: str) -> Format:
    key = name.strip().lower()
    try:
        return _BY_NAME.get(key) or _ALIASES[key]
    except KeyError:
        raise ValueError(
            f"unknown format {name!r}; expected one of {', '.join(f.name for f in ALL_FORMATS)}"
        ) from None


def parse_format_list(text: str) -> list[Format]:
    return [parse_format(tok) for tok in text.split(",") if tok.strip()]
