"""Ternary value domain: logic levels, voltage/binary encodings, reference gates.

The logic family is unbalanced positive ternary: levels 0, 1, 2 map onto the
voltage rails GND, VDD/2 and VDD.  Every gate in the cell library has a pure
functional reference defined here (``ref_sti`` .. ``ref_tor``); both simulator
backends are verified against these functions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union


class TernaryLevel(enum.IntEnum):
    """One of the three logic levels, totally ordered L0 < L1 < L2."""

    L0 = 0
    L1 = 1
    L2 = 2

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return self.name


L0, L1, L2 = TernaryLevel.L0, TernaryLevel.L1, TernaryLevel.L2
LEVELS = (L0, L1, L2)


class Indeterminate:
    """Analog value that falls between quantization bands.

    Representable so glitch analysis can talk about it, but never a legal
    steady-state value in verification.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Indeterminate"


INDETERMINATE = Indeterminate()

Quantized = Union[TernaryLevel, Indeterminate]


class InvalidEncoding(ValueError):
    """Raised when decoding the reserved two-bit code 11."""


@dataclass(frozen=True)
class BitPair:
    """Two-bit ternary code: (0, 1, 2) = (00, 01, 10).  Code 11 is reserved."""

    hi: int
    lo: int

    def __post_init__(self):
        if self.hi not in (0, 1) or self.lo not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got ({self.hi}, {self.lo})")

    def __str__(self) -> str:
        return f"{self.hi}{self.lo}"


@dataclass(frozen=True)
class VoltageBands:
    """Decision bands used to quantize analog node voltages back to levels.

    Voltages in [0, lo_max] read as L0, [mid_lo, mid_hi] as L1 and
    [hi_min, vdd] as L2; anything in the two guard gaps is Indeterminate.
    """

    vdd: float
    lo_max: float
    mid_lo: float
    mid_hi: float
    hi_min: float

    def __post_init__(self):
        if not (0.0 <= self.lo_max < self.mid_lo < self.mid_hi < self.hi_min <= self.vdd):
            raise ValueError(f"bands must be ordered and disjoint: {self}")

    @classmethod
    def default(cls, vdd: float = 1.0) -> "VoltageBands":
        # Symmetric 20% guard bands around the three nominal rails.
        return cls(vdd=vdd, lo_max=0.2 * vdd, mid_lo=0.4 * vdd,
                   mid_hi=0.6 * vdd, hi_min=0.8 * vdd)

    def region(self, v: float) -> str:
        """Classify a voltage into one of five regions: L0|gap01|L1|gap12|L2."""
        if v <= self.lo_max:
            return "L0"
        if v < self.mid_lo:
            return "gap01"
        if v <= self.mid_hi:
            return "L1"
        if v < self.hi_min:
            return "gap12"
        return "L2"


def level_to_voltage(level: TernaryLevel, vdd: float) -> float:
    """Map a logic level onto its nominal rail: L0=0, L1=vdd/2, L2=vdd."""
    if vdd <= 0:
        raise ValueError(f"vdd must be positive, got {vdd}")
    return (0.0, vdd / 2.0, vdd)[int(level)]


def voltage_to_level(v: float, bands: VoltageBands) -> Quantized:
    """Quantize a node voltage; values in the guard gaps are Indeterminate."""
    region = bands.region(v)
    if region == "L0":
        return L0
    if region == "L1":
        return L1
    if region == "L2":
        return L2
    return INDETERMINATE


def encode_2bit(level: TernaryLevel) -> BitPair:
    return (BitPair(0, 0), BitPair(0, 1), BitPair(1, 0))[int(level)]


def decode_2bit(b: BitPair) -> TernaryLevel:
    if b.hi and b.lo:
        raise InvalidEncoding("two-bit code 11 is reserved")
    return TernaryLevel(2 * b.hi + b.lo)


# Reference (functional) gate semantics.  The three inverters differ only in
# how they treat the middle level; TAND/TOR are min/max under L0 < L1 < L2.

def ref_sti(a: TernaryLevel) -> TernaryLevel:
    """Standard ternary inverter: 0->2, 1->1, 2->0 (an involution)."""
    return TernaryLevel(2 - int(a))


def ref_nti(a: TernaryLevel) -> TernaryLevel:
    """Negative ternary inverter: only a hard 0 input reads as low."""
    return L2 if a == L0 else L0


def ref_pti(a: TernaryLevel) -> TernaryLevel:
    """Positive ternary inverter: everything below a hard 2 reads as low."""
    return L0 if a == L2 else L2


def ref_tand(a: TernaryLevel, b: TernaryLevel) -> TernaryLevel:
    return min(a, b)


def ref_tor(a: TernaryLevel, b: TernaryLevel) -> TernaryLevel:
    return max(a, b)
