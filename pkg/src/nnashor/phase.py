"""Exact dyadic rotation angles.

A :class:`DyadicPhase` ``(num, exp)`` denotes the angle ``2*pi*num / 2**exp``.
All rotations in the nested-adds circuits are of this form, so the IR never
stores floating point angles.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

MAX_EXP = 1 << 16


@dataclass(frozen=True, order=True)
class DyadicPhase:
    num: int
    exp: int

    def __post_init__(self) -> None:
        if self.exp < 0 or self.exp > MAX_EXP:
            raise ValueError(f"phase exponent {self.exp} outside [0, {MAX_EXP}]")
        num, exp = self.num % (1 << self.exp), self.exp
        while exp > 0 and num % 2 == 0:
            num //= 2
            exp -= 1
        if num == 0:
            exp = 0
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    @classmethod
    def turns(cls, num: int, exp: int) -> "DyadicPhase":
        """Angle of ``num / 2**exp`` full turns, reduced mod 1."""
        return cls(num, exp)

    @property
    def is_zero(self) -> bool:
        return self.num == 0

    def __neg__(self) -> "DyadicPhase":
        return DyadicPhase(-self.num, self.exp)

    def __add__(self, other: "DyadicPhase") -> "DyadicPhase":
        e = max(self.exp, other.exp)
        return DyadicPhase((self.num << (e - self.exp)) + (other.num << (e - other.exp)), e)

    def __sub__(self, other: "DyadicPhase") -> "DyadicPhase":
        return self + (-other)

    def radians(self) -> float:
        return 2.0 * math.pi * self.num / (1 << self.exp)

    def unit(self) -> complex:
        return cmath.exp(1j * self.radians())

    def __str__(self) -> str:
        return f"{self.num}/{1 << self.exp}"

    @classmethod
    def parse(cls, text: str) -> "DyadicPhase":
        num_s, den_s = text.split("/")
        den = int(den_s)
        if den <= 0 or den & (den - 1):
            raise ValueError(f"denominator {den} is not a power of two")
        return cls(int(num_s), den.bit_length() - 1)


ZERO = DyadicPhase(0, 0)
HALF = DyadicPhase(1, 1)
