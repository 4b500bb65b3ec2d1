"""Exact measurement angles in units of pi/8."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable

ANGLE_MODULUS = 16
HALF_TURN = ANGLE_MODULUS // 2

# e^{i k pi/8}; multiples of pi/2 are exact so Z-type phases never pick up rounding noise.
_PHASES: tuple[complex, ...] = tuple(
    (1, 1j, -1, -1j)[k // 4] if k % 4 == 0 else cmath.exp(1j * math.pi * k / HALF_TURN)
    for k in range(ANGLE_MODULUS)
)


@dataclass(frozen=True, slots=True, order=True)
class Angle:
    """Angle ``k * pi / 8`` with ``k`` kept in ``Z_16``."""

    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", int(self.k) % ANGLE_MODULUS)

    @classmethod
    def of(cls, value: "Angle | int") -> "Angle":
        return value if isinstance(value, Angle) else cls(value)

    def __add__(self, other: "Angle | int") -> "Angle":
        return Angle(self.k + Angle.of(other).k)

    __radd__ = __add__

    def __sub__(self, other: "Angle | int") -> "Angle":
        return Angle(self.k - Angle.of(other).k)

    def __neg__(self) -> "Angle":
        return Angle(-self.k)

    def __mul__(self, factor: int) -> "Angle":
        if isinstance(factor, bool) or not isinstance(factor, int):
            return NotImplemented
        return Angle(self.k * factor)

    __rmul__ = __mul__

    def plus_pi(self, times: int = 1) -> "Angle":
        return Angle(self.k + HALF_TURN * times)

    def signed(self, flip: int) -> "Angle":
        """``(-1)^flip * self``."""

        return -self if flip & 1 else self

    @property
    def radians(self) -> float:
        return math.pi * self.k / HALF_TURN

    @property
    def phase(self) -> complex:
        return _PHASES[self.k]

    @property
    def in_half_turn(self) -> bool:
        return self.k < HALF_TURN

    def __int__(self) -> int:
        return self.k

    def __str__(self) -> str:
        return f"{self.k}π/8"


ZERO = Angle(0)
PI = Angle(HALF_TURN)

A: tuple[Angle, ...] = tuple(Angle(k) for k in range(HALF_TURN))
FULL_TURN: tuple[Angle, ...] = tuple(Angle(k) for k in range(ANGLE_MODULUS))


def angle_sum(angles: Iterable[Angle | int]) -> Angle:
    return Angle(sum(Angle.of(angle).k for angle in angles))


def parity(bits: Iterable[int]) -> int:
    result = 0
    for bit in bits:
        result ^= int(bit) & 1
    return result
