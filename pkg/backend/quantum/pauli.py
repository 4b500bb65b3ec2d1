"""Pauli words over labelled qubits with exactly tracked phases."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exceptions import PauliError

LETTERS = ("I", "X", "Y", "Z")

PAULI_MATRICES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_PHASE_VALUES = (1, 1j, -1, -1j)
_PHASE_NAMES = ("+", "+i", "-", "-i")

# (a, b) -> (power of i, letter) with a*b = i^power * letter
_PRODUCTS: dict[tuple[str, str], tuple[int, str]] = {}
for _letter in LETTERS:
    _PRODUCTS[("I", _letter)] = (0, _letter)
    _PRODUCTS[(_letter, "I")] = (0, _letter)
    _PRODUCTS[(_letter, _letter)] = (0, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCTS[(_a, _b)] = (1, _c)
    _PRODUCTS[(_b, _a)] = (3, _c)

_NUMBER = re.compile(r"(\d+)")


def natural_key(label: str) -> tuple:
    """Sort key that orders ``"2"`` before ``"10"`` and ``"1.2"`` before ``"1.10"``."""

    return tuple(
        (0, int(part)) if part.isdigit() else (1, part)
        for part in _NUMBER.split(str(label))
        if part
    )


def letter_product(a: str, b: str) -> tuple[int, str]:
    try:
        return _PRODUCTS[(a, b)]
    except KeyError as exc:
        raise PauliError(f"Неизвестная буква Паули: {a!r} или {b!r}.") from exc


@dataclass(frozen=True, slots=True)
class PauliString:
    """``i^phase`` times a tensor product of single-qubit Paulis.

    Identity letters are not stored, so two strings that differ only by explicit
    ``I`` entries compare equal.
    """

    letters: tuple[tuple[str, str], ...] = ()
    phase: int = 0
    _lookup: dict[str, str] = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        cleaned: dict[str, str] = {}
        for label, letter in self.letters:
            letter = str(letter).upper()
            if letter not in LETTERS:
                raise PauliError(f"Недопустимая буква Паули {letter!r} на кубите {label!r}.")
            if label in cleaned:
                raise PauliError(f"Кубит {label!r} указан в слове Паули дважды.")
            if letter != "I":
                cleaned[str(label)] = letter
        ordered = tuple(sorted(cleaned.items(), key=lambda item: natural_key(item[0])))
        object.__setattr__(self, "letters", ordered)
        object.__setattr__(self, "phase", int(self.phase) % 4)
        object.__setattr__(self, "_lookup", dict(ordered))

    # --- constructors ---

    @classmethod
    def identity(cls) -> "PauliString":
        return cls()

    @classmethod
    def from_mapping(cls, letters: Mapping[str, str], phase: int = 0) -> "PauliString":
        return cls(tuple(letters.items()), phase)

    @classmethod
    def from_word(cls, word: str, labels: Sequence[str], phase: int = 0) -> "PauliString":
        if len(word) != len(labels):
            raise PauliError(
                f"Длина слова {word!r} не совпадает с числом кубитов ({len(labels)})."
            )
        return cls(tuple(zip(labels, word)), phase)

    @classmethod
    def single(cls, letter: str, label: str) -> "PauliString":
        return cls(((label, letter),))

    # --- algebra ---

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        power = self.phase + other.phase
        result = dict(self._lookup)
        for label, letter in other.letters:
            extra, product = letter_product(result.get(label, "I"), letter)
            power += extra
            result[label] = product
        return PauliString(tuple(result.items()), power)

    def __neg__(self) -> "PauliString":
        return PauliString(self.letters, self.phase + 2)

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def letter(self, label: str) -> str:
        return self._lookup.get(label, "I")

    def count(self, letter: str) -> int:
        return sum(1 for _, value in self.letters if value == letter)

    def commutes_with(self, other: "PauliString") -> bool:
        clashes = sum(
            1
            for label, letter in other.letters
            if self.letter(label) not in ("I", letter)
        )
        return clashes % 2 == 0

    def restrict(self, labels: Iterable[str]) -> "PauliString":
        """Letters on ``labels`` only, with phase +1."""

        keep = set(labels)
        return PauliString(tuple((label, letter) for label, letter in self.letters if label in keep))

    def without_phase(self) -> "PauliString":
        return PauliString(self.letters)

    # --- views ---

    @property
    def sign(self) -> complex:
        return _PHASE_VALUES[self.phase]

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.letters)

    @property
    def weight(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return not self.letters

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def word(self, labels: Sequence[str]) -> str:
        unknown = set(self.support) - set(labels)
        if unknown:
            raise PauliError(f"Кубиты {sorted(unknown)} отсутствуют в списке меток.")
        return "".join(self.letter(label) for label in labels)

    def matrix(self, labels: Sequence[str]) -> np.ndarray:
        word = self.word(labels)
        if not word:
            return np.array([[self.sign]], dtype=complex)
        return self.sign * reduce(np.kron, (PAULI_MATRICES[letter] for letter in word))

    def as_dict(self) -> dict:
        return {"phase": _PHASE_NAMES[self.phase], "letters": dict(self.letters)}

    def __str__(self) -> str:
        body = " ".join(f"{letter}{label}" for label, letter in self.letters) or "I"
        return f"{_PHASE_NAMES[self.phase]}{body}"


def pauli_product(strings: Iterable[PauliString]) -> PauliString:
    return reduce(lambda left, right: left * right, strings, PauliString())


def all_pauli_strings(labels: Sequence[str], max_weight: int | None = None) -> Iterator[PauliString]:
    """Every phase-free Pauli string over ``labels`` up to ``max_weight`` letters."""

    limit = len(labels) if max_weight is None else min(max_weight, len(labels))
    for weight in range(limit + 1):
        for support in itertools.combinations(labels, weight):
            for word in itertools.product("XYZ", repeat=weight):
                yield PauliString(tuple(zip(support, word)))
