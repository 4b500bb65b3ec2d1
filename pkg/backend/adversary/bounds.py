"""Trap overlaps and the failure bound of trap-based verification.

A trap ``t`` survives a Pauli ``sigma`` with probability equal to the average
of ``<psi_t|sigma|psi_t>^2`` over its hidden flip and, for traps of the input
row, its hidden rotation.  Averaging the product over all traps and trap
placements bounds the failure probability of any attack in class E.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from protocols.trap_rm import TrapRmInstance
from quantum.angles import A, PI, ZERO
from quantum.pauli import PAULI_MATRICES, PauliString
from quantum.qstate import plus_vector

from .exceptions import AttackError

BITS = (0, 1)


def trap_states(input_trap: bool) -> tuple[tuple[float, np.ndarray], ...]:
    """Weighted states a trap can hold: ``|+^theta>`` for the input row, ``|±>`` otherwise."""

    thetas = A if input_trap else (ZERO,)
    share = 1 / (len(thetas) * len(BITS))
    return tuple((share, plus_vector(theta + PI * flip)) for theta, flip in itertools.product(thetas, BITS))


def _expectation(vector: np.ndarray, letter: str) -> float:
    return float(np.vdot(vector, PAULI_MATRICES[letter] @ vector).real)


def _check_letter(letter: str) -> str:
    letter = str(letter).upper()
    if letter not in PAULI_MATRICES:
        raise AttackError(f"Недопустимая буква Паули {letter!r}.")
    return letter


@lru_cache(maxsize=None)
def trap_overlap(letter: str, input_trap: bool = False) -> float:
    """Averaged squared overlap of one trap with the Pauli ``letter``.

    Input traps give 1/2 for ``X`` and ``Y``, not 0: ``<+^theta|X|+^theta>^2`` is
    ``cos^2 theta`` and averages to 1/2 over A.  Only cross terms of distinct
    letters vanish under the ``theta`` average; ``Z`` still gives 0.
    """

    letter = _check_letter(letter)
    return sum(weight * _expectation(vector, letter) ** 2 for weight, vector in trap_states(input_trap))


def cross_overlap(first: str, second: str, input_trap: bool = False) -> float:
    """Averaged product of the two overlaps; vanishes unless the letters coincide."""

    first, second = _check_letter(first), _check_letter(second)
    return sum(
        weight * _expectation(vector, first) * _expectation(vector, second)
        for weight, vector in trap_states(input_trap)
    )


def bound_expression(instance: TrapRmInstance, op: PauliString) -> float:
    """Average over trap placements of the product of trap overlaps of ``op``.

    ``op`` must act before the CZ layer.
    """

    unknown = set(op.support) - set(instance.dtg.vertices)
    if unknown:
        raise AttackError(f"Атака затрагивает кубиты вне DT(G): {sorted(unknown)}.")
    total = 0.0
    for coloring, probability in instance.colorings():
        product = 1.0
        for label in coloring.traps:
            product *= trap_overlap(op.letter(label), instance.input_trap(coloring, label))
            if product == 0:
                break
        total += probability * product
    return total
