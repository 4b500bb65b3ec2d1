"""Pauli deviations of the server and the class of attacks that can hurt the output."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from protocols.network import PsLayout, ServerDeviation
from quantum.graphstate import Graph
from quantum.pauli import PAULI_MATRICES, PauliString, all_pauli_strings

from .exceptions import AttackError, UnknownStageError

logger = logging.getLogger(__name__)


class AttackStage(str, Enum):
    BEFORE_ENTANGLING = "before_entangling"
    AFTER_ENTANGLING = "after_entangling"
    BEFORE_SEND = "per_node_before_send"

    @classmethod
    def parse(cls, value: "AttackStage | str") -> "AttackStage":
        try:
            return cls(value)
        except ValueError:
            raise UnknownStageError(str(value)) from None


@dataclass(frozen=True)
class PauliAttack(ServerDeviation):
    """Apply ``op`` to the server's qubits at ``stage``; keys of ``op`` are graph vertices."""

    op: PauliString
    stage: AttackStage = AttackStage.BEFORE_ENTANGLING

    def __post_init__(self) -> None:
        object.__setattr__(self, "stage", AttackStage.parse(self.stage))

    def _apply(self, ctx, labels: Mapping[str, str]) -> None:
        missing = set(self.op.support) - set(labels)
        if missing:
            raise AttackError(f"Атака затрагивает кубиты, которых нет у сервера: {sorted(missing)}.")
        for vertex, letter in self.op.letters:
            ctx.apply(PAULI_MATRICES[letter], labels[vertex])

    def before_entangling(self, ctx, layout: PsLayout | None, labels: dict[str, str]) -> None:
        if self.stage is AttackStage.BEFORE_ENTANGLING:
            self._apply(ctx, labels)

    def after_entangling(self, ctx, layout: PsLayout | None, labels: dict[str, str]) -> None:
        if self.stage is AttackStage.AFTER_ENTANGLING:
            self._apply(ctx, labels)

    def before_send(self, ctx, vertex: str, label: str) -> None:
        if self.stage is AttackStage.BEFORE_SEND and self.op.letter(vertex) != "I":
            ctx.apply(PAULI_MATRICES[self.op.letter(vertex)], label)

    def describe(self) -> str:
        return f"{self.stage.value}:{self.op.without_phase()}"


def as_before_entangling(graph: Graph, op: PauliString, stage: AttackStage | str) -> PauliString:
    """The Pauli acting before the CZ layer that is equivalent to ``op`` at ``stage``, up to phase.

    Between the CZ layer and the client's measurements every stage acts on
    the same state, so ``E X_v E = X_v Z_{N(v)}`` covers both later stages.
    """

    if AttackStage.parse(stage) is AttackStage.BEFORE_ENTANGLING:
        return op.without_phase()
    result = PauliString()
    for vertex, letter in op.letters:
        result = result * PauliString.single(letter, vertex)
        if letter in ("X", "Y"):
            for neighbour in graph.neighbors(vertex):
                result = result * PauliString.single("Z", neighbour)
    return result.without_phase()


def in_class_E(op: PauliString, input_labels: Iterable[str]) -> bool:
    """At least one ``Y`` or ``Z`` anywhere, or an ``X`` on an input register."""

    inputs = set(input_labels)
    return any(letter in ("Y", "Z") or (letter == "X" and label in inputs) for label, letter in op.letters)


def enumerate_E(labels: Sequence[str], input_labels: Iterable[str], max_weight: int) -> list[PauliString]:
    if max_weight < 1:
        raise AttackError(f"Вес атаки должен быть не меньше 1, получено {max_weight}.")
    inputs = tuple(input_labels)
    unknown = set(inputs) - set(labels)
    if unknown:
        raise AttackError(f"Входные регистры {sorted(unknown)} отсутствуют среди меток.")
    attacks = [op for op in all_pauli_strings(labels, max_weight) if not op.is_identity and in_class_E(op, inputs)]
    logger.debug("Класс E: %d атак веса не более %d на %d кубитах", len(attacks), max_weight, len(labels))
    return attacks
