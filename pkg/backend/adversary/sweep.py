"""Exhaustive sweeps of Pauli attacks against trap-based verification."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from protocols.trap_rm import TrapRmEvaluator, TrapRmInstance
from quantum.conf import simulation_limits
from quantum.pauli import PauliString, all_pauli_strings

from .attacks import AttackStage, as_before_entangling, enumerate_E, in_class_E
from .exceptions import AttackError
from .simulate import FailReport, simulate_attack

logger = logging.getLogger(__name__)

EIGHT_NINTHS = 8 / 9


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[FailReport, ...]
    max_weight: int

    @property
    def max_p_fail(self) -> float:
        return max((row.p_fail for row in self.rows), default=0.0)

    @property
    def max_bound(self) -> float:
        return max((row.bound_value for row in self.rows if row.in_e), default=0.0)

    @property
    def worst(self) -> FailReport | None:
        """The attack in class E with the largest bound value."""

        candidates = [row for row in self.rows if row.in_e]
        return max(candidates, key=lambda row: (row.bound_value, row.p_fail)) if candidates else None

    @property
    def violations(self) -> tuple[FailReport, ...]:
        return tuple(row for row in self.rows if not row.holds_bound)

    def within(self, ceiling: float = EIGHT_NINTHS) -> bool:
        """Every exact failure probability is under ``ceiling`` and under its own bound.

        ``max_bound`` is reported but not held to ``ceiling``: with traps on
        primary copies only, an attack that misses every trap keeps the full
        overlap product of 1 while failing in few colourings.
        """

        tolerance = simulation_limits().tolerance
        return self.max_p_fail <= ceiling + tolerance and not self.violations

    def as_records(self) -> list[dict]:
        return [row.as_dict() for row in self.rows]

    def summary(self) -> dict:
        worst = self.worst
        return {
            "attacks": len(self.rows),
            "max_weight": self.max_weight,
            "max_p_fail": self.max_p_fail,
            "max_bound": self.max_bound,
            "worst": worst.as_dict() if worst else None,
            "violations": len(self.violations),
            "within_8_9": self.within(),
        }


def _candidates(instance: TrapRmInstance, stage: AttackStage, max_weight: int, only_e: bool) -> Iterable[PauliString]:
    labels = instance.dtg.vertices
    if stage is AttackStage.BEFORE_ENTANGLING and only_e:
        return enumerate_E(labels, instance.input_row, max_weight)
    attacks = (op for op in all_pauli_strings(labels, max_weight) if not op.is_identity)
    if not only_e:
        return attacks
    graph = instance.dtg.graph
    return (op for op in attacks if in_class_E(as_before_entangling(graph, op, stage), instance.input_row))


def sweep_attacks(
    instance: TrapRmInstance,
    max_weight: int | None = None,
    stages: Sequence[AttackStage | str] = (AttackStage.BEFORE_ENTANGLING,),
    only_e: bool = True,
    input_vector: Sequence[complex] | None = None,
) -> SweepResult:
    """Evaluate every attack up to ``max_weight`` letters at every stage.

    Attacks at later stages are evaluated through their equivalent before the
    CZ layer, so an attack reachable from two stages is evaluated once.  Weight
    zero evaluates the identity alone.
    """

    if max_weight is None:
        max_weight = simulation_limits().max_sweep_weight
    if max_weight < 0:
        raise AttackError(f"Вес атаки не может быть отрицательным: {max_weight}.")
    if max_weight > simulation_limits().max_sweep_weight:
        logger.warning("Вес перебора %d больше обычного предела %d", max_weight, simulation_limits().max_sweep_weight)
    evaluator = TrapRmEvaluator(instance, input_vector)
    if max_weight == 0:
        identity = simulate_attack(instance, PauliString(), AttackStage.BEFORE_ENTANGLING, evaluator)
        return SweepResult((identity,), 0)
    graph = instance.dtg.graph
    cache: dict[PauliString, FailReport] = {}
    rows = []
    for stage in map(AttackStage.parse, stages):
        for op in _candidates(instance, stage, max_weight, only_e):
            equivalent = as_before_entangling(graph, op, stage)
            if equivalent not in cache:
                cache[equivalent] = simulate_attack(instance, equivalent, AttackStage.BEFORE_ENTANGLING, evaluator)
            known = cache[equivalent]
            rows.append(
                FailReport(str(op), stage, known.p_accept, known.p_fail, known.bound_value, known.in_e)
            )
    result = SweepResult(tuple(rows), max_weight)
    logger.info(
        "Перебор атак: %d строк, max p_fail = %.6f, max оценки = %.6f",
        len(rows),
        result.max_p_fail,
        result.max_bound,
    )
    return result
