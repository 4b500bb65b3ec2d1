"""Exact effect of a Pauli attack on trap-based verification and on stabilizer tests."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from protocols.stabilizer import honest_server, ps_reject_probability, rm_prime_reject_probability, rm_reject_probability, stab_to_ps
from protocols.trap_rm import TrapRmEvaluator, TrapRmInstance
from quantum.conf import simulation_limits
from quantum.graphstate import Graph, graph_state
from quantum.pauli import PauliString
from quantum.qstate import apply_pauli

from .attacks import AttackStage, as_before_entangling, in_class_E
from .bounds import bound_expression
from .exceptions import AttackError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class FailReport:
    """Exact statistics of one attack next to the value of the trap bound."""

    attack: str
    stage: AttackStage
    p_accept: float
    p_fail: float
    bound_value: float
    in_e: bool

    def __post_init__(self) -> None:
        tolerance = simulation_limits().tolerance
        if not -tolerance <= self.p_fail <= self.p_accept + tolerance <= 1 + 2 * tolerance:
            raise AttackError(
                f"Нарушено 0 ≤ p_fail ≤ p_accept ≤ 1 для атаки {self.attack}: {self.p_fail}, {self.p_accept}."
            )
        object.__setattr__(self, "p_accept", min(1.0, max(0.0, self.p_accept)))
        object.__setattr__(self, "p_fail", min(self.p_accept, max(0.0, self.p_fail)))

    @property
    def holds_bound(self) -> bool:
        return self.p_fail <= self.bound_value + simulation_limits().tolerance

    def as_dict(self) -> dict:
        return {
            "attack": self.attack,
            "stage": self.stage.value,
            "p_accept": self.p_accept,
            "p_fail": self.p_fail,
            "bound": self.bound_value,
            "in_e": self.in_e,
        }


def simulate_attack(
    instance: TrapRmInstance,
    op: PauliString,
    stage: AttackStage | str = AttackStage.BEFORE_ENTANGLING,
    evaluator: TrapRmEvaluator | None = None,
    input_vector: Sequence[complex] | None = None,
) -> FailReport:
    """Exact acceptance and failure probability of ``op`` applied at ``stage``.

    The bound is evaluated for the equivalent attack before the CZ layer,
    which is also what decides membership in class E.
    """

    stage = AttackStage.parse(stage)
    evaluator = evaluator or TrapRmEvaluator(instance, input_vector)
    outcome = evaluator.evaluate(op, before_entangling=stage is AttackStage.BEFORE_ENTANGLING)
    equivalent = as_before_entangling(instance.dtg.graph, op, stage)
    report = FailReport(
        attack=str(op.without_phase()),
        stage=stage,
        p_accept=outcome.p_accept,
        p_fail=outcome.p_fail,
        bound_value=bound_expression(instance, equivalent),
        in_e=in_class_E(equivalent, instance.input_row),
    )
    if not report.holds_bound:
        logger.error("Атака %s превышает оценку: p_fail = %.6f > %.6f", report.attack, report.p_fail, report.bound_value)
    return report


class StabTestKind(str, Enum):
    RECEIVE_AND_MEASURE = "rm"
    REDUCED = "rm_prime"
    PREPARE_AND_SEND = "ps"


def detection_probability(kind: StabTestKind | str, graph: Graph, stab: PauliString, attack: PauliString) -> float:
    """Rejection probability of testing ``stab`` when the server applies ``attack`` to the entangled state."""

    try:
        kind = StabTestKind(kind)
    except ValueError:
        raise AttackError(f"Неизвестный вид теста {kind!r}.") from None
    unknown = set(attack.support) - set(graph.vertices)
    if unknown:
        raise AttackError(f"Атака затрагивает вершины вне графа: {sorted(unknown)}.")
    if kind is StabTestKind.RECEIVE_AND_MEASURE:
        return rm_reject_probability(graph, stab, apply_pauli(graph_state(graph), attack))
    action = attack.matrix(graph.vertices) @ honest_server(graph)
    test = stab_to_ps(graph, stab)
    if kind is StabTestKind.PREPARE_AND_SEND:
        return ps_reject_probability(test, action)
    return rm_prime_reject_probability(test, action)
