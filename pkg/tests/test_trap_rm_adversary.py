from __future__ import annotations

import numpy as np
import pytest

from adversary.attacks import AttackStage, PauliAttack, as_before_entangling, enumerate_E, in_class_E
from adversary.bounds import bound_expression, cross_overlap, trap_overlap
from adversary.exceptions import AttackError, UnknownStageError
from adversary.simulate import FailReport, detection_probability, simulate_attack
from adversary.sweep import EIGHT_NINTHS, sweep_attacks
from composable.execution import run_system
from protocols.exceptions import PreconditionError
from protocols.trap_rm import TrapRmEvaluator, TrapRmInstance, protocol1_trap_rm, trap_rm_ideal
from quantum.angles import Angle
from quantum.graphstate import NodeRole, coloring_from_roles, path_graph
from quantum.mbqc import path_pattern
from quantum.pauli import PauliString
from quantum.qstate import basis_state

C, T, D = NodeRole.COMPUTATION, NodeRole.TRAP, NodeRole.DUMMY
P2 = path_graph(2)
X1Z2 = PauliString.from_mapping({"1": "X", "2": "Z"})


@pytest.fixture
def vertex_instance():
    return TrapRmInstance(path_pattern([]))


@pytest.fixture
def edge_instance():
    return TrapRmInstance(path_pattern([Angle(3)]))


def _register(*amplitudes) -> np.ndarray:
    vector = np.asarray(amplitudes, dtype=complex)
    return np.outer(vector, vector.conj())


# --- instance ---


def test_instance_colorings(vertex_instance):
    assert vertex_instance.input_row == ("1:0", "1:1", "1:2")
    assert len(vertex_instance.colorings()) == 6
    restricted = TrapRmInstance(path_pattern([]), coloring_keys=("CTD",))
    ((coloring, probability),) = restricted.colorings()
    assert coloring.key() == "CTD"
    assert probability == pytest.approx(1.0)
    assert restricted.input_trap(coloring, "1:1")
    with pytest.raises(PreconditionError):
        TrapRmInstance(path_pattern([]), coloring_keys=("XYZ",))


def test_compiled_pattern_runs_on_computation_nodes(edge_instance):
    coloring = coloring_from_roles(edge_instance.dtg, {"1": (C, T, D), "2": (D, C, T)}, ["1"])
    compiled = edge_instance.compiled(coloring)
    assert compiled.order == ("1:0", "1:0~2:1")
    assert compiled.outputs == ("2:1",)
    assert compiled.angles["1:0"] == Angle(3)
    assert compiled.angles["1:0~2:1"] == Angle(0)


def test_ideal_needs_quantum_input():
    with pytest.raises(PreconditionError):
        trap_rm_ideal(TrapRmInstance(path_pattern([]), quantum_input=False))
    assert set(trap_rm_ideal(TrapRmInstance(path_pattern([]))).interface_names) == {"C"}


# --- exact evaluation ---


def test_honest_server_is_always_accepted(edge_instance):
    outcome = TrapRmEvaluator(edge_instance).evaluate()
    assert outcome.p_accept == pytest.approx(1.0)
    assert outcome.p_fail == pytest.approx(0.0, abs=1e-9)
    assert outcome.p_abort == pytest.approx(0.0, abs=1e-9)
    assert len(outcome.per_coloring) == 36


def test_phase_flip_on_added_vertex_never_meets_a_trap(edge_instance):
    attack = PauliString.single("Z", "1:0~2:0")
    outcome = TrapRmEvaluator(edge_instance).evaluate(attack, before_entangling=True)
    assert outcome.p_accept == pytest.approx(1.0)
    assert bound_expression(edge_instance, attack) == pytest.approx(1.0)
    # only the colouring that makes it a computation dot can go wrong
    assert outcome.p_fail <= 1 / 9 + 1e-9


def test_phase_flip_after_entangling_is_caught_on_the_trap_copy(edge_instance):
    report = simulate_attack(edge_instance, PauliString.single("Z", "2:1"), "after_entangling")
    assert report.p_accept == pytest.approx(2 / 3)
    assert report.bound_value == pytest.approx(2 / 3)
    assert report.in_e
    assert report.holds_bound


def test_bit_flip_after_entangling_is_absorbed_by_dummy_parities(edge_instance):
    report = simulate_attack(edge_instance, PauliString.single("X", "2:1"), "after_entangling")
    assert report.p_accept == pytest.approx(1.0)
    assert report.bound_value == pytest.approx(1.0)
    assert report.in_e


@pytest.mark.parametrize("letter", ["I", "X"])
def test_bit_flip_on_output_computation_copy_does_no_harm(edge_instance, letter):
    roles = {"1": (D, T, C), "2": (C, D, T)}
    coloring = coloring_from_roles(edge_instance.dtg, roles, ["1"])
    instance = TrapRmInstance(edge_instance.pattern, coloring_keys=(coloring.key(),))
    outcome = TrapRmEvaluator(instance).evaluate(PauliString.single(letter, "2:0"), before_entangling=True)
    assert outcome.p_accept == pytest.approx(1.0)
    assert outcome.p_fail == pytest.approx(0.0, abs=1e-9)


def test_bit_flip_on_rotated_input_trap(vertex_instance):
    outcome = TrapRmEvaluator(vertex_instance).evaluate(PauliString.single("X", "1:1"), before_entangling=True)
    assert outcome.p_accept == pytest.approx(5 / 6)
    assert bound_expression(vertex_instance, PauliString.single("X", "1:1")) == pytest.approx(5 / 6)


def test_attack_outside_the_register(vertex_instance):
    with pytest.raises(PreconditionError):
        TrapRmEvaluator(vertex_instance).evaluate(PauliString.single("X", "9:0"))
    with pytest.raises(AttackError):
        bound_expression(vertex_instance, PauliString.single("X", "9:0"))


# --- engine runs ---


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_honest_run_returns_the_input(seed, vertex_instance):
    result = run_system(
        protocol1_trap_rm(vertex_instance), quantum_inputs={("C", "psi"): basis_state(["1"], [1])}, seed=seed
    )
    assert result.outputs[("C", "abort")] == 0
    assert result.audit["traps"].passed
    expected = np.kron([1, 0], vertex_instance.expected_output([0, 1]))
    assert np.allclose(result.state(("C", "rho")).matrix, _register(*expected))


@pytest.mark.parametrize("seed", [0, 5])
def test_phase_flip_on_trap_aborts(seed):
    instance = TrapRmInstance(path_pattern([]), coloring_keys=("CTD",))
    attack = PauliAttack(PauliString.single("Z", "1:1"))
    result = run_system(
        protocol1_trap_rm(instance, deviation=attack), quantum_inputs={("C", "psi"): basis_state(["1"], [1])}, seed=seed
    )
    assert result.outputs[("C", "abort")] == 1
    assert not result.audit["traps"].passed
    assert np.allclose(result.state(("C", "rho")).matrix, _register(0, 0, 1, 0))


@pytest.mark.slow
def test_honest_run_on_single_edge(edge_instance):
    result = run_system(
        protocol1_trap_rm(edge_instance), quantum_inputs={("C", "psi"): basis_state(["1"], [0])}, seed=8
    )
    assert result.outputs[("C", "abort")] == 0
    assert result.audit["traps"].as_dict()["coloring"] in {coloring.key() for coloring, _ in edge_instance.colorings()}


# --- attacks ---


def test_stage_parsing():
    assert AttackStage.parse("per_node_before_send") is AttackStage.BEFORE_SEND
    with pytest.raises(UnknownStageError) as exc:
        AttackStage.parse("midway")
    assert exc.value.stage == "midway"
    attack = PauliAttack(PauliString.single("X", "1"), "after_entangling")
    assert attack.stage is AttackStage.AFTER_ENTANGLING
    assert attack.describe() == "after_entangling:X1"


def test_later_stages_move_before_the_cz_layer():
    assert as_before_entangling(P2, PauliString.single("X", "1"), "after_entangling") == X1Z2
    assert as_before_entangling(P2, PauliString.single("Z", "1"), "per_node_before_send") == PauliString.single("Z", "1")
    assert as_before_entangling(P2, PauliString.single("X", "1"), "before_entangling") == PauliString.single("X", "1")


def test_class_E_membership():
    assert in_class_E(PauliString.single("Z", "b"), ["a"])
    assert in_class_E(PauliString.single("X", "a"), ["a"])
    assert not in_class_E(PauliString.single("X", "b"), ["a"])
    attacks = enumerate_E(["a", "b"], ["a"], 1)
    assert len(attacks) == 5
    assert PauliString.single("X", "b") not in attacks
    with pytest.raises(AttackError):
        enumerate_E(["a"], ["a"], 0)
    with pytest.raises(AttackError):
        enumerate_E(["a"], ["z"], 1)


@pytest.mark.parametrize(
    ("letter", "input_trap", "expected"),
    [("X", False, 1.0), ("Z", False, 0.0), ("X", True, 0.5), ("Y", True, 0.5), ("I", True, 1.0), ("I", False, 1.0)],
)
def test_trap_overlap(letter, input_trap, expected):
    assert trap_overlap(letter, input_trap) == pytest.approx(expected)


def test_cross_overlap_vanishes_for_distinct_letters():
    assert cross_overlap("X", "Z") == pytest.approx(0.0)
    assert cross_overlap("x", "X") == pytest.approx(1.0)
    with pytest.raises(AttackError):
        trap_overlap("Q")


def test_fail_report_rejects_impossible_statistics():
    with pytest.raises(AttackError):
        FailReport("Z1:0", AttackStage.BEFORE_ENTANGLING, p_accept=0.5, p_fail=0.7, bound_value=1.0, in_e=True)
    report = FailReport("Z1:0", AttackStage.BEFORE_ENTANGLING, 0.5, 0.25, 0.75, True)
    assert report.as_dict()["stage"] == "before_entangling"


# --- sweeps ---


def test_weight_zero_sweep_is_the_honest_run(vertex_instance):
    result = sweep_attacks(vertex_instance, 0)
    assert len(result.rows) == 1
    assert result.max_p_fail == pytest.approx(0.0, abs=1e-9)
    assert result.within()
    assert result.summary()["attacks"] == 1
    with pytest.raises(AttackError):
        sweep_attacks(vertex_instance, -1)


def test_weight_one_sweep_stays_below_eight_ninths(vertex_instance):
    result = sweep_attacks(vertex_instance, 1)
    assert len(result.rows) == 9
    assert result.violations == ()
    assert result.max_bound == pytest.approx(5 / 6)
    assert result.max_bound < EIGHT_NINTHS
    assert result.worst.bound_value == pytest.approx(5 / 6)
    summary = result.summary()
    assert summary["within_8_9"] is True
    assert len(result.as_records()) == summary["attacks"]


@pytest.mark.slow
def test_weight_two_sweep_on_single_edge(edge_instance):
    result = sweep_attacks(edge_instance, 2)
    assert result.violations == ()
    assert result.max_p_fail <= EIGHT_NINTHS + 1e-10
    assert result.max_bound == pytest.approx(1.0)
    assert result.within()


def test_sweep_over_later_stages_reuses_equivalent_attacks(vertex_instance):
    result = sweep_attacks(vertex_instance, 1, stages=("before_entangling", "after_entangling"), only_e=False)
    assert len(result.rows) == 18
    assert {row.stage for row in result.rows} == {AttackStage.BEFORE_ENTANGLING, AttackStage.AFTER_ENTANGLING}


# --- stabilizer detection ---


@pytest.mark.parametrize("kind", ["rm", "rm_prime", "ps"])
def test_detection_of_phase_flip(kind):
    assert detection_probability(kind, P2, X1Z2, PauliString.single("Z", "1")) == pytest.approx(1.0)
    assert detection_probability(kind, P2, X1Z2, PauliString.single("Z", "2")) == pytest.approx(0.0, abs=1e-9)


def test_detection_arguments_are_checked():
    with pytest.raises(AttackError):
        detection_probability("trap", P2, X1Z2, PauliString.single("Z", "1"))
    with pytest.raises(AttackError):
        detection_probability("rm", P2, X1Z2, PauliString.single("Z", "7"))
