from __future__ import annotations

import numpy as np
import pytest

from composable.channels import Verdict, view_distance
from composable.execution import run_system
from composable.systems import compose
from protocols.exceptions import PreconditionError
from protocols.network import OutcomeFlip, PsLayout, chained_layouts, rm_network, rm_server
from protocols.stab_ps import (
    BOTTOM,
    RoundKind,
    StabRoundPlan,
    all_round_plans,
    expected_output,
    protocol3_stab_ps,
    round_sessions,
    single_round_system,
)
from protocols.ubqc import NodeSecret, blind_rm_client, rm_send_order, ubqc_layout, ubqc_ps_system
from quantum.angles import Angle
from quantum.graphstate import cycle_graph, path_graph
from quantum.mbqc import output_state, path_pattern
from quantum.qstate import basis_state

P3 = path_graph(3)
T1, T2, COMP = RoundKind.FIRST_TEST, RoundKind.SECOND_TEST, RoundKind.COMPUTATION


def _density(state) -> np.ndarray:
    vector = state.vector
    return np.outer(vector, vector.conj())


# --- session layout ---


def test_layout_rounds():
    layout = PsLayout(P3, ("1", "2"), ("3",), prefix="r1.", start=5)
    assert layout.message("delta", "2") == "r1.delta_2"
    assert (layout.prepare_round, layout.entangle_round) == (5, 6)
    assert (layout.delta_round("1"), layout.measure_round("1")) == (7, 8)
    assert layout.delta_round("2") == 9
    assert (layout.return_round, layout.finish_round, layout.end) == (11, 12, 13)


def test_layout_must_cover_every_vertex_once():
    with pytest.raises(PreconditionError):
        PsLayout(P3, ("1", "2"))
    with pytest.raises(PreconditionError):
        PsLayout(P3, ("1", "2", "3"), ("3",))


def test_chained_layouts_follow_each_other():
    first, second = chained_layouts([(P3, P3.vertices, ())] * 2)
    assert (first.prefix, second.prefix) == ("r1.", "r2.")
    assert second.start == first.end


def test_node_secret_hides_angle_and_outcome():
    secret = NodeSecret(theta=Angle(3), flip=1, r=1)
    assert secret.delta(Angle(2)) == Angle(13)
    assert secret.decode(0) == 0
    assert NodeSecret(r=1).decode(0) == 1


# --- blind delegation ---


@pytest.mark.parametrize("seed", [0, 4, 11])
def test_ps_delegation_returns_the_computed_state(seed):
    pattern = path_pattern([Angle(3)])
    source = basis_state(["1"], [1])
    result = run_system(ubqc_ps_system(pattern), quantum_inputs={("C", "psi"): source}, seed=seed)
    assert np.allclose(result.state(("C", "rho")).matrix, _density(output_state(pattern, source)))


def test_ps_delegation_with_measured_outputs():
    system = ubqc_ps_system(path_pattern([0, 0]), measure_outputs=True, quantum_input=False)
    assert system.name == "ubqc"
    assert {run_system(system, seed=seed).outputs[("C", "o")] for seed in range(5)} == {(0,)}


def test_layout_of_measured_outputs():
    pattern = path_pattern([0, 0])
    assert ubqc_layout(pattern).returned == ("3",)
    assert ubqc_layout(pattern, measure_outputs=True).measured == ("1", "2", "3")


def test_rm_delegation_measures_as_the_qubits_arrive():
    pattern = path_pattern([0, 0])
    order = rm_send_order(pattern)
    network = rm_network(order)
    system = compose(
        [blind_rm_client(network, pattern, measure_outputs=True), rm_server(network, pattern.graph, order)],
        network,
    )
    assert {run_system(system, seed=seed).outputs[("C", "o")] for seed in range(4)} == {(0,)}


@pytest.mark.slow
def test_server_view_does_not_depend_on_the_angles():
    first = ubqc_ps_system(path_pattern([Angle(3), Angle(5)]), with_server=False)
    second = ubqc_ps_system(path_pattern([Angle(0), Angle(6)]), with_server=False)
    assert set(first.interface_names) == {"C", "net.S"}
    report = view_distance(first, second, ["net.S"])
    assert report.epsilon == pytest.approx(0.0, abs=1e-10)
    assert report.verdict is Verdict.PASS


# --- round plans ---


def test_round_plan_counts():
    assert len(all_round_plans(1)) == 6
    assert len(all_round_plans(2)) == 30
    for k in (0, 4):
        with pytest.raises(PreconditionError):
            all_round_plans(k)


def test_round_plan_shape():
    plan = StabRoundPlan((T2, COMP, T1))
    assert plan.k == 1
    assert plan.label == "T2,C,T1"
    assert plan.rounds(T1) == (3,)
    assert plan.computation_round == 2
    with pytest.raises(PreconditionError):
        StabRoundPlan((T1, T1, COMP))
    with pytest.raises(PreconditionError):
        StabRoundPlan((T1, COMP))


def test_expected_output_must_be_deterministic():
    assert expected_output(path_pattern([0, 0]), {"1": 0}) == (0,)
    assert expected_output(path_pattern([0, 0]), {"1": 1}) == (1,)
    with pytest.raises(PreconditionError):
        expected_output(path_pattern([0]), {"1": 0})


def test_round_sessions_measure_every_vertex():
    layouts = round_sessions(path_pattern([0, 0]), 2)
    assert len(layouts) == 5
    assert all(layout.measured == ("1", "2", "3") for layout in layouts)


# --- single rounds ---


@pytest.mark.parametrize("kind", [T1, T2])
def test_honest_test_rounds_accept(kind):
    system = single_round_system(P3, path_pattern([0, 0]), kind, {"1": 0})
    assert {run_system(system, seed=seed).outputs[("C", "accept")] for seed in range(4)} == {1}


def test_first_test_round_checks_the_white_vertex():
    system = single_round_system(P3, path_pattern([0, 0]), T1, {"1": 0}, deviation=OutcomeFlip("2"))
    assert {run_system(system, seed=seed).outputs[("C", "accept")] for seed in range(4)} == {0}
    unaffected = single_round_system(P3, path_pattern([0, 0]), T2, {"1": 0}, deviation=OutcomeFlip("2"))
    assert {run_system(unaffected, seed=seed).outputs[("C", "accept")] for seed in range(4)} == {1}


def test_computation_round_outputs_the_result():
    system = single_round_system(P3, path_pattern([0, 0]), COMP, {"1": 1})
    assert run_system(system, seed=2).outputs[("C", "o")] == (1,)


def test_round_without_server_leaves_network_open():
    system = single_round_system(P3, path_pattern([0, 0]), T1, {"1": 0}, with_server=False)
    assert set(system.interface_names) == {"C", "net.S"}


@pytest.mark.slow
@pytest.mark.parametrize("kind", [T2, COMP])
def test_server_cannot_tell_a_round_from_the_first_test(kind):
    pattern = path_pattern([0, 0])
    answers = {("net.S", f"r1.s_{vertex}"): [bit] for vertex, bit in zip(P3.vertices, (0, 1, 0))}
    first = single_round_system(P3, pattern, T1, {"1": 0}, with_server=False)
    other = single_round_system(P3, pattern, kind, {"1": 1}, with_server=False)
    report = view_distance(first, other, ["net.S"], classical_inputs=answers)
    assert report.epsilon == pytest.approx(0.0, abs=1e-10)


# --- whole protocol ---


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_honest_server_delivers_the_output(seed):
    result = run_system(protocol3_stab_ps(P3, path_pattern([0, 0]), 1, {"1": 1}), seed=seed)
    assert result.outputs[("C", "accept")] == 1
    assert result.outputs[("C", "o")] == (1,)
    assert result.audit["plan"] in {plan.label for plan in all_round_plans(1)}


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cheating_server_is_caught(seed):
    system = protocol3_stab_ps(P3, path_pattern([0, 0]), 1, {"1": 0}, deviation=OutcomeFlip("2"))
    result = run_system(system, seed=seed)
    assert result.outputs[("C", "accept")] == 0
    assert result.outputs[("C", "o")] == BOTTOM


def test_protocol_inputs_are_validated():
    with pytest.raises(PreconditionError):
        protocol3_stab_ps(P3, path_pattern([0, 0]), 1, {})
    with pytest.raises(PreconditionError):
        protocol3_stab_ps(path_graph(4), path_pattern([0, 0]), 1, {"1": 0})
    with pytest.raises(PreconditionError):
        protocol3_stab_ps(P3, path_pattern([0, 0]), 4, {"1": 0})
    with pytest.raises(PreconditionError):
        single_round_system(cycle_graph(3), path_pattern([0, 0]), T1, {"1": 0})
