from __future__ import annotations

import numpy as np
import pytest

from composable.channels import Verdict, distinguishability
from composable.execution import enumerate_runs
from composable.systems import compose
from protocols.exceptions import MessageError, PreconditionError
from protocols.network import OutcomeFlip, ServerDeviation, ps_network, ps_server, rm_network, rm_server
from protocols.stabilizer import (
    ParityCheck,
    PrepKind,
    coloring_test,
    halves_network,
    honest_acceptance,
    honest_server,
    ps_reject_probability,
    ps_test_client,
    require_two_coloring,
    rm_pattern_reject_probability,
    rm_prime_reject_probability,
    rm_reject_probability,
    round_layout,
    sigma_s_stab,
    stab_test_rm,
    stab_test_rm_client,
    stab_test_rm_prime,
    stab_to_ps,
)
from quantum.graphstate import cycle_graph, find_two_coloring, graph_state, path_graph, stabilizer_group
from quantum.pauli import PauliString, all_pauli_strings
from quantum.qstate import GATES, apply_pauli

P2 = path_graph(2)
P3 = path_graph(3)
X1Z2 = PauliString.from_mapping({"1": "X", "2": "Z"})


class FlipAfterEntangling(ServerDeviation):
    def __init__(self, letter: str, vertex: str):
        self.letter = letter
        self.vertex = vertex

    def after_entangling(self, ctx, layout, labels):
        ctx.apply(GATES[self.letter], labels[self.vertex])


def _accepts(system) -> set[int]:
    return {branch.outputs[("C", "accept")] for branch in enumerate_runs(system)}


# --- translation of stabilizer elements ---


def test_element_translates_to_preparations():
    test = stab_to_ps(P2, X1Z2)
    assert test.instructions["1"].kind is PrepKind.PLUS
    assert test.instructions["2"].kind is PrepKind.Z_BASIS
    assert test.checks == (ParityCheck(("1",), ("2",)),)
    assert test.element() == X1Z2


def test_identity_letters_become_mixed_preparations():
    test = stab_to_ps(P3, PauliString.from_mapping({"1": "X", "3": "X"}))
    assert test.instructions["2"].kind is PrepKind.MAX_MIXED
    assert test.element() == PauliString.from_mapping({"1": "X", "3": "X"})


@pytest.mark.parametrize(
    "stab",
    [
        PauliString(),
        PauliString.from_mapping({"1": "X", "2": "Z"}, phase=1),
        PauliString.single("X", "1"),
        PauliString.from_mapping({"1": "X", "2": "Z", "7": "Z"}),
    ],
)
def test_invalid_elements_rejected(stab):
    with pytest.raises(PreconditionError):
        stab_to_ps(P2, stab)


@pytest.mark.parametrize("subset_and_element", list(stabilizer_group(P3))[1:], ids=str)
def test_honest_server_passes_every_element(subset_and_element):
    _, element = subset_and_element
    assert honest_acceptance(stab_to_ps(P3, element))


def test_y_element_passes():
    y1y2 = PauliString.from_mapping({"1": "Y", "2": "Y"})
    test = stab_to_ps(P2, y1y2)
    assert test.instructions["1"].letter == "Y"
    assert honest_acceptance(test)
    assert honest_acceptance(test, blind=False)


# --- prepare-and-send rejection probabilities ---


def test_phase_flip_on_tested_vertex_always_rejects():
    test = stab_to_ps(P2, X1Z2)
    attack = PauliString.single("Z", "1").matrix(P2.vertices) @ honest_server(P2)
    assert ps_reject_probability(test, attack) == pytest.approx(1.0)
    assert ps_reject_probability(test, attack, blind=False) == pytest.approx(1.0)


@pytest.mark.parametrize("attack", list(all_pauli_strings(P2.vertices, 1))[1:], ids=str)
def test_reduced_client_matches_prepare_and_send(attack):
    test = stab_to_ps(P2, X1Z2)
    unitary = attack.matrix(P2.vertices) @ honest_server(P2)
    assert ps_reject_probability(test, unitary) == pytest.approx(rm_prime_reject_probability(test, unitary), abs=1e-9)


def test_server_action_must_match_register():
    with pytest.raises(MessageError):
        ps_reject_probability(stab_to_ps(P2, X1Z2), np.eye(2))


# --- colouring tests ---


def test_coloring_round_prepares_one_class_in_z():
    coloring = require_two_coloring(P3)
    test = coloring_test(P3, coloring)
    assert test.instructions["1"].kind is PrepKind.Z_BASIS
    assert test.instructions["2"].kind is PrepKind.PLUS
    assert test.checks == (ParityCheck(("2",), ("1", "3")),)
    swapped = coloring_test(P3, coloring, swapped=True)
    assert swapped.instructions["2"].kind is PrepKind.Z_BASIS
    assert swapped.checks == (ParityCheck(("1",), ("2",)), ParityCheck(("3",), ("2",)))
    assert honest_acceptance(test)
    assert honest_acceptance(swapped)


def test_odd_cycle_has_no_coloring_test():
    with pytest.raises(PreconditionError):
        require_two_coloring(cycle_graph(3))


# --- receive-and-measure ---


def test_rm_pattern_of_path():
    test = stab_test_rm(P3)
    assert test.bases == {"1": "X", "2": "Z", "3": "X"}
    assert len(test.checks) == 2
    state = graph_state(P3)
    assert rm_pattern_reject_probability(test, state) == pytest.approx(0.0)
    flipped = apply_pauli(state, PauliString.single("Z", "1"))
    assert rm_pattern_reject_probability(test, flipped) == pytest.approx(1.0)
    swapped = stab_test_rm(P3, find_two_coloring(P3), swapped=True)
    assert swapped.bases == {"1": "Z", "2": "X", "3": "Z"}


def test_rm_element_rejection():
    state = graph_state(P2)
    assert rm_reject_probability(P2, X1Z2, state) == pytest.approx(0.0)
    assert rm_reject_probability(P2, X1Z2, apply_pauli(state, PauliString.single("Z", "1"))) == pytest.approx(1.0)
    assert rm_reject_probability(P2, X1Z2, apply_pauli(state, PauliString.single("Z", "2"))) == pytest.approx(0.0)
    with pytest.raises(PreconditionError):
        rm_reject_probability(P2, PauliString.from_mapping({"1": "X", "2": "Z"}, phase=1), state)


def test_rm_session_runs_on_the_engine():
    test = stab_test_rm(P3)
    network = rm_network(P3.vertices)
    honest = compose([stab_test_rm_client(network, test), rm_server(network, P3, P3.vertices)], network)
    assert _accepts(honest) == {1}
    dishonest = compose(
        [
            stab_test_rm_client(network, test),
            rm_server(network, P3, P3.vertices, deviation=FlipAfterEntangling("Z", "1")),
        ],
        network,
    )
    assert _accepts(dishonest) == {0}


def test_rm_server_requires_full_send_order():
    with pytest.raises(PreconditionError):
        rm_server(rm_network(P3.vertices), P3, ["1", "2"])


def test_ps_round_runs_on_the_engine():
    test = stab_to_ps(P2, X1Z2)
    layout = round_layout(P2)
    network = ps_network((layout,))
    honest = compose([ps_test_client(network, test, blind=False), ps_server(network, (layout,))], network)
    assert _accepts(honest) == {1}
    cheating = compose(
        [ps_test_client(network, test, blind=False), ps_server(network, (layout,), deviation=OutcomeFlip("1"))],
        network,
    )
    assert _accepts(cheating) == {0}


@pytest.mark.slow
def test_blind_ps_round_accepts_honest_server():
    test = stab_to_ps(P2, X1Z2)
    layout = round_layout(P2)
    network = ps_network((layout,))
    system = compose([ps_test_client(network, test), ps_server(network, (layout,))], network)
    branches = list(enumerate_runs(system))
    assert {branch.outputs[("C", "accept")] for branch in branches} == {1}
    assert sum(branch.probability for branch in branches) == pytest.approx(1.0)


@pytest.mark.slow
def test_simulator_turns_reduced_client_into_prepare_and_send_round():
    test = stab_to_ps(P2, X1Z2)
    layout = round_layout(P2)
    network = ps_network((layout,))
    real = compose([ps_test_client(network, test, layout)], network)
    halves = halves_network(P2)
    simulated = compose(
        [
            stab_test_rm_prime(halves, test, layout.finish_round),
            sigma_s_stab(halves, network.interface("net.S"), layout),
        ],
        halves,
    )
    report = distinguishability(real, simulated)
    assert report.epsilon == pytest.approx(0.0, abs=1e-9)
    assert report.verdict is Verdict.PASS
