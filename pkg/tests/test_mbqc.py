from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from quantum.angles import FULL_TURN, Angle
from quantum.exceptions import PatternError, StateError
from quantum.graphstate import path_graph
from quantum.mbqc import (
    ByproductTracker,
    MeasurementPattern,
    adapt_angle,
    compose_patterns,
    encode_classical_input,
    grid_pattern,
    iterate_pattern_branches,
    j_pattern,
    load_pattern,
    output_state,
    path_pattern,
    pattern_unitary,
    run_pattern_local,
    x_basis_distribution,
)
from quantum.qstate import basis_state, fidelity, j_gate, plus_state, state_distance

angles = st.sampled_from(FULL_TURN)


def test_adapted_angle():
    assert adapt_angle(2, 1, 0) == Angle(14)
    assert adapt_angle(2, 0, 1) == Angle(10)
    assert adapt_angle(2, 1, 1) == Angle(6)


def test_path_pattern_shape():
    pattern = path_pattern([Angle(1), Angle(2)])
    assert pattern.inputs == ("1",)
    assert pattern.outputs == ("3",)
    assert pattern.order == ("1", "2")
    assert pattern.flow == {"1": "2", "2": "3"}
    assert pattern.angles["2"] == Angle(2)


def test_pattern_validation():
    graph = path_graph(3)
    with pytest.raises(PatternError):
        MeasurementPattern(graph, ("1", "2"), {"1": 0, "2": 0}, {"1": "3", "2": "3"}, ("1",), ("3",))
    with pytest.raises(PatternError):
        MeasurementPattern(graph, ("1",), {"1": 0}, {"1": "2"}, ("1",), ("3",))
    with pytest.raises(PatternError):
        MeasurementPattern(graph, ("2", "1"), {"1": 0, "2": 0}, {"1": "2", "2": "3"}, ("1",), ("3",))
    with pytest.raises(PatternError):
        MeasurementPattern(graph, ("1", "2"), {"1": 0}, {"1": "2", "2": "3"}, ("1",), ("3",))


def test_pattern_json_form():
    pattern = grid_pattern(2, 2, {"1.1": 3})
    restored = load_pattern(json.dumps(pattern.as_dict()))
    assert restored.as_dict() == pattern.as_dict()
    with pytest.raises(PatternError):
        load_pattern('{"order": []}')


@given(phi=angles)
@hypothesis_settings(max_examples=16, deadline=None)
def test_single_step_implements_j_gate(phi):
    assert np.allclose(pattern_unitary(j_pattern(phi)), j_gate(phi))


@given(first=angles, second=angles)
@hypothesis_settings(max_examples=30, deadline=None)
def test_every_branch_matches_the_unitary(first, second):
    pattern = path_pattern([first, second])
    source = plus_state("1", Angle(3))
    expected = output_state(pattern, source)
    branches = list(iterate_pattern_branches(pattern, source))
    assert sum(branch.probability for branch in branches) == pytest.approx(1.0)
    for branch in branches:
        assert state_distance(branch.output, expected) == pytest.approx(0.0, abs=1e-9)


def test_zero_angles_give_four_branches():
    branches = list(iterate_pattern_branches(path_pattern([0, 0])))
    assert len(branches) == 4
    for branch in branches:
        assert branch.probability == pytest.approx(0.25)
        assert fidelity(branch.output, plus_state("3")) == pytest.approx(1.0)


def test_local_run_is_pure():
    pattern = path_pattern([Angle(5)])
    result = run_pattern_local(pattern, basis_state(["1"], [1]))
    expected = output_state(pattern, basis_state(["1"], [1]))
    assert fidelity(result, expected) == pytest.approx(1.0)


def test_input_state_must_match_inputs():
    with pytest.raises(StateError):
        list(iterate_pattern_branches(path_pattern([0]), basis_state(["7"])))


def test_composition_concatenates_paths():
    composed = compose_patterns(path_pattern([Angle(1)]), path_pattern([Angle(2), Angle(3)]))
    assert composed.as_dict() == path_pattern([Angle(1), Angle(2), Angle(3)]).as_dict()
    with pytest.raises(PatternError):
        compose_patterns(grid_pattern(2, 2), path_pattern([0]))


def test_classical_input_shifts_angle():
    pattern = path_pattern([Angle(3)])
    encoded = encode_classical_input(pattern, {"1": 1})
    assert encoded.angles["1"] == Angle(11)
    assert encode_classical_input(pattern, {"1": 0}).angles["1"] == Angle(3)
    with pytest.raises(PatternError):
        encode_classical_input(pattern, {"2": 1})


def test_classical_input_selects_output():
    zero = output_state(encode_classical_input(path_pattern([0, 0]), {"1": 0}))
    one = output_state(encode_classical_input(path_pattern([0, 0]), {"1": 1}))
    assert x_basis_distribution(zero) == pytest.approx({(0,): 1.0})
    assert x_basis_distribution(one) == pytest.approx({(1,): 1.0})


def test_x_basis_distribution_of_plus():
    assert x_basis_distribution(plus_state("a")) == {(0,): pytest.approx(1.0)}


def test_byproduct_tracker_propagates_outcomes():
    pattern = path_pattern([0, 0])
    tracker = ByproductTracker(pattern)
    tracker.record("1", 1)
    assert tracker.correction("2") == (1, 0)
    assert tracker.correction("3") == (0, 1)
    assert tracker.angle("2", Angle(2)) == Angle(14)
    tracker.pad_before_entangling("2", x=1)
    assert tracker.correction("2") == (0, 0)
    assert tracker.correction("1") == (0, 1)
    assert tracker.correction("3") == (0, 0)
