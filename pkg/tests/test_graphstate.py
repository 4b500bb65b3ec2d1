from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from quantum.exceptions import GraphError, SizeLimitError
from quantum.graphstate import (
    DottedTripleGraph,
    Graph,
    NodeRole,
    OddCycle,
    TwoColoring,
    coloring_from_roles,
    complete_graph,
    cycle_graph,
    dump_graph,
    enumerate_trap_colorings,
    find_two_coloring,
    graph_state,
    grid_graph,
    load_graph,
    path_graph,
    random_graph,
    sample_trap_coloring,
    stabilizer_element,
    stabilizer_generator,
    stabilizer_group,
    star_graph,
    traps_isolated,
)
from quantum.pauli import PauliString
from quantum.rng import party_generator

C, T, D = NodeRole.COMPUTATION, NodeRole.TRAP, NodeRole.DUMMY


def test_graph_rejects_malformed_input():
    with pytest.raises(GraphError):
        Graph(["1", "1"])
    with pytest.raises(GraphError):
        Graph(["1"], [("1", "1")])
    with pytest.raises(GraphError):
        Graph(["1", "2"], [("1", "3")])
    with pytest.raises(GraphError):
        Graph(["1", "2"], [("1", "2"), ("2", "1")])
    with pytest.raises(GraphError):
        Graph.from_dict({"edges": []})


def test_edges_follow_vertex_order():
    graph = Graph(["a", "b", "c"], [("c", "a"), ("b", "c")])
    assert graph.edges == (("a", "c"), ("b", "c"))
    assert graph.neighbors("c") == ("a", "b")
    with pytest.raises(GraphError):
        graph.neighbors("z")


def test_json_form_restores_graph():
    graph = grid_graph(2, 3)
    assert load_graph(dump_graph(graph)) == graph
    assert graph.as_dict()["vertices"][:3] == ["1.1", "1.2", "1.3"]


def test_builders():
    assert path_graph(3).edges == (("1", "2"), ("2", "3"))
    assert path_graph(3).is_path()
    assert path_graph(1).is_path()
    assert not cycle_graph(4).is_path()
    assert star_graph(3).neighbors("1") == ("2", "3", "4")
    assert len(complete_graph(4).edges) == 6
    assert len(grid_graph(2, 2).edges) == 4
    with pytest.raises(GraphError):
        cycle_graph(2)


def test_random_graph_is_reproducible():
    assert random_graph(6, 0.5, seed=11) == random_graph(6, 0.5, seed=11)
    assert random_graph(6, 0.0, seed=3).edges == ()


# --- graph states ---


@given(n=st.integers(1, 6), p=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
@hypothesis_settings(max_examples=40, deadline=None)
def test_graph_state_is_stabilized_by_its_generators(n, p, seed):
    graph = random_graph(n, p, seed)
    state = graph_state(graph)
    for vertex in graph.vertices:
        assert state.expectation(stabilizer_generator(graph, vertex)) == pytest.approx(1.0)


def test_stabilizer_group_of_path():
    graph = path_graph(3)
    group = list(stabilizer_group(graph))
    assert len(group) == 8
    state = graph_state(graph)
    assert all(state.expectation(element) == pytest.approx(1.0) for _, element in group)
    assert stabilizer_element(graph, ["1", "3"]) == PauliString.from_mapping({"1": "X", "3": "X"})
    assert stabilizer_element(graph, []).is_identity


def test_stabilizer_element_rejects_unknown_vertex():
    with pytest.raises(GraphError):
        stabilizer_element(path_graph(2), ["7"])


# --- two-colourings ---


def test_path_coloring_starts_black():
    coloring = find_two_coloring(path_graph(3))
    assert coloring == TwoColoring(frozenset({"1", "3"}), frozenset({"2"}))
    assert coloring.color("2") == "white"


@pytest.mark.parametrize("n", [3, 5])
def test_odd_cycle_is_reported(n):
    witness = find_two_coloring(cycle_graph(n))
    assert isinstance(witness, OddCycle)
    assert set(witness.vertices) == set(cycle_graph(n).vertices)
    assert len(witness.vertices) % 2 == 1


def test_triangle_inside_larger_graph():
    graph = Graph(["1", "2", "3", "4"], [("1", "2"), ("2", "3"), ("3", "4"), ("4", "2")])
    witness = find_two_coloring(graph)
    assert isinstance(witness, OddCycle)
    assert set(witness.vertices) == {"2", "3", "4"}


@given(rows=st.integers(1, 3), columns=st.integers(1, 4))
@hypothesis_settings(max_examples=20, deadline=None)
def test_grid_coloring_is_proper(rows, columns):
    graph = grid_graph(rows, columns)
    coloring = find_two_coloring(graph)
    assert isinstance(coloring, TwoColoring)
    assert coloring.black | coloring.white == set(graph.vertices)
    for u, v in graph.edges:
        assert coloring.color(u) != coloring.color(v)


# --- dotted triple-graph ---


def test_dotted_triple_graph_of_single_edge():
    dtg = DottedTripleGraph(path_graph(2))
    assert len(dtg.vertices) == 15
    assert len(dtg.graph.edges) == 18
    assert dtg.primary["1"] == ("1:0", "1:1", "1:2")
    assert dtg.endpoints["1:0~2:1"] == ("1:0", "2:1")
    assert dtg.graph.neighbors("1:0~2:1") == ("1:0", "2:1")
    assert dtg.is_primary("2:2")
    assert not dtg.is_primary("1:2~2:2")
    assert dtg.base_vertex("2:1") == "2"


def test_dotted_triple_graph_respects_register_cap():
    with pytest.raises(SizeLimitError):
        DottedTripleGraph(path_graph(3))


def test_trap_coloring_counts():
    single = DottedTripleGraph(path_graph(1))
    edge = DottedTripleGraph(path_graph(2))
    single_colorings = list(enumerate_trap_colorings(single))
    edge_colorings = list(enumerate_trap_colorings(edge))
    assert len(single_colorings) == 6
    assert len({coloring.computation_copies["1"] for coloring, _ in single_colorings}) == 3
    assert len(edge_colorings) == 36
    assert sum(probability for _, probability in edge_colorings) == pytest.approx(1.0)
    assert len({coloring.key() for coloring, _ in edge_colorings}) == 36


def test_every_edge_coloring_isolates_its_traps():
    dtg = DottedTripleGraph(path_graph(2))
    for coloring, _ in enumerate_trap_colorings(dtg):
        assert traps_isolated(dtg, coloring)
        assert len(coloring.traps) == 2
        assert all(dtg.is_primary(trap) for trap in coloring.traps)
        assert len(coloring.computation) == 3
        assert len(coloring.dummies) == 10


def test_added_vertex_roles_follow_endpoints():
    dtg = DottedTripleGraph(path_graph(2))
    coloring = coloring_from_roles(dtg, {"1": (C, T, D), "2": (D, C, T)}, ["1"])
    assert coloring.role("1:0~2:1") is C
    assert coloring.role("1:2~2:0") is D
    assert coloring.traps == {"1:1", "2:2"}
    assert coloring.role("1:1~2:2") is D
    assert coloring.computation_copies == {"1": "1:0", "2": "2:1"}
    assert coloring.input_positions == ("1:0",)
    assert coloring.key() == "CTDDCT"
    with pytest.raises(GraphError):
        coloring.role("9:9")


def test_roles_must_be_a_permutation():
    dtg = DottedTripleGraph(path_graph(1))
    with pytest.raises(GraphError):
        coloring_from_roles(dtg, {"1": (C, C, D)})


def test_sampled_coloring_depends_only_on_seed():
    dtg = DottedTripleGraph(path_graph(2))
    keys = {
        sample_trap_coloring(dtg, party_generator(5, "client")).key() for _ in range(3)
    }
    assert len(keys) == 1
    every_key = {coloring.key() for coloring, _ in enumerate_trap_colorings(dtg)}
    for seed in itertools.islice(itertools.count(), 10):
        assert sample_trap_coloring(dtg, party_generator(seed, "client")).key() in every_key
