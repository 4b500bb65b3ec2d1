"""Graphs, graph states, stabilizers, two-colourings and the dotted triple-graph."""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx
import numpy as np

from .conf import simulation_limits
from .exceptions import GraphError, SizeLimitError
from .pauli import PauliString, pauli_product
from .qstate import SQRT_HALF, PureState

logger = logging.getLogger(__name__)

CZ_SIGNS = np.array([[1, 1], [1, -1]], dtype=complex)


class Graph:
    """Simple undirected graph with an ordered vertex list.

    The vertex order is the register order of :func:`graph_state` and the order
    of stabilizer generators.
    """

    def __init__(self, vertices: Iterable, edges: Iterable[Sequence] = ()):
        vertices = tuple(str(vertex) for vertex in vertices)
        if len(set(vertices)) != len(vertices):
            raise GraphError("Вершины графа повторяются.")
        graph = nx.Graph()
        graph.add_nodes_from(vertices)
        position = {vertex: index for index, vertex in enumerate(vertices)}
        ordered_edges = []
        for edge in edges:
            if len(edge) != 2:
                raise GraphError(f"Ребро {edge!r} должно содержать две вершины.")
            u, v = (str(item) for item in edge)
            if u not in position or v not in position:
                raise GraphError(f"Ребро ({u}, {v}) ссылается на неизвестную вершину.")
            if u == v:
                raise GraphError(f"Петля на вершине {u} недопустима.")
            if graph.has_edge(u, v):
                raise GraphError(f"Ребро ({u}, {v}) указано дважды.")
            graph.add_edge(u, v)
            ordered_edges.append((u, v) if position[u] < position[v] else (v, u))
        self._graph = nx.freeze(graph)
        self._position = position
        self.vertices = vertices
        self.edges = tuple(ordered_edges)

    @property
    def nx(self) -> nx.Graph:
        return self._graph

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, vertex: object) -> bool:
        return vertex in self._position

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.vertices == other.vertices and set(map(frozenset, self.edges)) == set(
            map(frozenset, other.edges)
        )

    def __hash__(self) -> int:
        return hash((self.vertices, frozenset(map(frozenset, self.edges))))

    def __repr__(self) -> str:
        return f"Graph(vertices={len(self.vertices)}, edges={len(self.edges)})"

    def index(self, vertex: str) -> int:
        try:
            return self._position[vertex]
        except KeyError as exc:
            raise GraphError(f"Вершина {vertex!r} отсутствует в графе.") from exc

    def neighbors(self, vertex: str) -> tuple[str, ...]:
        self.index(vertex)
        return tuple(sorted(self._graph.neighbors(vertex), key=self._position.__getitem__))

    def is_path(self) -> bool:
        if len(self.vertices) == 1:
            return True
        return (
            nx.is_connected(self._graph)
            and len(self.edges) == len(self.vertices) - 1
            and max(degree for _, degree in self._graph.degree) <= 2
        )

    def as_dict(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(edge) for edge in self.edges]}

    @classmethod
    def from_dict(cls, payload: Mapping) -> "Graph":
        try:
            return cls(payload["vertices"], payload.get("edges", ()))
        except (KeyError, TypeError, AttributeError) as exc:
            raise GraphError("Граф должен иметь вид {\"vertices\": [...], \"edges\": [[a, b], ...]}.") from exc


def load_graph(text: str) -> Graph:
    return Graph.from_dict(json.loads(text))


def dump_graph(graph: Graph) -> str:
    return json.dumps(graph.as_dict(), ensure_ascii=False)


# --- constructors ---


def path_graph(n: int) -> Graph:
    vertices = [str(index) for index in range(1, n + 1)]
    return Graph(vertices, zip(vertices, vertices[1:]))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("Цикл содержит не менее трёх вершин.")
    vertices = [str(index) for index in range(1, n + 1)]
    return Graph(vertices, zip(vertices, vertices[1:] + vertices[:1]))


def star_graph(leaves: int) -> Graph:
    """Centre ``"1"`` joined to leaves ``"2"`` .. ``str(leaves + 1)``."""

    vertices = [str(index) for index in range(1, leaves + 2)]
    return Graph(vertices, (("1", leaf) for leaf in vertices[1:]))


def complete_graph(n: int) -> Graph:
    vertices = [str(index) for index in range(1, n + 1)]
    return Graph(vertices, itertools.combinations(vertices, 2))


def grid_label(row: int, column: int) -> str:
    return f"{row}.{column}"


def grid_graph(rows: int, columns: int) -> Graph:
    vertices = [grid_label(r, c) for r in range(1, rows + 1) for c in range(1, columns + 1)]
    edges = [
        (grid_label(r, c), grid_label(r, c + 1))
        for r in range(1, rows + 1)
        for c in range(1, columns)
    ] + [
        (grid_label(r, c), grid_label(r + 1, c))
        for r in range(1, rows)
        for c in range(1, columns + 1)
    ]
    return Graph(vertices, edges)


def random_graph(n: int, p: float, seed: int) -> Graph:
    sample = nx.gnp_random_graph(n, p, seed=seed)
    return Graph(
        (str(node + 1) for node in sample.nodes),
        ((str(u + 1), str(v + 1)) for u, v in sample.edges),
    )


# --- graph states and stabilizers ---


def cz_signs(num_axes: int, edge_axes: Iterable[tuple[int, int]]) -> np.ndarray:
    """Tensor of ``(-1)^{sum x_u x_v}`` over the given axis pairs."""

    signs = np.ones((2,) * num_axes, dtype=complex)
    for a, b in edge_axes:
        shape = [1] * num_axes
        shape[a] = shape[b] = 2
        block = CZ_SIGNS if a < b else CZ_SIGNS.T
        signs = signs * block.reshape(shape)
    return signs


def graph_state(graph: Graph) -> PureState:
    """``E_G`` applied to ``|+>`` on every vertex, in ``graph.vertices`` order."""

    n = len(graph)
    limit = simulation_limits().max_qubits
    if n > limit:
        raise SizeLimitError(n, limit, "граф-состояние")
    axes = [(graph.index(u), graph.index(v)) for u, v in graph.edges]
    return PureState(graph.vertices, cz_signs(n, axes) * SQRT_HALF**n)


def stabilizer_generator(graph: Graph, vertex: str) -> PauliString:
    """``X`` on ``vertex`` and ``Z`` on each of its neighbours."""

    neighbours = graph.neighbors(vertex)
    return PauliString(((vertex, "X"),) + tuple((neighbour, "Z") for neighbour in neighbours))


def stabilizer_element(graph: Graph, subset: Iterable[str]) -> PauliString:
    members = set(subset)
    for vertex in members:
        graph.index(vertex)
    return pauli_product(
        stabilizer_generator(graph, vertex) for vertex in graph.vertices if vertex in members
    )


def stabilizer_group(graph: Graph) -> Iterator[tuple[tuple[str, ...], PauliString]]:
    """All ``2^|V|`` elements, keyed by their generating subsets."""

    for size in range(len(graph) + 1):
        for subset in itertools.combinations(graph.vertices, size):
            yield subset, stabilizer_element(graph, subset)


# --- two-colourings ---


@dataclass(frozen=True, slots=True)
class TwoColoring:
    black: frozenset[str]
    white: frozenset[str]

    def color(self, vertex: str) -> str:
        return "black" if vertex in self.black else "white"


@dataclass(frozen=True, slots=True)
class OddCycle:
    """Witness that a graph is not two-colourable."""

    vertices: tuple[str, ...]


def _root_path(predecessors: Mapping[str, str], vertex: str) -> list[str]:
    path = [vertex]
    while path[-1] in predecessors:
        path.append(predecessors[path[-1]])
    return path


def find_two_coloring(graph: Graph) -> TwoColoring | OddCycle:
    """Breadth-first colouring: even depth black, odd depth white, per component."""

    black: set[str] = set()
    white: set[str] = set()
    for component in sorted(nx.connected_components(graph.nx), key=lambda part: min(map(graph.index, part))):
        root = min(component, key=graph.index)
        predecessors = dict(nx.bfs_predecessors(graph.nx, root))
        depth = {root: 0}
        for parent, child in nx.bfs_edges(graph.nx, root):
            depth[child] = depth[parent] + 1
        for u, v in graph.edges:
            if u in component and depth[u] % 2 == depth[v] % 2:
                left, right = _root_path(predecessors, u), _root_path(predecessors, v)
                common = next(vertex for vertex in left if vertex in set(right))
                cycle = left[: left.index(common) + 1] + list(reversed(right[: right.index(common)]))
                return OddCycle(tuple(cycle))
        for vertex in component:
            (black if depth[vertex] % 2 == 0 else white).add(vertex)
    return TwoColoring(frozenset(black), frozenset(white))


# --- dotted triple-graph and trap colourings ---


class NodeRole(str, Enum):
    COMPUTATION = "C"
    DUMMY = "D"
    TRAP = "T"


PRIMARY_ROLE_ORDERS: tuple[tuple[NodeRole, ...], ...] = tuple(
    itertools.permutations((NodeRole.COMPUTATION, NodeRole.TRAP, NodeRole.DUMMY))
)


def copy_label(vertex: str, copy: int) -> str:
    return f"{vertex}:{copy}"


def added_label(u: str, i: int, v: str, j: int) -> str:
    return f"{copy_label(u, i)}~{copy_label(v, j)}"


class DottedTripleGraph:
    """Three primary copies per base vertex and nine added vertices per base edge.

    The added vertex ``u:i~v:j`` is adjacent to exactly ``u:i`` and ``v:j``.
    """

    def __init__(self, base: Graph):
        size = 3 * len(base.vertices) + 9 * len(base.edges)
        limit = simulation_limits().max_qubits
        if size > limit:
            raise SizeLimitError(size, limit, "граф DT(G)")
        self.base = base
        self.primary: dict[str, tuple[str, str, str]] = {
            vertex: tuple(copy_label(vertex, copy) for copy in range(3)) for vertex in base.vertices
        }
        self.added: dict[tuple[str, str], tuple[str, ...]] = {}
        self.endpoints: dict[str, tuple[str, str]] = {}
        edges = []
        for u, v in base.edges:
            labels = []
            for i, j in itertools.product(range(3), repeat=2):
                label = added_label(u, i, v, j)
                labels.append(label)
                self.endpoints[label] = (copy_label(u, i), copy_label(v, j))
                edges.extend([(copy_label(u, i), label), (label, copy_label(v, j))])
            self.added[(u, v)] = tuple(labels)
        vertices = [label for copies in self.primary.values() for label in copies]
        vertices += [label for labels in self.added.values() for label in labels]
        self.graph = Graph(vertices, edges)

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.graph.vertices

    def is_primary(self, label: str) -> bool:
        return label not in self.endpoints

    def base_vertex(self, label: str) -> str:
        """Base vertex of a primary copy."""

        return label.rsplit(":", 1)[0]


def dotted_triple_graph(graph: Graph) -> DottedTripleGraph:
    return DottedTripleGraph(graph)


@dataclass(frozen=True)
class TrapColoring:
    computation: frozenset[str]
    dummies: frozenset[str]
    traps: frozenset[str]
    input_positions: tuple[str, ...]
    primary_roles: tuple[tuple[str, tuple[NodeRole, ...]], ...]

    def role(self, label: str) -> NodeRole:
        if label in self.computation:
            return NodeRole.COMPUTATION
        if label in self.traps:
            return NodeRole.TRAP
        if label in self.dummies:
            return NodeRole.DUMMY
        raise GraphError(f"Вершина {label!r} не раскрашена.")

    def copy_with_role(self, vertex: str, role: NodeRole) -> str:
        roles = dict(self.primary_roles)[vertex]
        return copy_label(vertex, roles.index(role))

    @cached_property
    def computation_copies(self) -> dict[str, str]:
        return {vertex: self.copy_with_role(vertex, NodeRole.COMPUTATION) for vertex, _ in self.primary_roles}

    def key(self) -> str:
        return "".join(role.value for _, roles in self.primary_roles for role in roles)


def coloring_from_roles(
    dtg: DottedTripleGraph,
    roles: Mapping[str, Sequence[NodeRole]],
    input_vertices: Iterable[str] = (),
) -> TrapColoring:
    """Colour DT(G) from the roles of the primary copies.

    Added vertices between two computation copies are computation dots and
    every other added vertex is a dummy, so traps sit on primary copies only.
    """

    assignment: dict[str, NodeRole] = {}
    for vertex, copies in dtg.primary.items():
        vertex_roles = tuple(NodeRole(role) for role in roles[vertex])
        if sorted(vertex_roles) != sorted(PRIMARY_ROLE_ORDERS[0]):
            raise GraphError(f"Копии вершины {vertex} должны получить роли C, T и D ровно по одному разу.")
        assignment.update(zip(copies, vertex_roles))
    for label, (left, right) in dtg.endpoints.items():
        pair = (assignment[left], assignment[right])
        if pair == (NodeRole.COMPUTATION, NodeRole.COMPUTATION):
            assignment[label] = NodeRole.COMPUTATION
        else:
            assignment[label] = NodeRole.DUMMY
    primary_roles = tuple(
        (vertex, tuple(assignment[label] for label in copies)) for vertex, copies in dtg.primary.items()
    )
    inputs = tuple(input_vertices)
    for vertex in inputs:
        dtg.base.index(vertex)
    coloring = TrapColoring(
        computation=frozenset(label for label, role in assignment.items() if role is NodeRole.COMPUTATION),
        dummies=frozenset(label for label, role in assignment.items() if role is NodeRole.DUMMY),
        traps=frozenset(label for label, role in assignment.items() if role is NodeRole.TRAP),
        input_positions=tuple(
            copy_label(vertex, dict(primary_roles)[vertex].index(NodeRole.COMPUTATION)) for vertex in inputs
        ),
        primary_roles=primary_roles,
    )
    return coloring


def enumerate_trap_colorings(
    dtg: DottedTripleGraph, input_vertices: Iterable[str] = ()
) -> Iterator[tuple[TrapColoring, float]]:
    """Every colouring the sampler can draw, with its probability."""

    inputs = tuple(input_vertices)
    vertices = dtg.base.vertices
    probability = 1 / len(PRIMARY_ROLE_ORDERS) ** len(vertices)
    for choice in itertools.product(PRIMARY_ROLE_ORDERS, repeat=len(vertices)):
        yield coloring_from_roles(dtg, dict(zip(vertices, choice)), inputs), probability


def sample_trap_coloring(
    dtg: DottedTripleGraph, rng: np.random.Generator, input_vertices: Iterable[str] = ()
) -> TrapColoring:
    """Uniformly permute ``(C, T, D)`` over the copies of each base vertex.

    The input of a base vertex is placed on whichever copy receives ``C``, so the
    input position stays hidden from the server.
    """

    roles = {
        vertex: PRIMARY_ROLE_ORDERS[int(rng.integers(len(PRIMARY_ROLE_ORDERS)))]
        for vertex in dtg.base.vertices
    }
    coloring = coloring_from_roles(dtg, roles, input_vertices)
    logger.debug("Раскраска DT(G): %s", coloring.key())
    return coloring


def traps_isolated(dtg: DottedTripleGraph, coloring: TrapColoring) -> bool:
    return all(set(dtg.graph.neighbors(trap)) <= coloring.dummies for trap in coloring.traps)
