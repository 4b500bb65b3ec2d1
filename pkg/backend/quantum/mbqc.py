"""Measurement patterns, flow bookkeeping and the local evaluation oracle."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .angles import ZERO, Angle
from .conf import simulation_limits
from .exceptions import PatternError, StateError
from .graphstate import Graph, cz_signs, grid_graph, grid_label, path_graph
from .pauli import PAULI_MATRICES
from .qstate import (
    GATES,
    MixedState,
    PureState,
    apply_to_axes,
    contract_axis,
    plus_vector,
    squared_norm,
    xy_bra,
)


def adapt_angle(phi: Angle | int, s_x: int, s_z: int) -> Angle:
    """``(-1)^{s_x} * phi + s_z * pi``."""

    return Angle.of(phi).signed(s_x).plus_pi(s_z & 1)


@dataclass(frozen=True)
class MeasurementPattern:
    """XY-plane measurement pattern with causal flow.

    ``angles`` are the measurement angles: measuring ``v`` at ``-phi`` applies
    ``J(phi) = H zrot(phi)`` to the logical qubit carried along the flow.
    """

    graph: Graph
    order: tuple[str, ...]
    angles: Mapping[str, Angle]
    flow: Mapping[str, str]
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    _rank: dict[str, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "angles", {key: Angle.of(value) for key, value in self.angles.items()})
        object.__setattr__(self, "flow", dict(self.flow))
        rank = {vertex: index for index, vertex in enumerate(self.order)}
        rank.update({vertex: len(self.order) for vertex in self.outputs})
        object.__setattr__(self, "_rank", rank)
        self.validate()

    def validate(self) -> None:
        vertices = set(self.graph.vertices)
        measured = set(self.order)
        outputs = set(self.outputs)
        if len(measured) != len(self.order) or len(outputs) != len(self.outputs):
            raise PatternError("Порядок измерений или список выходов содержит повторы.")
        if measured & outputs:
            raise PatternError(f"Выходные вершины {sorted(measured & outputs)} не должны измеряться.")
        if measured | outputs != vertices:
            raise PatternError("Каждая вершина графа должна быть либо измерена, либо выходной.")
        if not set(self.inputs) <= vertices:
            raise PatternError("Входные вершины отсутствуют в графе.")
        missing = [vertex for vertex in self.order if vertex not in self.angles]
        if missing:
            raise PatternError(f"Для вершин {missing} не задан угол измерения.")
        if set(self.flow) != measured:
            raise PatternError("Поток должен быть определён ровно на измеряемых вершинах.")
        images = list(self.flow.values())
        if len(set(images)) != len(images):
            raise PatternError("Поток не инъективен.")
        for source, target in self.flow.items():
            if target in self.inputs:
                raise PatternError(f"Образ потока {target} не может быть входом.")
            if target not in self.graph.neighbors(source):
                raise PatternError(f"Образ потока {source} → {target} не является соседом.")
            if not self.before(source, target):
                raise PatternError(f"Вершина {target} измеряется раньше {source}.")
            for other in self.graph.neighbors(target):
                if other != source and not self.before(source, other):
                    raise PatternError(
                        f"Сосед {other} вершины {target} измеряется раньше {source}: поток не причинный."
                    )

    def before(self, first: str, second: str) -> bool:
        return self._rank[first] < self._rank[second]

    @property
    def measured(self) -> tuple[str, ...]:
        return self.order

    def with_angles(self, angles: Mapping[str, Angle | int]) -> "MeasurementPattern":
        merged = {**self.angles, **{key: Angle.of(value) for key, value in angles.items()}}
        return MeasurementPattern(self.graph, self.order, merged, self.flow, self.inputs, self.outputs)

    def as_dict(self) -> dict:
        return {
            "graph": self.graph.as_dict(),
            "order": list(self.order),
            "angles": {vertex: angle.k for vertex, angle in self.angles.items()},
            "flow": dict(self.flow),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "MeasurementPattern":
        try:
            return cls(
                graph=Graph.from_dict(payload["graph"]),
                order=tuple(payload["order"]),
                angles={vertex: Angle(int(k)) for vertex, k in payload.get("angles", {}).items()},
                flow=payload.get("flow", {}),
                inputs=tuple(payload.get("inputs", ())),
                outputs=tuple(payload.get("outputs", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PatternError(f"Некорректное описание шаблона: {exc}") from exc


def load_pattern(text: str) -> MeasurementPattern:
    return MeasurementPattern.from_dict(json.loads(text))


class ByproductTracker:
    """Pending Pauli byproducts ``X^x Z^z`` per vertex under one correction convention.

    An outcome ``s`` of vertex ``v`` puts ``X^s`` on ``f(v)`` and ``Z^s`` on every
    other neighbour of ``f(v)``; the next measurement angle of a vertex carrying
    ``X^x Z^z`` is ``(-1)^x * phi + z * pi``.
    """

    def __init__(self, pattern: MeasurementPattern):
        self.pattern = pattern
        self.x: dict[str, int] = dict.fromkeys(pattern.graph.vertices, 0)
        self.z: dict[str, int] = dict.fromkeys(pattern.graph.vertices, 0)

    def copy(self) -> "ByproductTracker":
        clone = ByproductTracker.__new__(ByproductTracker)
        clone.pattern = self.pattern
        clone.x, clone.z = dict(self.x), dict(self.z)
        return clone

    def add(self, vertex: str, x: int = 0, z: int = 0) -> None:
        self.x[vertex] ^= x & 1
        self.z[vertex] ^= z & 1

    def pad_before_entangling(self, vertex: str, x: int = 0, z: int = 0) -> None:
        """Account for ``X^x Z^z`` applied to ``vertex`` before the CZ layer."""

        self.add(vertex, x, z)
        if x & 1:
            for neighbour in self.pattern.graph.neighbors(vertex):
                self.z[neighbour] ^= 1

    def record(self, vertex: str, outcome: int) -> None:
        if not outcome & 1:
            return
        target = self.pattern.flow[vertex]
        self.x[target] ^= 1
        for neighbour in self.pattern.graph.neighbors(target):
            if neighbour != vertex:
                self.z[neighbour] ^= 1

    def angle(self, vertex: str, phi: Angle | None = None) -> Angle:
        phi = self.pattern.angles[vertex] if phi is None else phi
        return adapt_angle(phi, self.x[vertex], self.z[vertex])

    def correction(self, vertex: str) -> tuple[int, int]:
        return self.x[vertex], self.z[vertex]


# --- builders ---


def flow_for_path(n: int) -> dict[str, str]:
    return {str(index): str(index + 1) for index in range(1, n)}


def flow_for_grid(rows: int, columns: int) -> dict[str, str]:
    """Successor within each row: ``r.c -> r.(c+1)``."""

    return {
        grid_label(r, c): grid_label(r, c + 1)
        for r in range(1, rows + 1)
        for c in range(1, columns)
    }


def path_pattern(angles: Sequence[Angle | int]) -> MeasurementPattern:
    """Path of ``len(angles) + 1`` vertices, input ``"1"``, output the last vertex."""

    n = len(angles) + 1
    graph = path_graph(n)
    order = graph.vertices[:-1]
    return MeasurementPattern(
        graph=graph,
        order=order,
        angles=dict(zip(order, (Angle.of(angle) for angle in angles))),
        flow=flow_for_path(n),
        inputs=("1",),
        outputs=(graph.vertices[-1],),
    )


def grid_pattern(rows: int, columns: int, angles: Mapping[str, Angle | int] | None = None) -> MeasurementPattern:
    """Grid pattern measured column by column; first column inputs, last column outputs."""

    graph = grid_graph(rows, columns)
    order = tuple(grid_label(r, c) for c in range(1, columns) for r in range(1, rows + 1))
    angles = dict(angles or {})
    return MeasurementPattern(
        graph=graph,
        order=order,
        angles={vertex: Angle.of(angles.get(vertex, ZERO)) for vertex in order},
        flow=flow_for_grid(rows, columns),
        inputs=tuple(grid_label(r, 1) for r in range(1, rows + 1)),
        outputs=tuple(grid_label(r, columns) for r in range(1, rows + 1)),
    )


def compose_patterns(first: MeasurementPattern, second: MeasurementPattern) -> MeasurementPattern:
    """Path pattern running ``first`` and then ``second`` on its output."""

    for pattern in (first, second):
        if not (pattern.graph.is_path() and len(pattern.inputs) == 1 and len(pattern.outputs) == 1):
            raise PatternError("Композиция поддерживается только для шаблонов-путей с одним входом.")
    angles = [first.angles[vertex] for vertex in first.order] + [second.angles[vertex] for vertex in second.order]
    return path_pattern(angles)


def encode_classical_input(pattern: MeasurementPattern, bits: Mapping[str, int]) -> MeasurementPattern:
    """Feed ``Z^b |+>`` into input ``v`` by shifting its measurement angle by ``b * pi``."""

    shifted = {}
    for vertex, bit in bits.items():
        if vertex not in pattern.inputs or vertex not in pattern.angles:
            raise PatternError(f"Классический вход можно задать только на измеряемой входной вершине ({vertex}).")
        shifted[vertex] = pattern.angles[vertex].plus_pi(bit & 1)
    return pattern.with_angles(shifted)


# --- local evaluation ---


@dataclass(frozen=True, slots=True)
class PatternBranch:
    outcomes: tuple[tuple[str, int], ...]
    probability: float
    output: PureState


def _initial_tensor(pattern: MeasurementPattern, input_state: PureState | None) -> tuple[list[str], np.ndarray]:
    others = [vertex for vertex in pattern.graph.vertices if vertex not in pattern.inputs]
    if pattern.inputs:
        if input_state is None:
            input_state = PureState(pattern.inputs, np.ones((2,) * len(pattern.inputs)) / math.sqrt(2 ** len(pattern.inputs)))
        if sorted(input_state.labels) != sorted(pattern.inputs):
            raise StateError(
                f"Входное состояние на {list(input_state.labels)} не совпадает со входами {list(pattern.inputs)}."
            )
        tensor = input_state.reorder(pattern.inputs).tensor
    elif input_state is not None and input_state.num_qubits:
        raise StateError("Шаблон без входов не принимает входное состояние.")
    else:
        tensor = np.ones(())
    for _ in others:
        tensor = np.multiply.outer(tensor, plus_vector())
    labels = list(pattern.inputs) + others
    position = {label: index for index, label in enumerate(labels)}
    edges = [(position[u], position[v]) for u, v in pattern.graph.edges]
    return labels, tensor * cz_signs(len(labels), edges)


def _apply_output_corrections(tensor: np.ndarray, labels: Sequence[str], tracker: ByproductTracker) -> np.ndarray:
    for axis, label in enumerate(labels):
        x, z = tracker.correction(label)
        if x:
            tensor = apply_to_axes(tensor, PAULI_MATRICES["X"], [axis])
        if z:
            tensor = apply_to_axes(tensor, PAULI_MATRICES["Z"], [axis])
    return tensor


def iterate_pattern_branches(
    pattern: MeasurementPattern, input_state: PureState | None = None
) -> Iterator[PatternBranch]:
    """Every non-null outcome branch with its corrected, normalised output."""

    labels, tensor = _initial_tensor(pattern, input_state)
    cutoff = simulation_limits().zero_branch_cutoff
    stack = [(0, labels, tensor, ByproductTracker(pattern), ())]
    while stack:
        depth, labels, tensor, tracker, outcomes = stack.pop()
        if depth == len(pattern.order):
            probability = squared_norm(tensor)
            tensor = _apply_output_corrections(tensor, labels, tracker)
            output = PureState(tuple(labels), tensor / math.sqrt(probability)).reorder(pattern.outputs)
            yield PatternBranch(outcomes, probability, output)
            continue
        vertex = pattern.order[depth]
        axis = labels.index(vertex)
        delta = tracker.angle(vertex)
        remaining = labels[:axis] + labels[axis + 1 :]
        for outcome in (1, 0):
            projected = contract_axis(tensor, xy_bra(delta, outcome), axis)
            if squared_norm(projected) <= cutoff:
                continue
            child = tracker.copy()
            child.record(vertex, outcome)
            stack.append((depth + 1, remaining, projected, child, outcomes + ((vertex, outcome),)))


def run_pattern_local(pattern: MeasurementPattern, input_state: PureState | None = None) -> MixedState:
    """Average of all corrected branches; a valid pattern gives a pure result."""

    dimension = 2 ** len(pattern.outputs)
    total = np.zeros((dimension, dimension), dtype=complex)
    for branch in iterate_pattern_branches(pattern, input_state):
        vector = branch.output.vector
        total += branch.probability * np.outer(vector, vector.conj())
    return MixedState.from_matrix(pattern.outputs, total)


def pattern_unitary(pattern: MeasurementPattern) -> np.ndarray:
    """Isometry from the input register to the output register.

    Column ``i`` is the all-zero-outcome branch on basis input ``|i>`` scaled by
    ``sqrt(2^m)`` for ``m`` measured qubits.
    """

    if len(pattern.inputs) > 3:
        raise PatternError("Матрица шаблона строится не более чем для трёх входов.")
    columns = []
    scale = math.sqrt(2 ** len(pattern.order))
    for index in range(2 ** len(pattern.inputs)):
        bits = [(index >> (len(pattern.inputs) - 1 - position)) & 1 for position in range(len(pattern.inputs))]
        basis = np.zeros((2,) * len(pattern.inputs), dtype=complex)
        basis[tuple(bits)] = 1
        labels, tensor = _initial_tensor(pattern, PureState(pattern.inputs, basis) if pattern.inputs else None)
        for vertex in pattern.order:
            axis = labels.index(vertex)
            tensor = contract_axis(tensor, xy_bra(pattern.angles[vertex], 0), axis)
            labels = labels[:axis] + labels[axis + 1 :]
        order = [labels.index(vertex) for vertex in pattern.outputs]
        columns.append(np.transpose(tensor, order).reshape(-1) * scale)
    matrix = np.stack(columns, axis=1)
    if not np.allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[1]), atol=simulation_limits().tolerance):
        raise PatternError("Шаблон не детерминирован: его действие не унитарно.")
    return matrix


def output_state(pattern: MeasurementPattern, input_state: PureState | None = None) -> PureState:
    """``U(psi)`` on the output labels, computed from :func:`pattern_unitary`."""

    matrix = pattern_unitary(pattern)
    if pattern.inputs:
        if input_state is None:
            input_state = PureState(pattern.inputs, np.ones((2,) * len(pattern.inputs)) / math.sqrt(2 ** len(pattern.inputs)))
        vector = matrix @ input_state.reorder(pattern.inputs).vector
    else:
        vector = matrix[:, 0]
    return PureState.from_vector(pattern.outputs, vector)


def j_pattern(phi: Angle | int) -> MeasurementPattern:
    """Two-vertex pattern implementing ``J(phi)``."""

    return path_pattern([-Angle.of(phi)])


def x_basis_distribution(state: PureState) -> dict[tuple[int, ...], float]:
    """Outcome distribution of measuring every qubit of ``state`` in the X basis."""

    tensor = state.tensor
    for axis in range(state.num_qubits):
        tensor = apply_to_axes(tensor, GATES["H"], [axis])
    probabilities = np.abs(tensor.reshape(-1)) ** 2
    result = {}
    for index, probability in enumerate(probabilities):
        if probability > simulation_limits().zero_branch_cutoff:
            bits = tuple((index >> (state.num_qubits - 1 - k)) & 1 for k in range(state.num_qubits))
            result[bits] = float(probability)
    return result

