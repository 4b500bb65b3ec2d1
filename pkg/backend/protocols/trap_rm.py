"""Trap-based verification in the receive-and-measure setting.

The server builds the graph state of the dotted triple-graph DT(G) around the
client's one-time padded input and sends it qubit by qubit.  A secret
colouring splits DT(G) into computation, dummy and trap nodes: the client
measures the dummies in ``Z`` (cutting the traps loose), runs the computation
on the path of computation nodes and checks every trap against the parity of
its dummy neighbours.  A failed trap replaces the output by the abort marker.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from composable.ideal import flat_filter, s_ver
from composable.systems import Converter, Interface, Link, ResourceSystem, channel_resource, classical, compose, quantum, step, wire
from quantum.angles import A, PI, ZERO, Angle, parity
from quantum.graphstate import (
    DottedTripleGraph,
    Graph,
    NodeRole,
    TrapColoring,
    added_label,
    cz_signs,
    enumerate_trap_colorings,
)
from quantum.mbqc import ByproductTracker, MeasurementPattern, pattern_unitary
from quantum.pauli import PAULI_MATRICES, PauliString
from quantum.qstate import GATES, apply_to_axes, plus_vector, xy_bra

from .exceptions import PreconditionError
from .network import ServerDeviation, client_interface, rm_send_round

logger = logging.getLogger(__name__)

INPUT_ROUND = 1
BUILD_ROUND = 2


@dataclass(frozen=True)
class TrapRmInstance:
    """A path pattern delegated on DT(G) of its graph.

    ``coloring_keys`` restricts the colourings the client may draw (all of them
    by default); ``quantum_input=False`` lets the server prepare the input
    vertex in ``|+>`` like every other node.
    """

    pattern: MeasurementPattern
    quantum_input: bool = True
    coloring_keys: tuple[str, ...] | None = None
    path: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pattern = self.pattern
        if len(pattern.inputs) != 1 or len(pattern.outputs) != 1:
            raise PreconditionError("Проверка ловушками поддерживает шаблоны с одним входом и одним выходом.")
        path = pattern.order + pattern.outputs
        if path[0] != pattern.inputs[0] or len(pattern.graph.edges) != len(path) - 1:
            raise PreconditionError("Граф шаблона должен быть путём от входа к выходу.")
        for vertex, successor in zip(path, path[1:]):
            if pattern.flow[vertex] != successor:
                raise PreconditionError(f"Поток шаблона должен идти вдоль пути: {vertex} → {successor}.")
        object.__setattr__(self, "path", path)
        if self.coloring_keys is not None:
            object.__setattr__(self, "coloring_keys", tuple(self.coloring_keys))
            if not self.colorings():
                raise PreconditionError(f"Ни одна раскраска не соответствует ключам {list(self.coloring_keys)}.")

    @cached_property
    def dtg(self) -> DottedTripleGraph:
        return DottedTripleGraph(self.pattern.graph)

    @property
    def input_vertices(self) -> tuple[str, ...]:
        return self.pattern.inputs if self.quantum_input else ()

    @property
    def input_row(self) -> tuple[str, ...]:
        """Primary copies the client sends to the server, three per quantum input."""

        return tuple(label for vertex in self.input_vertices for label in self.dtg.primary[vertex])

    @property
    def send_order(self) -> tuple[str, ...]:
        return self.dtg.vertices

    def colorings(self) -> tuple[tuple[TrapColoring, float], ...]:
        """Colourings the client draws from, with renormalised probabilities."""

        pairs = [
            (coloring, probability)
            for coloring, probability in enumerate_trap_colorings(self.dtg, self.pattern.inputs)
            if self.coloring_keys is None or coloring.key() in self.coloring_keys
        ]
        total = sum(probability for _, probability in pairs)
        return tuple((coloring, probability / total) for coloring, probability in pairs)

    def dot(self, coloring: TrapColoring, u: str, v: str) -> str:
        """Added vertex between the computation copies of the base edge ``(u, v)``."""

        copies = coloring.computation_copies
        i, j = int(copies[u].rsplit(":", 1)[1]), int(copies[v].rsplit(":", 1)[1])
        return added_label(u, i, v, j) if (u, v) in self.dtg.added else added_label(v, j, u, i)

    def compiled(self, coloring: TrapColoring) -> MeasurementPattern:
        """The pattern on the computation nodes: base angles on copies, angle zero on dots."""

        labels: list[str] = []
        angles: dict[str, Angle] = {}
        for vertex, successor in zip(self.path, self.path[1:] + (None,)):
            label = coloring.computation_copies[vertex]
            labels.append(label)
            if successor is None:
                break
            angles[label] = self.pattern.angles[vertex]
            dot = self.dot(coloring, vertex, successor)
            labels.append(dot)
            angles[dot] = ZERO
        graph = Graph(labels, zip(labels, labels[1:]))
        return MeasurementPattern(
            graph=graph,
            order=tuple(labels[:-1]),
            angles=angles,
            flow=dict(zip(labels, labels[1:])),
            inputs=(labels[0],),
            outputs=(labels[-1],),
        )

    @cached_property
    def unitary(self) -> np.ndarray:
        """What an honest run applies to the input; independent of the colouring."""

        return pattern_unitary(self.compiled(self.colorings()[0][0]))

    def expected_output(self, input_vector: Sequence[complex] | None = None) -> np.ndarray:
        if not self.quantum_input or input_vector is None:
            input_vector = plus_vector()
        vector = np.asarray(input_vector, dtype=complex)
        return self.unitary @ (vector / np.linalg.norm(vector))

    def input_trap(self, coloring: TrapColoring, label: str) -> bool:
        return label in coloring.traps and label in self.input_row


def trap_rm_network(instance: TrapRmInstance, name: str = "net") -> ResourceSystem:
    """Client-to-server input row, server-to-client qubit per DT(G) node."""

    client, server = f"{name}.C", f"{name}.S"
    links = [Link(client, server, quantum(f"e_{label}")) for label in instance.input_row]
    links += [Link(server, client, quantum(f"q_{label}")) for label in instance.send_order]
    return channel_resource(name, links, endpoints=(client, server))


def final_round(instance: TrapRmInstance) -> int:
    return rm_send_round(len(instance.send_order), BUILD_ROUND)


def trap_rm_server(
    network: ResourceSystem,
    instance: TrapRmInstance,
    name: str = "server",
    deviation: ServerDeviation | None = None,
) -> Converter:
    """Entangle the input row with fresh ``|+>`` nodes along DT(G) and send every node."""

    bound = network.interface(f"{network.name}.S")
    deviation = deviation or ServerDeviation()
    dtg = instance.dtg
    received = set(instance.input_row)

    def build(ctx, memory):
        labels = {}
        for vertex in dtg.vertices:
            if vertex in received:
                (labels[vertex],) = ctx.read(bound.name, f"e_{vertex}")
            else:
                labels[vertex] = ctx.prepare_qubit(f"{name}.{vertex}", plus_vector())
        deviation.before_entangling(ctx, None, labels)
        for u, v in dtg.graph.edges:
            ctx.cz(labels[u], labels[v])
        deviation.after_entangling(ctx, None, labels)
        memory["labels"] = labels

    steps = [step(BUILD_ROUND, name, build)]
    for index, vertex in enumerate(instance.send_order):

        def send(ctx, memory, vertex=vertex):
            label = memory["labels"][vertex]
            deviation.before_send(ctx, vertex, label)
            ctx.send_qubits(bound.name, f"q_{vertex}", (label,))

        steps.append(step(rm_send_round(index, BUILD_ROUND), name, send))
    return Converter(name, "server", (bound,), (), tuple(steps))


def trap_rm_client_interface(instance: TrapRmInstance, name: str = "C") -> Interface:
    inputs = (quantum("psi", 1),) if instance.quantum_input else ()
    return Interface(name, inputs, (quantum("rho", 2), classical("abort")))


@dataclass
class TrapAudit:
    """Outcome and expected parity of every trap in one run."""

    coloring: str
    traps: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(outcome == expected for outcome, expected in self.traps.values())

    def as_dict(self) -> dict:
        return {"coloring": self.coloring, "traps": {label: list(pair) for label, pair in self.traps.items()}}


def _pad_input_row(ctx, instance: TrapRmInstance, coloring: TrapColoring, tracker: ByproductTracker, party: str, channel: str, register: Sequence[str]) -> dict[str, tuple[Angle, int]]:
    """One-time pad the input and prepare its trap and dummy partners; returns the trap secrets."""

    secrets = {}
    for position, vertex in enumerate(instance.input_vertices):
        for label in instance.dtg.primary[vertex]:
            role = coloring.role(label)
            if role is NodeRole.COMPUTATION:
                qubit = register[position]
                a, b = ctx.bit(party), ctx.bit(party)
                if a:
                    ctx.apply(GATES["X"], qubit)
                if b:
                    ctx.apply(GATES["Z"], qubit)
                tracker.pad_before_entangling(label, x=a)
                tracker.add(label, z=b)
            elif role is NodeRole.TRAP:
                theta, flip = ctx.sample(party, A), ctx.bit(party)
                secrets[label] = (theta, flip)
                qubit = ctx.prepare_qubit(f"{party}.{label}", plus_vector(theta.plus_pi(flip)))
            else:
                qubit = ctx.prepare_qubit(f"{party}.{label}", plus_vector(PI * ctx.bit(party)))
            ctx.send_qubits(channel, f"e_{label}", (qubit,))
    return secrets


def trap_rm_client(
    network: ResourceSystem,
    instance: TrapRmInstance,
    name: str = "client",
    interface: str = "C",
) -> Converter:
    """Client that verifies the delegated computation with isolated traps."""

    bound = client_interface(network)
    outer = trap_rm_client_interface(instance, interface)
    colorings = instance.colorings()
    options = [coloring for coloring, _ in colorings]
    weights = [probability for _, probability in colorings]
    graph = instance.dtg.graph

    def start(ctx, memory):
        coloring = ctx.sample(name, options, weights)
        logger.debug("Клиент выбрал раскраску %s", coloring.key())
        compiled = instance.compiled(coloring)
        tracker = ByproductTracker(compiled)
        register = ctx.read(interface, "psi") if instance.quantum_input else ()
        secrets = _pad_input_row(ctx, instance, coloring, tracker, name, bound.name, register)
        memory.update(coloring=coloring, compiled=compiled, tracker=tracker, secrets=secrets)

    def finish(ctx, memory):
        coloring, compiled, tracker = memory["coloring"], memory["compiled"], memory["tracker"]
        labels = {vertex: ctx.read(bound.name, f"q_{vertex}")[0] for vertex in instance.send_order}
        outcomes = {
            vertex: ctx.measure_z(name, labels[vertex]) for vertex in instance.send_order if vertex in coloring.dummies
        }

        def dummy_parity(vertex: str) -> int:
            return parity(outcomes[other] for other in graph.neighbors(vertex) if other in coloring.dummies)

        for vertex in compiled.graph.vertices:
            tracker.add(vertex, z=dummy_parity(vertex))
        for vertex in compiled.order:
            tracker.record(vertex, ctx.measure_xy(name, labels[vertex], tracker.angle(vertex)))

        audit = TrapAudit(coloring.key())
        for vertex in instance.send_order:
            if vertex not in coloring.traps:
                continue
            theta, flip = memory["secrets"].get(vertex, (ZERO, 0))
            outcome = ctx.measure_xy(name, labels[vertex], theta)
            audit.traps[vertex] = (outcome, flip ^ dummy_parity(vertex))
        ctx.audit["traps"] = audit

        (output,) = compiled.outputs
        if audit.passed:
            x, z = tracker.correction(output)
            if x:
                ctx.apply(GATES["X"], labels[output])
            if z:
                ctx.apply(GATES["Z"], labels[output])
            register = ctx.prepare(f"{name}.flag", (1, 0)) + (labels[output],)
        else:
            logger.warning("Ловушка не прошла проверку (раскраска %s)", coloring.key())
            ctx.discard((labels[output],))
            register = ctx.prepare(f"{name}.flag", (0, 1)) + ctx.prepare(f"{name}.rho", (1, 0))
        ctx.send_qubits(interface, "rho", register)
        ctx.write(interface, "abort", int(not audit.passed))

    steps = (step(INPUT_ROUND, name, start), step(final_round(instance), name, finish))
    return Converter(name, "client", (bound,), (outer,), steps)


def protocol1_trap_rm(instance: TrapRmInstance, deviation: ServerDeviation | None = None) -> ResourceSystem:
    """Client, server and network; the client interface ``C`` stays open."""

    network = trap_rm_network(instance)
    client = trap_rm_client(network, instance)
    server = trap_rm_server(network, instance, deviation=deviation)
    return compose([client, server], network, name=f"protocol1[{len(instance.dtg.vertices)}]")


def trap_rm_ideal(instance: TrapRmInstance) -> ResourceSystem:
    """``S^ver`` of the delegated unitary behind the honest-server filter."""

    if not instance.quantum_input:
        raise PreconditionError("Идеальный ресурс проверки строится только для квантового входа.")
    ideal = s_ver(instance.unitary)
    return wire(compose(flat_filter(ideal), ideal, name="ver♭"), {"ver.C": "C"})


# --- exact evaluation ---


@dataclass(frozen=True, slots=True)
class TrapRmOutcome:
    """Acceptance and failure probability of one server behaviour.

    ``p_fail`` is the probability of accepting an output orthogonal to the
    honest one; ``per_coloring`` keeps the same pair for every colouring.
    """

    p_accept: float
    p_fail: float
    per_coloring: tuple[tuple[str, float, float], ...] = ()

    @property
    def p_abort(self) -> float:
        return 1 - self.p_accept

    def as_dict(self) -> dict:
        return {
            "p_accept": self.p_accept,
            "p_fail": self.p_fail,
            "per_coloring": [list(item) for item in self.per_coloring],
        }


@dataclass(frozen=True)
class _ColoringLayout:
    """Axis order and dummy parities of one colouring; dummy outcomes index the batch axis."""

    compiled: MeasurementPattern
    permutation: tuple[int, ...]
    dummies: int
    corrections: dict[str, np.ndarray]
    traps: tuple[str, ...]
    trap_parities: tuple[np.ndarray, ...]


class TrapRmEvaluator:
    """Exact statistics of the protocol under a Pauli deviation of the server.

    The client's Pauli pads cancel exactly against its own corrections, so the
    evaluator fixes them to zero and only averages the rotation of input traps,
    and only when the deviation can see it.  Dummy outcomes form a batch axis;
    computation outcomes are enumerated depth first.
    """

    def __init__(self, instance: TrapRmInstance, input_vector: Sequence[complex] | None = None):
        self.instance = instance
        dtg = instance.dtg
        self.labels = dtg.vertices
        self.position = {label: index for index, label in enumerate(self.labels)}
        self.signs = cz_signs(len(self.labels), [(self.position[u], self.position[v]) for u, v in dtg.graph.edges])
        vector = np.asarray(input_vector if input_vector is not None else (1, 0), dtype=complex)
        self.input_vector = vector / np.linalg.norm(vector)
        self.expected = instance.expected_output(self.input_vector)
        self.colorings = instance.colorings()
        self._layouts: dict[str, _ColoringLayout] = {}

    def _initial(self, coloring: TrapColoring, theta: Angle) -> np.ndarray:
        vectors = []
        for label in self.labels:
            if label in coloring.input_positions and self.instance.quantum_input:
                vectors.append(self.input_vector)
            elif self.instance.input_trap(coloring, label):
                vectors.append(plus_vector(theta))
            else:
                vectors.append(plus_vector())
        return reduce(np.multiply.outer, vectors)

    def _layout(self, coloring: TrapColoring) -> _ColoringLayout:
        key = coloring.key()
        if key in self._layouts:
            return self._layouts[key]
        graph = self.instance.dtg.graph
        compiled = self.instance.compiled(coloring)
        dummies = [label for label in self.labels if label in coloring.dummies]
        traps = tuple(label for label in self.labels if label in coloring.traps)
        order = dummies + list(compiled.order) + list(compiled.outputs) + list(traps)
        batch = 2 ** len(dummies)
        bits = (np.arange(batch)[:, None] >> np.arange(len(dummies) - 1, -1, -1)) & 1
        column = {label: index for index, label in enumerate(dummies)}

        def dummy_parity(vertex: str) -> np.ndarray:
            columns = [column[other] for other in graph.neighbors(vertex) if other in column]
            return bits[:, columns].sum(axis=1) & 1 if columns else np.zeros(batch, dtype=int)

        layout = _ColoringLayout(
            compiled=compiled,
            permutation=tuple(self.position[label] for label in order),
            dummies=len(dummies),
            corrections={vertex: dummy_parity(vertex) for vertex in compiled.graph.vertices},
            traps=traps,
            trap_parities=tuple(dummy_parity(label) for label in traps),
        )
        self._layouts[key] = layout
        return layout

    def _apply(self, tensor: np.ndarray, pauli: PauliString) -> np.ndarray:
        for label, letter in pauli.letters:
            tensor = apply_to_axes(tensor, PAULI_MATRICES[letter], [self.position[label]])
        return tensor

    def _input_traps_hit(self, coloring: TrapColoring, pauli: PauliString) -> bool:
        return any(
            self.instance.input_trap(coloring, label) and letter in ("X", "Y") for label, letter in pauli.letters
        )

    def evaluate(self, pauli: PauliString | None = None, before_entangling: bool = False) -> TrapRmOutcome:
        """``pauli`` acts right after the CZ layer, or right before it with ``before_entangling``."""

        pauli = pauli or PauliString()
        unknown = set(pauli.support) - set(self.labels)
        if unknown:
            raise PreconditionError(f"Атака затрагивает кубиты вне DT(G): {sorted(unknown)}.")
        accept = fail = 0.0
        rows = []
        for coloring, probability in self.colorings:
            thetas = A if self._input_traps_hit(coloring, pauli) else (ZERO,)
            local_accept = local_fail = 0.0
            for theta in thetas:
                tensor = self._initial(coloring, theta)
                if before_entangling:
                    tensor = self._apply(tensor, pauli) * self.signs
                else:
                    tensor = self._apply(tensor * self.signs, pauli)
                a, f = self._statistics(coloring, tensor, theta)
                local_accept += a / len(thetas)
                local_fail += f / len(thetas)
            rows.append((coloring.key(), local_accept, local_fail))
            accept += probability * local_accept
            fail += probability * local_fail
        return TrapRmOutcome(accept, fail, tuple(rows))

    def _statistics(self, coloring: TrapColoring, tensor: np.ndarray, theta: Angle) -> tuple[float, float]:
        layout = self._layout(coloring)
        tensor = np.transpose(tensor, layout.permutation)
        tensor = tensor.reshape((2**layout.dummies,) + tensor.shape[layout.dummies:])
        trap_bras = []
        for label, parities in zip(layout.traps, layout.trap_parities):
            angle = theta if self.instance.input_trap(coloring, label) else ZERO
            trap_bras.append(np.stack([xy_bra(angle, 0), xy_bra(angle, 1)])[parities])
        return self._descend(tensor, 0, ByproductTracker(layout.compiled), layout, trap_bras)

    def _descend(self, tensor, depth, tracker, layout, trap_bras) -> tuple[float, float]:
        compiled = layout.compiled
        if depth == len(compiled.order):
            return self._settle(tensor, tracker, layout, trap_bras)
        vertex = compiled.order[depth]
        angle = tracker.angle(vertex)
        pair = np.stack([xy_bra(angle, 0), xy_bra(angle, 1)])
        accept = fail = 0.0
        for outcome in (0, 1):
            # a dummy Z on the vertex swaps which bra yields the outcome
            projected = np.einsum("bi...,bi->b...", tensor, pair[outcome ^ layout.corrections[vertex]])
            child = tracker.copy()
            child.record(vertex, outcome)
            a, f = self._descend(projected, depth + 1, child, layout, trap_bras)
            accept += a
            fail += f
        return accept, fail

    def _settle(self, tensor, tracker, layout, trap_bras) -> tuple[float, float]:
        for bras in reversed(trap_bras):
            tensor = np.einsum("b...i,bi->b...", tensor, bras)
        (output,) = layout.compiled.outputs
        x, z = tracker.correction(output)
        if x:
            tensor = tensor[:, ::-1]
        signs = 1 - 2 * (layout.corrections[output] ^ z)
        tensor = np.stack([tensor[:, 0], tensor[:, 1] * signs], axis=1)
        norms = np.sum(np.abs(tensor) ** 2, axis=1)
        overlaps = np.abs(tensor @ self.expected.conj()) ** 2
        return float(norms.sum()), float((norms - overlaps).sum())
