"""Stabilizer tests of graph states in both communication settings.

Receive-and-measure: the client measures the received state, ``X`` on one
colour class and ``Z`` on the other, and checks the parity of every generator
with ``X`` on the first class.  Prepare-and-send: the client prepares each
vertex in an eigenstate of the tested element's letter (``|+>`` or ``|+i>``
for ``X``/``Y``, ``|r>`` for ``Z``, a maximally mixed qubit for ``I``), asks
for blind ``X`` measurements of every vertex and checks the parity of the
decoded outcomes and its own ``Z`` preparation bits.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from composable.systems import Converter, Interface, Link, ResourceSystem, channel_resource, classical, quantum, step
from quantum.angles import A, PI, ZERO, Angle, parity
from quantum.conf import simulation_limits
from quantum.graphstate import Graph, TwoColoring, cz_signs, find_two_coloring, stabilizer_element
from quantum.pauli import PauliString
from quantum.qstate import GATES, PureState, apply_to_axes, plus_vector, xy_bra, z_bra, zrot

from .exceptions import MessageError, PreconditionError
from .network import BITS, PsLayout, client_interface
from .ubqc import NodeSecret

logger = logging.getLogger(__name__)

Y_ANGLE = Angle(4)


class PrepKind(str, Enum):
    PLUS = "plus"
    Z_BASIS = "z"
    MAX_MIXED = "mixed"


@dataclass(frozen=True, slots=True)
class PrepInstruction:
    """How the client prepares one vertex; ``letter`` selects ``|+>`` or ``|+i>`` for ``PLUS``."""

    kind: PrepKind
    letter: str = "X"

    @property
    def angle(self) -> Angle:
        return Y_ANGLE if self.letter == "Y" else ZERO

    @property
    def pauli_letter(self) -> str:
        if self.kind is PrepKind.PLUS:
            return self.letter
        return "Z" if self.kind is PrepKind.Z_BASIS else "I"


@dataclass(frozen=True, slots=True)
class ParityCheck:
    """Accept iff the decoded outcomes on ``xy``, the bits on ``z`` and ``phase_bit`` XOR to zero."""

    xy: tuple[str, ...]
    z: tuple[str, ...] = ()
    phase_bit: int = 0

    def holds(self, outcomes: Mapping[str, int], bits: Mapping[str, int]) -> bool:
        return parity([outcomes[v] for v in self.xy] + [bits[v] for v in self.z] + [self.phase_bit]) == 0


@dataclass(frozen=True)
class StabilizerTest:
    """Per-vertex preparations and parity checks of one prepare-and-send test round."""

    graph: Graph
    instructions: Mapping[str, PrepInstruction]
    checks: tuple[ParityCheck, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "instructions", dict(self.instructions))
        object.__setattr__(self, "checks", tuple(self.checks))
        if set(self.instructions) != set(self.graph.vertices):
            raise PreconditionError("Инструкция подготовки должна быть задана для каждой вершины.")
        for check in self.checks:
            for vertex in check.xy:
                if self.instructions[vertex].kind is not PrepKind.PLUS:
                    raise PreconditionError(f"Вершина {vertex} проверяется по исходу, но не готовится в |+>.")
            for vertex in check.z:
                if self.instructions[vertex].kind is not PrepKind.Z_BASIS:
                    raise PreconditionError(f"Вершина {vertex} проверяется по биту подготовки, но не готовится в базисе Z.")

    def accepts(self, outcomes: Mapping[str, int], bits: Mapping[str, int]) -> bool:
        return all(check.holds(outcomes, bits) for check in self.checks)

    def element(self) -> PauliString:
        return PauliString(tuple((vertex, self.instructions[vertex].pauli_letter) for vertex in self.graph.vertices))


def stab_to_ps(graph: Graph, stab: PauliString) -> StabilizerTest:
    """Translate the measurement of a stabilizer element into a prepare-and-send test."""

    if stab.is_identity:
        raise PreconditionError("Тождественный элемент не содержит проверки.")
    if not stab.is_hermitian:
        raise PreconditionError(f"Элемент {stab} не эрмитов.")
    unknown = set(stab.support) - set(graph.vertices)
    if unknown:
        raise PreconditionError(f"Элемент {stab} содержит вершины вне графа: {sorted(unknown)}.")
    xy = tuple(vertex for vertex in graph.vertices if stab.letter(vertex) in ("X", "Y"))
    expected = stabilizer_element(graph, xy)
    if expected.without_phase() != stab.without_phase() or expected.phase != stab.phase:
        raise PreconditionError(f"Элемент {stab} не принадлежит группе стабилизаторов графа.")
    instructions = {}
    for vertex in graph.vertices:
        letter = stab.letter(vertex)
        if letter in ("X", "Y"):
            instructions[vertex] = PrepInstruction(PrepKind.PLUS, letter)
        elif letter == "Z":
            instructions[vertex] = PrepInstruction(PrepKind.Z_BASIS)
        else:
            instructions[vertex] = PrepInstruction(PrepKind.MAX_MIXED)
    z = tuple(vertex for vertex in graph.vertices if stab.letter(vertex) == "Z")
    return StabilizerTest(graph, instructions, (ParityCheck(xy, z, 1 if stab.phase == 2 else 0),))


def require_two_coloring(graph: Graph) -> TwoColoring:
    coloring = find_two_coloring(graph)
    if not isinstance(coloring, TwoColoring):
        raise PreconditionError(f"Граф не двудольный: нечётный цикл {list(coloring.vertices)}.")
    return coloring


def ordered_classes(coloring: TwoColoring, swapped: bool) -> tuple[frozenset[str], frozenset[str]]:
    """Both colour classes, black first unless ``swapped``."""

    return (coloring.white, coloring.black) if swapped else (coloring.black, coloring.white)


def generator_checks(graph: Graph, tested: Iterable[str]) -> tuple[ParityCheck, ...]:
    members = set(tested)
    return tuple(ParityCheck((vertex,), graph.neighbors(vertex)) for vertex in graph.vertices if vertex in members)


def coloring_test(graph: Graph, coloring: TwoColoring, swapped: bool = False) -> StabilizerTest:
    """Prepare-and-send round checking every generator centred on one colour class at once."""

    fixed, tested = ordered_classes(coloring, swapped)
    instructions = {
        vertex: PrepInstruction(PrepKind.Z_BASIS) if vertex in fixed else PrepInstruction(PrepKind.PLUS)
        for vertex in graph.vertices
    }
    return StabilizerTest(graph, instructions, generator_checks(graph, tested))


# --- prepare-and-send client ---


def round_layout(graph: Graph, prefix: str = "", start: int = 1) -> PsLayout:
    return PsLayout(graph, graph.vertices, (), prefix, start)


class CheckSession:
    """Client side of one prepare-and-send test round; a fresh instance per run."""

    def __init__(self, test: StabilizerTest, layout: PsLayout, party: str, channel: str, blind: bool = True):
        if set(layout.measured) != set(test.graph.vertices):
            raise PreconditionError("В тестовом раунде сервер должен измерить каждую вершину.")
        self.test = test
        self.layout = layout
        self.party = party
        self.channel = channel
        self.blind = blind
        self.secrets: dict[str, NodeSecret] = {}
        self.bits: dict[str, int] = {}

    def _secret(self, ctx, instruction: PrepInstruction) -> tuple[np.ndarray, NodeSecret, int]:
        party = self.party
        theta = ctx.sample(party, A) if self.blind else ZERO
        r = ctx.bit(party) if self.blind else 0
        if instruction.kind is PrepKind.PLUS:
            flip = ctx.bit(party) if self.blind else 0
            return plus_vector(instruction.angle + theta + PI * flip), NodeSecret(theta, flip, r), 0
        if instruction.kind is PrepKind.Z_BASIS:
            bit = ctx.bit(party)
            return np.conj(z_bra(bit)), NodeSecret(theta, 0, r), bit
        # a Z-flip mixture of |+^theta> is maximally mixed
        flip = ctx.bit(party)
        return plus_vector(theta + PI * flip), NodeSecret(theta, 0, r), 0

    def prepare(self, ctx) -> None:
        for vertex in self.test.graph.vertices:
            vector, self.secrets[vertex], self.bits[vertex] = self._secret(ctx, self.test.instructions[vertex])
            label = ctx.prepare_qubit(f"{self.party}.{self.layout.prefix}{vertex}", vector)
            ctx.send_qubits(self.channel, self.layout.message("q", vertex), (label,))

    def send_angle(self, ctx, vertex: str) -> None:
        ctx.write(self.channel, self.layout.message("delta", vertex), self.secrets[vertex].delta(ZERO))

    def finish(self, ctx) -> bool:
        outcomes = {
            vertex: self.secrets[vertex].decode(ctx.read(self.channel, self.layout.message("s", vertex)))
            for vertex in self.layout.measured
        }
        accepted = self.test.accepts(outcomes, self.bits)
        if not accepted:
            logger.debug("Тестовый раунд %s отклонён", self.layout.prefix or self.test.element())
        return accepted


def ps_test_client(
    network: ResourceSystem,
    test: StabilizerTest,
    layout: PsLayout | None = None,
    name: str = "client",
    interface: str = "C",
    blind: bool = True,
) -> Converter:
    """Client of one prepare-and-send test round; writes ``accept`` to ``interface``."""

    layout = layout or round_layout(test.graph)
    bound = client_interface(network)
    outer = Interface(interface, (), (classical("accept", BITS),))

    def prepare(ctx, memory):
        memory["session"] = CheckSession(test, layout, name, bound.name, blind)
        memory["session"].prepare(ctx)

    steps = [step(layout.prepare_round, name, prepare)]
    for vertex in layout.measured:

        def send_angle(ctx, memory, vertex=vertex):
            memory["session"].send_angle(ctx, vertex)

        steps.append(step(layout.delta_round(vertex), name, send_angle))

    def decide(ctx, memory):
        ctx.write(interface, "accept", int(memory["session"].finish(ctx)))

    steps.append(step(layout.finish_round, name, decide))
    return Converter(name, "client", (bound,), (outer,), tuple(steps))


# --- receive-and-measure pattern test ---


@dataclass(frozen=True)
class RmPatternTest:
    """Receive-and-measure test: measurement basis per vertex and generator parities."""

    graph: Graph
    bases: Mapping[str, str]
    checks: tuple[ParityCheck, ...]

    def accepts(self, outcomes: Mapping[str, int]) -> bool:
        return all(check.holds(outcomes, outcomes) for check in self.checks)


def stab_test_rm(graph: Graph, coloring: TwoColoring | None = None, swapped: bool = False) -> RmPatternTest:
    """``X`` on one colour class, ``Z`` on the other; one check per ``X``-measured vertex."""

    coloring = coloring or require_two_coloring(graph)
    tested, fixed = ordered_classes(coloring, swapped)
    bases = {vertex: "X" if vertex in tested else "Z" for vertex in graph.vertices}
    return RmPatternTest(graph, bases, generator_checks(graph, tested))


def stab_test_rm_client(network: ResourceSystem, test: RmPatternTest, name: str = "client", interface: str = "C", start: int = 1) -> Converter:
    """Measure every received qubit in its basis; expects the qubits in graph order."""

    bound = client_interface(network)
    outer = Interface(interface, (), (classical("accept", BITS),))
    vertices = test.graph.vertices

    def measure_all(ctx, memory):
        outcomes = {}
        for vertex in vertices:
            (label,) = ctx.read(bound.name, f"q_{vertex}")
            if test.bases[vertex] == "X":
                outcomes[vertex] = ctx.measure_xy(name, label, ZERO)
            else:
                outcomes[vertex] = ctx.measure_z(name, label)
        ctx.write(interface, "accept", int(test.accepts(outcomes)))

    return Converter(name, "client", (bound,), (outer,), (step(start + 2 * len(vertices) + 1, name, measure_all),))


def rm_pattern_reject_probability(test: RmPatternTest, state: PureState) -> float:
    """Exact rejection probability of ``test`` on the state the server sends."""

    labels = test.graph.vertices
    tensor = state.reorder(labels).tensor
    for axis, vertex in enumerate(labels):
        if test.bases[vertex] == "X":
            tensor = apply_to_axes(tensor, GATES["H"], [axis])
    probabilities = np.abs(tensor.reshape(-1)) ** 2
    n = len(labels)
    position = {vertex: n - 1 - index for index, vertex in enumerate(labels)}
    indices = np.arange(2**n)
    failed = np.zeros(2**n, dtype=bool)
    for check in test.checks:
        bits = np.zeros(2**n, dtype=np.int64)
        for vertex in check.xy + check.z:
            bits ^= (indices >> position[vertex]) & 1
        failed |= (bits ^ check.phase_bit).astype(bool)
    return float(probabilities[failed].sum())


def rm_reject_probability(graph: Graph, stab: PauliString, state: PureState) -> float:
    """Rejection probability of measuring the Hermitian element ``stab`` on ``state``."""

    if not stab.is_hermitian:
        raise PreconditionError(f"Элемент {stab} не эрмитов.")
    return float((1 - state.reorder(graph.vertices).expectation(stab).real) / 2)


# --- exact per-node evaluation of prepare-and-send tests ---

Kernel = np.ndarray


def _projector(vector: np.ndarray) -> np.ndarray:
    return np.outer(vector, vector.conj())


def _xy_projectors(delta: Angle) -> tuple[np.ndarray, np.ndarray]:
    return _projector(np.conj(xy_bra(delta, 0))), _projector(np.conj(xy_bra(delta, 1)))


def _kernel(terms: Iterable[tuple[float, np.ndarray, Angle, Callable[[int], int]]]) -> Kernel:
    """``sum_w p(w) sum_s (-1)^{c(s)} rho(w)^T ⊗ M_s(w)`` on the axes ``(in, out)``."""

    total = np.zeros((4, 4), dtype=complex)
    for probability, rho, delta, sign_bit in terms:
        for outcome, projector in enumerate(_xy_projectors(delta)):
            sign = -1 if sign_bit(outcome) else 1
            total += probability * sign * np.kron(rho.T, projector)
    return total


def ps_node_kernel(instruction: PrepInstruction, participates: bool, blind: bool = True) -> Kernel:
    thetas = A if blind else (ZERO,)
    flips = BITS if blind else (0,)
    terms = []
    if instruction.kind is PrepKind.PLUS:
        share = 1 / (len(thetas) * len(flips) ** 2)
        for theta, flip, r in itertools.product(thetas, flips, flips):
            rho = _projector(plus_vector(instruction.angle + theta + PI * flip))
            terms.append((share, rho, theta + PI * r, lambda s, r=r, flip=flip: participates and (s ^ r ^ flip)))
    elif instruction.kind is PrepKind.Z_BASIS:
        share = 1 / (2 * len(thetas) * len(flips))
        for bit, theta, r in itertools.product(BITS, thetas, flips):
            rho = _projector(np.conj(z_bra(bit)))
            terms.append((share, rho, theta + PI * r, lambda s, bit=bit: participates and bit))
    else:
        share = 1 / (2 * len(thetas) * len(flips))
        for flip, theta, r in itertools.product(BITS, thetas, flips):
            rho = _projector(plus_vector(theta + PI * flip))
            terms.append((share, rho, theta + PI * r, lambda s: 0))
    return _kernel(terms)


def rm_prime_node_kernel(letter: str, participates: bool) -> Kernel:
    """Kernel of one node of the reduced receive-and-measure test behind the simulator ``σ_S``."""

    if letter == "I":
        return np.kron(np.eye(2) / 2, np.eye(2)).astype(complex)
    if letter == "Z":
        halves = [_projector(np.conj(z_bra(m))) for m in BITS]
    else:
        angle = Y_ANGLE if letter == "Y" else ZERO
        halves = [_projector(plus_vector(angle, m)) for m in BITS]
    terms = []
    share = 1 / (2 * len(A))
    for theta, b, m in itertools.product(A, BITS, BITS):
        rotation = zrot(theta)
        rho = rotation @ halves[m].T @ rotation.conj().T / 2
        if letter == "Z":
            sign_bit = lambda s, m=m: participates and m
        else:
            sign_bit = lambda s, m=m, b=b: participates and (m ^ s ^ b)
        terms.append((share, rho, theta + PI * b, sign_bit))
    return _kernel(terms)


def honest_server(graph: Graph) -> np.ndarray:
    """``E_G`` as a diagonal matrix in ``graph.vertices`` order."""

    n = len(graph)
    edges = [(graph.index(u), graph.index(v)) for u, v in graph.edges]
    return np.diag(cz_signs(n, edges).reshape(-1))


def _vectorised(unitary: np.ndarray, n: int) -> np.ndarray:
    if unitary.shape != (2**n, 2**n):
        raise MessageError(f"Действие сервера должно быть матрицей {2**n}×{2**n}.")
    return np.asarray(unitary, dtype=complex).T.reshape((2,) * (2 * n))


def _participation(test: StabilizerTest, subset: Sequence[ParityCheck]) -> tuple[dict[str, bool], int]:
    counts: dict[str, int] = dict.fromkeys(test.graph.vertices, 0)
    phase = 0
    for check in subset:
        for vertex in check.xy + check.z:
            counts[vertex] += 1
        phase ^= check.phase_bit
    return {vertex: bool(count & 1) for vertex, count in counts.items()}, phase


def link_reject_probability(
    test: StabilizerTest,
    unitary: np.ndarray,
    kernel: Callable[[str, bool], Kernel],
) -> float:
    """Probability that some check of ``test`` fails when the server applies ``unitary``.

    The acceptance indicator is expanded over subsets ``T`` of the checks,
    ``P(all pass) = 2^-m sum_T (-1)^{phase(T)} E[(-1)^{parity(T)}]``, and every
    expectation is a link product of per-node kernels with the vectorised
    server action.
    """

    n = len(test.graph)
    vector = _vectorised(unitary, n)
    passing = 0.0
    for size in range(len(test.checks) + 1):
        for subset in itertools.combinations(test.checks, size):
            participates, phase = _participation(test, subset)
            image = vector
            for axis, vertex in enumerate(test.graph.vertices):
                image = apply_to_axes(image, kernel(vertex, participates[vertex]), [axis, n + axis])
            value = float(np.vdot(vector, image).real)
            passing += -value if phase else value
    reject = 1 - passing / 2 ** len(test.checks)
    return min(1.0, max(0.0, reject))


def ps_reject_probability(test: StabilizerTest, unitary: np.ndarray | None = None, blind: bool = True) -> float:
    """Exact rejection probability of a prepare-and-send round, averaged over all client randomness."""

    unitary = honest_server(test.graph) if unitary is None else unitary
    cache: dict[tuple[str, bool], Kernel] = {}

    def kernel(vertex: str, participates: bool) -> Kernel:
        key = (vertex, participates)
        if key not in cache:
            cache[key] = ps_node_kernel(test.instructions[vertex], participates, blind)
        return cache[key]

    return link_reject_probability(test, unitary, kernel)


def rm_prime_reject_probability(test: StabilizerTest, unitary: np.ndarray | None = None) -> float:
    """Rejection probability of the reduced client behind ``σ_S`` facing the same server action."""

    unitary = honest_server(test.graph) if unitary is None else unitary
    cache: dict[tuple[str, bool], Kernel] = {}

    def kernel(vertex: str, participates: bool) -> Kernel:
        letter = test.instructions[vertex].pauli_letter
        if (letter, participates) not in cache:
            cache[(letter, participates)] = rm_prime_node_kernel(letter, participates)
        return cache[(letter, participates)]

    return link_reject_probability(test, unitary, kernel)


def honest_acceptance(test: StabilizerTest, blind: bool = True) -> bool:
    return ps_reject_probability(test, blind=blind) <= simulation_limits().tolerance


# --- the simulator σ_S and the reduced client ---


def halves_network(graph: Graph, name: str = "rmnet") -> ResourceSystem:
    """Channel from the simulator side ``{name}.Sim`` to the reduced client ``{name}.C``."""

    source, target = f"{name}.Sim", f"{name}.C"
    links = []
    for vertex in graph.vertices:
        links.append(Link(source, target, quantum(f"h_{vertex}")))
        links.append(Link(source, target, classical(f"s_{vertex}", BITS)))
    return channel_resource(name, links, endpoints=(target, source))


def sigma_s_stab(halves: ResourceSystem, server_view: Interface, layout: PsLayout, name: str = "σS") -> Converter:
    """Simulator that turns the receive-and-measure world into the prepare-and-send server view.

    For every vertex it prepares an EPR pair, rotates the half it sends by a
    random ``theta`` in A, announces ``delta = theta + b * pi`` and, once the
    server has answered ``s'``, forwards the kept half and ``s' ⊕ b``.
    """

    bound = halves.interface(f"{halves.name}.Sim")
    vertices = layout.graph.vertices

    def prepare(ctx, memory):
        for vertex in vertices:
            kept, sent = ctx.prepare(f"{name}.{vertex}", np.array([1, 0, 0, 1]) / np.sqrt(2))
            theta = ctx.sample(name, A)
            ctx.apply_phase(sent, theta)
            memory[vertex] = {"kept": kept, "theta": theta}
            ctx.send_qubits(server_view.name, layout.message("q", vertex), (sent,))

    steps = [step(layout.prepare_round, name, prepare)]
    for vertex in layout.measured:

        def announce(ctx, memory, vertex=vertex):
            b = ctx.bit(name)
            memory[vertex]["b"] = b
            ctx.write(server_view.name, layout.message("delta", vertex), memory[vertex]["theta"] + PI * b)

        steps.append(step(layout.delta_round(vertex), name, announce))

    def forward(ctx, memory):
        for vertex in vertices:
            reported = ctx.read(server_view.name, layout.message("s", vertex))
            ctx.send_qubits(bound.name, f"h_{vertex}", (memory[vertex]["kept"],))
            ctx.write(bound.name, f"s_{vertex}", reported ^ memory[vertex]["b"])

    steps.append(step(layout.return_round, name, forward))
    return Converter(name, "simulator", (bound,), (server_view,), tuple(steps))


def stab_test_rm_prime(halves: ResourceSystem, test: StabilizerTest, round_number: int, name: str = "client", interface: str = "C") -> Converter:
    """Reduced receive-and-measure client: measures its halves per letter and XORs in the announced bits."""

    bound = halves.interface(f"{halves.name}.C")
    outer = Interface(interface, (), (classical("accept", BITS),))

    def decide(ctx, memory):
        outcomes, bits = {}, {}
        for vertex in test.graph.vertices:
            (label,) = ctx.read(bound.name, f"h_{vertex}")
            announced = ctx.read(bound.name, f"s_{vertex}")
            letter = test.instructions[vertex].pauli_letter
            if letter == "I":
                ctx.discard((label,))
                continue
            if letter == "Z":
                bits[vertex] = ctx.measure_z(name, label)
                continue
            m = ctx.measure_xy(name, label, Y_ANGLE if letter == "Y" else ZERO)
            outcomes[vertex] = m ^ announced
        ctx.write(interface, "accept", int(test.accepts(outcomes, bits)))

    return Converter(name, "client", (bound,), (outer,), (step(round_number, name, decide),))
