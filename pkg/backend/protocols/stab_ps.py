"""Verifiable delegation by repeated stabilizer tests in the prepare-and-send setting.

The client splits ``2k + 1`` rounds at random into ``k`` test rounds of the
first colour pattern, ``k`` of the swapped one and a single computation round.
The server cannot tell the rounds apart: every round sends the same number of
qubits and asks for the same number of angles, all uniformly distributed.
The client outputs the computation result only when every test round passes.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from composable.systems import Converter, Interface, ResourceSystem, classical, compose, step
from quantum.graphstate import Graph, TwoColoring
from quantum.mbqc import MeasurementPattern, encode_classical_input, output_state, x_basis_distribution

from .exceptions import PreconditionError
from .network import BITS, PsLayout, ServerDeviation, chained_layouts, client_interface, ps_network, ps_server
from .stabilizer import CheckSession, coloring_test, require_two_coloring
from .ubqc import UbqcSession

logger = logging.getLogger(__name__)

BOTTOM = "⊥"
MAX_TEST_PAIRS = 3


class RoundKind(str, Enum):
    FIRST_TEST = "T1"
    SECOND_TEST = "T2"
    COMPUTATION = "C"


@dataclass(frozen=True, slots=True)
class StabRoundPlan:
    """Kind of every round, in execution order."""

    kinds: tuple[RoundKind, ...]

    def __post_init__(self) -> None:
        count = len(self.kinds)
        if count % 2 == 0:
            raise PreconditionError(f"Число раундов {count} должно быть нечётным.")
        k = count // 2
        if (
            self.kinds.count(RoundKind.FIRST_TEST) != k
            or self.kinds.count(RoundKind.SECOND_TEST) != k
            or self.kinds.count(RoundKind.COMPUTATION) != 1
        ):
            raise PreconditionError(f"План {self.label} не делит раунды на k, k и 1.")

    @property
    def k(self) -> int:
        return len(self.kinds) // 2

    @property
    def label(self) -> str:
        return ",".join(kind.value for kind in self.kinds)

    def rounds(self, kind: RoundKind) -> tuple[int, ...]:
        """One-based numbers of the rounds of ``kind``."""

        return tuple(index for index, value in enumerate(self.kinds, start=1) if value is kind)

    @property
    def computation_round(self) -> int:
        return self.rounds(RoundKind.COMPUTATION)[0]


def _check_k(k: int) -> None:
    if not 1 <= k <= MAX_TEST_PAIRS:
        raise PreconditionError(f"Число пар тестовых раундов k = {k} вне диапазона 1..{MAX_TEST_PAIRS}.")


def all_round_plans(k: int) -> tuple[StabRoundPlan, ...]:
    """Every partition of ``2k + 1`` rounds, in lexicographic order of the kinds."""

    _check_k(k)
    multiset = [RoundKind.FIRST_TEST] * k + [RoundKind.SECOND_TEST] * k + [RoundKind.COMPUTATION]
    return tuple(StabRoundPlan(kinds) for kinds in sorted(set(itertools.permutations(multiset))))


def sample_round_plan(k: int, rng: np.random.Generator) -> StabRoundPlan:
    plans = all_round_plans(k)
    return plans[int(rng.integers(len(plans)))]


def expected_output(pattern: MeasurementPattern, bits: Mapping[str, int]) -> tuple[int, ...]:
    """Outcome of measuring the outputs in the X basis; the computation must be deterministic."""

    distribution = x_basis_distribution(output_state(encode_classical_input(pattern, bits)))
    if len(distribution) != 1:
        raise PreconditionError(
            f"Вычисление с классическим входом должно давать один исход, а не {len(distribution)}."
        )
    return next(iter(distribution))


def round_sessions(pattern: MeasurementPattern, k: int, start: int = 1) -> tuple[PsLayout, ...]:
    """Layouts of all ``2k + 1`` rounds; every round measures every vertex in the computation order."""

    _check_k(k)
    order = pattern.order + pattern.outputs
    return chained_layouts([(pattern.graph, order, ())] * (2 * k + 1), start=start)


def _open_session(
    kind: RoundKind,
    graph: Graph,
    coloring: TwoColoring,
    computation: MeasurementPattern,
    layout: PsLayout,
    party: str,
    channel: str,
):
    if kind is RoundKind.COMPUTATION:
        return UbqcSession(computation, layout, party, channel)
    return CheckSession(coloring_test(graph, coloring, swapped=kind is RoundKind.SECOND_TEST), layout, party, channel)


def _check_inputs(graph: Graph, pattern: MeasurementPattern, bits: Mapping[str, int]) -> TwoColoring:
    coloring = require_two_coloring(graph)
    if pattern.graph != graph:
        raise PreconditionError("Граф вычисления должен совпадать с тестируемым графом.")
    if set(bits) != set(pattern.inputs):
        raise PreconditionError(f"Классический вход задаётся на всех входных вершинах: {list(pattern.inputs)}.")
    return coloring


def protocol3_client(
    network: ResourceSystem,
    graph: Graph,
    pattern: MeasurementPattern,
    bits: Mapping[str, int],
    layouts: Sequence[PsLayout],
    name: str = "client",
    interface: str = "C",
) -> Converter:
    """Client that samples the round plan and outputs ``o`` only if every test round passes."""

    coloring = _check_inputs(graph, pattern, bits)
    k = len(layouts) // 2
    plans = all_round_plans(k)
    if len(layouts) != 2 * k + 1:
        raise PreconditionError(f"Протоколу нужно нечётное число раундов, получено {len(layouts)}.")
    computation = encode_classical_input(pattern, bits)
    bound = client_interface(network)
    outer = Interface(interface, (), (classical("accept", BITS), classical("o")))

    def choose_plan(ctx, memory):
        plan = ctx.sample(name, plans)
        memory.update(plan=plan, passed=True, sessions={})
        ctx.audit["plan"] = plan.label

    steps = [step(layouts[0].prepare_round, name, choose_plan)]
    for index, layout in enumerate(layouts):

        def prepare(ctx, memory, index=index, layout=layout):
            kind = memory["plan"].kinds[index]
            session = _open_session(kind, graph, coloring, computation, layout, name, bound.name)
            memory["sessions"][index] = session
            session.prepare(ctx)

        steps.append(step(layout.prepare_round, name, prepare))
        for vertex in layout.measured:

            def send_angle(ctx, memory, index=index, vertex=vertex):
                memory["sessions"][index].send_angle(ctx, vertex)

            steps.append(step(layout.delta_round(vertex), name, send_angle))

        def close(ctx, memory, index=index):
            result = memory["sessions"][index].finish(ctx)
            if memory["plan"].kinds[index] is RoundKind.COMPUTATION:
                memory["o"] = result
            elif not result:
                memory["passed"] = False

        steps.append(step(layout.finish_round, name, close))

    def decide(ctx, memory):
        accepted = memory["passed"]
        ctx.write(interface, "accept", int(accepted))
        ctx.write(interface, "o", memory["o"] if accepted else BOTTOM)
        if not accepted:
            logger.warning("Клиент отклонил сервер (план %s)", memory["plan"].label)

    steps.append(step(layouts[-1].finish_round, name, decide))
    return Converter(name, "client", (bound,), (outer,), tuple(steps))


def protocol3_stab_ps(
    graph: Graph,
    pattern: MeasurementPattern,
    k: int,
    bits: Mapping[str, int],
    deviation: ServerDeviation | None = None,
) -> ResourceSystem:
    """Client, server and network of the whole protocol; the client interface ``C`` stays open."""

    layouts = round_sessions(pattern, k)
    network = ps_network(layouts)
    client = protocol3_client(network, graph, pattern, bits, layouts)
    server = ps_server(network, layouts, deviation=deviation)
    return compose([client, server], network, name=f"protocol3[k={k}]")


def single_round_client(
    network: ResourceSystem,
    graph: Graph,
    pattern: MeasurementPattern,
    kind: RoundKind,
    bits: Mapping[str, int],
    layout: PsLayout,
    name: str = "client",
    interface: str = "C",
) -> Converter:
    """Client of one round of the given kind; exposes ``accept`` for a test round and ``o`` for the computation."""

    coloring = _check_inputs(graph, pattern, bits)
    computation = encode_classical_input(pattern, bits)
    bound = client_interface(network)
    message = "o" if kind is RoundKind.COMPUTATION else "accept"
    outer = Interface(interface, (), (classical("o") if message == "o" else classical("accept", BITS),))

    def prepare(ctx, memory):
        memory["session"] = _open_session(kind, graph, coloring, computation, layout, name, bound.name)
        memory["session"].prepare(ctx)

    steps = [step(layout.prepare_round, name, prepare)]
    for vertex in layout.measured:

        def send_angle(ctx, memory, vertex=vertex):
            memory["session"].send_angle(ctx, vertex)

        steps.append(step(layout.delta_round(vertex), name, send_angle))

    def close(ctx, memory):
        result = memory["session"].finish(ctx)
        ctx.write(interface, message, result if message == "o" else int(result))

    steps.append(step(layout.finish_round, name, close))
    return Converter(name, "client", (bound,), (outer,), tuple(steps))


def single_round_system(
    graph: Graph,
    pattern: MeasurementPattern,
    kind: RoundKind,
    bits: Mapping[str, int],
    deviation: ServerDeviation | None = None,
    with_server: bool = True,
) -> ResourceSystem:
    """One round on its own network; without the server the interface ``net.S`` stays open."""

    layout = round_sessions(pattern, 1)[0]
    network = ps_network((layout,))
    converters = [single_round_client(network, graph, pattern, kind, bits, layout)]
    if with_server:
        converters.append(ps_server(network, (layout,), deviation=deviation))
    return compose(converters, network, name=f"round[{kind.value}]")
