"""Message layout and the honest server of prepare-and-send and receive-and-measure sessions.

A prepare-and-send session on a graph runs in a fixed block of rounds: the
client sends one qubit per vertex, the server entangles them, then for every
measured vertex the client sends an angle and the server answers with an
outcome bit; finally the server returns the unmeasured qubits.  Several
sessions (the rounds of a repeated test) share one network and differ by
message prefix and starting round.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from composable.systems import Converter, Interface, Link, ResourceSystem, channel_resource, classical, quantum, step
from quantum.angles import FULL_TURN
from quantum.graphstate import Graph
from quantum.qstate import plus_vector

from .exceptions import PreconditionError

logger = logging.getLogger(__name__)

BITS = (0, 1)


@dataclass(frozen=True)
class PsLayout:
    """Message names and rounds of one prepare-and-send session."""

    graph: Graph
    measured: tuple[str, ...]
    returned: tuple[str, ...] = ()
    prefix: str = ""
    start: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "measured", tuple(self.measured))
        object.__setattr__(self, "returned", tuple(self.returned))
        covered = set(self.measured) | set(self.returned)
        if covered != set(self.graph.vertices) or len(covered) != len(self.measured) + len(self.returned):
            raise PreconditionError("Каждая вершина сеанса должна быть либо измерена сервером, либо возвращена клиенту.")

    def message(self, kind: str, vertex: str) -> str:
        return f"{self.prefix}{kind}_{vertex}"

    @property
    def prepare_round(self) -> int:
        return self.start

    @property
    def entangle_round(self) -> int:
        return self.start + 1

    def delta_round(self, vertex: str) -> int:
        return self.start + 2 + 2 * self.measured.index(vertex)

    def measure_round(self, vertex: str) -> int:
        return self.delta_round(vertex) + 1

    @property
    def return_round(self) -> int:
        return self.start + 2 + 2 * len(self.measured)

    @property
    def finish_round(self) -> int:
        return self.return_round + 1

    @property
    def end(self) -> int:
        """First round after the session."""

        return self.finish_round + 1


def chained_layouts(sessions: Iterable[tuple[Graph, Sequence[str], Sequence[str]]], start: int = 1) -> tuple[PsLayout, ...]:
    """Consecutive sessions with prefixes ``r1.``, ``r2.``, …"""

    layouts = []
    for index, (graph, measured, returned) in enumerate(sessions, start=1):
        layout = PsLayout(graph, tuple(measured), tuple(returned), prefix=f"r{index}.", start=start)
        layouts.append(layout)
        start = layout.end
    return tuple(layouts)


def ps_links(layout: PsLayout, client: str, server: str) -> list[Link]:
    links = []
    for vertex in layout.graph.vertices:
        links.append(Link(client, server, quantum(layout.message("q", vertex))))
    for vertex in layout.measured:
        links.append(Link(client, server, classical(layout.message("delta", vertex), FULL_TURN)))
        links.append(Link(server, client, classical(layout.message("s", vertex), BITS)))
    for vertex in layout.returned:
        links.append(Link(server, client, quantum(layout.message("out", vertex))))
    return links


def ps_network(layouts: Sequence[PsLayout], name: str = "net") -> ResourceSystem:
    """Perfect quantum and classical channels between ``{name}.C`` and ``{name}.S``."""

    client, server = f"{name}.C", f"{name}.S"
    links = [link for layout in layouts for link in ps_links(layout, client, server)]
    return channel_resource(name, links, endpoints=(client, server))


def rm_network(vertices: Sequence[str], name: str = "net", prefix: str = "") -> ResourceSystem:
    """Server-to-client quantum channel carrying one qubit per vertex."""

    client, server = f"{name}.C", f"{name}.S"
    links = [Link(server, client, quantum(f"{prefix}q_{vertex}")) for vertex in vertices]
    return channel_resource(name, links, endpoints=(client, server))


class ServerDeviation:
    """Hooks a dishonest server overrides; the base class behaves honestly."""

    def before_entangling(self, ctx, layout: PsLayout | None, labels: dict[str, str]) -> None:
        pass

    def after_entangling(self, ctx, layout: PsLayout | None, labels: dict[str, str]) -> None:
        pass

    def before_send(self, ctx, vertex: str, label: str) -> None:
        pass

    def report(self, layout: PsLayout, vertex: str, outcome: int) -> int:
        return outcome


@dataclass(frozen=True)
class OutcomeFlip(ServerDeviation):
    """Report the flipped outcome of ``vertex`` (in the session ``prefix`` only, when given)."""

    vertex: str
    prefix: str | None = None

    def report(self, layout: PsLayout, vertex: str, outcome: int) -> int:
        if vertex == self.vertex and (self.prefix is None or layout.prefix == self.prefix):
            logger.debug("Сервер искажает исход вершины %s%s", layout.prefix, vertex)
            return outcome ^ 1
        return outcome


def ps_server(
    network: ResourceSystem,
    layouts: Sequence[PsLayout],
    name: str = "server",
    deviation: ServerDeviation | None = None,
) -> Converter:
    """Server of every session in ``layouts``: entangle, measure ``XY(delta)``, answer, return."""

    bound = network.interface(f"{network.name}.S")
    deviation = deviation or ServerDeviation()
    steps = []

    for layout in layouts:

        def entangle(ctx, memory, layout=layout):
            labels = {vertex: ctx.read(bound.name, layout.message("q", vertex))[0] for vertex in layout.graph.vertices}
            deviation.before_entangling(ctx, layout, labels)
            for u, v in layout.graph.edges:
                ctx.cz(labels[u], labels[v])
            deviation.after_entangling(ctx, layout, labels)
            memory[layout.prefix] = labels

        steps.append(step(layout.entangle_round, name, entangle))
        for vertex in layout.measured:

            def measure(ctx, memory, layout=layout, vertex=vertex):
                delta = ctx.read(bound.name, layout.message("delta", vertex))
                outcome = ctx.measure_xy(name, memory[layout.prefix][vertex], delta)
                ctx.write(bound.name, layout.message("s", vertex), deviation.report(layout, vertex, outcome))

            steps.append(step(layout.measure_round(vertex), name, measure))
        if layout.returned:

            def give_back(ctx, memory, layout=layout):
                for vertex in layout.returned:
                    ctx.send_qubits(bound.name, layout.message("out", vertex), (memory[layout.prefix][vertex],))

            steps.append(step(layout.return_round, name, give_back))
    return Converter(name, "server", (bound,), (), tuple(steps))


def client_interface(network: ResourceSystem) -> Interface:
    return network.interface(f"{network.name}.C")


def rm_send_round(index: int, start: int = 1) -> int:
    """Round in which the ``index``-th qubit of a receive-and-measure session is sent."""

    return start + 1 + 2 * index


def rm_server(
    network: ResourceSystem,
    graph: Graph,
    send_order: Sequence[str],
    name: str = "server",
    deviation: ServerDeviation | None = None,
    prefix: str = "",
    start: int = 1,
) -> Converter:
    """Prepare the graph state of ``graph`` and send it qubit by qubit in ``send_order``."""

    if sorted(send_order) != sorted(graph.vertices):
        raise PreconditionError("Порядок отправки должен перечислять каждую вершину графа ровно один раз.")
    bound = network.interface(f"{network.name}.S")
    deviation = deviation or ServerDeviation()

    def build(ctx, memory):
        labels = {vertex: ctx.prepare_qubit(f"{name}.{vertex}", plus_vector()) for vertex in graph.vertices}
        deviation.before_entangling(ctx, None, labels)
        for u, v in graph.edges:
            ctx.cz(labels[u], labels[v])
        deviation.after_entangling(ctx, None, labels)
        memory["labels"] = labels

    steps = [step(start, name, build)]
    for index, vertex in enumerate(send_order):

        def send(ctx, memory, vertex=vertex):
            label = memory["labels"][vertex]
            deviation.before_send(ctx, vertex, label)
            ctx.send_qubits(bound.name, f"{prefix}q_{vertex}", (label,))

        steps.append(step(rm_send_round(index, start), name, send))
    return Converter(name, "server", (bound,), (), tuple(steps))
