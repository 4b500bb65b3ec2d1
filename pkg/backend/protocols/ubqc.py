"""Blind delegation of a measurement pattern in both communication settings.

Prepare-and-send: the client sends ``zrot(theta) Z^x |+>`` for every vertex
and hides each adapted angle behind ``delta = phi' + theta + r * pi``; the
server only ever sees uniformly distributed angles and maximally mixed qubits.
Receive-and-measure: the server sends the graph state qubit by qubit and the
client measures it locally, so no angle ever leaves the client.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from composable.systems import Converter, Interface, ResourceSystem, classical, compose, quantum, step
from quantum.angles import A, PI, ZERO, Angle
from quantum.mbqc import ByproductTracker, MeasurementPattern
from quantum.qstate import GATES, plus_vector

from .exceptions import PreconditionError
from .network import PsLayout, ServerDeviation, client_interface, ps_network, ps_server, rm_send_round

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class NodeSecret:
    """Client randomness of one vertex: rotation ``theta``, hidden flip ``x``, angle flip ``r``."""

    theta: Angle = ZERO
    flip: int = 0
    r: int = 0

    def delta(self, adapted: Angle) -> Angle:
        return adapted + self.theta + PI * self.r

    def decode(self, reported: int) -> int:
        return reported ^ self.r ^ self.flip


def ubqc_layout(pattern: MeasurementPattern, measure_outputs: bool = False, prefix: str = "", start: int = 1) -> PsLayout:
    measured = pattern.order + (pattern.outputs if measure_outputs else ())
    returned = () if measure_outputs else pattern.outputs
    return PsLayout(pattern.graph, measured, returned, prefix, start)


def output_message(measure_outputs: bool, outputs: int) -> tuple:
    return (classical("o"),) if measure_outputs else (quantum("rho", outputs),)


def ubqc_client_interface(pattern: MeasurementPattern, measure_outputs: bool = False, quantum_input: bool = True, name: str = "C") -> Interface:
    inputs = (quantum("psi", len(pattern.inputs)),) if quantum_input and pattern.inputs else ()
    return Interface(name, inputs, output_message(measure_outputs, len(pattern.outputs)))


class UbqcSession:
    """Client side of one blind delegation session; a fresh instance per run.

    With ``layout.returned`` empty every output vertex is measured at an
    adapted zero angle and :meth:`finish` returns the decoded bits; otherwise
    the output qubits come back and :meth:`finish` returns their labels after
    the corrections.  ``blind=False`` fixes all client randomness to zero,
    which is plain delegation of the pattern.
    """

    def __init__(self, pattern: MeasurementPattern, layout: PsLayout, party: str, channel: str, blind: bool = True):
        if set(layout.measured) - set(pattern.order) - set(pattern.outputs) or set(layout.returned) - set(pattern.outputs):
            raise PreconditionError("Разметка сеанса не соответствует шаблону измерений.")
        self.pattern = pattern
        self.layout = layout
        self.party = party
        self.channel = channel
        self.blind = blind
        self.tracker = ByproductTracker(pattern)
        self.secrets: dict[str, NodeSecret] = {}
        self.outcomes: dict[str, int] = {}
        self.pending: str | None = None

    @property
    def measures_outputs(self) -> bool:
        return not self.layout.returned

    def prepare(self, ctx, register: Sequence[str] = ()) -> None:
        """Send one qubit per vertex; ``register`` holds the quantum input, one label per input vertex."""

        pattern, layout, party = self.pattern, self.layout, self.party
        padded = bool(register)
        for vertex in pattern.graph.vertices:
            hidden = self.blind and (vertex in layout.measured or padded and vertex in pattern.inputs)
            secret = NodeSecret(
                theta=ctx.sample(party, A) if hidden else ZERO,
                flip=ctx.bit(party) if hidden else 0,
                r=ctx.bit(party) if self.blind and vertex in layout.measured else 0,
            )
            self.secrets[vertex] = secret
            if padded and vertex in pattern.inputs:
                label = register[pattern.inputs.index(vertex)]
                pad = ctx.bit(party) if self.blind else 0
                if pad:
                    ctx.apply(GATES["X"], label)
                self.tracker.pad_before_entangling(vertex, x=pad)
                ctx.apply_phase(label, secret.theta.plus_pi(secret.flip))
            else:
                label = ctx.prepare_qubit(f"{party}.{layout.prefix}{vertex}", plus_vector(secret.theta.plus_pi(secret.flip)))
            ctx.send_qubits(self.channel, layout.message("q", vertex), (label,))

    def settle(self, ctx) -> None:
        vertex = self.pending
        if vertex is None:
            return
        reported = ctx.read(self.channel, self.layout.message("s", vertex))
        outcome = self.secrets[vertex].decode(reported)
        self.outcomes[vertex] = outcome
        if vertex in self.pattern.flow:
            self.tracker.record(vertex, outcome)
        self.pending = None

    def send_angle(self, ctx, vertex: str) -> None:
        self.settle(ctx)
        adapted = self.tracker.angle(vertex) if vertex in self.pattern.flow else self.tracker.angle(vertex, ZERO)
        ctx.write(self.channel, self.layout.message("delta", vertex), self.secrets[vertex].delta(adapted))
        self.pending = vertex

    def finish(self, ctx) -> tuple:
        self.settle(ctx)
        if self.measures_outputs:
            logger.debug("Сеанс %s%s: исходы выходов %s", self.party, self.layout.prefix, self.outcomes)
            return tuple(self.outcomes[vertex] for vertex in self.pattern.outputs)
        labels = []
        for vertex in self.pattern.outputs:
            (label,) = ctx.read(self.channel, self.layout.message("out", vertex))
            secret = self.secrets[vertex]
            if secret.theta != ZERO or secret.flip:
                ctx.apply_phase(label, (-secret.theta).plus_pi(secret.flip))
            x, z = self.tracker.correction(vertex)
            if x:
                ctx.apply(GATES["X"], label)
            if z:
                ctx.apply(GATES["Z"], label)
            labels.append(label)
        return tuple(labels)


def ubqc_ps_client(
    network: ResourceSystem,
    pattern: MeasurementPattern,
    layout: PsLayout | None = None,
    name: str = "client",
    interface: str = "C",
    blind: bool = True,
    quantum_input: bool = True,
) -> Converter:
    """Client of universal blind delegation in the prepare-and-send setting."""

    layout = layout or ubqc_layout(pattern)
    bound = client_interface(network)
    outer = ubqc_client_interface(pattern, not layout.returned, quantum_input, interface)
    padded_inputs = quantum_input and bool(pattern.inputs)

    def prepare(ctx, memory):
        session = memory["session"] = UbqcSession(pattern, layout, name, bound.name, blind)
        session.prepare(ctx, ctx.read(interface, "psi") if padded_inputs else ())

    steps = [step(layout.prepare_round, name, prepare)]
    for vertex in layout.measured:

        def send_angle(ctx, memory, vertex=vertex):
            memory["session"].send_angle(ctx, vertex)

        steps.append(step(layout.delta_round(vertex), name, send_angle))

    def finish(ctx, memory):
        session = memory["session"]
        result = session.finish(ctx)
        if session.measures_outputs:
            ctx.write(interface, "o", result)
        else:
            ctx.send_qubits(interface, "rho", result)

    steps.append(step(layout.finish_round, name, finish))
    return Converter(name, "client", (bound,), (outer,), tuple(steps))


def blind_rm_client(
    network: ResourceSystem,
    pattern: MeasurementPattern,
    name: str = "client",
    interface: str = "C",
    measure_outputs: bool = False,
    start: int = 1,
) -> Converter:
    """Client of blind delegation in the receive-and-measure setting.

    Expects the qubits in the order ``pattern.order + pattern.outputs`` and
    measures each one as soon as it arrives.
    """

    bound = client_interface(network)
    outer = Interface(interface, (), output_message(measure_outputs, len(pattern.outputs)))
    send_order = pattern.order + pattern.outputs
    steps = []
    for index, vertex in enumerate(send_order):

        def receive(ctx, memory, vertex=vertex):
            tracker = memory.setdefault("tracker", ByproductTracker(pattern))
            (label,) = ctx.read(bound.name, f"q_{vertex}")
            if vertex in pattern.flow:
                tracker.record(vertex, ctx.measure_xy(name, label, tracker.angle(vertex)))
            elif measure_outputs:
                memory.setdefault("outcomes", {})[vertex] = ctx.measure_xy(name, label, tracker.angle(vertex, ZERO))
            else:
                x, z = tracker.correction(vertex)
                if x:
                    ctx.apply(GATES["X"], label)
                if z:
                    ctx.apply(GATES["Z"], label)
                memory.setdefault("kept", {})[vertex] = label

        steps.append(step(rm_send_round(index, start) + 1, name, receive))

    def finish(ctx, memory):
        if measure_outputs:
            ctx.write(interface, "o", tuple(memory["outcomes"][vertex] for vertex in pattern.outputs))
        else:
            ctx.send_qubits(interface, "rho", [memory["kept"][vertex] for vertex in pattern.outputs])

    steps.append(step(rm_send_round(len(send_order), start) + 1, name, finish))
    return Converter(name, "client", (bound,), (outer,), tuple(steps))


def rm_send_order(pattern: MeasurementPattern) -> tuple[str, ...]:
    return pattern.order + pattern.outputs


def ubqc_ps_system(
    pattern: MeasurementPattern,
    measure_outputs: bool = False,
    quantum_input: bool = True,
    deviation: ServerDeviation | None = None,
    with_server: bool = True,
) -> ResourceSystem:
    """Client and server of one prepare-and-send session; the client interface ``C`` stays open.

    Without the server ``net.S`` stays open too, which is the server's view.
    """

    layout = ubqc_layout(pattern, measure_outputs)
    network = ps_network((layout,))
    converters = [ubqc_ps_client(network, pattern, layout, quantum_input=quantum_input)]
    if with_server:
        converters.append(ps_server(network, (layout,), deviation=deviation))
    return compose(converters, network, name="ubqc")
