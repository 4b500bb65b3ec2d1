"""Collective remote state preparation in the receive-and-measure setting.

The server entangles its output register with one qubit per client through
``CX`` gates.  Each client measures its qubit at a secret angle; client ``k``
collects the angles and outcomes of the others and sends the server a single
correction ``(b, delta)`` that leaves the output register in ``|+^theta>``.
Two simulators cover the dishonest coalitions: one for dishonest clients and
an honest server, one for a dishonest server with any set of dishonest clients.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from composable.ideal import FILTER_ROUND, IDEAL_OUTPUT_ROUND, ideal_rsp, natural_filter, rsp_client
from composable.systems import (
    Converter,
    Interface,
    Link,
    ResourceSystem,
    channel_resource,
    classical,
    compose,
    quantum,
    step,
    wire,
)
from quantum.angles import A, FULL_TURN, PI, ZERO, Angle, angle_sum, parity
from quantum.qstate import GATES, plus_vector, z_bra

from .exceptions import MessageError, PreconditionError
from .network import BITS

logger = logging.getLogger(__name__)

SHARES = tuple((theta, r) for theta in A for r in BITS)

SEND_ROUND = 1
MEASURE_ROUND = 2
CORRECTION_ROUND = 3
OUTPUT_ROUND = 4


@dataclass(frozen=True)
class RspTranscript:
    """What client ``k`` saw and sent: every ``(theta_j, r_j)``, the bit ``b`` and ``delta``."""

    shares: Mapping[int, tuple[Angle, int]]
    b: int
    delta: Angle
    theta: Angle = field(default=ZERO, compare=False)

    def expected_delta(self, theta: Angle | None = None) -> Angle:
        theta = self.theta if theta is None else Angle.of(theta)
        angles = [share[0] for share in self.shares.values()]
        bits = [share[1] for share in self.shares.values()]
        return theta.signed(self.b) - angle_sum(angles) - PI * parity(bits)

    def is_consistent(self, theta: Angle | None = None) -> bool:
        return self.delta == self.expected_delta(theta)

    def as_dict(self) -> dict:
        return {
            "shares": {str(j): [share[0].k, share[1]] for j, share in sorted(self.shares.items())},
            "b": self.b,
            "delta": self.delta.k,
        }


def correction_delta(theta: Angle, b: int, shares: Iterable[tuple[Angle, int]]) -> Angle:
    shares = list(shares)
    return Angle.of(theta).signed(b) - angle_sum(share[0] for share in shares) - PI * parity(share[1] for share in shares)


def _check_parameters(clients: int, k: int) -> list[int]:
    if clients < 2 or not 1 <= k <= clients:
        raise PreconditionError(f"Недопустимые параметры RSP: n = {clients}, k = {k}.")
    return [j for j in range(1, clients + 1) if j != k]


def _check_share(share) -> tuple[Angle, int]:
    if not (isinstance(share, tuple) and len(share) == 2 and isinstance(share[0], Angle) and share[1] in BITS):
        raise MessageError(f"Сообщение (θ_j, r_j) имеет неверный формат: {share!r}.")
    if not share[0].in_half_turn:
        raise MessageError(f"Угол θ_j = {share[0]} не принадлежит множеству A.")
    return share


def client_endpoint(j: int, name: str = "net") -> str:
    return f"{name}.C{j}"


def rsp_network(clients: int, k: int, name: str = "net") -> ResourceSystem:
    """Server-to-client qubits, client-to-``k`` shares and the correction from ``k`` to the server."""

    others = _check_parameters(clients, k)
    server = f"{name}.S"
    links = [Link(server, client_endpoint(j, name), quantum(f"psi_{j}")) for j in range(1, clients + 1)]
    links += [
        Link(client_endpoint(j, name), client_endpoint(k, name), classical("theta_r", SHARES), f"theta_r_{j}")
        for j in others
    ]
    links += [
        Link(client_endpoint(k, name), server, classical("delta", FULL_TURN)),
        Link(client_endpoint(k, name), server, classical("b", BITS)),
    ]
    endpoints = [server] + [client_endpoint(j, name) for j in range(1, clients + 1)]
    return channel_resource(name, links, endpoints)


def _entangled_register(ctx, owner: str, clients: Iterable[int]) -> tuple[str, dict[int, str]]:
    """``|+>`` on the output register and ``|0>`` per client, joined by ``CX`` from the output."""

    output = ctx.prepare_qubit(f"{owner}.psi_S", plus_vector())
    targets = {}
    for j in clients:
        targets[j] = ctx.prepare_qubit(f"{owner}.psi_{j}", (1, 0))
        ctx.apply(GATES["CX"], (output, targets[j]))
    return output, targets


def _correct(ctx, label: str, b: int, delta: Angle) -> None:
    """``X^b Z^delta``."""

    ctx.apply_phase(label, delta)
    if b:
        ctx.apply(GATES["X"], label)


def rsp_server(network: ResourceSystem, clients: int, name: str = "server", interface: str = "S") -> Converter:
    bound = network.interface(f"{network.name}.S")
    outer = Interface(interface, (), (quantum("psi"),))

    def send(ctx, memory):
        memory["psi_S"], targets = _entangled_register(ctx, name, range(1, clients + 1))
        for j, label in targets.items():
            ctx.send_qubits(bound.name, f"psi_{j}", (label,))

    def output(ctx, memory):
        b = ctx.read(bound.name, "b")
        delta = Angle.of(ctx.read(bound.name, "delta"))
        _correct(ctx, memory["psi_S"], b, delta)
        ctx.send_qubits(interface, "psi", (memory["psi_S"],))

    return Converter(name, "server", (bound,), (outer,), (step(SEND_ROUND, name, send), step(OUTPUT_ROUND, name, output)))


def measure_share(ctx, party: str, label: str) -> tuple[Angle, int]:
    """Measure in ``{|+^{-theta}>, |-^{-theta}>}`` with a fresh ``theta`` in A."""

    theta = ctx.sample(party, A)
    return theta, ctx.measure_xy(party, label, -theta)


def rsp_helper(network: ResourceSystem, j: int, name: str | None = None) -> Converter:
    """Honest client ``j`` other than ``k``: measure and hand ``(theta_j, r_j)`` to client ``k``."""

    name = name or f"C{j}"
    bound = network.interface(client_endpoint(j, network.name))

    def measure(ctx, memory):
        (label,) = ctx.read(bound.name, f"psi_{j}")
        ctx.write(bound.name, "theta_r", measure_share(ctx, name, label))

    return Converter(name, "client", (bound,), (), (step(MEASURE_ROUND, name, measure),))


def rsp_main_client(network: ResourceSystem, clients: int, k: int, name: str | None = None) -> Converter:
    """Client ``k``: holds ``theta`` and computes the correction from all shares."""

    name = name or f"C{k}"
    others = _check_parameters(clients, k)
    bound = network.interface(client_endpoint(k, network.name))
    outer = Interface(name, (classical("theta", A),))

    def measure(ctx, memory):
        (label,) = ctx.read(bound.name, f"psi_{k}")
        memory["own"] = measure_share(ctx, name, label)

    def correct(ctx, memory):
        theta = Angle.of(ctx.read(name, "theta"))
        if not theta.in_half_turn:
            raise MessageError(f"Угол θ = {theta} не принадлежит множеству A.")
        shares = {j: _check_share(ctx.read(bound.name, f"theta_r_{j}")) for j in others}
        shares[k] = memory["own"]
        b = ctx.bit(name)
        delta = correction_delta(theta, b, shares.values())
        ctx.audit["rsp"] = RspTranscript(dict(sorted(shares.items())), b, delta, theta)
        ctx.write(bound.name, "b", b)
        ctx.write(bound.name, "delta", delta)

    return Converter(
        name, "client", (bound,), (outer,), (step(MEASURE_ROUND, name, measure), step(CORRECTION_ROUND, name, correct))
    )


def _check_coalition(clients: int, k: int, dishonest: Iterable[int]) -> tuple[list[int], list[int]]:
    others = _check_parameters(clients, k)
    dishonest = sorted(set(dishonest))
    if k in dishonest:
        raise PreconditionError(f"Клиент k = {k} должен быть честным.")
    if set(dishonest) - set(others):
        raise PreconditionError(f"Неизвестные клиенты в коалиции: {sorted(set(dishonest) - set(others))}.")
    honest = [j for j in others if j not in dishonest]
    return dishonest, honest


def rsp_real_system(
    clients: int, k: int, dishonest_clients: Iterable[int] = (), dishonest_server: bool = False
) -> ResourceSystem:
    """Honest parties attached to the network; dishonest parties' network interfaces stay open."""

    dishonest, honest = _check_coalition(clients, k, dishonest_clients)
    network = rsp_network(clients, k)
    converters = [rsp_main_client(network, clients, k)] + [rsp_helper(network, j) for j in honest]
    if not dishonest_server:
        converters.append(rsp_server(network, clients))
    return compose(converters, network, name=f"πRSP[n={clients},k={k}]")


def _ideal_with_filters(clients: int, k: int, honest: Iterable[int]) -> ResourceSystem:
    ideal = ideal_rsp(clients, k)
    filtered = compose([natural_filter(ideal, j) for j in honest], ideal, name=ideal.name)
    return wire(filtered, {rsp_client(k): f"C{k}"})


def rsp_ideal_system(clients: int, k: int) -> ResourceSystem:
    """The ideal resource with every client other than ``k`` filtered as honest."""

    _check_parameters(clients, k)
    ideal = _ideal_with_filters(clients, k, [j for j in range(1, clients + 1) if j != k])
    return wire(ideal, {"rsp.S": "S"})


def simulator_dishonest_clients(
    network: ResourceSystem, ideal: ResourceSystem, dishonest: Iterable[int], name: str = "σD"
) -> Converter:
    """Emulates the honest server and the classical part of client ``k`` with ``theta = 0``.

    The emulated output register is handed to the ideal resource at the interface
    of the dishonest client with the highest index, which applies ``Z^theta``.
    """

    dishonest = sorted(dishonest)
    if not dishonest:
        raise PreconditionError("Симулятор нечестных клиентов требует непустую коалицию.")
    highest = dishonest[-1]
    inner = tuple(ideal.interface(rsp_client(j)) for j in dishonest)
    outer = tuple(network.interface(client_endpoint(j, network.name)) for j in dishonest)

    def send(ctx, memory):
        memory["psi_S"], targets = _entangled_register(ctx, name, dishonest)
        for j, label in targets.items():
            ctx.send_qubits(client_endpoint(j, network.name), f"psi_{j}", (label,))

    def correct(ctx, memory):
        shares = [_check_share(ctx.read(client_endpoint(j, network.name), "theta_r")) for j in dishonest]
        b = ctx.bit(name)
        _correct(ctx, memory["psi_S"], b, correction_delta(ZERO, 0, shares))
        for j in dishonest:
            ctx.write(rsp_client(j), "c", int(j == highest))
        ctx.send_qubits(rsp_client(highest), "rho", (memory["psi_S"],))

    return Converter(name, "simulator", inner, outer, (step(SEND_ROUND, name, send), step(CORRECTION_ROUND, name, correct)))


def cx_gadget(theta: Angle) -> tuple[np.ndarray, np.ndarray]:
    """Operators on ``psi_k`` of ``CX_{k,I}`` with ``psi_I = |+^theta>`` followed by the outcome ``b`` on ``I``."""

    ancilla = plus_vector(theta)
    operators = []
    for b in BITS:
        matrix = np.zeros((2, 2), dtype=complex)
        for x in BITS:
            matrix[x, x] = z_bra(b ^ x) @ ancilla
        operators.append(matrix)
    return operators[0], operators[1]


def simulator_dishonest_server(
    network: ResourceSystem, ideal: ResourceSystem, clients: int, k: int, dishonest: Iterable[int] = (), name: str = "σDS"
) -> Converter:
    """Simulator for a dishonest server together with the clients in ``dishonest``.

    It runs the honest clients other than ``k`` itself and replaces client ``k`` by
    the ``CX`` gadget on the register it receives from the ideal resource:
    measuring that register after ``CX_{k,I}`` applies ``Z^{(-1)^b theta}`` to
    ``psi_k``.  The announced correction bit is the gadget outcome ``b``.
    """

    dishonest, honest = _check_coalition(clients, k, dishonest)
    server = network.interface(f"{network.name}.S")
    inner = (ideal.interface("rsp.S"),) + tuple(ideal.interface(rsp_client(j)) for j in dishonest)
    outer = (server,) + tuple(network.interface(client_endpoint(j, network.name)) for j in dishonest)

    def block_coalition(ctx, memory):
        for j in dishonest:
            ctx.write(rsp_client(j), "c", 0)

    def run_clients(ctx, memory):
        shares = {}
        for j in honest:
            (label,) = ctx.read(server.name, f"psi_{j}")
            shares[j] = measure_share(ctx, name, label)
        for j in dishonest:
            ctx.send_qubits(client_endpoint(j, network.name), f"psi_{j}", ctx.read(server.name, f"psi_{j}"))
        memory["shares"] = shares

    def answer(ctx, memory):
        (target,) = ctx.read("rsp.S", "psi")
        (own,) = ctx.read(server.name, f"psi_{k}")
        ctx.apply(GATES["CX"], (own, target))
        b = ctx.measure_z(name, target)
        shares = dict(memory["shares"])
        shares[k] = measure_share(ctx, name, own)
        for j in dishonest:
            shares[j] = _check_share(ctx.read(client_endpoint(j, network.name), "theta_r"))
        ctx.write(server.name, "delta", correction_delta(ZERO, 0, shares.values()))
        ctx.write(server.name, "b", b)

    steps = (
        step(FILTER_ROUND, name, block_coalition),
        step(MEASURE_ROUND, name, run_clients),
        step(IDEAL_OUTPUT_ROUND + 1, name, answer),
    )
    return Converter(name, "simulator", inner, outer, steps)


def rsp_simulated_system(
    clients: int, k: int, dishonest_clients: Iterable[int] = (), dishonest_server: bool = False
) -> ResourceSystem:
    """Ideal resource, natural filters on honest clients and the matching simulator."""

    dishonest, honest = _check_coalition(clients, k, dishonest_clients)
    network = rsp_network(clients, k)
    ideal = _ideal_with_filters(clients, k, honest)
    if dishonest_server:
        simulator = simulator_dishonest_server(network, ideal, clients, k, dishonest)
        return compose(simulator, ideal, name=f"RSP∘σDS[n={clients},k={k}]")
    simulator = simulator_dishonest_clients(network, ideal, dishonest)
    return wire(compose(simulator, ideal, name=f"RSP∘σD[n={clients},k={k}]"), {"rsp.S": "S"})


def blank_simulator(network: ResourceSystem, ideal: ResourceSystem, dishonest: Iterable[int], name: str = "σ0") -> Converter:
    """Exposes the dishonest clients' interfaces with fresh ``|0>`` qubits and ignores their shares."""

    dishonest = sorted(dishonest)
    inner = tuple(ideal.interface(rsp_client(j)) for j in dishonest)
    outer = tuple(network.interface(client_endpoint(j, network.name)) for j in dishonest)

    def send(ctx, memory):
        for j in dishonest:
            ctx.write(rsp_client(j), "c", 0)
            ctx.send_qubits(client_endpoint(j, network.name), f"psi_{j}", (ctx.prepare_qubit(f"{name}.psi_{j}", (1, 0)),))

    return Converter(name, "simulator", inner, outer, (step(SEND_ROUND, name, send),))


def rsp_unsimulated_system(clients: int, k: int, dishonest_clients: Iterable[int]) -> ResourceSystem:
    """Ideal resource behind a simulator that does not emulate the entanglement; distinguishable from the protocol."""

    dishonest, honest = _check_coalition(clients, k, dishonest_clients)
    network = rsp_network(clients, k)
    ideal = _ideal_with_filters(clients, k, honest)
    return wire(compose(blank_simulator(network, ideal, dishonest), ideal, name="RSP∘σ0"), {"rsp.S": "S"})
