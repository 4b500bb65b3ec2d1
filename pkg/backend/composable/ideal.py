"""Ideal resources for blind and verifiable delegation and for remote state preparation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from quantum.angles import A, Angle
from quantum.conf import simulation_limits
from quantum.qstate import plus_vector

from .exceptions import MalformedChannelError, MessageDomainError
from .systems import Converter, Interface, ResourceSystem, classical, quantum, step

IDEAL_OUTPUT_ROUND = 100
FILTER_ROUND = 0


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Named trace-preserving map given by Kraus operators; compared by name."""

    name: str
    operators: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        operators = tuple(np.asarray(operator, dtype=complex) for operator in self.operators)
        if not operators:
            raise MalformedChannelError(f"Канал {self.name!r} не содержит операторов Крауса.")
        shapes = {operator.shape for operator in operators}
        if len(shapes) != 1:
            raise MalformedChannelError(f"Операторы канала {self.name!r} имеют разные размеры.")
        rows, columns = shapes.pop()
        for size in (rows, columns):
            if size & (size - 1):
                raise MalformedChannelError(f"Размер {size} канала {self.name!r} не является степенью двойки.")
        total = sum(operator.conj().T @ operator for operator in operators)
        if not np.allclose(total, np.eye(columns), atol=simulation_limits().tolerance):
            raise MalformedChannelError(f"Канал {self.name!r} не сохраняет след.")
        object.__setattr__(self, "operators", operators)

    @property
    def input_qubits(self) -> int:
        return int(math.log2(self.operators[0].shape[1]))

    @property
    def output_qubits(self) -> int:
        return int(math.log2(self.operators[0].shape[0]))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, KrausChannel) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("KrausChannel", self.name))


def identity_channel(qubits: int = 1) -> KrausChannel:
    return KrausChannel(f"id{qubits}", (np.eye(2**qubits),))


def replace_channel(vector: Sequence[complex], input_qubits: int = 1, name: str | None = None) -> KrausChannel:
    """Trace the input and prepare ``vector`` instead."""

    vector = np.asarray(vector, dtype=complex).reshape(-1, 1)
    operators = []
    for index in range(2**input_qubits):
        row = np.zeros((1, 2**input_qubits), dtype=complex)
        row[0, index] = 1
        operators.append(vector @ row)
    return KrausChannel(name or f"replace{input_qubits}", tuple(operators))


def _qubits(matrix: np.ndarray) -> tuple[int, int]:
    rows, columns = np.asarray(matrix).shape
    return int(math.log2(rows)), int(math.log2(columns))


def s_blind(
    unitary: np.ndarray,
    name: str = "blind",
    server_qubits: int = 0,
    channels: Sequence[KrausChannel] | None = None,
) -> ResourceSystem:
    """Blind delegation: ``U(psi_C)`` for an honest server, ``E(psi_C, psi_S)`` otherwise.

    The server learns the input size through the ``leak`` message.
    """

    out_qubits, in_qubits = _qubits(unitary)
    channels = tuple(channels) if channels is not None else (identity_channel(in_qubits + server_qubits),)
    for channel in channels:
        if channel.input_qubits != in_qubits + server_qubits or channel.output_qubits != out_qubits:
            raise MalformedChannelError(
                f"Канал {channel.name!r} должен действовать {in_qubits + server_qubits} → {out_qubits} кубитов."
            )
    client = Interface(f"{name}.C", (quantum("psi", in_qubits),), (quantum("rho", out_qubits),))
    server_inputs = [classical("c", (0, 1)), classical("E", channels)]
    if server_qubits:
        server_inputs.append(quantum("psi_S", server_qubits))
    server = Interface(f"{name}.S", tuple(server_inputs), (classical("leak"),))

    def leak(ctx, memory):
        ctx.write(server.name, "leak", in_qubits)

    def deliver(ctx, memory):
        register = ctx.read(client.name, "psi")
        if ctx.read(server.name, "c") == 0:
            if server_qubits:
                ctx.discard(ctx.read(server.name, "psi_S"))
            output = ctx.apply_map(unitary, register, prefix=f"{name}.rho")
        else:
            channel = ctx.read(server.name, "E")
            if not isinstance(channel, KrausChannel):
                raise MessageDomainError("Нечестный сервер должен передать канал в виде операторов Крауса.")
            joint = tuple(register) + (tuple(ctx.read(server.name, "psi_S")) if server_qubits else ())
            _, output = ctx.apply_kraus(name, channel.operators, joint, prefix=f"{name}.rho")
        ctx.send_qubits(client.name, "rho", output)

    return ResourceSystem(
        name,
        (client, server),
        (
            step(FILTER_ROUND + 1, name, leak),
            step(IDEAL_OUTPUT_ROUND, name, deliver),
        ),
    )


def s_ver(unitary: np.ndarray, name: str = "ver") -> ResourceSystem:
    """Verifiable delegation: ``|0><0| ⊗ U(psi_C)`` or the abort marker ``|1>|0..0>``."""

    out_qubits, in_qubits = _qubits(unitary)
    client = Interface(
        f"{name}.C",
        (quantum("psi", in_qubits),),
        (quantum("rho", out_qubits + 1), classical("abort")),
    )
    server = Interface(f"{name}.S", (classical("c", (0, 1)),), (classical("leak"),))

    def leak(ctx, memory):
        ctx.write(server.name, "leak", in_qubits)

    def deliver(ctx, memory):
        register = ctx.read(client.name, "psi")
        if ctx.read(server.name, "c") == 0:
            flag = ctx.prepare(f"{name}.flag", (1, 0))
            output = ctx.apply_map(unitary, register, prefix=f"{name}.rho")
            abort = 0
        else:
            ctx.discard(register)
            flag = ctx.prepare(f"{name}.flag", (0, 1))
            marker = np.zeros(2**out_qubits, dtype=complex)
            marker[0] = 1
            output = ctx.prepare(f"{name}.rho", marker) if out_qubits else ()
            abort = 1
        ctx.send_qubits(client.name, "rho", tuple(flag) + tuple(output))
        ctx.write(client.name, "abort", abort)

    return ResourceSystem(
        name,
        (client, server),
        (step(FILTER_ROUND + 1, name, leak), step(IDEAL_OUTPUT_ROUND, name, deliver)),
    )


def bottom_state(out_qubits: int) -> np.ndarray:
    """Vector of the abort marker on the flag plus ``out_qubits`` register."""

    vector = np.zeros(2 ** (out_qubits + 1), dtype=complex)
    vector[2**out_qubits] = 1
    return vector


def rsp_client(index: int, name: str = "rsp") -> str:
    return f"{name}.C{index}"


def ideal_rsp(clients: int, k: int, name: str = "rsp") -> ResourceSystem:
    """Collective remote state preparation.

    Client ``k`` inputs ``theta`` in A; every other client ``j`` inputs a bit
    ``c_j`` and a qubit.  The server receives ``|+^theta>`` when all bits are 0,
    otherwise ``zrot(theta)`` applied to the qubit of ``l = max{j | c_j = 1}``.
    """

    if clients < 2 or not 1 <= k <= clients:
        raise MessageDomainError(f"Недопустимые параметры RSP: n = {clients}, k = {k}.")
    interfaces = [Interface(rsp_client(k, name), (classical("theta", A),))]
    others = [j for j in range(1, clients + 1) if j != k]
    for j in others:
        interfaces.append(Interface(rsp_client(j, name), (classical("c", (0, 1)), quantum("rho"))))
    server = Interface(f"{name}.S", (), (quantum("psi"),))
    interfaces.append(server)

    def deliver(ctx, memory):
        theta = Angle.of(ctx.read(rsp_client(k, name), "theta"))
        if not theta.in_half_turn:
            raise MessageDomainError(f"Угол θ = {theta} не принадлежит множеству A.")
        dishonest = [j for j in others if ctx.read(rsp_client(j, name), "c") == 1]
        if dishonest:
            (label,) = ctx.read(rsp_client(max(dishonest), name), "rho")
            ctx.apply_phase(label, theta)
        else:
            label = ctx.prepare_qubit(f"{name}.psi", plus_vector(theta))
        ctx.send_qubits(server.name, "psi", (label,))

    return ResourceSystem(name, tuple(interfaces), (step(IDEAL_OUTPUT_ROUND, name, deliver),))


# --- filters ---


def sharp_filter(resource: ResourceSystem, interface: str | None = None) -> Converter:
    """Honest server of ``S^blind``: ``c = 0``, identity map, empty register."""

    bound = resource.interface(interface or f"{resource.name}.S")
    channel_spec = bound.spec("E")
    server_register = next((spec for spec in bound.inputs if spec.name == "psi_S"), None)
    converter_name = f"♯[{bound.name}]"

    def honest(ctx, memory):
        ctx.write(bound.name, "c", 0)
        ctx.write(bound.name, "E", channel_spec.domain[0])
        if server_register is not None:
            zero = np.zeros(2**server_register.qubits, dtype=complex)
            zero[0] = 1
            ctx.send_qubits(bound.name, "psi_S", ctx.prepare(f"{converter_name}.psi_S", zero))

    return Converter(converter_name, "filter", (bound,), (), (step(FILTER_ROUND, converter_name, honest, "filter"),))


def flat_filter(resource: ResourceSystem, interface: str | None = None) -> Converter:
    """Honest server of ``S^ver``: ``c = 0``."""

    bound = resource.interface(interface or f"{resource.name}.S")
    converter_name = f"♭[{bound.name}]"

    def honest(ctx, memory):
        ctx.write(bound.name, "c", 0)

    return Converter(converter_name, "filter", (bound,), (), (step(FILTER_ROUND, converter_name, honest, "filter"),))


def natural_filter(resource: ResourceSystem, client: int, name: str | None = None) -> Converter:
    """Honest client ``j`` of RSP: ``c_j = 0`` and the state ``|0>``."""

    bound = resource.interface(rsp_client(client, name or resource.name))
    converter_name = f"♮[{bound.name}]"

    def honest(ctx, memory):
        ctx.write(bound.name, "c", 0)
        ctx.send_qubits(bound.name, "rho", (ctx.prepare_qubit(f"{converter_name}.rho", (1, 0)),))

    return Converter(converter_name, "filter", (bound,), (), (step(FILTER_ROUND, converter_name, honest, "filter"),))
