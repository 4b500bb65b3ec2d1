"""Exact channel extraction and distinguishability of finite systems."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from quantum.conf import simulation_limits
from quantum.qstate import trace_distance

from .exceptions import ChannelExtractionError, InterfaceMismatchError
from .execution import Program, enumerate_runs
from .systems import MessageKind, PortKey, ResourceSystem
from .transcript import plain

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"


@dataclass
class ChannelTable:
    """Normalised Choi states of a system, one family per classical input assignment.

    ``entries[assignment][outputs]`` is the unnormalised block of the Choi
    state on which the classical outputs took the values ``outputs``; the
    blocks of one assignment sum to trace one.
    """

    input_ports: tuple[PortKey, ...]
    classical_outputs: tuple[PortKey, ...]
    quantum_outputs: tuple[PortKey, ...]
    reference_qubits: int
    output_qubits: int
    entries: dict[tuple, dict[tuple, np.ndarray]] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return 2 ** (self.reference_qubits + self.output_qubits)

    def total(self, assignment: tuple) -> np.ndarray:
        blocks = self.entries[assignment].values()
        return sum(blocks, np.zeros((self.dimension, self.dimension), dtype=complex))

    def marginal(self, assignment: tuple) -> dict[tuple, float]:
        return {key: float(np.trace(block).real) for key, block in self.entries[assignment].items()}


def _port_order(item: tuple[PortKey, Any]) -> PortKey:
    # ports are matched by key, never by the order interfaces were declared in
    return item[0]


def _maximally_entangled(pairs: int) -> np.ndarray:
    """Tensor over ``refs + inputs`` axes with ``sum_i |i>|i> / sqrt(2^pairs)``."""

    dimension = 2**pairs
    matrix = np.eye(dimension, dtype=complex) / math.sqrt(dimension)
    return matrix.reshape((2,) * (2 * pairs))


def extract_channel(
    system: ResourceSystem,
    output_interfaces: Iterable[str] | None = None,
    classical_inputs: Mapping[PortKey, Sequence[Any]] | None = None,
    input_interfaces: Iterable[str] | None = None,
) -> ChannelTable:
    """Choi states of ``system`` for every assignment of its open classical inputs.

    Ports are taken in sorted key order, so two systems exposing the same
    interfaces yield comparable tables whatever their declaration order.
    Open quantum inputs are fed halves of maximally entangled pairs whose other
    halves are kept as reference qubits.  Internal randomness and measurement
    outcomes are summed exactly.  ``classical_inputs`` overrides the enumerated
    domain of individual ports; ``input_interfaces`` restricts which open
    inputs are enumerated (the rest must be overridden).
    """

    overrides = dict(classical_inputs or {})
    program = Program(system)
    enumerated = {key for key, _ in system.open_inputs(input_interfaces)} if input_interfaces is not None else None
    classical_ports: list[tuple[PortKey, tuple]] = []
    quantum_ports: list[tuple[PortKey, int]] = []
    for key, spec in sorted(system.open_inputs(), key=_port_order):
        if spec.kind is MessageKind.QUANTUM:
            quantum_ports.append((key, spec.qubits))
            continue
        domain = tuple(overrides.get(key, spec.domain))
        if enumerated is not None and key not in enumerated and key not in overrides:
            raise ChannelExtractionError(f"Вход {key[0]}.{key[1]} не зондируется и не задан явно.")
        if not domain:
            raise ChannelExtractionError(f"Для входа {key[0]}.{key[1]} не задана конечная область значений.")
        classical_ports.append((key, domain))

    outputs = sorted(system.open_outputs(output_interfaces), key=_port_order)
    quantum_outputs = [(key, spec.qubits) for key, spec in outputs if spec.kind is MessageKind.QUANTUM]
    classical_outputs = [key for key, spec in outputs if spec.kind is MessageKind.CLASSICAL]
    reference = sum(size for _, size in quantum_ports)
    produced = sum(size for _, size in quantum_outputs)
    limit = simulation_limits().max_open_qubits
    if reference + produced > limit:
        raise ChannelExtractionError(
            f"Открытая квантовая размерность {reference + produced} кубитов превышает предел {limit}."
        )

    ref_labels = [f"ref#{index}" for index in range(reference)]
    in_labels = [f"in#{index}" for index in range(reference)]
    preset: dict[PortKey, tuple[str, ...]] = {}
    offset = 0
    for key, size in quantum_ports:
        preset[key] = tuple(in_labels[offset : offset + size])
        offset += size
    initial = (ref_labels + in_labels, _maximally_entangled(reference))

    table = ChannelTable(
        input_ports=tuple(key for key, _ in classical_ports),
        classical_outputs=tuple(classical_outputs),
        quantum_outputs=tuple(key for key, _ in quantum_outputs),
        reference_qubits=reference,
        output_qubits=produced,
    )
    keep_dimension = 2 ** (reference + produced)
    runs = 0
    for values in itertools.product(*(domain for _, domain in classical_ports)):
        assignment = dict(zip((key for key, _ in classical_ports), values))
        blocks: dict[tuple, np.ndarray] = {}
        for branch in enumerate_runs(program, assignment, initial=initial, preset=preset):
            runs += 1
            kept = list(ref_labels)
            for key, size in quantum_outputs:
                labels = branch.outputs.get(key)
                if labels is None or len(labels) != size:
                    raise ChannelExtractionError(
                        f"Квантовый выход {key[0]}.{key[1]} не выдан или имеет неверный размер."
                    )
                kept.extend(labels)
            axes = [branch.labels.index(label) for label in kept]
            rest = [axis for axis in range(len(branch.labels)) if axis not in axes]
            flat = np.transpose(branch.tensor, axes + rest).reshape(keep_dimension, -1)
            outcome = tuple(plain(branch.outputs.get(key)) for key in classical_outputs)
            block = branch.weight * (flat @ flat.conj().T)
            if outcome in blocks:
                blocks[outcome] += block
            else:
                blocks[outcome] = block
        table.entries[tuple(plain(value) for value in values)] = blocks
    logger.info(
        "Канал системы %s: %d назначений входов, %d ветвей", system.name, len(table.entries), runs
    )
    return table


@dataclass(frozen=True)
class DistinguishabilityReport:
    epsilon: float
    verdict: Verdict
    worst_assignment: tuple | None
    tolerance: float

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "verdict": self.verdict.value,
            "worst_assignment": list(self.worst_assignment) if self.worst_assignment is not None else None,
            "tolerance": self.tolerance,
        }


def compare_channels(first: ChannelTable, second: ChannelTable, tolerance: float | None = None) -> DistinguishabilityReport:
    """``max`` over input assignments of ``1/2 sum_o || rho_o - sigma_o ||_1``."""

    tolerance = simulation_limits().tolerance if tolerance is None else tolerance
    if (
        first.input_ports != second.input_ports
        or first.classical_outputs != second.classical_outputs
        or first.quantum_outputs != second.quantum_outputs
        or first.dimension != second.dimension
    ):
        raise InterfaceMismatchError("Сравниваемые системы имеют разные открытые интерфейсы.")
    if set(first.entries) != set(second.entries):
        raise InterfaceMismatchError("Области значений классических входов не совпадают.")
    epsilon, worst = 0.0, None
    zero = np.zeros((first.dimension, first.dimension), dtype=complex)
    for assignment, blocks in first.entries.items():
        other = second.entries[assignment]
        distance = sum(
            trace_distance(blocks.get(key, zero), other.get(key, zero)) for key in set(blocks) | set(other)
        )
        if worst is None or distance > epsilon:
            epsilon, worst = distance, assignment
    verdict = Verdict.PASS if epsilon <= tolerance else Verdict.FAIL
    return DistinguishabilityReport(epsilon, verdict, worst, tolerance)


def distinguishability(
    first: ResourceSystem,
    second: ResourceSystem,
    output_interfaces: Iterable[str] | None = None,
    classical_inputs: Mapping[PortKey, Sequence[Any]] | None = None,
    tolerance: float | None = None,
) -> DistinguishabilityReport:
    if set(first.interface_names) != set(second.interface_names) or not all(
        first.interface(interface.name).same_schema(interface) for interface in second.interfaces
    ):
        raise InterfaceMismatchError(
            f"Системы {first.name!r} и {second.name!r} имеют разные открытые интерфейсы."
        )
    outputs = list(output_interfaces) if output_interfaces is not None else None
    report = compare_channels(
        extract_channel(first, outputs, classical_inputs),
        extract_channel(second, outputs, classical_inputs),
        tolerance,
    )
    logger.info("ε(%s, %s) = %.3e: %s", first.name, second.name, report.epsilon, report.verdict.value)
    return report


def choi_of_unitary(matrix: np.ndarray) -> np.ndarray:
    """Normalised Choi state ``(I ⊗ U)|Φ><Φ|(I ⊗ U)†`` with the reference first."""

    matrix = np.asarray(matrix, dtype=complex)
    dimension = matrix.shape[1]
    vector = np.zeros(dimension * matrix.shape[0], dtype=complex)
    for index in range(dimension):
        basis = np.zeros(dimension)
        basis[index] = 1
        vector += np.kron(basis, matrix[:, index])
    vector /= math.sqrt(dimension)
    return np.outer(vector, vector.conj())


def view_distance(
    first: ResourceSystem,
    second: ResourceSystem,
    interfaces: Iterable[str],
    classical_inputs: Mapping[PortKey, Sequence[Any]] | None = None,
    tolerance: float | None = None,
) -> DistinguishabilityReport:
    """Distance between what ``interfaces`` receive from two systems, averaged over everything else.

    Outputs of the other open interfaces are traced out, so the two systems
    only have to agree on the schemas of ``interfaces`` and on their open
    inputs.  Blindness is ``view_distance(...) == 0`` for two client secrets.
    """

    interfaces = list(interfaces)
    for name in interfaces:
        if name not in first.interface_names or name not in second.interface_names:
            raise InterfaceMismatchError(f"Интерфейс {name!r} открыт не у обеих систем.")
        if not first.interface(name).same_schema(second.interface(name)):
            raise InterfaceMismatchError(f"Интерфейс {name!r} устроен в системах по-разному.")
    report = compare_channels(
        extract_channel(first, interfaces, classical_inputs),
        extract_channel(second, interfaces, classical_inputs),
        tolerance,
    )
    logger.info("Различие видов %s для %s и %s: %.3e", interfaces, first.name, second.name, report.epsilon)
    return report
