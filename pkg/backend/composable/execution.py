"""Round-by-round execution of composed systems.

A run keeps one unnormalised pure tensor over every live qubit of every
party.  In exact mode each random choice and each measurement outcome is a
branch point replayed by an odometer, so enumerating runs visits every
branch once, with its classical weight and its amplitude norm.  In sample mode
the same handlers draw from per-party seeded streams and the tensor is kept
normalised.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from quantum.angles import Angle
from quantum.conf import simulation_limits
from quantum.exceptions import LabelError, SizeLimitError
from quantum.pauli import PAULI_MATRICES, PauliString
from quantum.qstate import (
    MixedState,
    PureState,
    apply_diagonal,
    apply_to_axes,
    contract_axis,
    squared_norm,
    xy_bra,
    z_bra,
)
from quantum.rng import PartyStreams

from .exceptions import ChannelExtractionError, MessageDomainError, ProtocolOrderError
from .systems import MessageKind, PortKey, ResourceSystem
from .transcript import TranscriptEntry, plain

logger = logging.getLogger(__name__)


class NullBranch(Exception):
    """The current branch has zero weight; enumeration skips it."""


class ScriptedChooser:
    """Odometer over branch points: each run replays the script and extends it with zeros."""

    def __init__(self):
        self.script: list[list[int]] = []
        self.position = 0

    def reset(self) -> None:
        self.position = 0

    def pick(self, party: str, count: int, weights: Sequence[float] | None = None) -> int:
        position = self.position
        if position < len(self.script):
            index = self.script[position][0]
        else:
            self.script.append([0, count])
            index = 0
        self.position += 1
        return index

    def advance(self) -> bool:
        del self.script[self.position :]
        while self.script:
            entry = self.script[-1]
            if entry[0] + 1 < entry[1]:
                entry[0] += 1
                return True
            self.script.pop()
        return False


class SamplingChooser:
    def __init__(self, streams: PartyStreams):
        self.streams = streams

    def pick(self, party: str, count: int, weights: Sequence[float] | None = None) -> int:
        generator = self.streams[party]
        if weights is None:
            return int(generator.integers(count))
        probabilities = np.asarray(weights, dtype=float)
        return int(generator.choice(count, p=probabilities / probabilities.sum()))


class Program:
    """A system prepared for execution: alias groups resolved once."""

    def __init__(self, system: ResourceSystem):
        self.system = system
        parent: dict[PortKey, PortKey] = {}

        def find(key: PortKey) -> PortKey:
            parent.setdefault(key, key)
            while parent[key] != key:
                parent[key] = parent[parent[key]]
                key = parent[key]
            return key

        for first, second in system.aliases:
            parent[find(first)] = find(second)
        self.roots: dict[PortKey, PortKey] = {key: find(key) for key in list(parent)}
        groups: dict[PortKey, list[PortKey]] = defaultdict(list)
        for key, root in self.roots.items():
            groups[root].append(key)
        self.groups = dict(groups)
        self.steps = system.steps
        self.outputs = system.open_outputs()
        self.inputs = system.open_inputs()
        self.limits = simulation_limits()

    def resolve(self, key: PortKey) -> PortKey:
        return self.roots.get(key, key)

    def peers(self, key: PortKey) -> list[PortKey]:
        return [member for member in self.groups.get(self.resolve(key), [key]) if member != key]


class ExecutionContext:
    """What a step handler sees: ports, the shared register and branch points."""

    def __init__(self, program: Program, chooser, exact: bool, record: bool):
        self.program = program
        self.chooser = chooser
        self.exact = exact
        self.labels: list[str] = []
        self.tensor = np.ones((), dtype=complex)
        self.norm2 = 1.0
        self.weight = 1.0
        self.ports: dict[PortKey, Any] = {}
        self.shared: dict[str, Any] = {}
        self.audit: dict[str, Any] = {}
        self.round = 0
        self.party = ""
        self.transcript: list[TranscriptEntry] | None = [] if record else None
        self._counter = 0
        self._limits = program.limits

    # --- ports ---

    def read(self, interface: str, message: str) -> Any:
        key = self.program.resolve((interface, message))
        try:
            return self.ports[key]
        except KeyError:
            raise ProtocolOrderError(interface, message, self.round) from None

    def has(self, interface: str, message: str) -> bool:
        return self.program.resolve((interface, message)) in self.ports

    def write(self, interface: str, message: str, value: Any, kind: MessageKind | None = None) -> None:
        self.ports[self.program.resolve((interface, message))] = value
        if self.transcript is not None:
            quantum = kind is MessageKind.QUANTUM or (kind is None and _looks_quantum(value, self.labels))
            payload = self.reduced_state(value).fingerprint() if quantum else plain(value)
            peers = sorted({peer[0] for peer in self.program.peers((interface, message))})
            self.transcript.append(
                TranscriptEntry(
                    round=self.round,
                    party=self.party,
                    from_interface=interface,
                    to_interface=",".join(peers) or interface,
                    message=message,
                    kind=MessageKind.QUANTUM if quantum else MessageKind.CLASSICAL,
                    payload=payload,
                )
            )

    def send_qubits(self, interface: str, message: str, labels: Sequence[str]) -> None:
        self.write(interface, message, tuple(labels), MessageKind.QUANTUM)

    # --- branch points ---

    def sample(self, party: str, options: Sequence[Any], weights: Sequence[float] | None = None) -> Any:
        options = tuple(options)
        if weights is not None and len(weights) != len(options):
            raise MessageDomainError("Число весов не совпадает с числом вариантов.")
        index = self.chooser.pick(party, len(options), weights)
        if self.exact:
            share = (weights[index] / float(sum(weights))) if weights is not None else 1 / len(options)
            if share <= 0:
                raise NullBranch()
            self.weight *= share
        return options[index]

    def bit(self, party: str) -> int:
        return self.sample(party, (0, 1))

    def _branch(self, party: str, candidates: int, project) -> tuple[int, np.ndarray, float]:
        cutoff = self._limits.zero_branch_cutoff
        if self.exact:
            index = self.chooser.pick(party, candidates)
            projected = project(index)
            norm2 = squared_norm(projected)
            if norm2 <= cutoff * self.norm2:
                raise NullBranch()
            return index, projected, norm2
        tensors = [project(index) for index in range(candidates)]
        norms = [squared_norm(item) for item in tensors]
        index = self.chooser.pick(party, candidates, norms)
        scale = math.sqrt(norms[index])
        return index, tensors[index] / scale, 1.0

    # --- register ---

    def prepare(self, prefix: str, amplitudes: np.ndarray | Sequence[complex]) -> tuple[str, ...]:
        """Append fresh qubits in the given state and return their labels."""

        amplitudes = np.asarray(amplitudes, dtype=complex)
        count = int(round(math.log2(amplitudes.size)))
        labels = []
        for _ in range(count):
            self._counter += 1
            labels.append(f"{prefix}#{self._counter}")
        if len(self.labels) + count > self._limits.max_qubits:
            raise SizeLimitError(len(self.labels) + count, self._limits.max_qubits, "регистр исполнения")
        self.tensor = np.multiply.outer(self.tensor, amplitudes.reshape((2,) * count))
        self.labels.extend(labels)
        return tuple(labels)

    def prepare_qubit(self, prefix: str, vector: Sequence[complex]) -> str:
        return self.prepare(prefix, vector)[0]

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"Кубит {label!r} отсутствует в регистре исполнения.") from None

    def apply(self, matrix: np.ndarray, labels: Sequence[str] | str) -> None:
        labels = (labels,) if isinstance(labels, str) else tuple(labels)
        self.tensor = apply_to_axes(self.tensor, matrix, [self.axis(label) for label in labels])

    def apply_phase(self, label: str, angle: Angle) -> None:
        self.tensor = apply_diagonal(self.tensor, (1, Angle.of(angle).phase), self.axis(label))

    def apply_pauli(self, pauli: PauliString) -> None:
        for label, letter in pauli.letters:
            self.tensor = apply_to_axes(self.tensor, PAULI_MATRICES[letter], [self.axis(label)])
        if pauli.phase:
            self.tensor = self.tensor * pauli.sign

    def cz(self, first: str, second: str) -> None:
        a, b = self.axis(first), self.axis(second)
        shape = [1] * self.tensor.ndim
        shape[a] = shape[b] = 2
        self.tensor = self.tensor * np.array([[1, 1], [1, -1]], dtype=complex).reshape(shape)

    def measure(self, party: str, label: str, bras: Sequence[np.ndarray]) -> int:
        axis = self.axis(label)
        index, tensor, norm2 = self._branch(party, len(bras), lambda i: contract_axis(self.tensor, bras[i], axis))
        self.tensor, self.norm2 = tensor, norm2
        del self.labels[axis]
        return index

    def measure_xy(self, party: str, label: str, delta: Angle) -> int:
        return self.measure(party, label, (xy_bra(delta, 0), xy_bra(delta, 1)))

    def measure_z(self, party: str, label: str) -> int:
        return self.measure(party, label, (z_bra(0), z_bra(1)))

    def _map(self, matrix: np.ndarray, axes: list[int]) -> np.ndarray:
        k = len(axes)
        moved = np.moveaxis(self.tensor, axes, list(range(k)))
        rest = moved.shape[k:]
        flat = np.asarray(matrix, dtype=complex) @ moved.reshape(2**k, -1)
        out = int(round(math.log2(flat.shape[0])))
        return flat.reshape((2,) * out + rest)

    def _relabel_after_map(self, labels: Sequence[str], prefix: str | None, out_qubits: int) -> tuple[str, ...]:
        for label in labels:
            self.labels.remove(label)
        if prefix is None and out_qubits == len(labels):
            fresh = tuple(labels)
        else:
            fresh = []
            for _ in range(out_qubits):
                self._counter += 1
                fresh.append(f"{prefix or 'map'}#{self._counter}")
            fresh = tuple(fresh)
        self.labels[:0] = fresh
        return fresh

    def apply_map(self, matrix: np.ndarray, labels: Sequence[str], prefix: str | None = None) -> tuple[str, ...]:
        """Apply a linear map (usually an isometry) and return the output labels."""

        axes = [self.axis(label) for label in labels]
        self.tensor = self._map(matrix, axes)
        out = int(round(math.log2(np.asarray(matrix).shape[0])))
        return self._relabel_after_map(labels, prefix, out)

    def apply_kraus(
        self, party: str, operators: Sequence[np.ndarray], labels: Sequence[str], prefix: str | None = None
    ) -> tuple[int, tuple[str, ...]]:
        """Branch over Kraus operators like a measurement with ``len(operators)`` outcomes."""

        axes = [self.axis(label) for label in labels]
        index, tensor, norm2 = self._branch(party, len(operators), lambda i: self._map(operators[i], axes))
        self.tensor, self.norm2 = tensor, norm2
        out = int(round(math.log2(np.asarray(operators[index]).shape[0])))
        return index, self._relabel_after_map(labels, prefix, out)

    def discard(self, labels: Sequence[str]) -> None:
        """Hand qubits to the environment; they stay in the register and are traced at the end."""

        for label in labels:
            self.axis(label)

    def reduced_state(self, labels: Sequence[str]) -> MixedState:
        labels = tuple(labels)
        axes = [self.axis(label) for label in labels]
        rest = [axis for axis in range(len(self.labels)) if axis not in axes]
        flat = np.transpose(self.tensor, axes + rest).reshape(2 ** len(axes), -1)
        matrix = flat @ flat.conj().T
        return MixedState.from_matrix(labels, matrix / np.trace(matrix).real)


def _looks_quantum(value: Any, labels: Sequence[str]) -> bool:
    return (
        isinstance(value, tuple)
        and bool(value)
        and all(isinstance(item, str) and item in labels for item in value)
    )


@dataclass
class RunBranch:
    """One complete branch of an exact enumeration."""

    weight: float
    norm2: float
    labels: list[str]
    tensor: np.ndarray
    outputs: dict[PortKey, Any]
    transcript: list[TranscriptEntry] | None = None
    audit: dict[str, Any] = field(default_factory=dict)

    @property
    def probability(self) -> float:
        return self.weight * self.norm2

    def reduced_state(self, labels: Sequence[str]) -> MixedState:
        labels = tuple(labels)
        axes = [self.labels.index(label) for label in labels]
        rest = [axis for axis in range(len(self.labels)) if axis not in axes]
        flat = np.transpose(self.tensor, axes + rest).reshape(2 ** len(axes), -1)
        matrix = flat @ flat.conj().T
        return MixedState.from_matrix(labels, matrix / np.trace(matrix).real)


@dataclass
class RunResult:
    """Outcome of one sampled run."""

    outputs: dict[PortKey, Any]
    labels: list[str]
    tensor: np.ndarray
    transcript: list[TranscriptEntry] = field(default_factory=list)
    audit: dict[str, Any] = field(default_factory=dict)

    def state(self, port: PortKey) -> MixedState | None:
        labels = self.outputs.get(port)
        if labels is None:
            return None
        axes = [self.labels.index(label) for label in labels]
        rest = [axis for axis in range(len(self.labels)) if axis not in axes]
        flat = np.transpose(self.tensor, axes + rest).reshape(2 ** len(axes), -1)
        return MixedState.from_matrix(tuple(labels), flat @ flat.conj().T)

    def pure_state(self, port: PortKey) -> PureState | None:
        """The output register as a pure state, when it is not entangled with the rest."""

        mixed = self.state(port)
        if mixed is None:
            return None
        values, vectors = np.linalg.eigh(mixed.matrix)
        if values[-1] < 1 - simulation_limits().tolerance:
            return None
        return PureState.from_vector(mixed.labels, vectors[:, -1])

    def fingerprint(self, port: PortKey) -> str | None:
        mixed = self.state(port)
        return mixed.fingerprint() if mixed is not None else None


def _check_domain(key: PortKey, spec, value: Any) -> None:
    if spec.domain and value not in spec.domain:
        raise MessageDomainError(f"Значение {plain(value)!r} вне области сообщения {key[0]}.{key[1]}.")


def _execute(
    program: Program,
    chooser,
    exact: bool,
    classical_inputs: Mapping[PortKey, Any],
    quantum_inputs: Mapping[PortKey, PureState],
    record: bool,
    initial: tuple[Sequence[str], np.ndarray] | None,
    preset: Mapping[PortKey, tuple[str, ...]] | None = None,
) -> ExecutionContext:
    ctx = ExecutionContext(program, chooser, exact, record)
    if initial is not None:
        ctx.labels = list(initial[0])
        ctx.tensor = initial[1]
    for key, labels in (preset or {}).items():
        ctx.ports[program.resolve(key)] = labels
    specs = dict(program.inputs)
    for key, value in classical_inputs.items():
        if key not in specs:
            raise ChannelExtractionError(f"Порт {key[0]}.{key[1]} не является открытым входом.")
        _check_domain(key, specs[key], value)
        ctx.ports[program.resolve(key)] = value
    for key, state in quantum_inputs.items():
        if key not in specs or specs[key].kind is not MessageKind.QUANTUM:
            raise ChannelExtractionError(f"Порт {key[0]}.{key[1]} не является квантовым входом.")
        ctx.ports[program.resolve(key)] = ctx.prepare(f"{key[0]}.{key[1]}", state.tensor)
    memories: dict[str, dict] = defaultdict(dict)
    for step in program.steps:
        ctx.round = step.round
        ctx.party = step.party
        step.handler(ctx, memories[step.owner])
    return ctx


def _outputs(program: Program, ctx: ExecutionContext) -> dict[PortKey, Any]:
    return {key: ctx.ports.get(program.resolve(key)) for key, _ in program.outputs}


def enumerate_runs(
    system: ResourceSystem | Program,
    classical_inputs: Mapping[PortKey, Any] | None = None,
    quantum_inputs: Mapping[PortKey, PureState] | None = None,
    record: bool = False,
    initial: tuple[Sequence[str], np.ndarray] | None = None,
    preset: Mapping[PortKey, tuple[str, ...]] | None = None,
) -> Iterator[RunBranch]:
    """Every non-null branch of ``system`` for fixed open inputs."""

    program = system if isinstance(system, Program) else Program(system)
    chooser = ScriptedChooser()
    limit = simulation_limits().max_branches
    visited = 0
    while True:
        chooser.reset()
        visited += 1
        if visited > limit:
            raise ChannelExtractionError(f"Превышено допустимое число ветвей ({limit}).")
        try:
            ctx = _execute(program, chooser, True, classical_inputs or {}, quantum_inputs or {}, record, initial, preset)
        except NullBranch:
            if not chooser.advance():
                break
            continue
        yield RunBranch(ctx.weight, squared_norm(ctx.tensor), ctx.labels, ctx.tensor, _outputs(program, ctx), ctx.transcript, ctx.audit)
        if not chooser.advance():
            break
    logger.debug("Система %s: перебрано %d ветвей", program.system.name, visited)


def run_system(
    system: ResourceSystem,
    inputs: Mapping[PortKey, Any] | None = None,
    seed: int = 0,
    quantum_inputs: Mapping[PortKey, PureState] | None = None,
    record: bool = True,
) -> RunResult:
    """One sampled run with per-party streams derived from ``seed``."""

    program = Program(system)
    ctx = _execute(program, SamplingChooser(PartyStreams(seed)), False, inputs or {}, quantum_inputs or {}, record, None)
    return RunResult(_outputs(program, ctx), ctx.labels, ctx.tensor, ctx.transcript or [], ctx.audit)
