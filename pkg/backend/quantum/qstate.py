"""Dense state engine over small labelled qubit registers.

States are immutable: every operation returns a new value.  A pure state over
``n`` qubits is stored as an ``n``-axis tensor of shape ``(2,) * n`` whose axis
order follows ``labels``; a mixed state stores its operator as a ``2n``-axis
tensor (row axes first, then column axes).  Measurements remove the measured
qubit and return every branch with its exact probability.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .angles import ZERO, Angle
from .conf import simulation_limits
from .exceptions import LabelError, PauliError, SizeLimitError, StateError
from .pauli import PAULI_MATRICES, PauliString

SQRT_HALF = 1 / math.sqrt(2)
NORM_TOLERANCE = 1e-10
FINGERPRINT_QUANTUM = 1e-12

GATES: dict[str, np.ndarray] = {
    **PAULI_MATRICES,
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF,
    "S": np.diag([1, 1j]).astype(complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CX": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}


def zrot(angle: Angle | int) -> np.ndarray:
    """``diag(1, e^{i angle})``."""

    return np.diag([1, Angle.of(angle).phase]).astype(complex)


def j_gate(angle: Angle | int) -> np.ndarray:
    """``H @ zrot(angle)``, the gate one pattern step implements."""

    return GATES["H"] @ zrot(angle)


def xy_bra(delta: Angle | int, outcome: int) -> np.ndarray:
    """Row vector ``<±^delta|`` with ``|±^delta> = (|0> ± e^{i delta}|1>)/sqrt(2)``."""

    sign = -1 if outcome & 1 else 1
    return np.array([1, sign * np.conj(Angle.of(delta).phase)], dtype=complex) * SQRT_HALF


def z_bra(outcome: int) -> np.ndarray:
    return np.array([0, 1] if outcome & 1 else [1, 0], dtype=complex)


def plus_vector(angle: Angle | int = ZERO, outcome: int = 0) -> np.ndarray:
    return np.conj(xy_bra(angle, outcome))


# --- tensor kernels shared with the execution engine ---


def apply_to_axes(tensor: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    gate = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    moved = np.tensordot(gate, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(moved, list(range(k)), list(axes))


def apply_diagonal(tensor: np.ndarray, diagonal: Sequence[complex], axis: int) -> np.ndarray:
    shape = [1] * tensor.ndim
    shape[axis] = 2
    return tensor * np.asarray(diagonal, dtype=complex).reshape(shape)


def contract_axis(tensor: np.ndarray, bra: np.ndarray, axis: int) -> np.ndarray:
    return np.tensordot(bra, tensor, axes=([0], [axis]))


def squared_norm(tensor: np.ndarray) -> float:
    return float(np.vdot(tensor, tensor).real)


def _check_labels(labels: Sequence[str]) -> tuple[str, ...]:
    labels = tuple(str(label) for label in labels)
    if len(set(labels)) != len(labels):
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        raise LabelError(f"Повторяющиеся метки кубитов: {duplicates}.")
    return labels


def _axes(labels: Sequence[str], targets: Sequence[str]) -> list[int]:
    index = {label: position for position, label in enumerate(labels)}
    missing = [label for label in targets if label not in index]
    if missing:
        raise LabelError(f"Кубиты {missing} отсутствуют в регистре {list(labels)}.")
    if len(set(targets)) != len(targets):
        raise LabelError(f"Кубиты в списке целей повторяются: {list(targets)}.")
    return [index[label] for label in targets]


def _targets(targets: str | Sequence[str]) -> tuple[str, ...]:
    return (targets,) if isinstance(targets, str) else tuple(targets)


@dataclass(frozen=True, slots=True, eq=False)
class PureState:
    labels: tuple[str, ...]
    tensor: np.ndarray

    def __post_init__(self) -> None:
        labels = _check_labels(self.labels)
        limit = simulation_limits().max_qubits
        if len(labels) > limit:
            raise SizeLimitError(len(labels), limit, "чистое состояние")
        tensor = np.asarray(self.tensor, dtype=complex).reshape((2,) * len(labels))
        if abs(squared_norm(tensor) - 1) > NORM_TOLERANCE:
            raise StateError(f"Норма состояния {squared_norm(tensor):.3e} отлична от 1.")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "tensor", tensor)

    @classmethod
    def from_vector(cls, labels: Sequence[str], amplitudes: Sequence[complex]) -> "PureState":
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.size != 2 ** len(labels):
            raise StateError(
                f"Ожидалось {2 ** len(labels)} амплитуд, получено {amplitudes.size}."
            )
        return cls(tuple(labels), amplitudes)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @property
    def vector(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.vector) ** 2

    def reorder(self, labels: Sequence[str]) -> "PureState":
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise LabelError(f"Набор меток {list(labels)} не совпадает с {list(self.labels)}.")
        return PureState(labels, np.transpose(self.tensor, _axes(self.labels, labels)))

    def relabel(self, mapping: Mapping[str, str]) -> "PureState":
        return PureState(tuple(mapping.get(label, label) for label in self.labels), self.tensor)

    def to_mixed(self) -> "MixedState":
        n = self.num_qubits
        return MixedState(self.labels, np.multiply.outer(self.tensor, self.tensor.conj()).reshape((2,) * (2 * n)))

    def expectation(self, pauli: PauliString) -> complex:
        return complex(np.vdot(self.tensor, apply_pauli(self, pauli).tensor))

    def fingerprint(self) -> str:
        return self.to_mixed().fingerprint()


@dataclass(frozen=True, slots=True, eq=False)
class MixedState:
    labels: tuple[str, ...]
    tensor: np.ndarray

    def __post_init__(self) -> None:
        labels = _check_labels(self.labels)
        limit = simulation_limits().max_mixed_qubits
        if len(labels) > limit:
            raise SizeLimitError(len(labels), limit, "смешанное состояние")
        tensor = np.asarray(self.tensor, dtype=complex).reshape((2,) * (2 * len(labels)))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "tensor", tensor)
        matrix = self.matrix
        if not np.allclose(matrix, matrix.conj().T, atol=NORM_TOLERANCE):
            raise StateError("Оператор плотности не эрмитов.")
        if abs(np.trace(matrix) - 1) > NORM_TOLERANCE:
            raise StateError(f"След оператора плотности {np.trace(matrix).real:.3e} отличен от 1.")
        if matrix.size and np.linalg.eigvalsh(matrix).min() < -NORM_TOLERANCE:
            raise StateError("Оператор плотности имеет отрицательные собственные значения.")

    @classmethod
    def from_matrix(cls, labels: Sequence[str], matrix: np.ndarray) -> "MixedState":
        matrix = np.asarray(matrix, dtype=complex)
        dimension = 2 ** len(labels)
        if matrix.shape != (dimension, dimension):
            raise StateError(f"Ожидалась матрица {dimension}×{dimension}, получено {matrix.shape}.")
        return cls(tuple(labels), matrix)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @property
    def matrix(self) -> np.ndarray:
        dimension = 2 ** len(self.labels)
        return self.tensor.reshape(dimension, dimension)

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def reorder(self, labels: Sequence[str]) -> "MixedState":
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise LabelError(f"Набор меток {list(labels)} не совпадает с {list(self.labels)}.")
        axes = _axes(self.labels, labels)
        n = self.num_qubits
        return MixedState(labels, np.transpose(self.tensor, axes + [n + axis for axis in axes]))

    def relabel(self, mapping: Mapping[str, str]) -> "MixedState":
        return MixedState(tuple(mapping.get(label, label) for label in self.labels), self.tensor)

    def to_mixed(self) -> "MixedState":
        return self

    def expectation(self, pauli: PauliString) -> complex:
        return complex(np.trace(pauli.matrix(self.labels) @ self.matrix))

    def fingerprint(self) -> str:
        return matrix_fingerprint(self.labels, self.matrix)


State = Union[PureState, MixedState]


@dataclass(frozen=True, slots=True)
class Branch:
    """One measurement outcome; ``state`` is ``None`` for a zero-probability branch."""

    outcome: int
    probability: float
    state: State | None

    @property
    def is_null(self) -> bool:
        return self.state is None


def matrix_fingerprint(labels: Sequence[str], matrix: np.ndarray) -> str:
    quantised = np.round(np.asarray(matrix, dtype=complex) / FINGERPRINT_QUANTUM)
    digest = hashlib.sha256()
    digest.update("|".join(labels).encode("utf-8"))
    digest.update(quantised.real.astype(np.int64).tobytes())
    digest.update(quantised.imag.astype(np.int64).tobytes())
    return digest.hexdigest()


# --- constructors ---


def basis_state(labels: Sequence[str], bits: Sequence[int] | None = None) -> PureState:
    labels = tuple(labels)
    bits = tuple(bits) if bits is not None else (0,) * len(labels)
    if len(bits) != len(labels):
        raise StateError("Число битов не совпадает с числом кубитов.")
    tensor = np.zeros((2,) * len(labels), dtype=complex)
    tensor[tuple(int(bit) & 1 for bit in bits)] = 1
    return PureState(labels, tensor)


def plus_state(label: str, angle: Angle | int = ZERO, outcome: int = 0) -> PureState:
    """``|+^angle>`` (or ``|-^angle>`` for ``outcome=1``)."""

    return PureState((label,), plus_vector(angle, outcome))


def product_state(states: Mapping[str, Sequence[complex]]) -> PureState:
    labels = tuple(states)
    vectors = [np.asarray(states[label], dtype=complex) for label in labels]
    if not vectors:
        return PureState((), np.ones(()))
    return PureState(labels, reduce(np.multiply.outer, vectors))


def epr_pair(first: str, second: str) -> PureState:
    """``(|00> + |11>)/sqrt(2)``."""

    return PureState.from_vector((first, second), np.array([1, 0, 0, 1]) * SQRT_HALF)


def maximally_mixed(labels: Sequence[str]) -> MixedState:
    dimension = 2 ** len(labels)
    return MixedState.from_matrix(tuple(labels), np.eye(dimension) / dimension)


def tensor(states: Iterable[State]) -> State:
    """Kronecker product in the order the states are given."""

    states = list(states)
    if not states:
        raise StateError("Пустой список состояний.")
    labels = tuple(label for state in states for label in state.labels)
    _check_labels(labels)
    if all(isinstance(state, PureState) for state in states):
        return PureState(labels, reduce(np.multiply.outer, (state.tensor for state in states)))
    mixed = [state.to_mixed() for state in states]
    matrix = reduce(np.kron, (state.matrix for state in mixed))
    return MixedState.from_matrix(labels, matrix)


# --- unitary action ---


def _unitary(gate: str | np.ndarray) -> np.ndarray:
    if isinstance(gate, str):
        try:
            return GATES[gate.upper()]
        except KeyError as exc:
            raise StateError(f"Неизвестный вентиль {gate!r}.") from exc
    matrix = np.asarray(gate, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise StateError("Матрица вентиля должна быть квадратной.")
    if not np.allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[0]), atol=NORM_TOLERANCE):
        raise StateError("Матрица вентиля не унитарна.")
    return matrix


def apply_gate(state: State, gate: str | np.ndarray, targets: str | Sequence[str]) -> State:
    matrix = _unitary(gate)
    targets = _targets(targets)
    if matrix.shape[0] != 2 ** len(targets):
        raise StateError(
            f"Вентиль размера {matrix.shape[0]} не подходит для {len(targets)} кубитов."
        )
    if len(targets) > 3 and not isinstance(gate, str):
        raise StateError("Пользовательские вентили действуют не более чем на 3 кубита.")
    axes = _axes(state.labels, targets)
    if isinstance(state, PureState):
        return PureState(state.labels, apply_to_axes(state.tensor, matrix, axes))
    n = state.num_qubits
    rows = apply_to_axes(state.tensor, matrix, axes)
    return MixedState(state.labels, apply_to_axes(rows, matrix.conj(), [n + axis for axis in axes]))


def apply_pauli(state: State, pauli: PauliString) -> State:
    axes = _axes(state.labels, pauli.support)
    result = state.tensor
    n = state.num_qubits
    for (label, letter), axis in zip(pauli.letters, axes):
        matrix = PAULI_MATRICES[letter]
        result = apply_to_axes(result, matrix, [axis])
        if isinstance(state, MixedState):
            result = apply_to_axes(result, matrix.conj(), [n + axis])
    if isinstance(state, PureState):
        return PureState(state.labels, result * pauli.sign)
    return MixedState(state.labels, result)


# --- measurements ---


def _single_qubit_branches(state: State, label: str, bras: Sequence[np.ndarray], sample) -> list[Branch]:
    (axis,) = _axes(state.labels, (label,))
    remaining = tuple(item for item in state.labels if item != label)
    cutoff = simulation_limits().zero_branch_cutoff
    candidates: list[tuple[int, float, np.ndarray]] = []
    for outcome, bra in enumerate(bras):
        if isinstance(state, PureState):
            projected = contract_axis(state.tensor, bra, axis)
            probability = squared_norm(projected)
        else:
            n = state.num_qubits
            rows = contract_axis(state.tensor, bra, axis)
            projected = contract_axis(rows, bra.conj(), n - 1 + axis)
            probability = float(np.real(np.trace(projected.reshape(2 ** (n - 1), -1))))
        candidates.append((outcome, max(probability, 0.0), projected))
    if sample is not None:
        weights = np.array([probability for _, probability, _ in candidates])
        chosen = int(sample.choice(len(candidates), p=weights / weights.sum()))
        candidates = [candidates[chosen]]
    branches = []
    for outcome, probability, projected in candidates:
        if probability <= cutoff:
            branches.append(Branch(outcome, probability, None))
            continue
        scaled = projected / (math.sqrt(probability) if isinstance(state, PureState) else probability)
        kind = PureState if isinstance(state, PureState) else MixedState
        branches.append(Branch(outcome, probability, kind(remaining, scaled)))
    return branches


def measure_xy(state: State, label: str, delta: Angle | int, sample=None) -> list[Branch]:
    """Measure ``label`` in the ``{|+^delta>, |-^delta>}`` basis."""

    return _single_qubit_branches(state, label, (xy_bra(delta, 0), xy_bra(delta, 1)), sample)


def measure_x(state: State, label: str, sample=None) -> list[Branch]:
    return measure_xy(state, label, ZERO, sample)


def measure_z(state: State, label: str, sample=None) -> list[Branch]:
    return _single_qubit_branches(state, label, (z_bra(0), z_bra(1)), sample)


def measure_pauli(state: State, pauli: PauliString, sample=None) -> list[Branch]:
    """Project onto the ``(-1)^r`` eigenspaces of a Hermitian Pauli string.

    Qubits are not removed: the projector ``(I + (-1)^r P)/2`` acts jointly.
    """

    if pauli.is_identity:
        raise PauliError("Измерение тождественного оператора не несёт информации.")
    if not pauli.is_hermitian:
        raise PauliError(f"Оператор {pauli} не эрмитов: фаза должна быть ±1.")
    cutoff = simulation_limits().zero_branch_cutoff
    flipped = apply_pauli(state, pauli)
    if isinstance(state, MixedState):
        n = state.num_qubits
        axes = _axes(state.labels, pauli.support)
        left, right = state.tensor * pauli.sign, state.tensor * np.conj(pauli.sign)
        for (_, letter), axis in zip(pauli.letters, axes):
            left = apply_to_axes(left, PAULI_MATRICES[letter], [axis])
            right = apply_to_axes(right, PAULI_MATRICES[letter].conj(), [n + axis])
    candidates = []
    for outcome in (0, 1):
        sign = -1 if outcome else 1
        if isinstance(state, PureState):
            projected = (state.tensor + sign * flipped.tensor) / 2
            probability = squared_norm(projected)
        else:
            projected = (state.tensor + sign * left + sign * right + flipped.tensor) / 4
            probability = float(np.real(np.trace(projected.reshape(2**n, 2**n))))
        candidates.append((outcome, max(probability, 0.0), projected))
    if sample is not None:
        weights = np.array([probability for _, probability, _ in candidates])
        chosen = int(sample.choice(2, p=weights / weights.sum()))
        candidates = [candidates[chosen]]
    branches = []
    for outcome, probability, projected in candidates:
        if probability <= cutoff:
            branches.append(Branch(outcome, probability, None))
        elif isinstance(state, PureState):
            branches.append(Branch(outcome, probability, PureState(state.labels, projected / math.sqrt(probability))))
        else:
            branches.append(Branch(outcome, probability, MixedState(state.labels, projected / probability)))
    return branches


# --- reductions and comparisons ---


def partial_trace(state: State, discard: Iterable[str]) -> MixedState:
    """Trace out ``discard``; a pure state is contracted directly, never widened to a density tensor."""

    discard = tuple(discard)
    if isinstance(state, PureState):
        discard_axes = _axes(state.labels, discard)
        keep = [label for label in state.labels if label not in discard]
        matrix = np.tensordot(state.tensor, state.tensor.conj(), axes=(discard_axes, discard_axes))
        dimension = 2 ** len(keep)
        return MixedState.from_matrix(keep, matrix.reshape(dimension, dimension))
    mixed = state.to_mixed()
    discard_axes = _axes(mixed.labels, discard)
    keep = [label for label in mixed.labels if label not in discard]
    keep_axes = _axes(mixed.labels, keep)
    n = mixed.num_qubits
    order = keep_axes + discard_axes + [n + axis for axis in keep_axes] + [n + axis for axis in discard_axes]
    kept, dropped = 2 ** len(keep), 2 ** len(discard)
    blocks = np.transpose(mixed.tensor, order).reshape(kept, dropped, kept, dropped)
    return MixedState.from_matrix(keep, np.einsum("ijkj->ik", blocks))


def _aligned(first: State, second: State) -> State:
    if sorted(first.labels) != sorted(second.labels):
        raise LabelError(
            f"Состояния заданы на разных регистрах: {list(first.labels)} и {list(second.labels)}."
        )
    return second.reorder(first.labels)


def state_distance(first: State, second: State) -> float:
    """``1 - |<a|b>|^2`` for two pure states, trace distance otherwise."""

    second = _aligned(first, second)
    if isinstance(first, PureState) and isinstance(second, PureState):
        overlap = np.vdot(first.tensor, second.tensor)
        return max(0.0, 1.0 - float(abs(overlap) ** 2))
    return trace_distance(first.to_mixed().matrix, second.to_mixed().matrix)


def trace_distance(first: np.ndarray, second: np.ndarray) -> float:
    difference = np.asarray(first, dtype=complex) - np.asarray(second, dtype=complex)
    difference = (difference + difference.conj().T) / 2
    return 0.5 * float(np.abs(np.linalg.eigvalsh(difference)).sum())


def _matrix_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    return (vectors * np.sqrt(np.clip(values, 0, None))) @ vectors.conj().T


def fidelity(first: State, second: State) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))^2``; ``|<a|b>|^2`` for pure pairs."""

    second = _aligned(first, second)
    if isinstance(first, PureState) and isinstance(second, PureState):
        return min(1.0, float(abs(np.vdot(first.tensor, second.tensor)) ** 2))
    if isinstance(first, PureState):
        vector = first.vector
        return float(np.real(vector.conj() @ second.to_mixed().matrix @ vector))
    if isinstance(second, PureState):
        return fidelity(second, first)
    root = _matrix_sqrt(first.matrix)
    inner = _matrix_sqrt(root @ second.matrix @ root)
    return min(1.0, float(np.real(np.trace(inner)) ** 2))
