"""Exceptions raised by the quantum state engine."""
from __future__ import annotations


class QuantumError(Exception):
    """Base class for every failure of the simulator core."""


class LabelError(QuantumError):
    """A qubit label is unknown, duplicated or mismatched."""


class SizeLimitError(QuantumError):
    """A register exceeds the configured dense-simulation cap."""

    def __init__(self, requested: int, limit: int, what: str = "регистр"):
        self.requested = requested
        self.limit = limit
        super().__init__(
            f"{what}: требуется {requested} кубитов, допустимо не более {limit}."
        )


class StateError(QuantumError):
    """Amplitudes or operators do not describe a valid state."""


class PauliError(QuantumError):
    """Invalid Pauli word or an operation undefined for it."""


class GraphError(QuantumError):
    """Malformed graph or an operation not applicable to it."""


class PatternError(QuantumError):
    """Measurement pattern violates its flow or ordering constraints."""
