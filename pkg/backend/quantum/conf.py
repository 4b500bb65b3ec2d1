"""Runtime limits for the simulator, read from Django settings when available."""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from django.conf import settings


@dataclass(frozen=True, slots=True)
class SimulationLimits:
    """Caps and tolerances shared by every module of the simulator."""

    max_qubits: int = 16
    max_open_qubits: int = 8
    tolerance: float = 1e-10
    zero_branch_cutoff: float = 1e-14
    max_sweep_weight: int = 2
    max_branches: int = 5_000_000
    reports_dir: Path | None = None

    @property
    def max_mixed_qubits(self) -> int:
        """A density operator over n qubits is stored as a 2n-axis tensor."""

        return self.max_qubits // 2


def simulation_limits() -> SimulationLimits:
    """Return limits from ``settings.QUANTUM_SIMULATION`` or the built-in defaults."""

    if not settings.configured:
        return SimulationLimits()
    raw = getattr(settings, "QUANTUM_SIMULATION", None) or {}
    known = {item.name for item in fields(SimulationLimits)}
    values = {key: value for key, value in raw.items() if key in known}
    if values.get("reports_dir") is not None:
        values["reports_dir"] = Path(values["reports_dir"])
    return SimulationLimits(**values)
