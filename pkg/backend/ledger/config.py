"""Loading and validation of run configurations."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from adversary.attacks import AttackStage
from adversary.exceptions import AttackError
from quantum.exceptions import QuantumError
from quantum.graphstate import Graph
from quantum.mbqc import MeasurementPattern, path_pattern
from quantum.pauli import PauliString

from .models import ProtocolRun

MAX_SEED = 2**64 - 1


class RunConfigError(Exception):
    """Raised when a run configuration cannot be read or is inconsistent."""

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"Строка {line}, столбец {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class PartySpec:
    name: str
    honest: bool = True


@dataclass(frozen=True)
class AttackSpec:
    """Scripted Pauli deviation of the server."""

    op: PauliString
    stage: AttackStage = AttackStage.BEFORE_ENTANGLING

    @classmethod
    def from_payload(cls, payload: Any) -> "AttackSpec":
        if not isinstance(payload, Mapping) or not isinstance(payload.get("letters"), Mapping):
            raise RunConfigError('Атака задаётся как {"letters": {"метка": "X|Y|Z"}, "stage": "..."}.')
        try:
            op = PauliString.from_mapping({str(label): str(letter) for label, letter in payload["letters"].items()})
            stage = AttackStage.parse(payload.get("stage", AttackStage.BEFORE_ENTANGLING.value))
        except (QuantumError, AttackError) as exc:
            raise RunConfigError(str(exc)) from exc
        return cls(op, stage)

    def as_dict(self) -> dict:
        return {"letters": dict(self.op.letters), "stage": self.stage.value}


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs to build and execute one protocol system.

    ``options`` keeps the protocol-specific parameters (``clients``, ``k``,
    ``theta``, ``rounds``, ``bits``, ``input``, ``quantum_input``,
    ``measure_outputs``, ``system``).
    """

    protocol: str
    mode: str = ProtocolRun.Mode.ENUMERATE
    seed: int | None = None
    graph: Graph | None = None
    pattern: MeasurementPattern | None = None
    parties: tuple[PartySpec, ...] = ()
    attack: AttackSpec | None = None
    options: Mapping[str, Any] = field(default_factory=dict)
    source: Path | None = None

    def __post_init__(self) -> None:
        if self.protocol not in ProtocolRun.Protocol.values:
            raise RunConfigError(
                f"Неизвестный протокол {self.protocol!r}; допустимы: {', '.join(ProtocolRun.Protocol.values)}."
            )
        if self.mode not in ProtocolRun.Mode.values:
            raise RunConfigError(f"Неизвестный режим {self.mode!r}; допустимы: sample, enumerate.")
        if self.seed is not None and not (isinstance(self.seed, int) and 0 <= self.seed <= MAX_SEED):
            raise RunConfigError(f"Зерно должно быть целым числом от 0 до 2^64 - 1, получено {self.seed!r}.")
        if self.mode == ProtocolRun.Mode.SAMPLE and self.seed is None:
            raise RunConfigError("В режиме выборки зерно обязательно (--seed или поле seed).")
        names = [party.name for party in self.parties]
        if len(names) != len(set(names)):
            raise RunConfigError("Участники в составе перечислены повторно.")

    def with_overrides(self, *, mode: str | None = None, seed: int | None = None) -> "RunConfig":
        return replace(self, mode=mode or self.mode, seed=self.seed if seed is None else seed)

    def option(self, name: str, default: Any = None) -> Any:
        return self.options.get(name, default)

    def is_honest(self, party: str) -> bool:
        for spec in self.parties:
            if spec.name == party:
                return spec.honest
        return True

    def dishonest(self) -> tuple[str, ...]:
        return tuple(party.name for party in self.parties if not party.honest)

    def require_pattern(self) -> MeasurementPattern:
        if self.pattern is None:
            raise RunConfigError(f"Для протокола {self.protocol} нужен шаблон (pattern, pattern_file или angles).")
        return self.pattern

    def as_dict(self) -> dict:
        payload: dict[str, Any] = {"protocol": self.protocol, "mode": self.mode, "seed": self.seed}
        if self.graph is not None:
            payload["graph"] = self.graph.as_dict()
        if self.pattern is not None:
            payload["pattern"] = self.pattern.as_dict()
        if self.parties:
            payload["parties"] = {party.name: {"honest": party.honest} for party in self.parties}
        if self.attack is not None:
            payload["attack"] = self.attack.as_dict()
        payload.update(self.options)
        return payload


_RESERVED = frozenset(
    {"protocol", "mode", "seed", "graph", "graph_file", "pattern", "pattern_file", "angles", "parties", "attack"}
)


def parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise RunConfigError(exc.msg, line=exc.lineno, column=exc.colno) from exc


def _read_referenced(base: Path | None, value: Any, what: str) -> Any:
    if not isinstance(value, str):
        raise RunConfigError(f"Путь к файлу {what} должен быть строкой.")
    path = Path(value)
    if not path.is_absolute() and base is not None:
        path = base / path
    if not path.is_file():
        raise RunConfigError(f"Файл {what} не найден: {path}.")
    try:
        return parse_json(path.read_text(encoding="utf-8"))
    except RunConfigError as exc:
        raise RunConfigError(f"{path.name}: {exc}") from exc


def _parse_graph(payload: Mapping, base: Path | None) -> Graph | None:
    raw = payload.get("graph")
    if "graph_file" in payload:
        raw = _read_referenced(base, payload["graph_file"], "графа")
    if raw is None:
        return None
    try:
        return Graph.from_dict(raw)
    except (QuantumError, TypeError) as exc:
        raise RunConfigError(f"Некорректный граф: {exc}") from exc


def _parse_pattern(payload: Mapping, base: Path | None) -> MeasurementPattern | None:
    raw = payload.get("pattern")
    if "pattern_file" in payload:
        raw = _read_referenced(base, payload["pattern_file"], "шаблона")
    try:
        if raw is not None:
            return MeasurementPattern.from_dict(raw)
        if "angles" in payload:
            angles = payload["angles"]
            if not isinstance(angles, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in angles):
                raise RunConfigError("Поле angles должно быть списком целых k (угол k·π/8).")
            return path_pattern(angles)
    except QuantumError as exc:
        raise RunConfigError(f"Некорректный шаблон: {exc}") from exc
    return None


def _parse_parties(raw: Any) -> tuple[PartySpec, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, Mapping):
        raise RunConfigError('Состав участников задаётся как {"имя": {"honest": true|false}}.')
    parties = []
    for name, spec in raw.items():
        honest = spec.get("honest", True) if isinstance(spec, Mapping) else spec
        if not isinstance(honest, bool):
            raise RunConfigError(f"Флаг честности участника {name!r} должен быть логическим.")
        parties.append(PartySpec(str(name), honest))
    return tuple(parties)


def run_config_from_payload(payload: Any, source: Path | None = None) -> RunConfig:
    if not isinstance(payload, Mapping):
        raise RunConfigError("Конфигурация должна быть JSON-объектом.")
    if "protocol" not in payload:
        raise RunConfigError("В конфигурации отсутствует поле protocol.")
    base = source.parent if source is not None else None
    seed = payload.get("seed")
    if isinstance(seed, bool):
        raise RunConfigError("Зерно должно быть целым числом.")
    attack = payload.get("attack")
    return RunConfig(
        protocol=str(payload["protocol"]),
        mode=str(payload.get("mode", ProtocolRun.Mode.ENUMERATE)),
        seed=seed,
        graph=_parse_graph(payload, base),
        pattern=_parse_pattern(payload, base),
        parties=_parse_parties(payload.get("parties")),
        attack=AttackSpec.from_payload(attack) if attack is not None else None,
        options={key: value for key, value in payload.items() if key not in _RESERVED},
        source=source,
    )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise RunConfigError(f"Файл конфигурации не найден: {path}.")
    return run_config_from_payload(parse_json(path.read_text(encoding="utf-8")), source=path)
