"""Transcript entries and their canonical JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

import numpy as np

from quantum.angles import Angle


def plain(value: Any) -> Any:
    """Hashable, JSON-friendly form of a message value."""

    if isinstance(value, Angle):
        return value.k
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float):
        return value
    if isinstance(value, (tuple, list)):
        return tuple(plain(item) for item in value)
    name = getattr(value, "name", None)
    if isinstance(name, str):
        return name
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_jsonable(item) for item in value]
    return value


@dataclass(frozen=True, slots=True)
class TranscriptEntry:
    round: int
    party: str
    from_interface: str
    to_interface: str
    message: str
    kind: Any
    payload: Any

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "party": self.party,
            "from_interface": self.from_interface,
            "to_interface": self.to_interface,
            "message": self.message,
            "kind": plain(self.kind),
            "payload": _jsonable(self.payload),
        }


def transcript_to_json(entries: Iterable[TranscriptEntry]) -> str:
    return json.dumps([entry.as_dict() for entry in entries], ensure_ascii=False, indent=2, sort_keys=True)
