"""Exceptions raised while building or evaluating attacks."""
from __future__ import annotations


class AttackError(Exception):
    """An attack does not fit the instance it is applied to."""


class UnknownStageError(AttackError):
    def __init__(self, stage: str):
        self.stage = stage
        super().__init__(f"Неизвестная стадия атаки {stage!r}.")
