"""Exceptions raised while composing or executing interactive systems."""
from __future__ import annotations


class CompositionError(Exception):
    """Base class for composition and execution failures."""


class InterfaceMismatchError(CompositionError):
    """Interfaces being bound or compared do not agree."""


class DoubleBindingError(CompositionError):
    """An interface is bound by more than one converter."""

    def __init__(self, interface: str):
        self.interface = interface
        super().__init__(f"Интерфейс {interface!r} уже занят другим конвертером.")


class ProtocolOrderError(CompositionError):
    """A message was read before any party wrote it."""

    def __init__(self, interface: str, message: str, round_number: int):
        self.interface = interface
        self.message = message
        self.round_number = round_number
        super().__init__(
            f"Раунд {round_number}: сообщение {interface}.{message} прочитано до отправки."
        )


class MessageDomainError(CompositionError):
    """A classical message value lies outside its declared domain."""


class ChannelExtractionError(CompositionError):
    """The induced channel cannot be extracted exactly."""


class MalformedChannelError(CompositionError):
    """Kraus operators do not describe a trace-preserving map."""
