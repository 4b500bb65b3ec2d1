"""Exceptions raised by protocol party machines."""
from __future__ import annotations


class ProtocolError(Exception):
    """Base class for protocol failures; an abort is a result, not a ProtocolError."""


class MessageError(ProtocolError):
    """A message is malformed or lies outside the domain the protocol allows."""


class PreconditionError(ProtocolError):
    """The protocol cannot be instantiated for the requested parameters."""
