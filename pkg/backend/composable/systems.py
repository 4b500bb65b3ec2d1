"""Interfaces, converters, resources and their composition.

Ports live in one namespace keyed by ``(interface, message)``.  A converter
bound to an interface reads the outputs and writes the inputs of that port
set, so composition never rewires handlers; it only checks that the bound
interfaces agree and merges the round programs.  Channels and renaming
converters are pure aliases between port keys and carry no steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, Iterable, Sequence

from .exceptions import CompositionError, DoubleBindingError, InterfaceMismatchError

if TYPE_CHECKING:
    from .execution import ExecutionContext

PortKey = tuple[str, str]
Handler = Callable[["ExecutionContext", dict], None]


class MessageKind(str, Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"


@dataclass(frozen=True, slots=True)
class MessageSpec:
    """One message slot.

    ``domain`` lists the values channel extraction enumerates for an open classical
    input; ``qubits`` is the register size of a quantum message.
    """

    name: str
    kind: MessageKind
    domain: tuple = ()
    qubits: int = 0

    @property
    def is_quantum(self) -> bool:
        return self.kind is MessageKind.QUANTUM

    def renamed(self, name: str) -> "MessageSpec":
        return replace(self, name=name)


def classical(name: str, domain: Iterable[Any] = ()) -> MessageSpec:
    return MessageSpec(name, MessageKind.CLASSICAL, tuple(domain))


def quantum(name: str, qubits: int = 1) -> MessageSpec:
    return MessageSpec(name, MessageKind.QUANTUM, (), qubits)


@dataclass(frozen=True, slots=True)
class Interface:
    """Message schema of one interface, seen from the system that exposes it.

    ``inputs`` flow into the system, ``outputs`` flow out of it.
    """

    name: str
    inputs: tuple[MessageSpec, ...] = ()
    outputs: tuple[MessageSpec, ...] = ()

    def __post_init__(self) -> None:
        names = [spec.name for spec in self.inputs + self.outputs]
        if len(set(names)) != len(names):
            raise CompositionError(f"Интерфейс {self.name!r}: имена сообщений повторяются.")

    def spec(self, message: str) -> MessageSpec:
        for spec in self.inputs + self.outputs:
            if spec.name == message:
                return spec
        raise InterfaceMismatchError(f"Интерфейс {self.name!r} не содержит сообщения {message!r}.")

    def renamed(self, name: str) -> "Interface":
        return Interface(name, self.inputs, self.outputs)

    def port(self, message: str) -> PortKey:
        self.spec(message)
        return (self.name, message)

    def same_schema(self, other: "Interface") -> bool:
        return set(self.inputs) == set(other.inputs) and set(self.outputs) == set(other.outputs)


@dataclass(frozen=True, slots=True)
class Step:
    round: int
    party: str
    handler: Handler
    owner: str


@dataclass(frozen=True)
class Converter:
    """Party machine: binds ``inner`` interfaces and exposes ``outer`` ones."""

    name: str
    party: str
    inner: tuple[Interface, ...]
    outer: tuple[Interface, ...] = ()
    steps: tuple[Step, ...] = ()
    aliases: tuple[tuple[PortKey, PortKey], ...] = ()
    owners: frozenset[str] = field(default=frozenset())

    def __post_init__(self) -> None:
        object.__setattr__(self, "inner", tuple(self.inner))
        object.__setattr__(self, "outer", tuple(self.outer))
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "aliases", tuple(self.aliases))
        if not self.owners:
            object.__setattr__(self, "owners", frozenset({self.name}))

    def at(self, round_number: int, handler: Handler) -> Step:
        return Step(round_number, self.party, handler, self.name)


@dataclass(frozen=True)
class ResourceSystem:
    """A system with open interfaces and a round program."""

    name: str
    interfaces: tuple[Interface, ...]
    steps: tuple[Step, ...] = ()
    aliases: tuple[tuple[PortKey, PortKey], ...] = ()
    owners: frozenset[str] = field(default=frozenset())

    def __post_init__(self) -> None:
        object.__setattr__(self, "interfaces", tuple(self.interfaces))
        object.__setattr__(self, "steps", tuple(sorted(self.steps, key=lambda step: step.round)))
        object.__setattr__(self, "aliases", tuple(self.aliases))
        if not self.owners:
            object.__setattr__(self, "owners", frozenset({self.name}))
        names = [interface.name for interface in self.interfaces]
        if len(set(names)) != len(names):
            raise CompositionError(f"Система {self.name!r}: имена интерфейсов повторяются.")

    def interface(self, name: str) -> Interface:
        for interface in self.interfaces:
            if interface.name == name:
                return interface
        raise InterfaceMismatchError(f"Система {self.name!r} не имеет открытого интерфейса {name!r}.")

    @property
    def interface_names(self) -> tuple[str, ...]:
        return tuple(interface.name for interface in self.interfaces)

    def open_inputs(self, interfaces: Iterable[str] | None = None) -> list[tuple[PortKey, MessageSpec]]:
        selected = self._select(interfaces)
        return [((interface.name, spec.name), spec) for interface in selected for spec in interface.inputs]

    def open_outputs(self, interfaces: Iterable[str] | None = None) -> list[tuple[PortKey, MessageSpec]]:
        selected = self._select(interfaces)
        return [((interface.name, spec.name), spec) for interface in selected for spec in interface.outputs]

    def _select(self, names: Iterable[str] | None) -> list[Interface]:
        if names is None:
            return list(self.interfaces)
        return [self.interface(name) for name in names]

    def at(self, round_number: int, handler: Handler, party: str | None = None) -> Step:
        return Step(round_number, party or self.name, handler, self.name)


def _check_owners(first: frozenset[str], second: frozenset[str]) -> None:
    clash = first & second
    if clash:
        raise CompositionError(f"Компоненты с одинаковыми именами: {sorted(clash)}.")


def compose(converters: Converter | Sequence[Converter], resource: ResourceSystem, name: str | None = None) -> ResourceSystem:
    """Attach converters to the open interfaces of ``resource``."""

    if isinstance(converters, Converter):
        converters = (converters,)
    available = {interface.name: interface for interface in resource.interfaces}
    bound: set[str] = set()
    steps = list(resource.steps)
    aliases = list(resource.aliases)
    owners = resource.owners
    exposed: list[Interface] = []
    for converter in converters:
        _check_owners(owners, converter.owners)
        owners = owners | converter.owners
        for interface in converter.inner:
            if interface.name in bound:
                raise DoubleBindingError(interface.name)
            target = available.get(interface.name)
            if target is None:
                raise InterfaceMismatchError(
                    f"Конвертер {converter.name!r}: интерфейс {interface.name!r} недоступен в {resource.name!r}."
                )
            if not target.same_schema(interface):
                raise InterfaceMismatchError(
                    f"Конвертер {converter.name!r}: схема интерфейса {interface.name!r} не совпадает."
                )
            bound.add(interface.name)
        exposed.extend(converter.outer)
        steps.extend(converter.steps)
        aliases.extend(converter.aliases)
    remaining = [interface for interface in resource.interfaces if interface.name not in bound]
    clash = {interface.name for interface in remaining} & {interface.name for interface in exposed}
    if clash:
        raise InterfaceMismatchError(f"Внешние интерфейсы конфликтуют с открытыми: {sorted(clash)}.")
    label = name or "∘".join([converter.name for converter in converters] + [resource.name])
    return ResourceSystem(label, tuple(remaining + exposed), tuple(steps), tuple(aliases), owners)


def chain(outer: Converter, inner: Converter) -> Converter:
    """Single converter equivalent to attaching ``inner`` first and ``outer`` on top of it."""

    inner_outer = {interface.name: interface for interface in inner.outer}
    if set(inner_outer) != {interface.name for interface in outer.inner} or not all(
        inner_outer[interface.name].same_schema(interface) for interface in outer.inner
    ):
        raise InterfaceMismatchError(
            f"Нельзя сцепить {outer.name!r} и {inner.name!r}: внешние интерфейсы не совпадают с внутренними."
        )
    _check_owners(outer.owners, inner.owners)
    return Converter(
        name=f"{outer.name}∘{inner.name}",
        party=outer.party,
        inner=inner.inner,
        outer=outer.outer,
        steps=inner.steps + outer.steps,
        aliases=inner.aliases + outer.aliases,
        owners=outer.owners | inner.owners,
    )


def identity_converter(interface: Interface, name: str, party: str | None = None) -> Converter:
    """Re-expose ``interface`` under the name ``name`` without touching any message."""

    renamed = interface.renamed(name)
    aliases = tuple(
        ((interface.name, spec.name), (name, spec.name)) for spec in interface.inputs + interface.outputs
    )
    return Converter(f"id[{interface.name}→{name}]", party or name, (interface,), (renamed,), (), aliases)


def wire(resource: ResourceSystem, renames: dict[str, str]) -> ResourceSystem:
    """Compose identity converters renaming open interfaces."""

    converters = [
        identity_converter(resource.interface(old), new) for old, new in renames.items()
    ]
    return compose(converters, resource, name=resource.name)


@dataclass(frozen=True, slots=True)
class Link:
    """One message of a channel resource, from ``source`` to ``target``."""

    source: str
    target: str
    spec: MessageSpec
    target_name: str | None = None


def channel_resource(name: str, links: Iterable[Link], endpoints: Iterable[str] = ()) -> ResourceSystem:
    """Perfect channels between endpoint interfaces.

    A message written into ``source`` is delivered unchanged at ``target``
    (under ``target_name`` when given).  Quantum messages stay in the shared
    register, so delivery costs nothing.
    """

    inputs: dict[str, list[MessageSpec]] = {endpoint: [] for endpoint in endpoints}
    outputs: dict[str, list[MessageSpec]] = {endpoint: [] for endpoint in endpoints}
    aliases = []
    for link in links:
        delivered = link.spec.renamed(link.target_name or link.spec.name)
        inputs.setdefault(link.source, []).append(link.spec)
        outputs.setdefault(link.target, []).append(delivered)
        inputs.setdefault(link.target, [])
        outputs.setdefault(link.source, [])
        aliases.append(((link.source, link.spec.name), (link.target, delivered.name)))
    interfaces = tuple(
        Interface(endpoint, tuple(inputs[endpoint]), tuple(outputs[endpoint])) for endpoint in inputs
    )
    return ResourceSystem(name, interfaces, (), tuple(aliases))


def mix_systems(first: ResourceSystem, second: ResourceSystem, probability: float, name: str | None = None) -> ResourceSystem:
    """Run ``first`` with ``probability`` and ``second`` otherwise."""

    if not 0 <= probability <= 1:
        raise CompositionError(f"Вероятность смеси {probability} вне отрезка [0, 1].")
    if set(first.interface_names) != set(second.interface_names) or not all(
        first.interface(interface.name).same_schema(interface) for interface in second.interfaces
    ):
        raise InterfaceMismatchError("Смешиваемые системы должны иметь одинаковые интерфейсы.")
    label = name or f"mix({first.name},{second.name})"
    flag = f"mix:{label}"
    start = min((step.round for step in first.steps + second.steps), default=0) - 1

    def toss(ctx, memory):
        ctx.shared[flag] = ctx.sample(label, (0, 1), weights=(probability, 1 - probability))

    def guarded(step: Step, branch: int) -> Step:
        def handler(ctx, memory):
            if ctx.shared[flag] == branch:
                step.handler(ctx, memory)

        return Step(step.round, step.party, handler, f"{branch}:{step.owner}")

    steps = [Step(start, label, toss, label)]
    steps += [guarded(step, 0) for step in first.steps]
    steps += [guarded(step, 1) for step in second.steps]
    return ResourceSystem(
        label,
        first.interfaces,
        tuple(steps),
        first.aliases + second.aliases,
        frozenset({label}) | {f"0:{owner}" for owner in first.owners} | {f"1:{owner}" for owner in second.owners},
    )


def step(round_number: int, owner: str, handler: Handler, party: str | None = None) -> Step:
    return Step(round_number, party or owner, handler, owner)
