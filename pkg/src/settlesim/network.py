"""Synchronous component networks with guaranteed progress.

Components are pure step functions wired by buffered channels. Every
channel imposes a delay of at least one tick, so within a tick no
component's output can influence another component's input for that same
tick. That single rule makes the sweep order semantically irrelevant,
makes cyclic topologies deadlock-free by construction, and keeps every
run bit-reproducible.

Each step must emit exactly one item per out-port per tick, a payload or
an explicit hiaton; violations abort the run rather than being papered
over with a synthesized hiaton, because a component that breaks the
discipline is exactly what a simulation exists to catch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .partition import Element, Violation
from .streams import (
    Hiaton,
    Payload,
    TimedItem,
    TimedStream,
    is_dense,
    retag,
    strip_hiatons,
)
from .trace import (
    CONSUME,
    EMIT,
    HIATON,
    PAYLOAD,
    ChannelMeta,
    ComponentMeta,
    SinkMeta,
    Trace,
    TraceEvent,
    TraceMeta,
    stable_digest,
    to_jsonable,
)

__all__ = [
    "StepFunction",
    "Component",
    "Channel",
    "SinkTap",
    "Network",
    "RunResult",
    "NetworkBuildError",
    "NetworkValidationError",
    "StepContractError",
    "DrainError",
    "add_component",
    "connect",
    "bind_source",
    "expose_sink",
    "validate_network",
    "run_realtime",
    "drain",
]

# step(state, inputs, tick) -> (new state, one item per out-port)
StepFunction = Callable[[Any, tuple[TimedItem, ...], int], tuple[Any, Sequence[TimedItem]]]


@dataclass(frozen=True)
class Component:
    id: str
    step: StepFunction
    initial_state: Any
    in_ports: int
    out_ports: int


@dataclass(frozen=True, slots=True)
class Channel:
    """Single-writer buffered link; an item sent at tick t arrives at t+delay."""

    from_comp: str
    from_port: int
    to_comp: str
    to_port: int
    delay: int = 1


@dataclass(frozen=True, slots=True)
class SinkTap:
    """Out-port exposed as a result stream, behind its own delay."""

    name: str
    from_comp: str
    from_port: int
    delay: int = 1


class NetworkBuildError(ValueError):
    """A build step broke a wiring precondition."""


class NetworkValidationError(ValueError):
    """A run was attempted on a network that fails validation."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in violations))


class StepContractError(RuntimeError):
    """A step function broke the one-item-per-port-per-tick discipline."""


class DrainError(ValueError):
    """A sink payload could not be decoded as a batch element."""


@dataclass
class Network:
    """Mutable builder plus the run topology itself."""

    components: dict[str, Component] = field(default_factory=dict)
    channels: list[Channel] = field(default_factory=list)
    sources: dict[tuple[str, int], TimedStream] = field(default_factory=dict)
    sinks: dict[str, SinkTap] = field(default_factory=dict)

    # -- wiring -------------------------------------------------------------

    def add_component(self, c: Component) -> "Network":
        if c.id in self.components:
            raise NetworkBuildError(f"duplicate component id: {c.id!r}")
        if c.in_ports < 0 or c.out_ports < 0:
            raise NetworkBuildError(f"component {c.id!r} has negative port count")
        self.components[c.id] = c
        return self

    def _fed_in_ports(self) -> set[tuple[str, int]]:
        fed = {(ch.to_comp, ch.to_port) for ch in self.channels}
        fed.update(self.sources)
        return fed

    def connect(self, frm: tuple[str, int], to: tuple[str, int], delay: int = 1) -> "Network":
        if delay < 1:
            raise NetworkBuildError(f"delay must be >= 1, got {delay}")
        from_comp, from_port = frm
        to_comp, to_port = to
        for cid in (from_comp, to_comp):
            if cid not in self.components:
                raise NetworkBuildError(f"unknown component id: {cid!r}")
        if not 0 <= from_port < self.components[from_comp].out_ports:
            raise NetworkBuildError(f"out-port {from_port} out of range for component {from_comp!r}")
        if not 0 <= to_port < self.components[to_comp].in_ports:
            raise NetworkBuildError(f"in-port {to_port} out of range for component {to_comp!r}")
        if (to_comp, to_port) in self._fed_in_ports():
            raise NetworkBuildError(f"in-port already fed: {to_comp!r} port {to_port}")
        self.channels.append(Channel(from_comp, from_port, to_comp, to_port, delay))
        return self

    def bind_source(self, comp: str, port: int, stream: TimedStream) -> "Network":
        if comp not in self.components:
            raise NetworkBuildError(f"unknown component id: {comp!r}")
        if not 0 <= port < self.components[comp].in_ports:
            raise NetworkBuildError(f"in-port {port} out of range for component {comp!r}")
        if (comp, port) in self._fed_in_ports():
            raise NetworkBuildError(f"in-port already fed: {comp!r} port {port}")
        self.sources[(comp, port)] = stream
        return self

    def expose_sink(self, name: str, comp: str, port: int, delay: int = 1) -> "Network":
        if delay < 1:
            raise NetworkBuildError(f"delay must be >= 1, got {delay}")
        if name in self.sinks:
            raise NetworkBuildError(f"duplicate sink name: {name!r}")
        if comp not in self.components:
            raise NetworkBuildError(f"unknown component id: {comp!r}")
        if not 0 <= port < self.components[comp].out_ports:
            raise NetworkBuildError(f"out-port {port} out of range for component {comp!r}")
        self.sinks[name] = SinkTap(name, comp, port, delay)
        return self


@dataclass
class RunResult:
    """Trace plus the delivered sink streams of one completed run."""

    trace: Trace
    sinks: dict[str, list[TimedItem]]
    t_end: int


# ---------------------------------------------------------------------------
# Module-level operation wrappers


def add_component(net: Network, c: Component) -> Network:
    return net.add_component(c)


def connect(net: Network, frm: tuple[str, int], to: tuple[str, int], delay: int = 1) -> Network:
    return net.connect(frm, to, delay)


def bind_source(net: Network, comp: str, port: int, stream: TimedStream) -> Network:
    return net.bind_source(comp, port, stream)


def expose_sink(net: Network, name: str, comp: str, port: int, delay: int = 1) -> Network:
    return net.expose_sink(name, comp, port, delay)


def validate_network(net: Network) -> list[Violation]:
    """Structural checks; an empty list means the network can run.

    Each violation names the offending component and port so a corrupted
    wiring can be pinpointed without re-reading the whole topology.
    """
    out: list[Violation] = []
    comps = net.components

    fed: dict[tuple[str, int], int] = {}
    for ch in net.channels:
        if ch.delay < 1:
            out.append(
                Violation(
                    "channel.delay",
                    f"channel {ch.from_comp!r}.{ch.from_port}->{ch.to_comp!r}.{ch.to_port} has delay {ch.delay} < 1",
                )
            )
        if ch.from_comp not in comps:
            out.append(Violation("channel.dangling", f"channel leaves unknown component {ch.from_comp!r}"))
        elif not 0 <= ch.from_port < comps[ch.from_comp].out_ports:
            out.append(
                Violation("channel.port", f"component {ch.from_comp!r} has no out-port {ch.from_port}")
            )
        if ch.to_comp not in comps:
            out.append(Violation("channel.dangling", f"channel enters unknown component {ch.to_comp!r}"))
        elif not 0 <= ch.to_port < comps[ch.to_comp].in_ports:
            out.append(Violation("channel.port", f"component {ch.to_comp!r} has no in-port {ch.to_port}"))
        else:
            fed[(ch.to_comp, ch.to_port)] = fed.get((ch.to_comp, ch.to_port), 0) + 1

    for comp, port in sorted(net.sources):
        if comp not in comps:
            out.append(Violation("source.dangling", f"source bound to unknown component {comp!r}"))
        elif not 0 <= port < comps[comp].in_ports:
            out.append(Violation("source.port", f"component {comp!r} has no in-port {port}"))
        else:
            fed[(comp, port)] = fed.get((comp, port), 0) + 1

    for cid in sorted(comps):
        c = comps[cid]
        for p in range(c.in_ports):
            n = fed.get((cid, p), 0)
            if n == 0:
                out.append(Violation("inport.unfed", f"component {cid!r} in-port {p} is unfed"))
            elif n > 1:
                out.append(Violation("inport.multifed", f"component {cid!r} in-port {p} is fed {n} times"))

    for name in sorted(net.sinks):
        tap = net.sinks[name]
        if tap.delay < 1:
            out.append(Violation("sink.delay", f"sink {name!r} has delay {tap.delay} < 1"))
        if tap.from_comp not in comps:
            out.append(Violation("sink.dangling", f"sink {name!r} taps unknown component {tap.from_comp!r}"))
        elif not 0 <= tap.from_port < comps[tap.from_comp].out_ports:
            out.append(
                Violation("sink.port", f"sink {name!r} taps missing out-port {tap.from_port} of {tap.from_comp!r}")
            )
    return out


def _item_digest(item: TimedItem) -> str:
    if isinstance(item, Payload):
        return stable_digest(item.value)
    return ""


def _build_meta(net: Network, t_end: int) -> TraceMeta:
    return TraceMeta(
        components=tuple(
            ComponentMeta(id=c.id, in_ports=c.in_ports, out_ports=c.out_ports)
            for c in sorted(net.components.values(), key=lambda c: c.id)
        ),
        channels=tuple(
            ChannelMeta(ch.from_comp, ch.from_port, ch.to_comp, ch.to_port, ch.delay)
            for ch in sorted(
                net.channels, key=lambda ch: (ch.from_comp, ch.from_port, ch.to_comp, ch.to_port)
            )
        ),
        sinks=tuple(
            SinkMeta(tap.name, tap.from_comp, tap.from_port, tap.delay)
            for tap in (net.sinks[name] for name in sorted(net.sinks))
        ),
        t_end=t_end,
    )


def run_realtime(net: Network, t_end: int, inline_payloads: bool = False) -> RunResult:
    """Run the synchronous sweep for ticks 0..t_end.

    Per tick, components step in ascending id order; each consumes exactly
    one item per in-port (a source item, an arrived channel item re-tagged
    to this tick, or a synthesized hiaton while the channel is still
    priming) and must emit exactly one item per out-port tagged with the
    current tick. The returned trace records every consumption and
    emission plus a per-tick digest of each component's state.
    """
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    problems = validate_network(net)
    for (comp, port), stream in sorted(net.sources.items()):
        if not is_dense(stream, t_end):
            problems.append(
                Violation(
                    "source.density",
                    f"source for {comp!r} in-port {port} is not dense up to t_end={t_end}",
                )
            )
    if problems:
        raise NetworkValidationError(problems)

    comp_order = sorted(net.components)
    feeder: dict[tuple[str, int], tuple[str, Any]] = {}
    for (comp, port), stream in net.sources.items():
        feeder[(comp, port)] = ("source", stream)
    for ch in net.channels:
        feeder[(ch.to_comp, ch.to_port)] = ("channel", ch)

    emitted: dict[tuple[str, int], list[TimedItem]] = {
        (cid, p): [] for cid in comp_order for p in range(net.components[cid].out_ports)
    }
    states = {cid: net.components[cid].initial_state for cid in comp_order}
    trace = Trace(meta=_build_meta(net, t_end), inline_payloads=inline_payloads)
    digests = {cid: [] for cid in comp_order}
    trace.state_digests = digests

    for t in range(t_end + 1):
        for cid in comp_order:
            c = net.components[cid]
            inputs: list[TimedItem] = []
            for p in range(c.in_ports):
                kind, src = feeder[(cid, p)]
                if kind == "source":
                    inputs.append(src[t])
                else:
                    ch = src
                    if t < ch.delay:
                        inputs.append(Hiaton(t))
                    else:
                        inputs.append(retag(emitted[(ch.from_comp, ch.from_port)][t - ch.delay], t))

            state, outputs = c.step(states[cid], tuple(inputs), t)
            outputs = tuple(outputs)
            if len(outputs) != c.out_ports:
                raise StepContractError(
                    f"component {cid!r} emitted {len(outputs)} items for {c.out_ports} out-ports at tick {t}"
                )
            for p, item in enumerate(outputs):
                if not isinstance(item, (Payload, Hiaton)):
                    raise StepContractError(
                        f"component {cid!r} emitted non-item {item!r} on port {p} at tick {t}"
                    )
                if item.tick != t:
                    raise StepContractError(
                        f"component {cid!r} emitted tag {item.tick} on port {p} at tick {t}"
                    )
            states[cid] = state
            digests[cid].append(stable_digest(state))
            for p, item in enumerate(outputs):
                emitted[(cid, p)].append(item)

            batch: list[TraceEvent] = []
            for p, item in enumerate(inputs):
                batch.append(_make_event(t, cid, p, CONSUME, item, inline_payloads))
            for p, item in enumerate(outputs):
                batch.append(_make_event(t, cid, p, EMIT, item, inline_payloads))
            batch.sort(key=lambda e: (e.port, e.dir))
            for event in batch:
                trace.record_event(event)

    sinks: dict[str, list[TimedItem]] = {}
    for name in sorted(net.sinks):
        tap = net.sinks[name]
        stream: list[TimedItem] = []
        for t in range(t_end + 1):
            if t < tap.delay:
                stream.append(Hiaton(t))
            else:
                stream.append(retag(emitted[(tap.from_comp, tap.from_port)][t - tap.delay], t))
        sinks[name] = stream
    return RunResult(trace=trace, sinks=sinks, t_end=t_end)


def _make_event(
    tick: int, comp: str, port: int, direction: str, item: TimedItem, inline: bool
) -> TraceEvent:
    if isinstance(item, Payload):
        return TraceEvent(
            tick=tick,
            comp=comp,
            port=port,
            dir=direction,
            kind=PAYLOAD,
            digest=stable_digest(item.value),
            payload=to_jsonable(item.value) if inline else None,
        )
    return TraceEvent(tick=tick, comp=comp, port=port, dir=direction, kind=HIATON, digest="")


def _decode_element(value: Any, tick: int, sink: str) -> Element:
    if isinstance(value, Element):
        return value
    if isinstance(value, Mapping):
        try:
            eid = value["id"]
            ev = value["value"]
            queue = value["queue"]
        except KeyError as missing:
            raise DrainError(
                f"sink {sink!r} at tick {tick}: payload lacks element field {missing.args[0]!r}"
            ) from None
        refs = value.get("refs", ())
        if (
            isinstance(eid, str)
            and isinstance(ev, int)
            and not isinstance(ev, bool)
            and isinstance(queue, str)
            and isinstance(refs, (list, tuple))
            and all(isinstance(r, str) for r in refs)
        ):
            return Element(id=eid, value=ev, queue=queue, refs=tuple(refs))
        raise DrainError(f"sink {sink!r} at tick {tick}: payload fields have wrong types")
    raise DrainError(f"sink {sink!r} at tick {tick}: payload {value!r} is not an element")


def drain(net: Network, result: RunResult) -> list[Element]:
    """Decode the payloads delivered to every sink as batch elements,
    ordered by (arrival tick, sink name)."""
    del net  # topology already captured in the result; kept for call symmetry
    entries: list[tuple[int, str, Any]] = []
    for name in sorted(result.sinks):
        for payload in strip_hiatons(result.sinks[name]):
            entries.append((payload.tick, name, payload.value))
    entries.sort(key=lambda e: (e[0], e[1]))
    return [_decode_element(value, tick, name) for tick, name, value in entries]
