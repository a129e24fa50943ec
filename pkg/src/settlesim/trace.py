"""Event trace capture, export, and post-run analysis.

A run produces a complete trace: one event per item consumed on an in-port
and one per item emitted on an out-port, every tick. Payload values are
digested by default (a short stable hash) so desk-scale traces stay small;
inline payload storage is opt-in for runs that need replay.

Exports are line-oriented (ND-JSON or CSV) so large traces can be processed
incrementally, and they are byte-deterministic: the same run always exports
the same file.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

__all__ = [
    "CONSUME",
    "EMIT",
    "PAYLOAD",
    "HIATON",
    "to_jsonable",
    "stable_digest",
    "TraceEvent",
    "TraceOrderError",
    "ComponentMeta",
    "ChannelMeta",
    "SinkMeta",
    "TraceMeta",
    "Trace",
    "record_event",
    "export_trace",
    "import_trace",
    "Summary",
    "summarize",
    "animation_frames",
]

CONSUME = "consume"
EMIT = "emit"
PAYLOAD = "payload"
HIATON = "hiaton"

_EXPORT_FIELDS = ("tick", "comp", "port", "dir", "kind", "digest", "payload")


def to_jsonable(value: Any) -> Any:
    """Canonical JSON-friendly projection of an arbitrary payload value.

    Dataclasses become dicts, tuples and sets become lists (sets sorted),
    and anything else non-primitive falls back to its repr. Used both for
    digesting and for inline payload storage, so the projection must be
    deterministic.
    """
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (frozenset, set)):
        return sorted(to_jsonable(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return repr(value)


def stable_digest(value: Any) -> str:
    """Short platform-independent hash of a payload value."""
    canonical = json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """One emission or consumption of one item at one port."""

    tick: int
    comp: str
    port: int
    dir: str  # CONSUME or EMIT
    kind: str  # PAYLOAD or HIATON
    digest: str  # stable hash of the payload value, "" for hiatons
    payload: Any = None  # inline JSON projection, None unless opted in

    def sort_key(self) -> tuple[int, str, int, str]:
        return (self.tick, self.comp, self.port, self.dir)


class TraceOrderError(ValueError):
    """An event was recorded out of canonical (tick, comp, port, dir) order."""


@dataclass(frozen=True)
class ComponentMeta:
    id: str
    in_ports: int
    out_ports: int


@dataclass(frozen=True)
class ChannelMeta:
    from_comp: str
    from_port: int
    to_comp: str
    to_port: int
    delay: int

    @property
    def label(self) -> str:
        return f"{self.from_comp}.{self.from_port}->{self.to_comp}.{self.to_port}"


@dataclass(frozen=True)
class SinkMeta:
    name: str
    from_comp: str
    from_port: int
    delay: int

    @property
    def label(self) -> str:
        return f"{self.from_comp}.{self.from_port}->sink:{self.name}"


@dataclass(frozen=True)
class TraceMeta:
    """Topology snapshot a run attaches to its trace so analyses need not
    re-simulate anything."""

    components: tuple[ComponentMeta, ...]
    channels: tuple[ChannelMeta, ...]
    sinks: tuple[SinkMeta, ...]
    t_end: int


@dataclass
class Trace:
    """Append-only event log for a single run.

    ``meta`` and ``state_digests`` are set by the runner; imported traces
    carry events only.
    """

    meta: TraceMeta | None = None
    inline_payloads: bool = False
    events: list[TraceEvent] = field(default_factory=list)
    state_digests: dict[str, list[str]] = field(default_factory=dict)

    def record_event(self, event: TraceEvent) -> "Trace":
        """Append an event, enforcing strict canonical ordering."""
        if event.dir not in (CONSUME, EMIT):
            raise ValueError(f"bad event direction: {event.dir!r}")
        if event.kind not in (PAYLOAD, HIATON):
            raise ValueError(f"bad event kind: {event.kind!r}")
        if self.events and event.sort_key() <= self.events[-1].sort_key():
            raise TraceOrderError(
                f"event {event.sort_key()} does not follow {self.events[-1].sort_key()}"
            )
        self.events.append(event)
        return self

    def ticks(self) -> int:
        """Number of ticks covered (t_end + 1)."""
        if self.meta is not None:
            return self.meta.t_end + 1
        if not self.events:
            return 0
        return self.events[-1].tick + 1


def record_event(trace: Trace, event: TraceEvent) -> Trace:
    """Append ``event`` to ``trace`` (module-level form of the method)."""
    return trace.record_event(event)


def _event_to_record(event: TraceEvent) -> dict[str, Any]:
    record: dict[str, Any] = {
        "tick": event.tick,
        "comp": event.comp,
        "port": event.port,
        "dir": event.dir,
        "kind": event.kind,
        "digest": event.digest,
    }
    if event.payload is not None:
        record["payload"] = event.payload
    return record


def export_trace(trace: Trace, fmt: str, destination: str | os.PathLike | None = None) -> bytes:
    """Serialize a trace to ND-JSON or CSV bytes (UTF-8, LF line endings).

    Writes to ``destination`` when given; always returns the bytes. Field
    order is fixed so identical traces export to identical files.
    """
    if fmt == "ndjson":
        lines = [
            json.dumps(_event_to_record(e), separators=(",", ":"), ensure_ascii=True)
            for e in trace.events
        ]
        body = "".join(line + "\n" for line in lines)
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_EXPORT_FIELDS)
        for e in trace.events:
            cell = "" if e.payload is None else json.dumps(
                e.payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True
            )
            writer.writerow([e.tick, e.comp, e.port, e.dir, e.kind, e.digest, cell])
        body = buf.getvalue()
    else:
        raise ValueError(f"unknown trace format: {fmt!r} (expected 'ndjson' or 'csv')")
    data = body.encode("utf-8")
    if destination is not None:
        with open(destination, "wb") as fh:
            fh.write(data)
    return data


def import_trace(data: bytes | str, fmt: str) -> Trace:
    """Parse an exported trace back into a :class:`Trace` (events only)."""
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    trace = Trace()
    if fmt == "ndjson":
        for line in text.splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            trace.record_event(
                TraceEvent(
                    tick=int(record["tick"]),
                    comp=record["comp"],
                    port=int(record["port"]),
                    dir=record["dir"],
                    kind=record["kind"],
                    digest=record["digest"],
                    payload=record.get("payload"),
                )
            )
    elif fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is not None and tuple(header) != _EXPORT_FIELDS:
            raise ValueError(f"unexpected CSV header: {header}")
        for row in reader:
            if not row:
                continue
            tick, comp, port, dir_, kind, digest, cell = row
            trace.record_event(
                TraceEvent(
                    tick=int(tick),
                    comp=comp,
                    port=int(port),
                    dir=dir_,
                    kind=kind,
                    digest=digest,
                    payload=json.loads(cell) if cell else None,
                )
            )
    else:
        raise ValueError(f"unknown trace format: {fmt!r} (expected 'ndjson' or 'csv')")
    trace.inline_payloads = any(e.payload is not None for e in trace.events)
    return trace


@dataclass
class Summary:
    """Exact post-run aggregates recomputed from the event list alone
    (plus topology metadata for the in-flight series, when available)."""

    ticks: int
    payload_events: int
    hiaton_events: int
    per_component: dict[str, dict[str, int]]
    channel_throughput: dict[str, list[int]]
    queue_depth: dict[str, list[int]]
    latency_histogram: list[tuple[int, int]]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "ticks": self.ticks,
            "payload_events": self.payload_events,
            "hiaton_events": self.hiaton_events,
            "per_component": self.per_component,
            "channel_throughput": self.channel_throughput,
            "queue_depth": self.queue_depth,
            "latency_histogram": [list(pair) for pair in self.latency_histogram],
        }


def _cumulative_emissions(trace: Trace, ticks: int) -> dict[tuple[str, int], list[int]]:
    """Per out-port, emissions-so-far at the end of each tick."""
    per_tick: dict[tuple[str, int], list[int]] = {}
    for e in trace.events:
        if e.dir != EMIT:
            continue
        series = per_tick.setdefault((e.comp, e.port), [0] * ticks)
        series[e.tick] += 1
    cumulative = {}
    for key, series in per_tick.items():
        total = 0
        out = []
        for n in series:
            total += n
            out.append(total)
        cumulative[key] = out
    return cumulative


def summarize(trace: Trace) -> Summary:
    """Compute counts, throughput, in-flight depth, and latency from a trace."""
    ticks = trace.ticks()
    payload_events = 0
    hiaton_events = 0
    per_component: dict[str, dict[str, int]] = {}
    throughput: dict[str, list[int]] = {}
    first_emit: dict[str, int] = {}
    last_consume: dict[str, int] = {}

    for e in trace.events:
        if e.kind == PAYLOAD:
            payload_events += 1
        else:
            hiaton_events += 1
        counts = per_component.setdefault(
            e.comp,
            {"emit_payloads": 0, "emit_hiatons": 0, "consume_payloads": 0, "consume_hiatons": 0},
        )
        counts[f"{e.dir}_{e.kind}s"] += 1
        if e.dir == EMIT:
            label = f"{e.comp}.{e.port}"
            series = throughput.setdefault(label, [0] * ticks)
            if e.kind == PAYLOAD:
                series[e.tick] += 1
            if e.kind == PAYLOAD and e.digest not in first_emit:
                first_emit[e.digest] = e.tick
        elif e.kind == PAYLOAD:
            last_consume[e.digest] = e.tick

    histogram: dict[int, int] = {}
    for digest, t0 in first_emit.items():
        t1 = last_consume.get(digest)
        if t1 is not None and t1 >= t0:
            histogram[t1 - t0] = histogram.get(t1 - t0, 0) + 1

    queue_depth: dict[str, list[int]] = {}
    if trace.meta is not None:
        cumulative = _cumulative_emissions(trace, ticks)
        edges = [(c.label, c.from_comp, c.from_port, c.delay) for c in trace.meta.channels]
        edges += [(s.label, s.from_comp, s.from_port, s.delay) for s in trace.meta.sinks]
        for label, comp, port, delay in edges:
            emitted = cumulative.get((comp, port), [0] * ticks)
            depth = []
            for t in range(ticks):
                arrived = emitted[t - delay] if t - delay >= 0 else 0
                depth.append(emitted[t] - arrived)
            queue_depth[label] = depth

    return Summary(
        ticks=ticks,
        payload_events=payload_events,
        hiaton_events=hiaton_events,
        per_component={k: per_component[k] for k in sorted(per_component)},
        channel_throughput={k: throughput[k] for k in sorted(throughput)},
        queue_depth={k: queue_depth[k] for k in sorted(queue_depth)},
        latency_histogram=sorted(histogram.items()),
    )


def animation_frames(trace: Trace) -> list[dict[str, Any]]:
    """One frame per tick: per-channel in-flight occupancy and per-component
    state digests. Requires a trace captured from a run (with topology
    metadata); no re-simulation is performed.
    """
    if trace.meta is None:
        raise ValueError("animation requires a trace captured from a run (topology metadata missing)")
    ticks = trace.meta.t_end + 1
    cumulative = _cumulative_emissions(trace, ticks)
    edges = [(c.label, c.from_comp, c.from_port, c.delay) for c in trace.meta.channels]
    edges += [(s.label, s.from_comp, s.from_port, s.delay) for s in trace.meta.sinks]
    edges.sort(key=lambda e: e[0])
    comp_ids = sorted(c.id for c in trace.meta.components)

    frames = []
    for t in range(ticks):
        occupancy = {}
        for label, comp, port, delay in edges:
            emitted = cumulative.get((comp, port), [0] * ticks)
            arrived = emitted[t - delay] if t - delay >= 0 else 0
            occupancy[label] = emitted[t] - arrived
        states = {}
        for cid in comp_ids:
            digests = trace.state_digests.get(cid, [])
            states[cid] = digests[t] if t < len(digests) else ""
        frames.append({"tick": t, "channels": occupancy, "components": states})
    return frames
