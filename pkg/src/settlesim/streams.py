"""Time-tagged data streams.

Everything that moves between simulation components is a finite stream of
time-tagged items. Silence is explicit: when a producer has nothing to say
at a tick it emits a *hiaton* (an empty item carrying only the tick) instead
of leaving a gap. Dense streams -- exactly one item per tick up to the
horizon -- are what make progress checkable: a consumer never has to block
on a silent producer, it just reads the hiaton and moves on.

Streams are plain sequences of :class:`Payload` / :class:`Hiaton` values.
All operations here are pure; items are immutable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence, Union

__all__ = [
    "Tick",
    "Payload",
    "Hiaton",
    "TimedItem",
    "StreamOrderError",
    "make_hiaton",
    "is_hiaton",
    "retag",
    "first_disorder",
    "check_monotone",
    "merge",
    "strip_hiatons",
    "count_hiatons",
    "shift",
    "is_dense",
]

# Discrete simulation time. Tick 0 is the start of a run.
Tick = int


@dataclass(frozen=True, slots=True)
class Payload:
    """A data item observed at a tick. The value is opaque to the kernel."""

    tick: Tick
    value: Any


@dataclass(frozen=True, slots=True)
class Hiaton:
    """An explicit 'nothing this tick' item. Carries a tick like any item."""

    tick: Tick


TimedItem = Union[Payload, Hiaton]
TimedStream = Sequence[TimedItem]


class StreamOrderError(ValueError):
    """A stream's time tags decreased where monotone tags were required."""

    def __init__(self, where: str, index: int):
        super().__init__(f"{where}: time tags decrease at index {index}")
        self.where = where
        self.index = index


def make_hiaton(tick: Tick) -> Hiaton:
    """Build the silence item for a tick."""
    return Hiaton(tick)


def is_hiaton(item: TimedItem) -> bool:
    return isinstance(item, Hiaton)


def retag(item: TimedItem, tick: Tick) -> TimedItem:
    """Copy an item onto a new tick, preserving its payload if any."""
    if isinstance(item, Payload):
        return Payload(tick, item.value)
    return Hiaton(tick)


def first_disorder(stream: TimedStream) -> int | None:
    """Index of the first item whose tag is smaller than its predecessor's,
    or None if tags are non-decreasing throughout."""
    for i in range(1, len(stream)):
        if stream[i].tick < stream[i - 1].tick:
            return i
    return None


def check_monotone(stream: TimedStream, where: str = "stream") -> None:
    """Raise :class:`StreamOrderError` at the first out-of-order item."""
    bad = first_disorder(stream)
    if bad is not None:
        raise StreamOrderError(where, bad)


def merge(a: TimedStream, b: TimedStream) -> list[TimedItem]:
    """Stable time-ordered interleaving of two monotone streams.

    Items with equal tags keep their relative order within each input, and
    the left stream wins ties across inputs. The output length is always
    ``len(a) + len(b)``; hiatons are merged like any other item.
    """
    check_monotone(a, "left stream")
    check_monotone(b, "right stream")
    out: list[TimedItem] = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i].tick <= b[j].tick:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out


def strip_hiatons(stream: TimedStream) -> list[Payload]:
    """Drop the silence, keeping payloads in order."""
    return [item for item in stream if isinstance(item, Payload)]


def count_hiatons(stream: TimedStream) -> int:
    return sum(1 for item in stream if isinstance(item, Hiaton))


def shift(stream: TimedStream, delta: int) -> list[TimedItem]:
    """Move every item ``delta`` ticks later. Models channel latency."""
    if delta < 0:
        raise ValueError(f"shift must be non-negative, got {delta}")
    return [retag(item, item.tick + delta) for item in stream]


def is_dense(stream: TimedStream, t_end: Tick) -> bool:
    """True iff the stream carries exactly one item per tick for 0..t_end."""
    if len(stream) != t_end + 1:
        return False
    return all(stream[t].tick == t for t in range(t_end + 1))
