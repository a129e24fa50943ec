"""Seedable workload generation: random queue systems and event streams.

All randomness flows through a self-contained splitmix64 generator rather
than any platform RNG, so a (seed, params) pair produces byte-identical
artifacts on every platform and Python version. The update rule, with all
constants, is spelled out on :func:`next_random`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .partition import (
    Capacity,
    Constraint,
    Element,
    Excludes,
    Queue,
    QueueGroup,
    QueueSystem,
    Requires,
    RuleKind,
)
from .streams import Hiaton, Payload, TimedItem

__all__ = [
    "MASK64",
    "next_random",
    "Rng",
    "GroupSpec",
    "WorkloadParams",
    "gen_event_stream",
    "gen_elements",
]

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def next_random(state: int) -> tuple[int, int]:
    """One splitmix64 step: (state, value), both 64-bit.

    state' = state + 0x9E3779B97F4A7C15 (mod 2^64), then the output is
    state' mixed by two xor-shift-multiply rounds with constants
    0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and a final 31-bit
    xor-shift. Pure: feeding the same state always yields the same pair.
    """
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


@dataclass(slots=True)
class Rng:
    """Mutable convenience wrapper over :func:`next_random`."""

    state: int

    def __post_init__(self) -> None:
        self.state &= MASK64

    def next_u64(self) -> int:
        self.state, value = next_random(self.state)
        return value

    def below(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo on a 64-bit draw; the bias is
        below 2^-40 for every n used here."""
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        return self.next_u64() % n

    def between(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive."""
        return lo + self.below(hi - lo + 1)

    def chance(self, p: float) -> bool:
        """True with probability p (exact for dyadic p such as 0.25)."""
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return self.next_u64() < int(p * 2.0**64)


@dataclass(frozen=True, slots=True)
class GroupSpec:
    """How many consecutive queues the group takes, and its rule."""

    queues: int
    rule: RuleKind = RuleKind.VALUE_PRIORITY


@dataclass(frozen=True)
class WorkloadParams:
    """Everything a generated workload depends on. Densities are
    expectations per element; capacity bounds scale with total usage via
    ``capacity_slack`` (1.0 means never binding, 0.5 admits about half)."""

    seed: int
    event_frequency: float = 0.25
    element_count: int = 0
    value_range: tuple[int, int] = (1, 100)
    ref_density: float = 0.0
    queue_count: int = 1
    group_specs: tuple[GroupSpec, ...] = ()
    requires_density: float = 0.0
    excludes_density: float = 0.0
    capacity_count: int = 0
    capacity_slack: float = 1.0

    def validate(self) -> list[str]:
        bad: list[str] = []
        if not 0.0 <= self.event_frequency <= 1.0:
            bad.append(f"event_frequency {self.event_frequency} outside [0, 1]")
        if self.element_count < 0:
            bad.append(f"element_count {self.element_count} negative")
        lo, hi = self.value_range
        if lo > hi:
            bad.append(f"value_range ({lo}, {hi}) has min > max")
        for name in ("ref_density", "requires_density", "excludes_density"):
            if getattr(self, name) < 0:
                bad.append(f"{name} {getattr(self, name)} negative")
        if self.queue_count < 1:
            bad.append(f"queue_count {self.queue_count} < 1")
        if self.group_specs:
            if any(s.queues < 1 for s in self.group_specs):
                bad.append("group spec with fewer than 1 queue")
            total = sum(s.queues for s in self.group_specs)
            if total != self.queue_count:
                bad.append(f"group specs cover {total} queues, system has {self.queue_count}")
        if self.capacity_count < 0:
            bad.append(f"capacity_count {self.capacity_count} negative")
        if self.capacity_slack < 0:
            bad.append(f"capacity_slack {self.capacity_slack} negative")
        return bad


def _require_valid(p: WorkloadParams) -> None:
    bad = p.validate()
    if bad:
        raise ValueError("invalid workload params: " + "; ".join(bad))


def gen_event_stream(p: WorkloadParams, t_end: int) -> list[TimedItem]:
    """Dense stream over ticks 0..t_end: per tick, one Bernoulli trial at
    ``event_frequency`` decides payload versus hiaton. Payload values are
    the ordinal of the event (0, 1, 2, ...)."""
    _require_valid(p)
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    rng = Rng(p.seed)
    stream: list[TimedItem] = []
    ordinal = 0
    for t in range(t_end + 1):
        if rng.chance(p.event_frequency):
            stream.append(Payload(t, ordinal))
            ordinal += 1
        else:
            stream.append(Hiaton(t))
    return stream


def _draw_count(rng: Rng, density: float) -> int:
    # floor(density) guaranteed, fractional part as one extra Bernoulli trial:
    # expectation is exactly density with minimal variance
    whole = int(density)
    frac = density - whole
    return whole + (1 if rng.chance(frac) else 0)


def _distinct_other(rng: Rng, n: int, avoid: set[int]) -> int | None:
    if len(avoid) >= n:
        return None
    while True:
        j = rng.below(n)
        if j not in avoid:
            return j


def gen_elements(
    p: WorkloadParams,
) -> tuple[dict[str, Element], QueueSystem, list[QueueGroup], list[Constraint]]:
    """Generate a full batch instance: elements with uniform values and
    cross-queue refs, the queue system holding them, queue groups per the
    group specs (one ValuePriority group over everything by default), and
    Requires/Excludes/Capacity constraints at the requested densities.

    The output always passes validate_system.
    """
    _require_valid(p)
    rng = Rng(p.seed)
    n = p.element_count
    lo, hi = p.value_range

    eids = [f"e{i:05d}" for i in range(n)]
    qids = [f"q{i:03d}" for i in range(p.queue_count)]

    home = [rng.below(p.queue_count) for _ in range(n)]
    values = [rng.between(lo, hi) for _ in range(n)]

    refs: list[tuple[str, ...]] = []
    for i in range(n):
        want = _draw_count(rng, p.ref_density)
        chosen: set[int] = {i}
        picked: list[str] = []
        for _ in range(want):
            j = _distinct_other(rng, n, chosen)
            if j is None:
                break
            chosen.add(j)
            picked.append(eids[j])
        refs.append(tuple(picked))

    elements = {
        eids[i]: Element(id=eids[i], value=values[i], queue=qids[home[i]], refs=refs[i])
        for i in range(n)
    }

    members: dict[str, list[str]] = {q: [] for q in qids}
    for i in range(n):
        members[qids[home[i]]].append(eids[i])
    queues = tuple(Queue(id=q, members=tuple(members[q])) for q in qids)
    system = QueueSystem(queues=queues, queue_precedence=frozenset(), elements=elements)

    specs = p.group_specs or (GroupSpec(queues=p.queue_count, rule=RuleKind.VALUE_PRIORITY),)
    groups: list[QueueGroup] = []
    at = 0
    for j, spec in enumerate(specs):
        take = qids[at : at + spec.queues]
        groups.append(QueueGroup(id=f"g{j:02d}", queue_ids=frozenset(take), rule=spec.rule))
        at += spec.queues

    constraints: list[Constraint] = []
    for i in range(n):
        for _ in range(_draw_count(rng, p.requires_density)):
            j = _distinct_other(rng, n, {i})
            if j is not None:
                constraints.append(Requires(eids[i], eids[j]))
        for _ in range(_draw_count(rng, p.excludes_density)):
            j = _distinct_other(rng, n, {i})
            if j is not None:
                constraints.append(Excludes(eids[i], eids[j]))
    for k in range(p.capacity_count):
        usage = {eid: rng.below(10) for eid in eids}
        total = sum(usage.values())
        constraints.append(
            Capacity(resource=f"r{k}", usage=usage, bound=int(p.capacity_slack * total))
        )
    return elements, system, groups, constraints
