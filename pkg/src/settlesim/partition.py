"""Batch partition engine for a constrained queue system.

Models a population of valued elements spread across partially-ordered
queues, connects them into a dependency graph (cross-references plus
hard Requires constraints), collapses mutual dependencies into atomic
super-groups, and greedily selects a constraint-feasible subset that
maximizes the total accepted value.

The greedy pass is an approximation: it visits super-groups dependencies
first and never backtracks. ``exhaustive_oracle`` computes the true
optimum on small instances so the gap can be measured rather than
guessed at. Everything here is pure and deterministic: fixed tie-breaks,
integer arithmetic, sorted iteration.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence, Union

__all__ = [
    "Element",
    "Queue",
    "QueueSystem",
    "QueueGroup",
    "RuleKind",
    "Requires",
    "Excludes",
    "Capacity",
    "Constraint",
    "DependencyGraph",
    "SuperGroup",
    "CondensedDag",
    "Partition",
    "Violation",
    "DanglingReferenceError",
    "SystemValidationError",
    "InstanceTooLargeError",
    "validate_system",
    "build_dependency_graph",
    "tarjan_scc",
    "condense",
    "condensation_ranks",
    "linearize_queues",
    "global_positions",
    "OrderingContext",
    "dispatch_rule",
    "select_partition",
    "mutual_dependency_classes",
    "exhaustive_oracle",
    "aggregate",
    "check_constraints",
]


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True, slots=True)
class Element:
    """One settleable item: an integer value, a home queue, and
    cross-references to items it depends on (possibly in other queues)."""

    id: str
    value: int
    queue: str
    refs: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class Queue:
    """Ordered insertion list of element ids plus an intra-queue partial
    order (pairs mean earlier-before-later)."""

    id: str
    members: tuple[str, ...] = ()
    precedence: frozenset[tuple[str, str]] = frozenset()


@dataclass(frozen=True)
class QueueSystem:
    """All queues, a partial order over the queues themselves, and the
    element population keyed by id."""

    queues: tuple[Queue, ...]
    queue_precedence: frozenset[tuple[str, str]] = frozenset()
    elements: Mapping[str, Element] = field(default_factory=dict)


class RuleKind(Enum):
    """Closed set of per-group processing rules; adding one is a code change."""

    VALUE_PRIORITY = "value_priority"
    FIFO_STRICT = "fifo_strict"
    ALL_OR_NOTHING_GROUP = "all_or_nothing_group"


@dataclass(frozen=True, slots=True)
class QueueGroup:
    """Business grouping of queues sharing one processing rule."""

    id: str
    queue_ids: frozenset[str]
    rule: RuleKind


@dataclass(frozen=True, slots=True)
class Requires:
    """Accepting ``a`` demands that ``b`` is accepted too."""

    a: str
    b: str


@dataclass(frozen=True, slots=True)
class Excludes:
    """``a`` and ``b`` may never both be accepted."""

    a: str
    b: str


@dataclass(frozen=True)
class Capacity:
    """Accepted elements' summed usage of a named resource must stay
    within ``bound``. Elements absent from ``usage`` use zero."""

    resource: str
    usage: Mapping[str, int]
    bound: int


Constraint = Union[Requires, Excludes, Capacity]


@dataclass(frozen=True)
class DependencyGraph:
    """Directed graph over element ids; edge a->b means a depends on b."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            adj[a].append(b)
        for out in adj.values():
            out.sort()
        return adj


@dataclass(frozen=True, slots=True)
class SuperGroup:
    """One strongly connected component; processed atomically because its
    members are mutually dependent. ``id`` is the emission index, so a
    group's dependencies always have smaller ids."""

    id: int
    members: frozenset[str]

    def sorted_members(self) -> tuple[str, ...]:
        return tuple(sorted(self.members))


@dataclass(frozen=True)
class CondensedDag:
    """Super-groups plus the cross-group edges between them (acyclic)."""

    groups: tuple[SuperGroup, ...]
    edges: tuple[tuple[int, int], ...]

    def successors(self) -> dict[int, list[int]]:
        succ: dict[int, list[int]] = {g.id: [] for g in self.groups}
        for a, b in self.edges:
            succ[a].append(b)
        for out in succ.values():
            out.sort()
        return succ


@dataclass(frozen=True)
class Partition:
    """Outcome of a selection run: disjoint, exhaustive element split."""

    accepted: frozenset[str]
    rejected: frozenset[str]
    aggregate: int
    violations: tuple["Violation", ...] = ()


@dataclass(frozen=True, slots=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class DanglingReferenceError(ValueError):
    """A reference or constraint names an element that does not exist."""

    def __init__(self, source: str, target: str):
        self.source = source
        self.target = target
        super().__init__(f"{source!r} references unknown element {target!r}")


class SystemValidationError(ValueError):
    """Raised when an operation requires a valid system but gets violations."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = tuple(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid queue system: {lines}")


class InstanceTooLargeError(ValueError):
    """The exhaustive oracle enumerates subsets; it refuses large instances."""


# ---------------------------------------------------------------------------
# Validation


def _cycle_exists(nodes: Iterable[str], pairs: Iterable[tuple[str, str]]) -> bool:
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in pairs:
        if a in adj and b in adj:
            adj[a].append(b)
    state: dict[str, int] = {}  # 1 = visiting, 2 = done
    for root in adj:
        if state.get(root):
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        state[root] = 1
        while stack:
            node, i = stack[-1]
            if i < len(adj[node]):
                stack[-1] = (node, i + 1)
                nxt = adj[node][i]
                mark = state.get(nxt, 0)
                if mark == 1:
                    return True
                if mark == 0:
                    state[nxt] = 1
                    stack.append((nxt, 0))
            else:
                state[node] = 2
                stack.pop()
    return False


def validate_system(
    sys: QueueSystem,
    groups: Sequence[QueueGroup],
    constraints: Sequence[Constraint],
) -> list[Violation]:
    """Check every structural invariant; an empty list means the system is
    well-formed. Violations are data, not exceptions."""
    out: list[Violation] = []
    queue_ids = [q.id for q in sys.queues]
    queue_set = set(queue_ids)
    if len(queue_set) != len(queue_ids):
        dupes = sorted({q for q in queue_ids if queue_ids.count(q) > 1})
        out.append(Violation("queue.duplicate", f"duplicate queue ids: {dupes}"))

    for a, b in sorted(sys.queue_precedence):
        if a not in queue_set or b not in queue_set:
            out.append(Violation("queue_precedence.unknown", f"pair ({a!r}, {b!r}) names an unknown queue"))
    if _cycle_exists(queue_set, sys.queue_precedence):
        out.append(Violation("queue_precedence.cycle", "queue precedence is not acyclic"))

    seen_members: dict[str, str] = {}
    for q in sys.queues:
        member_set = set(q.members)
        if len(member_set) != len(q.members):
            out.append(Violation("queue.member_duplicate", f"queue {q.id!r} lists a member twice"))
        for m in q.members:
            if m in seen_members and seen_members[m] != q.id:
                out.append(
                    Violation(
                        "element.multihomed",
                        f"element {m!r} appears in queues {seen_members[m]!r} and {q.id!r}",
                    )
                )
            seen_members[m] = q.id
            if m not in sys.elements:
                out.append(Violation("queue.unknown_member", f"queue {q.id!r} lists unknown element {m!r}"))
        for a, b in sorted(q.precedence):
            if a not in member_set or b not in member_set:
                out.append(
                    Violation(
                        "queue.precedence_unknown",
                        f"queue {q.id!r} precedence pair ({a!r}, {b!r}) names a non-member",
                    )
                )
        if _cycle_exists(member_set, q.precedence):
            out.append(Violation("queue.precedence_cycle", f"queue {q.id!r} precedence is not acyclic"))

    for eid, elem in sorted(sys.elements.items()):
        if elem.id != eid:
            out.append(Violation("element.key_mismatch", f"element keyed {eid!r} has id {elem.id!r}"))
        if eid not in seen_members:
            out.append(Violation("element.unqueued", f"element {eid!r} is in no queue"))
        elif elem.queue != seen_members[eid]:
            out.append(
                Violation(
                    "element.queue_mismatch",
                    f"element {eid!r} claims queue {elem.queue!r} but sits in {seen_members[eid]!r}",
                )
            )
        for ref in elem.refs:
            if ref == eid:
                out.append(Violation("element.self_ref", f"element {eid!r} references itself"))
            elif ref not in sys.elements:
                out.append(Violation("element.dangling_ref", f"element {eid!r} references unknown element {ref!r}"))

    group_ids = [g.id for g in groups]
    if len(set(group_ids)) != len(group_ids):
        dupes = sorted({g for g in group_ids if group_ids.count(g) > 1})
        out.append(Violation("group.duplicate", f"duplicate group ids: {dupes}"))
    covered: dict[str, str] = {}
    for g in groups:
        for qid in sorted(g.queue_ids):
            if qid not in queue_set:
                out.append(Violation("group.unknown_queue", f"group {g.id!r} names unknown queue {qid!r}"))
            if qid in covered:
                out.append(
                    Violation(
                        "group.overlap",
                        f"queue {qid!r} belongs to groups {covered[qid]!r} and {g.id!r}",
                    )
                )
            covered[qid] = g.id
    for qid in sorted(queue_set - set(covered)):
        out.append(Violation("group.uncovered_queue", f"queue {qid!r} belongs to no group"))

    for i, c in enumerate(constraints):
        if isinstance(c, (Requires, Excludes)):
            kind = "requires" if isinstance(c, Requires) else "excludes"
            for end in (c.a, c.b):
                if end not in sys.elements:
                    out.append(Violation(f"{kind}.unknown", f"constraint #{i} names unknown element {end!r}"))
        elif isinstance(c, Capacity):
            for eid, used in sorted(c.usage.items()):
                if eid not in sys.elements:
                    out.append(
                        Violation("capacity.unknown", f"capacity {c.resource!r} maps unknown element {eid!r}")
                    )
                if used < 0:
                    out.append(
                        Violation(
                            "capacity.negative_usage",
                            f"capacity {c.resource!r} gives element {eid!r} negative usage {used}",
                        )
                    )
            if c.bound < 0:
                out.append(
                    Violation(
                        "capacity.negative_bound",
                        f"capacity {c.resource!r} bound {c.bound} rejects even the empty partition",
                    )
                )
        else:
            out.append(Violation("constraint.unknown_kind", f"constraint #{i} has unsupported type {type(c).__name__}"))
    return out


# ---------------------------------------------------------------------------
# Dependency graph and strongly connected components


def build_dependency_graph(
    elements: Mapping[str, Element],
    constraints: Sequence[Constraint],
) -> DependencyGraph:
    """Edges are element cross-references plus one a->b edge per
    Requires(a, b); duplicates collapse."""
    edges: set[tuple[str, str]] = set()
    for eid in sorted(elements):
        for ref in elements[eid].refs:
            if ref not in elements:
                raise DanglingReferenceError(f"element {eid}", ref)
            edges.add((eid, ref))
    for c in constraints:
        if isinstance(c, Requires):
            for end in (c.a, c.b):
                if end not in elements:
                    raise DanglingReferenceError(f"requires({c.a}, {c.b})", end)
            edges.add((c.a, c.b))
    return DependencyGraph(nodes=tuple(sorted(elements)), edges=tuple(sorted(edges)))


def tarjan_scc(g: DependencyGraph) -> list[SuperGroup]:
    """Strongly connected components, emitted dependencies-first.

    Every edge between two distinct components points from a later-emitted
    component to an earlier-emitted one, so the emission index doubles as a
    safe processing order. Iterative so deep chains cannot blow the Python
    call stack.
    """
    adj = g.adjacency()
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    sccs: list[SuperGroup] = []

    for root in g.nodes:
        if root in index:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child = work[-1]
            if child == 0:
                index[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            descended = False
            neighbors = adj[node]
            for i in range(child, len(neighbors)):
                nxt = neighbors[i]
                if nxt not in index:
                    work[-1] = (node, i + 1)
                    work.append((nxt, 0))
                    descended = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if descended:
                continue
            if lowlink[node] == index[node]:
                members = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    members.append(w)
                    if w == node:
                        break
                sccs.append(SuperGroup(id=len(sccs), members=frozenset(members)))
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return sccs


def condense(g: DependencyGraph, sccs: Sequence[SuperGroup]) -> CondensedDag:
    """Collapse each component to one node; keep deduplicated cross edges."""
    owner: dict[str, int] = {}
    for sg in sccs:
        for m in sg.members:
            owner[m] = sg.id
    edges = {
        (owner[a], owner[b])
        for a, b in g.edges
        if owner[a] != owner[b]
    }
    return CondensedDag(groups=tuple(sccs), edges=tuple(sorted(edges)))


def condensation_ranks(dag: CondensedDag) -> dict[int, int]:
    """Longest path to a sink: rank 0 means no dependencies at all.

    Emission order guarantees a group's successors carry smaller ids, so a
    single ascending pass suffices.
    """
    succ = dag.successors()
    ranks: dict[int, int] = {}
    for sg in dag.groups:
        outs = succ[sg.id]
        ranks[sg.id] = 0 if not outs else 1 + max(ranks[s] for s in outs)
    return ranks


# ---------------------------------------------------------------------------
# Queue linearization and rule dispatch


def linearize_queues(sys: QueueSystem) -> list[str]:
    """Deterministic total order over queues: topological by the queue
    partial order, ascending queue id among the currently-free queues."""
    ids = sorted(q.id for q in sys.queues)
    indegree = {q: 0 for q in ids}
    succ: dict[str, list[str]] = {q: [] for q in ids}
    for a, b in sorted(sys.queue_precedence):
        succ[a].append(b)
        indegree[b] += 1
    ready = [q for q in ids if indegree[q] == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        q = heapq.heappop(ready)
        order.append(q)
        for nxt in succ[q]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(ids):
        raise SystemValidationError([Violation("queue_precedence.cycle", "queue precedence is not acyclic")])
    return order


def global_positions(sys: QueueSystem) -> dict[str, int]:
    """Element id -> global insertion index: queues in linearized order,
    members in insertion order within each queue."""
    by_id = {q.id: q for q in sys.queues}
    pos: dict[str, int] = {}
    i = 0
    for qid in linearize_queues(sys):
        for m in by_id[qid].members:
            pos[m] = i
            i += 1
    return pos


@dataclass(frozen=True)
class OrderingContext:
    """Facts the ordering rules consult: per-supergroup total value and
    earliest member insertion position."""

    values: Mapping[int, int]
    positions: Mapping[int, int]


OrderingProcedure = Callable[[Sequence[SuperGroup], OrderingContext], list[SuperGroup]]


def _order_by_value(candidates: Sequence[SuperGroup], ctx: OrderingContext) -> list[SuperGroup]:
    return sorted(candidates, key=lambda sg: (-ctx.values[sg.id], sg.id))


def _order_by_insertion(candidates: Sequence[SuperGroup], ctx: OrderingContext) -> list[SuperGroup]:
    return sorted(candidates, key=lambda sg: (ctx.positions[sg.id], sg.id))


def dispatch_rule(kind: RuleKind) -> OrderingProcedure:
    """Select the candidate-ordering procedure for a rule variant.

    AllOrNothingGroup orders like ValuePriority; its distinctive behavior
    (one failure rejects the whole queue group) lives in select_partition.
    """
    match kind:
        case RuleKind.VALUE_PRIORITY | RuleKind.ALL_OR_NOTHING_GROUP:
            return _order_by_value
        case RuleKind.FIFO_STRICT:
            return _order_by_insertion
    raise AssertionError(f"unreachable rule kind: {kind!r}")


def _rule_sort_key(
    rule: RuleKind, sg: SuperGroup, ctx: OrderingContext
) -> tuple[int, int]:
    match rule:
        case RuleKind.VALUE_PRIORITY | RuleKind.ALL_OR_NOTHING_GROUP:
            return (-ctx.values[sg.id], sg.id)
        case RuleKind.FIFO_STRICT:
            return (ctx.positions[sg.id], sg.id)
    raise AssertionError(f"unreachable rule kind: {rule!r}")


# ---------------------------------------------------------------------------
# Selection


def aggregate(accepted: Iterable[str], elements: Mapping[str, Element]) -> int:
    """Sum of accepted element values; unknown ids are an error."""
    total = 0
    for eid in accepted:
        if eid not in elements:
            raise KeyError(f"unknown element id: {eid!r}")
        total += elements[eid].value
    return total


def check_constraints(p: Partition, constraints: Sequence[Constraint]) -> list[Violation]:
    """List every constraint the partition violates (empty means feasible)."""
    out: list[Violation] = []
    acc = p.accepted
    for c in constraints:
        if isinstance(c, Requires):
            if c.a in acc and c.b not in acc:
                out.append(Violation("requires", f"{c.a!r} accepted but required {c.b!r} is not"))
        elif isinstance(c, Excludes):
            if c.a in acc and c.b in acc:
                out.append(Violation("excludes", f"{c.a!r} and {c.b!r} are both accepted"))
        elif isinstance(c, Capacity):
            used = sum(c.usage.get(eid, 0) for eid in acc)
            if used > c.bound:
                out.append(
                    Violation("capacity", f"resource {c.resource!r} usage {used} exceeds bound {c.bound}")
                )
    return out


def select_partition(
    sys: QueueSystem,
    groups: Sequence[QueueGroup],
    constraints: Sequence[Constraint],
) -> Partition:
    """Greedy constraint-feasible selection over atomic super-groups.

    Super-groups are visited dependencies-first (ascending condensation
    rank); within a rank they are ordered by owning queue group (ascending
    group id) and each group's own rule. A super-group is accepted only if
    every super-group it Requires is already accepted, no Excludes pairs it
    with an accepted element, and every capacity bound still holds;
    otherwise it is rejected whole. A rejection inside an AllOrNothingGroup
    queue group rejects everything touching that queue group, which is
    applied by banning the group and restarting the pass (at most one
    restart per group, so the loop terminates).

    The result is always feasible; the aggregate is exact integer money.
    """
    problems = validate_system(sys, groups, constraints)
    if problems:
        raise SystemValidationError(problems)

    elements = sys.elements
    graph = build_dependency_graph(elements, constraints)
    sccs = tarjan_scc(graph)
    dag = condense(graph, sccs)
    ranks = condensation_ranks(dag)
    positions = global_positions(sys)

    group_of_queue: dict[str, QueueGroup] = {}
    for g in groups:
        for qid in g.queue_ids:
            group_of_queue[qid] = g
    group_of_elem = {eid: group_of_queue[e.queue] for eid, e in elements.items()}

    sg_value = {sg.id: sum(elements[m].value for m in sg.members) for sg in sccs}
    sg_first_pos = {sg.id: min(positions[m] for m in sg.members) for sg in sccs}
    ctx = OrderingContext(values=sg_value, positions=sg_first_pos)
    sg_owner = {
        sg.id: group_of_elem[min(sg.members, key=lambda m: positions[m])]
        for sg in sccs
    }
    sg_touches = {
        sg.id: frozenset(group_of_elem[m].id for m in sg.members) for sg in sccs
    }

    by_rank: dict[int, list[SuperGroup]] = {}
    for sg in sccs:
        by_rank.setdefault(ranks[sg.id], []).append(sg)
    visit: list[SuperGroup] = []
    for rank in sorted(by_rank):
        bucket = by_rank[rank]
        bucket.sort(key=lambda sg: (sg_owner[sg.id].id,) + _rule_sort_key(sg_owner[sg.id].rule, sg, ctx))
        visit.extend(bucket)

    member_of: dict[str, SuperGroup] = {}
    for sg in sccs:
        for m in sg.members:
            member_of[m] = sg
    requires_ext: dict[int, list[str]] = {sg.id: [] for sg in sccs}
    for c in constraints:
        if isinstance(c, Requires) and member_of[c.a].id != member_of[c.b].id:
            requires_ext[member_of[c.a].id].append(c.b)
    excludes = [c for c in constraints if isinstance(c, Excludes)]
    capacities = [c for c in constraints if isinstance(c, Capacity)]
    cap_delta = {
        sg.id: [sum(c.usage.get(m, 0) for m in sg.members) for c in capacities]
        for sg in sccs
    }

    banned: set[str] = set()
    while True:
        accepted: set[str] = set()
        used = [0] * len(capacities)
        newly_banned: str | None = None
        for sg in visit:
            if banned and not banned.isdisjoint(sg_touches[sg.id]):
                continue  # forced out by a banned queue group, not a rule failure
            ok = all(b in accepted for b in requires_ext[sg.id])
            if ok:
                for c in excludes:
                    a_in = c.a in sg.members
                    b_in = c.b in sg.members
                    if (a_in and (b_in or c.b in accepted)) or (b_in and c.a in accepted):
                        ok = False
                        break
            if ok:
                deltas = cap_delta[sg.id]
                for i, c in enumerate(capacities):
                    if used[i] + deltas[i] > c.bound:
                        ok = False
                        break
            if ok:
                accepted.update(sg.members)
                deltas = cap_delta[sg.id]
                for i in range(len(capacities)):
                    used[i] += deltas[i]
            else:
                owner = sg_owner[sg.id]
                if owner.rule is RuleKind.ALL_OR_NOTHING_GROUP and owner.id not in banned:
                    newly_banned = owner.id
                    break
        if newly_banned is None:
            break
        banned.add(newly_banned)

    accepted_f = frozenset(accepted)
    rejected_f = frozenset(elements) - accepted_f
    return Partition(
        accepted=accepted_f,
        rejected=rejected_f,
        aggregate=aggregate(accepted_f, elements),
        violations=(),
    )


# ---------------------------------------------------------------------------
# Exhaustive oracle


def mutual_dependency_classes(
    elements: Mapping[str, Element],
    constraints: Sequence[Constraint],
) -> list[tuple[str, ...]]:
    """Mutual-reachability classes over refs plus Requires edges, computed
    by brute-force transitive closure (independent of tarjan_scc on
    purpose: this is its cross-check)."""
    ids = sorted(elements)
    idx = {eid: i for i, eid in enumerate(ids)}
    n = len(ids)
    reach = [0] * n  # bitmask of nodes reachable from i
    for eid in ids:
        for ref in elements[eid].refs:
            reach[idx[eid]] |= 1 << idx[ref]
    for c in constraints:
        if isinstance(c, Requires):
            reach[idx[c.a]] |= 1 << idx[c.b]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            acc = reach[i]
            scan = acc
            while scan:
                low = scan & -scan
                acc |= reach[low.bit_length() - 1]
                scan &= scan - 1
            if acc != reach[i]:
                reach[i] = acc
                changed = True
    assigned = [False] * n
    classes: list[tuple[str, ...]] = []
    for i in range(n):
        if assigned[i]:
            continue
        members = [ids[i]]
        assigned[i] = True
        for j in range(i + 1, n):
            if not assigned[j] and (reach[i] >> j) & 1 and (reach[j] >> i) & 1:
                members.append(ids[j])
                assigned[j] = True
        classes.append(tuple(members))
    return classes


def exhaustive_oracle(
    elements: Mapping[str, Element],
    groups: Sequence[QueueGroup],
    constraints: Sequence[Constraint],
) -> Partition:
    """True optimum by enumerating every subset of mutual-dependency
    classes (members of a class stand or fall together, exactly like the
    greedy engine's atomic super-groups).

    Maximizes the aggregate over all subsets feasible under the
    constraints; ties break toward the lexicographically smallest sorted
    accepted-id tuple. Queue-group rules shape only the greedy order, not
    feasibility, so they cannot improve on this bound.
    """
    del groups  # rules do not affect feasibility; parameter kept for symmetry
    n = len(elements)
    if n > 20:
        raise InstanceTooLargeError(f"instance has {n} elements; the oracle enumerates at most 20")

    classes = mutual_dependency_classes(elements, constraints)
    k = len(classes)
    class_of = {eid: ci for ci, members in enumerate(classes) for eid in members}
    class_value = [sum(elements[m].value for m in members) for members in classes]

    requires_pairs = set()
    poisoned = 0  # classes containing an internal Excludes pair
    excludes_pairs = set()
    for c in constraints:
        if isinstance(c, Requires):
            ca, cb = class_of[c.a], class_of[c.b]
            if ca != cb:
                requires_pairs.add((ca, cb))
        elif isinstance(c, Excludes):
            ca, cb = class_of[c.a], class_of[c.b]
            if ca == cb:
                poisoned |= 1 << ca
            else:
                excludes_pairs.add((ca, cb))
    class_usage = [
        [sum(c.usage.get(m, 0) for m in members) for members in classes]
        for c in [x for x in constraints if isinstance(x, Capacity)]
    ]
    bounds = [c.bound for c in constraints if isinstance(c, Capacity)]

    best: tuple[int, tuple[str, ...], int] | None = None  # (aggregate, ids, mask)
    for mask in range(1 << k):
        if mask & poisoned:
            continue
        if any((mask >> ca) & 1 and not (mask >> cb) & 1 for ca, cb in requires_pairs):
            continue
        if any((mask >> ca) & 1 and (mask >> cb) & 1 for ca, cb in excludes_pairs):
            continue
        feasible = True
        for usage_row, bound in zip(class_usage, bounds):
            total = 0
            scan = mask
            while scan:
                low = scan & -scan
                total += usage_row[low.bit_length() - 1]
                scan &= scan - 1
            if total > bound:
                feasible = False
                break
        if not feasible:
            continue
        value = 0
        ids: list[str] = []
        scan = mask
        while scan:
            low = scan & -scan
            ci = low.bit_length() - 1
            value += class_value[ci]
            ids.extend(classes[ci])
            scan &= scan - 1
        key = (value, tuple(sorted(ids)))
        if best is None or key[0] > best[0] or (key[0] == best[0] and key[1] < best[1]):
            best = (key[0], key[1], mask)

    if best is None:
        raise SystemValidationError(
            [Violation("oracle.no_feasible_subset", "no subset satisfies the constraints")]
        )
    accepted = frozenset(best[1])
    return Partition(
        accepted=accepted,
        rejected=frozenset(elements) - accepted,
        aggregate=best[0],
        violations=(),
    )
