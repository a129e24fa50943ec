"""Scenario files: one JSON document describing a full experiment.

A scenario picks a mode (realtime, batch, or both), supplies either
workload-generator parameters or an explicit inline instance, and for
stream modes a network topology built from a closed set of component
kinds. Everything an invocation produces lands in a run directory named
by the hash of the resolved scenario plus the seed, so distinct
configurations never collide and identical ones reproduce byte-identical
artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .network import (
    Component,
    Network,
    RunResult,
    drain,
    run_realtime,
)
from .partition import (
    Capacity,
    Constraint,
    Element,
    Excludes,
    InstanceTooLargeError,
    Partition,
    Queue,
    QueueGroup,
    QueueSystem,
    Requires,
    RuleKind,
    check_constraints,
    exhaustive_oracle,
    select_partition,
    validate_system,
)
from .streams import Hiaton, Payload, TimedItem
from .trace import animation_frames, export_trace, summarize
from .workload import GroupSpec, Rng, WorkloadParams, gen_elements, next_random

__all__ = [
    "ScenarioError",
    "Scenario",
    "Overrides",
    "ScenarioOutcome",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "compare_with_oracle",
    "materialize_workload",
    "instance_to_jsonable",
    "parse_instance",
    "STEP_KINDS",
]

_STREAM_SALT = 0x53747265616D73  # decorrelates stream seeds from the workload seed

MODES = ("realtime", "batch", "both")
FORMATS = ("ndjson", "csv")

_RULE_NAMES = {r.value: r for r in RuleKind}


class ScenarioError(ValueError):
    """Scenario file is malformed; the message names file and field path."""

    def __init__(self, source: str, path: str, problem: str):
        self.source = source
        self.path = path
        self.problem = problem
        where = f"{source}: {path}" if path else source
        super().__init__(f"{where}: {problem}")


# ---------------------------------------------------------------------------
# Schema helpers: every access goes through these so diagnostics always carry
# the exact field path.


def _need(obj: Mapping[str, Any], key: str, src: str, path: str) -> Any:
    if key not in obj:
        raise ScenarioError(src, f"{path}.{key}" if path else key, "missing required field")
    return obj[key]


def _as_map(v: Any, src: str, path: str) -> Mapping[str, Any]:
    if not isinstance(v, Mapping):
        raise ScenarioError(src, path, f"expected object, got {type(v).__name__}")
    return v


def _as_list(v: Any, src: str, path: str) -> list:
    if not isinstance(v, list):
        raise ScenarioError(src, path, f"expected array, got {type(v).__name__}")
    return v


def _as_str(v: Any, src: str, path: str) -> str:
    if not isinstance(v, str):
        raise ScenarioError(src, path, f"expected string, got {type(v).__name__}")
    return v


def _as_int(v: Any, src: str, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(src, path, f"expected integer, got {type(v).__name__}")
    return v


def _as_num(v: Any, src: str, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(src, path, f"expected number, got {type(v).__name__}")
    return float(v)


def _as_bool(v: Any, src: str, path: str) -> bool:
    if not isinstance(v, bool):
        raise ScenarioError(src, path, f"expected boolean, got {type(v).__name__}")
    return v


def _reject_unknown(obj: Mapping[str, Any], allowed: set[str], src: str, path: str) -> None:
    for key in sorted(obj):
        if key not in allowed:
            raise ScenarioError(src, f"{path}.{key}" if path else key, "unknown field")


# ---------------------------------------------------------------------------
# Instance (de)serialization


def parse_instance(
    obj: Mapping[str, Any], src: str, path: str
) -> tuple[dict[str, Element], QueueSystem, list[QueueGroup], list[Constraint]]:
    _reject_unknown(obj, {"elements", "queues", "queue_precedence", "groups", "constraints"}, src, path)
    elements: dict[str, Element] = {}
    for i, raw in enumerate(_as_list(_need(obj, "elements", src, path), src, f"{path}.elements")):
        ep = f"{path}.elements[{i}]"
        e = _as_map(raw, src, ep)
        _reject_unknown(e, {"id", "value", "queue", "refs"}, src, ep)
        eid = _as_str(_need(e, "id", src, ep), src, f"{ep}.id")
        refs = tuple(
            _as_str(r, src, f"{ep}.refs[{j}]")
            for j, r in enumerate(_as_list(e.get("refs", []), src, f"{ep}.refs"))
        )
        if eid in elements:
            raise ScenarioError(src, f"{ep}.id", f"duplicate element id {eid!r}")
        elements[eid] = Element(
            id=eid,
            value=_as_int(_need(e, "value", src, ep), src, f"{ep}.value"),
            queue=_as_str(_need(e, "queue", src, ep), src, f"{ep}.queue"),
            refs=refs,
        )

    queues: list[Queue] = []
    for i, raw in enumerate(_as_list(_need(obj, "queues", src, path), src, f"{path}.queues")):
        qp = f"{path}.queues[{i}]"
        q = _as_map(raw, src, qp)
        _reject_unknown(q, {"id", "members", "precedence"}, src, qp)
        pairs = []
        for j, pair in enumerate(_as_list(q.get("precedence", []), src, f"{qp}.precedence")):
            pp = f"{qp}.precedence[{j}]"
            pl = _as_list(pair, src, pp)
            if len(pl) != 2:
                raise ScenarioError(src, pp, "expected a pair [earlier, later]")
            pairs.append((_as_str(pl[0], src, pp), _as_str(pl[1], src, pp)))
        queues.append(
            Queue(
                id=_as_str(_need(q, "id", src, qp), src, f"{qp}.id"),
                members=tuple(
                    _as_str(m, src, f"{qp}.members[{j}]")
                    for j, m in enumerate(_as_list(q.get("members", []), src, f"{qp}.members"))
                ),
                precedence=frozenset(pairs),
            )
        )

    qprec = []
    for i, pair in enumerate(_as_list(obj.get("queue_precedence", []), src, f"{path}.queue_precedence")):
        pp = f"{path}.queue_precedence[{i}]"
        pl = _as_list(pair, src, pp)
        if len(pl) != 2:
            raise ScenarioError(src, pp, "expected a pair [earlier, later]")
        qprec.append((_as_str(pl[0], src, pp), _as_str(pl[1], src, pp)))

    groups: list[QueueGroup] = []
    for i, raw in enumerate(_as_list(_need(obj, "groups", src, path), src, f"{path}.groups")):
        gp = f"{path}.groups[{i}]"
        g = _as_map(raw, src, gp)
        _reject_unknown(g, {"id", "queues", "rule"}, src, gp)
        rule_name = _as_str(_need(g, "rule", src, gp), src, f"{gp}.rule")
        if rule_name not in _RULE_NAMES:
            raise ScenarioError(src, f"{gp}.rule", f"unknown rule {rule_name!r}; expected one of {sorted(_RULE_NAMES)}")
        groups.append(
            QueueGroup(
                id=_as_str(_need(g, "id", src, gp), src, f"{gp}.id"),
                queue_ids=frozenset(
                    _as_str(q, src, f"{gp}.queues[{j}]")
                    for j, q in enumerate(_as_list(_need(g, "queues", src, gp), src, f"{gp}.queues"))
                ),
                rule=_RULE_NAMES[rule_name],
            )
        )

    constraints: list[Constraint] = []
    for i, raw in enumerate(_as_list(obj.get("constraints", []), src, f"{path}.constraints")):
        cp = f"{path}.constraints[{i}]"
        c = _as_map(raw, src, cp)
        kind = _as_str(_need(c, "kind", src, cp), src, f"{cp}.kind")
        if kind in ("requires", "excludes"):
            _reject_unknown(c, {"kind", "a", "b"}, src, cp)
            a = _as_str(_need(c, "a", src, cp), src, f"{cp}.a")
            b = _as_str(_need(c, "b", src, cp), src, f"{cp}.b")
            constraints.append(Requires(a, b) if kind == "requires" else Excludes(a, b))
        elif kind == "capacity":
            _reject_unknown(c, {"kind", "resource", "usage", "bound"}, src, cp)
            usage_raw = _as_map(_need(c, "usage", src, cp), src, f"{cp}.usage")
            usage = {
                k: _as_int(v, src, f"{cp}.usage.{k}") for k, v in sorted(usage_raw.items())
            }
            constraints.append(
                Capacity(
                    resource=_as_str(_need(c, "resource", src, cp), src, f"{cp}.resource"),
                    usage=usage,
                    bound=_as_int(_need(c, "bound", src, cp), src, f"{cp}.bound"),
                )
            )
        else:
            raise ScenarioError(src, f"{cp}.kind", f"unknown constraint kind {kind!r}")

    system = QueueSystem(queues=tuple(queues), queue_precedence=frozenset(qprec), elements=elements)
    return elements, system, groups, constraints


def instance_to_jsonable(
    elements: Mapping[str, Element],
    system: QueueSystem,
    groups: Sequence[QueueGroup],
    constraints: Sequence[Constraint],
) -> dict[str, Any]:
    """Canonical JSON form; parse_instance inverts it."""
    out: dict[str, Any] = {
        "elements": [
            {
                "id": e.id,
                "value": e.value,
                "queue": e.queue,
                "refs": sorted(e.refs),
            }
            for _, e in sorted(elements.items())
        ],
        "queues": [
            {
                "id": q.id,
                "members": list(q.members),
                "precedence": sorted([a, b] for a, b in q.precedence),
            }
            for q in sorted(system.queues, key=lambda q: q.id)
        ],
        "queue_precedence": sorted([a, b] for a, b in system.queue_precedence),
        "groups": [
            {"id": g.id, "queues": sorted(g.queue_ids), "rule": g.rule.value}
            for g in sorted(groups, key=lambda g: g.id)
        ],
        "constraints": [],
    }
    for c in constraints:
        if isinstance(c, Requires):
            out["constraints"].append({"kind": "requires", "a": c.a, "b": c.b})
        elif isinstance(c, Excludes):
            out["constraints"].append({"kind": "excludes", "a": c.a, "b": c.b})
        elif isinstance(c, Capacity):
            out["constraints"].append(
                {
                    "kind": "capacity",
                    "resource": c.resource,
                    "usage": {k: v for k, v in sorted(c.usage.items())},
                    "bound": c.bound,
                }
            )
    return out


# ---------------------------------------------------------------------------
# Workload params parsing


def _parse_workload(obj: Mapping[str, Any], seed: int, src: str, path: str) -> WorkloadParams:
    allowed = {
        "event_frequency",
        "element_count",
        "value_range",
        "ref_density",
        "queue_count",
        "groups",
        "requires_density",
        "excludes_density",
        "capacity_count",
        "capacity_slack",
    }
    _reject_unknown(obj, allowed, src, path)
    kwargs: dict[str, Any] = {"seed": seed}
    if "event_frequency" in obj:
        kwargs["event_frequency"] = _as_num(obj["event_frequency"], src, f"{path}.event_frequency")
    if "element_count" in obj:
        kwargs["element_count"] = _as_int(obj["element_count"], src, f"{path}.element_count")
    if "value_range" in obj:
        vr = _as_list(obj["value_range"], src, f"{path}.value_range")
        if len(vr) != 2:
            raise ScenarioError(src, f"{path}.value_range", "expected [min, max]")
        kwargs["value_range"] = (
            _as_int(vr[0], src, f"{path}.value_range[0]"),
            _as_int(vr[1], src, f"{path}.value_range[1]"),
        )
    for name in ("ref_density", "requires_density", "excludes_density", "capacity_slack"):
        if name in obj:
            kwargs[name] = _as_num(obj[name], src, f"{path}.{name}")
    for name in ("queue_count", "capacity_count"):
        if name in obj:
            kwargs[name] = _as_int(obj[name], src, f"{path}.{name}")
    if "groups" in obj:
        specs = []
        for i, raw in enumerate(_as_list(obj["groups"], src, f"{path}.groups")):
            gp = f"{path}.groups[{i}]"
            g = _as_map(raw, src, gp)
            _reject_unknown(g, {"queues", "rule"}, src, gp)
            rule_name = _as_str(g.get("rule", RuleKind.VALUE_PRIORITY.value), src, f"{gp}.rule")
            if rule_name not in _RULE_NAMES:
                raise ScenarioError(src, f"{gp}.rule", f"unknown rule {rule_name!r}")
            specs.append(
                GroupSpec(
                    queues=_as_int(_need(g, "queues", src, gp), src, f"{gp}.queues"),
                    rule=_RULE_NAMES[rule_name],
                )
            )
        kwargs["group_specs"] = tuple(specs)
    params = WorkloadParams(**kwargs)
    problems = params.validate()
    if problems:
        raise ScenarioError(src, path, "; ".join(problems))
    return params


# ---------------------------------------------------------------------------
# Network construction from the closed step-kind registry


def _relay_step(state: int, inputs: tuple[TimedItem, ...], tick: int):
    """Forward port 0 to port 0; state counts payloads seen."""
    item = inputs[0]
    if isinstance(item, Payload):
        return state + 1, (Payload(tick, item.value),)
    return state, (Hiaton(tick),)


def _merge_step(state: int, inputs: tuple[TimedItem, ...], tick: int):
    """Two in-ports, one out: the left payload wins a tie; state counts
    payloads forwarded. A payload losing the tie is dropped, which keeps
    the one-item-per-tick discipline."""
    for item in inputs:
        if isinstance(item, Payload):
            return state + 1, (Payload(tick, item.value),)
    return state, (Hiaton(tick),)


def _counter_step(state: int, inputs: tuple[TimedItem, ...], tick: int):
    """Forward payload count so far: emits a payload carrying the running
    count whenever the input is a payload."""
    item = inputs[0]
    if isinstance(item, Payload):
        return state + 1, (Payload(tick, state + 1),)
    return state, (Hiaton(tick),)


STEP_KINDS: dict[str, tuple[int, int, Any, Any]] = {
    # kind -> (in_ports, out_ports, step function, initial state)
    "relay": (1, 1, _relay_step, 0),
    "merge": (2, 1, _merge_step, 0),
    "counter": (1, 1, _counter_step, 0),
}


def _stream_seed(seed: int, offset: int) -> int:
    # documented rule: mix (seed XOR salt) + offset through one splitmix64 step
    return next_random(((seed ^ _STREAM_SALT) + offset) & ((1 << 64) - 1))[1]


def _element_injection_stream(
    elements: Mapping[str, Element], frequency: float, seed: int, t_end: int
) -> list[TimedItem]:
    """Dense stream delivering each element exactly once, in ascending id
    order, at payload ticks drawn per-tick at ``frequency``; hiatons once
    the population is exhausted."""
    order = [elements[k] for k in sorted(elements)]
    rng = Rng(seed)
    stream: list[TimedItem] = []
    nxt = 0
    for t in range(t_end + 1):
        if nxt < len(order) and rng.chance(frequency):
            stream.append(Payload(t, order[nxt]))
            nxt += 1
        else:
            stream.append(Hiaton(t))
    return stream


def _ordinal_event_stream(frequency: float, seed: int, t_end: int) -> list[TimedItem]:
    rng = Rng(seed)
    stream: list[TimedItem] = []
    ordinal = 0
    for t in range(t_end + 1):
        if rng.chance(frequency):
            stream.append(Payload(t, ordinal))
            ordinal += 1
        else:
            stream.append(Hiaton(t))
    return stream


def _build_network(
    spec: Mapping[str, Any],
    seed: int,
    t_end: int,
    elements: Mapping[str, Element] | None,
    src: str,
) -> Network:
    path = "network"
    _reject_unknown(spec, {"components", "channels", "sources", "sinks"}, src, path)
    net = Network()
    for i, raw in enumerate(_as_list(_need(spec, "components", src, path), src, f"{path}.components")):
        cp = f"{path}.components[{i}]"
        c = _as_map(raw, src, cp)
        _reject_unknown(c, {"id", "kind"}, src, cp)
        kind = _as_str(_need(c, "kind", src, cp), src, f"{cp}.kind")
        if kind not in STEP_KINDS:
            raise ScenarioError(src, f"{cp}.kind", f"unknown component kind {kind!r}; expected one of {sorted(STEP_KINDS)}")
        in_ports, out_ports, step, state0 = STEP_KINDS[kind]
        net.add_component(
            Component(
                id=_as_str(_need(c, "id", src, cp), src, f"{cp}.id"),
                step=step,
                initial_state=state0,
                in_ports=in_ports,
                out_ports=out_ports,
            )
        )

    def _endpoint(v: Any, p: str) -> tuple[str, int]:
        pair = _as_list(v, src, p)
        if len(pair) != 2:
            raise ScenarioError(src, p, "expected [component id, port index]")
        return _as_str(pair[0], src, p), _as_int(pair[1], src, p)

    for i, raw in enumerate(_as_list(spec.get("channels", []), src, f"{path}.channels")):
        chp = f"{path}.channels[{i}]"
        ch = _as_map(raw, src, chp)
        _reject_unknown(ch, {"from", "to", "delay"}, src, chp)
        net.connect(
            _endpoint(_need(ch, "from", src, chp), f"{chp}.from"),
            _endpoint(_need(ch, "to", src, chp), f"{chp}.to"),
            delay=_as_int(ch.get("delay", 1), src, f"{chp}.delay"),
        )

    element_sources = 0
    for i, raw in enumerate(_as_list(spec.get("sources", []), src, f"{path}.sources")):
        sp = f"{path}.sources[{i}]"
        s = _as_map(raw, src, sp)
        _reject_unknown(s, {"comp", "port", "stream"}, src, sp)
        stream_spec = _as_map(_need(s, "stream", src, sp), src, f"{sp}.stream")
        skind = _as_str(_need(stream_spec, "kind", src, sp), src, f"{sp}.stream.kind")
        offset = _as_int(stream_spec.get("seed_offset", i), src, f"{sp}.stream.seed_offset")
        if skind == "elements":
            _reject_unknown(stream_spec, {"kind", "frequency", "seed_offset"}, src, f"{sp}.stream")
            if elements is None:
                raise ScenarioError(src, f"{sp}.stream", "elements stream needs a workload or inline instance")
            element_sources += 1
            if element_sources > 1:
                raise ScenarioError(src, f"{sp}.stream", "only one elements stream per scenario")
            stream = _element_injection_stream(
                elements,
                _as_num(stream_spec.get("frequency", 0.25), src, f"{sp}.stream.frequency"),
                _stream_seed(seed, offset),
                t_end,
            )
        elif skind == "events":
            _reject_unknown(stream_spec, {"kind", "frequency", "seed_offset"}, src, f"{sp}.stream")
            stream = _ordinal_event_stream(
                _as_num(stream_spec.get("frequency", 0.25), src, f"{sp}.stream.frequency"),
                _stream_seed(seed, offset),
                t_end,
            )
        elif skind == "silence":
            _reject_unknown(stream_spec, {"kind", "seed_offset"}, src, f"{sp}.stream")
            stream = [Hiaton(t) for t in range(t_end + 1)]
        else:
            raise ScenarioError(src, f"{sp}.stream.kind", f"unknown stream kind {skind!r}")
        net.bind_source(
            _as_str(_need(s, "comp", src, sp), src, f"{sp}.comp"),
            _as_int(_need(s, "port", src, sp), src, f"{sp}.port"),
            stream,
        )

    for i, raw in enumerate(_as_list(spec.get("sinks", []), src, f"{path}.sinks")):
        kp = f"{path}.sinks[{i}]"
        k = _as_map(raw, src, kp)
        _reject_unknown(k, {"name", "comp", "port", "delay"}, src, kp)
        net.expose_sink(
            _as_str(_need(k, "name", src, kp), src, f"{kp}.name"),
            _as_str(_need(k, "comp", src, kp), src, f"{kp}.comp"),
            _as_int(_need(k, "port", src, kp), src, f"{kp}.port"),
            delay=_as_int(k.get("delay", 1), src, f"{kp}.delay"),
        )
    return net


# ---------------------------------------------------------------------------
# Scenario object


@dataclass(frozen=True)
class Overrides:
    """Scalar command-line overrides; None leaves the file value alone."""

    seed: int | None = None
    t_end: int | None = None
    out: str | None = None
    mode: str | None = None
    fmt: str | None = None


@dataclass
class Scenario:
    """A fully parsed and override-resolved scenario."""

    source: str
    name: str
    mode: str
    seed: int
    t_end: int
    out_dir: str
    formats: tuple[str, ...]
    inline_payloads: bool
    resolved: dict[str, Any]  # canonical dict, hashed for the run directory
    workload: WorkloadParams | None
    instance: tuple[dict[str, Element], QueueSystem, list[QueueGroup], list[Constraint]] | None
    network_spec: Mapping[str, Any] | None

    def content_hash(self) -> str:
        canonical = json.dumps(self.resolved, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.out_dir) / f"{self.name}-{self.content_hash()}-s{self.seed}"


def parse_scenario(raw: Mapping[str, Any], source: str, overrides: Overrides | None = None) -> Scenario:
    ov = overrides or Overrides()
    allowed = {
        "name",
        "mode",
        "seed",
        "t_end",
        "out",
        "formats",
        "inline_payloads",
        "workload",
        "instance",
        "network",
    }
    _reject_unknown(raw, allowed, source, "")

    resolved = {k: raw[k] for k in sorted(raw)}
    if ov.seed is not None:
        resolved["seed"] = ov.seed
    if ov.t_end is not None:
        resolved["t_end"] = ov.t_end
    if ov.mode is not None:
        resolved["mode"] = ov.mode
    if ov.fmt is not None:
        resolved["formats"] = [ov.fmt]
    # the output location is where artifacts land, not part of what they are:
    # keep it out of the resolved document so runs into different directories
    # stay byte-identical
    out_field = resolved.pop("out", "runs")
    out_dir = ov.out if ov.out is not None else _as_str(out_field, source, "out")

    name = _as_str(_need(resolved, "name", source, ""), source, "name")
    if not name or any(ch not in "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-" for ch in name):
        raise ScenarioError(source, "name", f"{name!r} is not a valid name (letters, digits, _ and - only)")
    mode = _as_str(_need(resolved, "mode", source, ""), source, "mode")
    if mode not in MODES:
        raise ScenarioError(source, "mode", f"unknown mode {mode!r}; expected one of {MODES}")
    seed = _as_int(_need(resolved, "seed", source, ""), source, "seed")
    t_end = _as_int(resolved.get("t_end", 0), source, "t_end")
    if t_end < 0:
        raise ScenarioError(source, "t_end", f"t_end must be >= 0, got {t_end}")
    if mode in ("realtime", "both") and "t_end" not in resolved:
        raise ScenarioError(source, "t_end", f"mode {mode!r} requires t_end")
    formats_raw = _as_list(resolved.get("formats", ["ndjson"]), source, "formats")
    formats = []
    for i, f in enumerate(formats_raw):
        fv = _as_str(f, source, f"formats[{i}]")
        if fv not in FORMATS:
            raise ScenarioError(source, f"formats[{i}]", f"unknown format {fv!r}; expected one of {FORMATS}")
        if fv not in formats:
            formats.append(fv)
    if not formats:
        raise ScenarioError(source, "formats", "at least one export format is required")
    inline_payloads = _as_bool(resolved.get("inline_payloads", False), source, "inline_payloads")

    has_workload = "workload" in resolved
    has_instance = "instance" in resolved
    if has_workload == has_instance:
        raise ScenarioError(source, "workload", "exactly one of workload or instance must be supplied")

    workload = None
    instance = None
    if has_workload:
        workload = _parse_workload(_as_map(resolved["workload"], source, "workload"), seed, source, "workload")
    else:
        instance = parse_instance(_as_map(resolved["instance"], source, "instance"), source, "instance")
        elements, system, groups, constraints = instance
        problems = validate_system(system, groups, constraints)
        if problems:
            raise ScenarioError(source, "instance", "; ".join(str(v) for v in problems))

    network_spec = None
    if mode in ("realtime", "both"):
        network_spec = _as_map(_need(resolved, "network", source, ""), source, "network")
    elif "network" in resolved:
        raise ScenarioError(source, "network", "batch mode does not take a network")

    return Scenario(
        source=source,
        name=name,
        mode=mode,
        seed=seed,
        t_end=t_end,
        out_dir=out_dir,
        formats=tuple(formats),
        inline_payloads=inline_payloads,
        resolved=resolved,
        workload=workload,
        instance=instance,
        network_spec=network_spec,
    )


def load_scenario(path: str | os.PathLike, overrides: Overrides | None = None) -> Scenario:
    source = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError(source, "", f"cannot read file: {err}") from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(source, f"line {err.lineno}", f"invalid JSON: {err.msg}") from err
    return parse_scenario(_as_map(raw, source, ""), source, overrides)


# ---------------------------------------------------------------------------
# Execution


def _write_json(path: Path, obj: Any, compact: bool = False) -> None:
    if compact:
        text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    else:
        text = json.dumps(obj, sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")


def _partition_report(p: Partition, constraints: Sequence[Constraint]) -> dict[str, Any]:
    return {
        "accepted": sorted(p.accepted),
        "rejected": sorted(p.rejected),
        "aggregate": p.aggregate,
        "violations": [str(v) for v in check_constraints(p, constraints)],
        "accepted_count": len(p.accepted),
        "element_count": len(p.accepted) + len(p.rejected),
    }


def _materialize(sc: Scenario) -> tuple[dict[str, Element], QueueSystem, list[QueueGroup], list[Constraint]]:
    if sc.instance is not None:
        return sc.instance
    assert sc.workload is not None
    return gen_elements(sc.workload)


def _drained_instance(
    original: tuple[dict[str, Element], QueueSystem, list[QueueGroup], list[Constraint]],
    drained: Sequence[Element],
) -> tuple[dict[str, Element], QueueSystem, list[QueueGroup], list[Constraint]]:
    """Rebuild the batch instance from what actually arrived: queue members
    in arrival order, refs pruned to the drained population, constraints
    dropped when they mention an element that never arrived (capacity maps
    are restricted instead)."""
    _, system, groups, constraints = original
    present = {e.id for e in drained}
    elements = {
        e.id: Element(
            id=e.id,
            value=e.value,
            queue=e.queue,
            refs=tuple(r for r in e.refs if r in present),
        )
        for e in drained
    }
    members: dict[str, list[str]] = {q.id: [] for q in system.queues}
    for e in drained:
        members[e.queue].append(e.id)
    queues = tuple(
        Queue(
            id=q.id,
            members=tuple(members[q.id]),
            precedence=frozenset(
                (a, b) for a, b in q.precedence if a in present and b in present
            ),
        )
        for q in system.queues
    )
    kept: list[Constraint] = []
    for c in constraints:
        if isinstance(c, (Requires, Excludes)):
            if c.a in present and c.b in present:
                kept.append(c)
        elif isinstance(c, Capacity):
            kept.append(
                Capacity(
                    resource=c.resource,
                    usage={k: v for k, v in sorted(c.usage.items()) if k in present},
                    bound=c.bound,
                )
            )
    new_system = QueueSystem(
        queues=queues, queue_precedence=system.queue_precedence, elements=elements
    )
    return elements, new_system, list(groups), kept


@dataclass
class ScenarioOutcome:
    """What a scenario invocation produced, for callers and tests."""

    run_dir: Path
    mode: str
    artifacts: dict[str, Path]
    partition_report: dict[str, Any] | None = None
    summary_report: dict[str, Any] | None = None
    compare_report: dict[str, Any] | None = None
    drained_count: int | None = None


def _run_realtime_phase(
    sc: Scenario,
    run_dir: Path,
    elements: Mapping[str, Element] | None,
    outcome: ScenarioOutcome,
) -> tuple[Network, RunResult]:
    assert sc.network_spec is not None
    net = _build_network(sc.network_spec, sc.seed, sc.t_end, elements, sc.source)
    result = run_realtime(net, sc.t_end, inline_payloads=sc.inline_payloads)
    for fmt in sc.formats:
        dest = run_dir / f"trace.{fmt}"
        export_trace(result.trace, fmt, dest)
        outcome.artifacts[f"trace.{fmt}"] = dest
    summary = summarize(result.trace)
    outcome.summary_report = summary.to_jsonable()
    _write_json(run_dir / "summary.json", outcome.summary_report)
    outcome.artifacts["summary.json"] = run_dir / "summary.json"
    frames = animation_frames(result.trace)
    _write_json(run_dir / "frames.json", frames, compact=True)
    outcome.artifacts["frames.json"] = run_dir / "frames.json"
    return net, result


def run_scenario(path: str | os.PathLike, overrides: Overrides | None = None) -> ScenarioOutcome:
    """Execute a scenario file: realtime runs produce trace/summary/frames,
    batch runs produce the partition report, and both-mode scenarios bridge
    them by draining sink payloads into the batch instance."""
    sc = load_scenario(path, overrides)
    run_dir = sc.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    outcome = ScenarioOutcome(run_dir=run_dir, mode=sc.mode, artifacts={})
    _write_json(run_dir / "scenario.json", sc.resolved)
    outcome.artifacts["scenario.json"] = run_dir / "scenario.json"

    if sc.mode == "realtime":
        _run_realtime_phase(sc, run_dir, _materialize(sc)[0], outcome)
        return outcome

    original = _materialize(sc)

    if sc.mode == "batch":
        batch = original
    else:  # both
        net, result = _run_realtime_phase(sc, run_dir, original[0], outcome)
        drained = drain(net, result)
        outcome.drained_count = len(drained)
        _write_json(run_dir / "drained.json", [e.id for e in drained])
        outcome.artifacts["drained.json"] = run_dir / "drained.json"
        batch = _drained_instance(original, drained)

    elements, system, groups, constraints = batch
    _write_json(run_dir / "instance.json", instance_to_jsonable(elements, system, groups, constraints))
    outcome.artifacts["instance.json"] = run_dir / "instance.json"
    partition = select_partition(system, groups, constraints)
    outcome.partition_report = _partition_report(partition, constraints)
    _write_json(run_dir / "partition.json", outcome.partition_report)
    outcome.artifacts["partition.json"] = run_dir / "partition.json"
    return outcome


def materialize_workload(path: str | os.PathLike, overrides: Overrides | None = None) -> ScenarioOutcome:
    """`gen`: write the resolved batch instance without running anything."""
    sc = load_scenario(path, overrides)
    run_dir = sc.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    outcome = ScenarioOutcome(run_dir=run_dir, mode=sc.mode, artifacts={})
    _write_json(run_dir / "scenario.json", sc.resolved)
    outcome.artifacts["scenario.json"] = run_dir / "scenario.json"
    elements, system, groups, constraints = _materialize(sc)
    _write_json(run_dir / "instance.json", instance_to_jsonable(elements, system, groups, constraints))
    outcome.artifacts["instance.json"] = run_dir / "instance.json"
    return outcome


def compare_with_oracle(path: str | os.PathLike, overrides: Overrides | None = None) -> ScenarioOutcome:
    """Greedy versus exhaustive optimum on the scenario's batch instance.

    Refuses instances above the oracle's 20-element enumeration limit.
    The ratio is greedy/oracle aggregate (1.0 when both are zero).
    """
    sc = load_scenario(path, overrides)
    elements, system, groups, constraints = _materialize(sc)
    if len(elements) > 20:
        raise InstanceTooLargeError(
            f"instance has {len(elements)} elements; compare enumerates at most 20"
        )
    greedy = select_partition(system, groups, constraints)
    oracle = exhaustive_oracle(elements, groups, constraints)
    ratio = 1.0 if oracle.aggregate == 0 else greedy.aggregate / oracle.aggregate
    report = {
        "greedy_aggregate": greedy.aggregate,
        "oracle_aggregate": oracle.aggregate,
        "ratio": ratio,
        "greedy_accepted": sorted(greedy.accepted),
        "oracle_accepted": sorted(oracle.accepted),
        "greedy_feasible": not check_constraints(greedy, constraints),
        "element_count": len(elements),
    }
    run_dir = sc.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    outcome = ScenarioOutcome(run_dir=run_dir, mode=sc.mode, artifacts={}, compare_report=report)
    _write_json(run_dir / "scenario.json", sc.resolved)
    _write_json(run_dir / "compare.json", report)
    outcome.artifacts["scenario.json"] = run_dir / "scenario.json"
    outcome.artifacts["compare.json"] = run_dir / "compare.json"
    return outcome
