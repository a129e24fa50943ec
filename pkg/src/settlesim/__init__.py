"""Deterministic settlement-system simulator.

Two engines under one roof, mirroring the two regimes of a settlement
desk: a real-time engine that runs networks of communicating components
over dense timed streams (explicit hiatons make silence observable and
progress checkable), and a batch engine that partitions a population of
interdependent elements into accepted/rejected sets under business
constraints, maximizing the accepted value.

Everything is reproducible: fixed tie-breaks, integer arithmetic, a
self-contained PRNG, and canonical serialization make identical inputs
yield byte-identical artifacts.
"""

from .streams import (
    Hiaton,
    Payload,
    StreamOrderError,
    TimedItem,
    TimedStream,
    check_monotone,
    count_hiatons,
    first_disorder,
    is_dense,
    is_hiaton,
    make_hiaton,
    merge,
    retag,
    shift,
    strip_hiatons,
)
from .trace import (
    ChannelMeta,
    ComponentMeta,
    SinkMeta,
    Summary,
    Trace,
    TraceEvent,
    TraceMeta,
    TraceOrderError,
    animation_frames,
    export_trace,
    import_trace,
    record_event,
    stable_digest,
    summarize,
    to_jsonable,
)
from .partition import (
    Capacity,
    CondensedDag,
    Constraint,
    DanglingReferenceError,
    DependencyGraph,
    Element,
    Excludes,
    InstanceTooLargeError,
    OrderingContext,
    Partition,
    Queue,
    QueueGroup,
    QueueSystem,
    Requires,
    RuleKind,
    SuperGroup,
    SystemValidationError,
    Violation,
    aggregate,
    build_dependency_graph,
    check_constraints,
    condensation_ranks,
    condense,
    dispatch_rule,
    exhaustive_oracle,
    global_positions,
    linearize_queues,
    mutual_dependency_classes,
    select_partition,
    tarjan_scc,
    validate_system,
)
from .network import (
    Channel,
    Component,
    DrainError,
    Network,
    NetworkBuildError,
    NetworkValidationError,
    RunResult,
    SinkTap,
    StepContractError,
    add_component,
    bind_source,
    connect,
    drain,
    expose_sink,
    run_realtime,
    validate_network,
)
from .workload import (
    GroupSpec,
    Rng,
    WorkloadParams,
    gen_elements,
    gen_event_stream,
    next_random,
)
from .scenario import (
    Overrides,
    Scenario,
    ScenarioError,
    ScenarioOutcome,
    compare_with_oracle,
    load_scenario,
    materialize_workload,
    run_scenario,
)

__version__ = "0.1.0"
