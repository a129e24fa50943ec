"""Workload generator tests: PRNG conformance, stream rate, instance shape.

The generator must be stable across platforms, so the PRNG is pinned to
the published splitmix64 reference outputs and everything downstream is
checked for exact reproducibility, not just statistical similarity.
"""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from settlesim import (
    GroupSpec,
    Rng,
    RuleKind,
    WorkloadParams,
    check_monotone,
    gen_elements,
    gen_event_stream,
    is_dense,
    is_hiaton,
    next_random,
    select_partition,
    strip_hiatons,
    validate_system,
)
from settlesim.workload import MASK64

# First outputs of the reference splitmix64 generator from state 0.
REFERENCE_FROM_ZERO = [
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
    0x1B39896A51A8749B,
]


# ---------------------------------------------------------------------------
# PRNG core


def test_next_random_matches_reference_vectors():
    state = 0
    outs = []
    for _ in range(5):
        state, value = next_random(state)
        outs.append(value)
    assert outs == REFERENCE_FROM_ZERO


def test_next_random_is_pure():
    assert next_random(12345) == next_random(12345)
    s1, v1 = next_random(2**64 - 1)  # wraps without error
    assert 0 <= s1 <= MASK64 and 0 <= v1 <= MASK64


def test_first_outputs_rarely_collide_across_seeds():
    seen = {next_random(seed)[1] for seed in range(10_000)}
    assert len(seen) == 10_000


def test_rng_wrapper_advances_like_the_pure_function():
    rng = Rng(99)
    state = 99
    for _ in range(10):
        state, expect = next_random(state)
        assert rng.next_u64() == expect
    assert rng.state == state


def test_rng_draws_have_uniform_mean():
    rng = Rng(7)
    n = 200_000
    total = sum(rng.next_u64() for _ in range(n))
    mean = total / n / 2.0**64
    assert abs(mean - 0.5) < 0.01


def test_below_is_modulo_of_the_raw_draw():
    for n in (1, 2, 7, 1000):
        a, b = Rng(5), Rng(5)
        assert a.below(n) == b.next_u64() % n


def test_below_rejects_nonpositive():
    with pytest.raises(ValueError, match="n >= 1"):
        Rng(1).below(0)


def test_between_covers_inclusive_range():
    rng = Rng(11)
    seen = {rng.between(3, 6) for _ in range(200)}
    assert seen == {3, 4, 5, 6}


def test_chance_extremes_consume_no_state():
    rng = Rng(42)
    before = rng.state
    assert rng.chance(0.0) is False
    assert rng.chance(1.0) is True
    assert rng.state == before


def test_chance_is_threshold_on_the_raw_draw():
    # dyadic p compares the draw against an exact 2^64 * p threshold
    for p in (0.25, 0.5, 0.75):
        a, b = Rng(13), Rng(13)
        assert a.chance(p) == (b.next_u64() < int(p * 2.0**64))


def test_chance_quarter_rate():
    rng = Rng(17)
    n = 20_000
    hits = sum(rng.chance(0.25) for _ in range(n))
    assert abs(hits / n - 0.25) < 0.02


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=MASK64), st.integers(min_value=1, max_value=10**9))
def test_below_always_in_range(state, n):
    assert 0 <= Rng(state).below(n) < n


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=MASK64), st.integers(-50, 50), st.integers(0, 50))
def test_between_always_in_range(state, lo, width):
    value = Rng(state).between(lo, lo + width)
    assert lo <= value <= lo + width


# ---------------------------------------------------------------------------
# Event streams


def test_stream_frequency_zero_is_silent():
    stream = gen_event_stream(WorkloadParams(seed=1, event_frequency=0.0), 50)
    assert all(is_hiaton(item) for item in stream)
    assert is_dense(stream, 50)


def test_stream_frequency_one_is_saturated_with_ordinals():
    stream = gen_event_stream(WorkloadParams(seed=1, event_frequency=1.0), 30)
    assert [p.value for p in strip_hiatons(stream)] == list(range(31))
    assert [p.tick for p in stream] == list(range(31))


def test_stream_is_dense_and_monotone():
    stream = gen_event_stream(WorkloadParams(seed=3, event_frequency=0.4), 500)
    check_monotone(stream)
    assert is_dense(stream, 500)


def test_stream_payload_values_are_consecutive_ordinals():
    stream = gen_event_stream(WorkloadParams(seed=9, event_frequency=0.5), 400)
    values = [p.value for p in strip_hiatons(stream)]
    assert values == list(range(len(values)))


def test_stream_rate_tracks_frequency():
    stream = gen_event_stream(WorkloadParams(seed=21, event_frequency=0.25), 20_000)
    rate = len(strip_hiatons(stream)) / len(stream)
    assert abs(rate - 0.25) < 0.02


def test_stream_same_seed_reproduces_different_seed_differs():
    p = WorkloadParams(seed=5, event_frequency=0.3)
    assert gen_event_stream(p, 100) == gen_event_stream(p, 100)
    other = gen_event_stream(WorkloadParams(seed=6, event_frequency=0.3), 100)
    assert gen_event_stream(p, 100) != other


def test_stream_rejects_negative_t_end():
    with pytest.raises(ValueError, match="t_end"):
        gen_event_stream(WorkloadParams(seed=1), -1)


def test_stream_rejects_invalid_frequency():
    with pytest.raises(ValueError, match="event_frequency"):
        gen_event_stream(WorkloadParams(seed=1, event_frequency=1.5), 10)


# ---------------------------------------------------------------------------
# Instance generation


def test_gen_zero_elements_is_empty_and_valid():
    elements, system, groups, constraints = gen_elements(WorkloadParams(seed=1))
    assert elements == {}
    assert constraints == []
    assert len(groups) == 1  # default group still covers the queue
    assert validate_system(system, groups, constraints) == []


def test_gen_is_deterministic():
    p = WorkloadParams(
        seed=77,
        element_count=40,
        queue_count=4,
        ref_density=0.8,
        requires_density=0.3,
        excludes_density=0.3,
        capacity_count=2,
        capacity_slack=0.5,
    )
    a = gen_elements(p)
    b = gen_elements(p)
    assert a[0] == b[0]
    assert a[1] == b[1]
    assert a[2] == b[2]
    assert a[3] == b[3]


def test_gen_values_respect_range():
    p = WorkloadParams(seed=8, element_count=300, value_range=(10, 12))
    elements, _, _, _ = gen_elements(p)
    assert {e.value for e in elements.values()} == {10, 11, 12}


def test_gen_ref_density_zero_is_edgeless():
    elements, _, _, _ = gen_elements(WorkloadParams(seed=4, element_count=100))
    assert all(e.refs == () for e in elements.values())


def test_gen_integer_density_gives_exact_ref_counts():
    # density 2.0 has no fractional part, so every element gets exactly
    # two distinct refs when the population allows it
    p = WorkloadParams(seed=15, element_count=50, ref_density=2.0)
    elements, _, _, _ = gen_elements(p)
    assert all(len(e.refs) == 2 for e in elements.values())
    assert all(eid not in e.refs for eid, e in elements.items())


def test_gen_fractional_density_hits_expectation():
    p = WorkloadParams(seed=23, element_count=2000, ref_density=1.5)
    elements, _, _, _ = gen_elements(p)
    mean = sum(len(e.refs) for e in elements.values()) / len(elements)
    assert abs(mean - 1.5) / 1.5 < 0.10


def test_gen_group_specs_partition_queues_in_order():
    p = WorkloadParams(
        seed=2,
        element_count=10,
        queue_count=6,
        group_specs=(
            GroupSpec(queues=2, rule=RuleKind.VALUE_PRIORITY),
            GroupSpec(queues=1, rule=RuleKind.FIFO_STRICT),
            GroupSpec(queues=3, rule=RuleKind.ALL_OR_NOTHING_GROUP),
        ),
    )
    _, _, groups, _ = gen_elements(p)
    assert [g.id for g in groups] == ["g00", "g01", "g02"]
    assert groups[0].queue_ids == frozenset({"q000", "q001"})
    assert groups[1].queue_ids == frozenset({"q002"})
    assert groups[2].queue_ids == frozenset({"q003", "q004", "q005"})
    assert [g.rule for g in groups] == [
        RuleKind.VALUE_PRIORITY,
        RuleKind.FIFO_STRICT,
        RuleKind.ALL_OR_NOTHING_GROUP,
    ]


def test_gen_capacity_bound_scales_with_slack():
    p = WorkloadParams(seed=31, element_count=60, capacity_count=1, capacity_slack=1.0)
    _, _, _, constraints = gen_elements(p)
    (cap,) = constraints
    assert cap.bound == sum(cap.usage.values())
    _, _, _, tight = gen_elements(
        WorkloadParams(seed=31, element_count=60, capacity_count=1, capacity_slack=0.0)
    )
    assert tight[0].bound == 0


def test_gen_output_always_validates_and_selects():
    for seed in range(12):
        p = WorkloadParams(
            seed=seed,
            element_count=5 + seed * 3,
            queue_count=1 + seed % 4,
            ref_density=0.5,
            requires_density=0.2,
            excludes_density=0.2,
            capacity_count=seed % 3,
            capacity_slack=0.6,
        )
        elements, system, groups, constraints = gen_elements(p)
        assert len(elements) == p.element_count
        assert validate_system(system, groups, constraints) == []
        partition = select_partition(system, groups, constraints)
        assert partition.accepted | partition.rejected == frozenset(elements)


def test_gen_rejects_bad_params():
    with pytest.raises(ValueError, match="queue_count"):
        gen_elements(WorkloadParams(seed=1, queue_count=0))
    with pytest.raises(ValueError, match="min > max"):
        gen_elements(WorkloadParams(seed=1, value_range=(5, 2)))
    with pytest.raises(ValueError, match="group specs cover"):
        gen_elements(
            WorkloadParams(seed=1, queue_count=3, group_specs=(GroupSpec(queues=2),))
        )
    with pytest.raises(ValueError, match="ref_density"):
        gen_elements(WorkloadParams(seed=1, ref_density=-0.5))


def test_params_validate_collects_all_problems():
    p = WorkloadParams(seed=1, event_frequency=2.0, element_count=-1, queue_count=0)
    messages = p.validate()
    assert len(messages) == 3
