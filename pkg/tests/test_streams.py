"""Timed-stream kernel: construction, merging, stripping, shifting."""

import random

import pytest

from settlesim.streams import (
    Hiaton,
    Payload,
    StreamOrderError,
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


def random_monotone_stream(rng, length, max_step=3):
    items = []
    t = rng.randrange(0, 3)
    for i in range(length):
        if rng.random() < 0.5:
            items.append(Payload(t, rng.randrange(100)))
        else:
            items.append(Hiaton(t))
        t += rng.randrange(0, max_step + 1)
    return items


def test_make_hiaton_basics():
    assert make_hiaton(0) == Hiaton(0)
    assert make_hiaton(7).tick == 7
    assert is_hiaton(make_hiaton(3))
    assert not is_hiaton(Payload(3, "x"))


def test_hiatons_never_survive_stripping():
    # exhaustive over a tag range
    for t in range(101):
        assert strip_hiatons([make_hiaton(t)]) == []


def test_merge_empty():
    assert merge([], []) == []


def test_merge_tie_breaks_left_first():
    assert merge([Payload(1, "x")], [Hiaton(1)]) == [Payload(1, "x"), Hiaton(1)]
    # and symmetrically, the left stream still goes first
    assert merge([Hiaton(1)], [Payload(1, "x")]) == [Hiaton(1), Payload(1, "x")]


def test_merge_rejects_disorder_with_index():
    bad = [Payload(3, "a"), Payload(1, "b")]
    with pytest.raises(StreamOrderError) as err:
        merge(bad, [])
    assert err.value.index == 1
    assert "index 1" in str(err.value)
    with pytest.raises(StreamOrderError):
        merge([], bad)


def test_merge_matches_stable_sort_oracle():
    # oracle: stable sort of the concatenation by tag equals left-first merge
    rng = random.Random(1234)
    for _ in range(1000):
        a = random_monotone_stream(rng, rng.randrange(0, 12))
        b = random_monotone_stream(rng, rng.randrange(0, 12))
        expected = sorted(list(a) + list(b), key=lambda item: item.tick)
        got = merge(a, b)
        assert got == expected
        assert len(got) == len(a) + len(b)


def test_merge_output_monotone_and_stable():
    rng = random.Random(99)
    for _ in range(300):
        a = random_monotone_stream(rng, rng.randrange(0, 10))
        b = random_monotone_stream(rng, rng.randrange(0, 10))
        out = merge(a, b)
        assert first_disorder(out) is None
        # stability: items originating from one input keep their relative order
        ida, idb = [id(x) for x in a], [id(x) for x in b]
        out_ids = [id(x) for x in out]
        assert [i for i in out_ids if i in set(ida)] == ida
        assert [i for i in out_ids if i in set(idb)] == idb


def test_strip_hiatons_basics():
    assert strip_hiatons([Hiaton(0), Hiaton(1)]) == []
    s = [Payload(0, "x"), Hiaton(1), Payload(2, "y")]
    assert strip_hiatons(s) == [Payload(0, "x"), Payload(2, "y")]


def test_strip_plus_hiaton_count_is_total():
    rng = random.Random(7)
    for _ in range(200):
        s = random_monotone_stream(rng, rng.randrange(0, 30))
        assert len(strip_hiatons(s)) + count_hiatons(s) == len(s)


def test_strip_commutes_with_merge():
    # hiatons never reorder payloads
    rng = random.Random(21)
    for _ in range(200):
        a = random_monotone_stream(rng, rng.randrange(0, 10))
        b = random_monotone_stream(rng, rng.randrange(0, 10))
        assert strip_hiatons(merge(a, b)) == merge(strip_hiatons(a), strip_hiatons(b))


def test_shift_identity_and_addition():
    s = [Payload(1, "x"), Hiaton(2)]
    assert shift(s, 0) == s
    assert shift([Payload(1, "x")], 3) == [Payload(4, "x")]


def test_shift_composes():
    rng = random.Random(5)
    for _ in range(100):
        s = random_monotone_stream(rng, rng.randrange(0, 15))
        a, b = rng.randrange(0, 5), rng.randrange(0, 5)
        assert shift(shift(s, a), b) == shift(s, a + b)


def test_shift_rejects_negative():
    with pytest.raises(ValueError):
        shift([Payload(1, "x")], -1)


def test_check_monotone_names_location():
    with pytest.raises(StreamOrderError) as err:
        check_monotone([Hiaton(2), Hiaton(0)], where="channel a.0")
    assert "channel a.0" in str(err.value)
    assert err.value.index == 1


def test_retag_preserves_payload_value():
    assert retag(Payload(0, "v"), 9) == Payload(9, "v")
    assert retag(Hiaton(0), 9) == Hiaton(9)


def test_is_dense():
    dense = [Hiaton(0), Payload(1, 1), Hiaton(2)]
    assert is_dense(dense, 2)
    assert not is_dense(dense, 3)  # too short
    assert not is_dense([Hiaton(0), Hiaton(0), Hiaton(2)], 2)  # wrong tags
