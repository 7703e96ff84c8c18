from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rashomon.buffer import (
    EPOCH,
    BufferStateError,
    DuplicateObservationError,
    LogicalClock,
    Observation,
    ObservationBuffer,
)


def obs(i):
    return Observation(f"obs-{i}", EPOCH + timedelta(days=i), f"observation number {i}")


def make(n=3, perspectives=("rel", "risk", "fin"), ttl=None):
    buf = ObservationBuffer(ttl=ttl, clock=LogicalClock())
    for p in perspectives:
        buf.register(p)
    for i in range(1, n + 1):
        buf.append(obs(i))
    return buf


def test_append_and_duplicate():
    buf = make(0)
    buf.append(obs(1))
    assert buf.pending_for("rel") == [obs(1)]
    with pytest.raises(DuplicateObservationError):
        buf.append(obs(1))


def test_pending_and_acknowledge():
    buf = make(3)
    assert [o.id for o in buf.pending_for("risk")] == ["obs-1", "obs-2", "obs-3"]
    buf.acknowledge("risk", "obs-2")
    assert [o.id for o in buf.pending_for("risk")] == ["obs-1", "obs-3"]
    with pytest.raises(BufferStateError):
        buf.pending_for("legal")
    with pytest.raises(BufferStateError):
        buf.acknowledge("risk", "obs-9")


def test_all_acked_evicts_regardless_of_ttl():
    buf = make(1, ttl=timedelta(days=365))
    for p in ("rel", "risk", "fin"):
        buf.acknowledge(p, "obs-1")
    assert buf.evict() == ["obs-1"]
    assert buf.pending_for("rel") == []
    with pytest.raises(BufferStateError, match="evicted"):
        buf.acknowledge("rel", "obs-1")
    with pytest.raises(DuplicateObservationError):
        buf.append(obs(1))


def test_ttl_rule():
    buf = make(1, ttl=timedelta(seconds=10))
    buf.acknowledge("rel", "obs-1")
    inserted = buf.entries()[0].inserted_at
    assert buf.evict(inserted + timedelta(seconds=5)) == []
    assert buf.evict(inserted + timedelta(seconds=11)) == ["obs-1"]


def test_no_ttl_means_no_time_eviction():
    buf = make(2)
    assert buf.evict(EPOCH + timedelta(days=10_000)) == []


def test_logical_clock_is_deterministic():
    a, b = LogicalClock(), LogicalClock()
    assert [a.now() for _ in range(3)] == [b.now() for _ in range(3)]


PERSPECTIVES = ("p0", "p1", "p2")
events = st.lists(
    st.one_of(
        st.tuples(st.just("append"), st.integers(0, 7)),
        st.tuples(st.just("ack"), st.sampled_from(PERSPECTIVES), st.integers(0, 7)),
        st.tuples(st.just("evict"), st.integers(0, 40)),
    ),
    max_size=60,
)


@settings(max_examples=300, deadline=None)
@given(events)
def test_pending_matches_event_log_replay(log):
    ttl = timedelta(seconds=20)
    buf = ObservationBuffer(ttl=ttl, clock=LogicalClock())
    for p in PERSPECTIVES:
        buf.register(p)
    appended, acked, evicted, inserted = [], {p: set() for p in PERSPECTIVES}, set(), {}
    tick = 0  # mirrors the logical clock: one reading per append
    for ev in log:
        if ev[0] == "append":
            oid = f"o{ev[1]}"
            if oid in appended:
                with pytest.raises(DuplicateObservationError):
                    buf.append(Observation(oid, EPOCH, "x"))
                continue
            buf.append(Observation(oid, EPOCH, "x"))
            appended.append(oid)
            inserted[oid] = tick
            tick += 1
        elif ev[0] == "ack":
            oid = f"o{ev[2]}"
            if oid not in appended or oid in evicted:
                with pytest.raises(BufferStateError):
                    buf.acknowledge(ev[1], oid)
                continue
            buf.acknowledge(ev[1], oid)
            acked[ev[1]].add(oid)
        else:
            now = EPOCH + timedelta(seconds=ev[1])
            expected = [
                o
                for o in appended
                if o not in evicted
                and (all(o in acked[p] for p in PERSPECTIVES) or ev[1] - inserted[o] > 20)
            ]
            assert buf.evict(now) == expected
            evicted |= set(expected)
        for p in PERSPECTIVES:
            want = [o for o in appended if o not in acked[p] and o not in evicted]
            assert [o.id for o in buf.pending_for(p)] == want
