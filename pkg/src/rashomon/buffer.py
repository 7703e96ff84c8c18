"""Time-bounded staging log for observations awaiting encoding.

Every registered perspective sees every observation. An entry leaves the
buffer once all registered perspectives have acknowledged it, or once it has
been held longer than the TTL. Eviction is permanent.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Callable, Mapping

EPOCH = datetime(2025, 1, 1, tzinfo=timezone.utc)


class BufferStateError(ValueError):
    pass


class DuplicateObservationError(BufferStateError):
    pass


class Clock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class LogicalClock(Clock):
    """Deterministic clock: each reading advances by ``step``."""

    def __init__(self, start: datetime = EPOCH, step: timedelta = timedelta(seconds=1)):
        self._t = start
        self._step = step
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            t = self._t
            self._t += self._step
            return t


@dataclass(frozen=True)
class Observation:
    id: str
    timestamp: datetime
    content: str
    source: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("observation id must be non-empty")
        if not self.content.strip():
            raise ValueError(f"observation {self.id}: content must be non-empty")


@dataclass
class BufferEntry:
    observation: Observation
    inserted_at: datetime
    acked_by: set[str] = field(default_factory=set)


RetentionPolicy = Callable[[BufferEntry, frozenset, datetime, "timedelta | None"], bool]


def default_retention(entry: BufferEntry, registered: frozenset, now: datetime, ttl: timedelta | None) -> bool:
    """Return True when ``entry`` should be evicted."""
    if registered and registered <= entry.acked_by:
        return True
    return ttl is not None and now - entry.inserted_at > ttl


class ObservationBuffer:
    """Single-writer buffer; all mutations are serialized by one lock."""

    def __init__(
        self,
        ttl: timedelta | None = None,
        clock: Clock | None = None,
        retention: RetentionPolicy = default_retention,
    ):
        self.ttl = ttl
        self.clock = clock or Clock()
        self.retention = retention
        self._entries: dict[str, BufferEntry] = {}
        self._evicted: set[str] = set()
        self._perspectives: list[str] = []
        self._lock = threading.RLock()

    @property
    def perspectives(self) -> tuple[str, ...]:
        return tuple(self._perspectives)

    def register(self, perspective_id: str) -> None:
        with self._lock:
            if perspective_id not in self._perspectives:
                self._perspectives.append(perspective_id)

    def append(self, observation: Observation) -> ObservationBuffer:
        with self._lock:
            if observation.id in self._entries or observation.id in self._evicted:
                raise DuplicateObservationError(f"observation {observation.id!r} already appended")
            self._entries[observation.id] = BufferEntry(observation, self.clock.now())
        return self

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, observation_id: object) -> bool:
        return observation_id in self._entries

    def entries(self) -> list[BufferEntry]:
        with self._lock:
            return [
                BufferEntry(e.observation, e.inserted_at, set(e.acked_by)) for e in self._entries.values()
            ]

    def _require_perspective(self, perspective_id: str) -> None:
        if perspective_id not in self._perspectives:
            raise BufferStateError(f"unknown perspective {perspective_id!r}")

    def pending_for(self, perspective_id: str) -> list[Observation]:
        with self._lock:
            self._require_perspective(perspective_id)
            return [e.observation for e in self._entries.values() if perspective_id not in e.acked_by]

    def acknowledge(self, perspective_id: str, observation_id: str) -> ObservationBuffer:
        with self._lock:
            self._require_perspective(perspective_id)
            entry = self._entries.get(observation_id)
            if entry is None:
                state = "evicted" if observation_id in self._evicted else "unknown"
                raise BufferStateError(f"cannot acknowledge {state} observation {observation_id!r}")
            entry.acked_by.add(perspective_id)
        return self

    def evict(self, now: datetime | None = None) -> list[str]:
        with self._lock:
            now = now if now is not None else self.clock.now()
            registered = frozenset(self._perspectives)
            gone = [
                oid for oid, e in self._entries.items() if self.retention(e, registered, now, self.ttl)
            ]
            for oid in gone:
                del self._entries[oid]
                self._evicted.add(oid)
            return gone

    def is_evicted(self, observation_id: str) -> bool:
        return observation_id in self._evicted
