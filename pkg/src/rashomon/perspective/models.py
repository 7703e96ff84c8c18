from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

from ..kgstore import RDF_TYPE, TBox, Triple

MIN_JUSTIFICATION = 20


class BackendError(RuntimeError):
    """A backend failed to produce a usable answer."""


class FixtureGapError(BackendError):
    """A scripted backend was asked about something its fixture does not cover."""


@dataclass(frozen=True)
class QueryContext:
    id: str
    query: str
    querier: str = ""
    decision_type: str = ""
    current_priorities: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.query.strip():
            raise ValueError("query text must be non-empty")
        object.__setattr__(self, "current_priorities", tuple(self.current_priorities))


@dataclass(frozen=True)
class RelevanceDecision:
    relevant: bool
    rationale: str

    def __post_init__(self) -> None:
        if not self.rationale.strip():
            raise ValueError("relevance decisions need a rationale")


@dataclass(frozen=True)
class TaskTrace:
    """Which ontology-learning task produced each piece of an encoding.

    Task A types entities against the TBox, task B places new classes in the
    hierarchy, task C extracts relations between entities.
    """

    term_typing: tuple[Triple, ...]
    taxonomy: tuple[tuple[str, str], ...]
    relations: tuple[Triple, ...]

    @classmethod
    def derive(cls, tbox_delta: TBox, triples: frozenset[Triple]) -> TaskTrace:
        ordered = sorted(triples, key=Triple.sort_key)
        return cls(
            term_typing=tuple(t for t in ordered if t.predicate == RDF_TYPE),
            taxonomy=tuple((c.value, p.value) for c, p in sorted(tbox_delta.subclass_edges)),
            relations=tuple(t for t in ordered if t.predicate != RDF_TYPE),
        )

    def task_of(self, triple: Triple) -> str:
        if triple in self.term_typing:
            return "A"
        if triple in self.relations:
            return "C"
        raise KeyError(triple)


@dataclass(frozen=True)
class EncodingResult:
    tbox_delta: TBox
    triples: frozenset[Triple]
    task_trace: TaskTrace

    @classmethod
    def build(cls, tbox_delta: TBox | None, triples) -> EncodingResult:
        delta = tbox_delta if tbox_delta is not None else TBox()
        triples = frozenset(triples)
        return cls(delta, triples, TaskTrace.derive(delta, triples))


@dataclass(frozen=True)
class Proposal:
    perspective_id: str
    interpretation: str
    relevance_claim: str
    supporting_encodings: tuple[str, ...]
    # short recommendation used in conflict reports, e.g. "margin recovery"
    headline: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "supporting_encodings", tuple(self.supporting_encodings))


@dataclass(frozen=True)
class Attack:
    attacker: str
    target: str
    justification: str

    @property
    def edge(self) -> tuple[str, str]:
        return (self.attacker, self.target)


@dataclass
class PerspectiveConfig:
    id: str
    label: str
    goal_statement: str
    seed_tbox: TBox
    backend: Any
    # noun phrase for this perspective's framing, e.g. "trust framing"
    framing: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("perspective id must be non-empty")
        if not self.label:
            self.label = self.id
        if not self.framing:
            self.framing = f"{self.label} framing"


class InvocationCounter:
    """Thread-safe tally of agent calls by kind."""

    def __init__(self) -> None:
        self._counts: Counter[str] = Counter()
        self._lock = threading.Lock()

    def add(self, kind: str, n: int = 1) -> None:
        with self._lock:
            self._counts[kind] += n

    def __getitem__(self, kind: str) -> int:
        with self._lock:
            return self._counts[kind]

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(sorted(self._counts.items()))

    def total(self) -> int:
        with self._lock:
            return sum(self._counts.values())

    def reset(self) -> None:
        with self._lock:
            self._counts.clear()
