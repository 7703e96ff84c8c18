from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .tbox import TBox, merge_tbox
from .terms import BUILTIN_PREDICATES, RDF_TYPE, Iri, Term, Triple
from .turtle import PREFIX_RE, serialize_triples

_PREFIX_NAME = re.compile(PREFIX_RE)

DEFAULT_BUMP = 1.0
DEFAULT_DECAY = 0.95


class UndeclaredTermError(ValueError):
    def __init__(self, terms: Iterable[Iri]):
        self.terms = sorted(set(terms))
        super().__init__("undeclared vocabulary: " + ", ".join(t.value for t in self.terms))


class UnknownEncodingError(KeyError):
    pass


@dataclass
class Encoding:
    id: str
    observation_id: str
    triples: frozenset[Triple]
    weight: float = 1.0


@dataclass
class PerspectiveGraph:
    """One perspective's knowledge graph: TBox, ABox and weighted encodings.

    Every operation touches this graph only; there is no API that spans two
    perspectives.
    """

    perspective_id: str
    prefixes: dict[str, str] = field(default_factory=dict)
    tbox: TBox = field(default_factory=TBox)
    abox: set[Triple] = field(default_factory=set)
    encodings: dict[str, Encoding] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in self.prefixes:
            if not _PREFIX_NAME.fullmatch(name):
                raise ValueError(f"invalid prefix name {name!r}")
        self.tbox = merge_tbox(TBox(), self.tbox)

    def apply_tbox_update(self, delta: TBox) -> PerspectiveGraph:
        self.tbox = merge_tbox(self.tbox, delta)
        return self

    def undeclared_terms(self, triples: Iterable[Triple], tbox: TBox | None = None) -> set[Iri]:
        tbox = tbox or self.tbox
        bad: set[Iri] = set()
        for t in triples:
            if t.predicate == RDF_TYPE:
                if not isinstance(t.object, Iri) or t.object not in tbox.classes:
                    bad.add(t.object if isinstance(t.object, Iri) else t.predicate)
            elif t.predicate not in BUILTIN_PREDICATES and t.predicate not in tbox.properties:
                bad.add(t.predicate)
        return bad

    def insert_encoding(
        self, observation_id: str, triples: Iterable[Triple], tbox_delta: TBox | None = None
    ) -> str:
        """Add an encoding and return its id ``<perspective>/<observation>/<seq>``.

        The TBox delta and the triples are applied together or not at all.
        """
        triples = frozenset(triples)
        if not triples:
            raise ValueError("an encoding must assert at least one triple")
        tbox = merge_tbox(self.tbox, tbox_delta) if tbox_delta is not None else self.tbox
        bad = self.undeclared_terms(triples, tbox)
        if bad:
            raise UndeclaredTermError(bad)
        seq = sum(1 for e in self.encodings.values() if e.observation_id == observation_id)
        encoding_id = f"{self.perspective_id}/{observation_id}/{seq}"
        self.tbox = tbox
        self.abox |= triples
        self.encodings[encoding_id] = Encoding(encoding_id, observation_id, triples)
        return encoding_id

    def match(
        self, subject: Iri | None = None, predicate: Iri | None = None, obj: Term | None = None
    ) -> set[Triple]:
        """ABox triples agreeing with every non-``None`` slot."""
        return {
            t
            for t in self.abox
            if (subject is None or t.subject == subject)
            and (predicate is None or t.predicate == predicate)
            and (obj is None or t.object == obj)
        }

    def encodings_containing(self, triples: Iterable[Triple]) -> list[str]:
        wanted = set(triples)
        return sorted(e.id for e in self.encodings.values() if e.triples & wanted)

    def encodings_for(self, observation_id: str) -> list[str]:
        return sorted(e.id for e in self.encodings.values() if e.observation_id == observation_id)

    def record_retrieval(self, encoding_ids: Iterable[str], bump: float = DEFAULT_BUMP) -> PerspectiveGraph:
        ids = list(encoding_ids)
        unknown = [i for i in ids if i not in self.encodings]
        if unknown:
            raise UnknownEncodingError(", ".join(unknown))
        if bump < 0:
            raise ValueError("bump must be non-negative")
        for i in ids:
            self.encodings[i].weight += bump
        return self

    def decay_weights(self, factor: float = DEFAULT_DECAY) -> PerspectiveGraph:
        if not 0.0 < factor < 1.0:
            raise ValueError(f"decay factor must lie in (0, 1), got {factor}")
        for enc in self.encodings.values():
            enc.weight *= factor
        return self

    def weights(self) -> dict[str, float]:
        return {k: self.encodings[k].weight for k in sorted(self.encodings)}


def serialize_turtle(graph: PerspectiveGraph, include_tbox: bool = False) -> str:
    triples = set(graph.abox)
    if include_tbox:
        triples |= graph.tbox.triples()
    return serialize_triples(graph.prefixes, triples)
