"""Fixture-replay backend.

Every answer comes from a recorded fixture. A question the fixture does not
cover raises :class:`FixtureGapError` rather than defaulting to "irrelevant".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..buffer import Observation
from ..kgstore import PerspectiveGraph, TBox, Triple
from .agent import Backend
from .models import (
    Attack,
    EncodingResult,
    FixtureGapError,
    PerspectiveConfig,
    Proposal,
    QueryContext,
    RelevanceDecision,
)


@dataclass(frozen=True)
class ScriptedEncoding:
    relevant: bool
    rationale: str
    tbox_delta: TBox = field(default_factory=TBox)
    triples: frozenset[Triple] = frozenset()


@dataclass(frozen=True)
class ScriptedProposal:
    interpretation: str
    relevance_claim: str
    evidence: tuple[str, ...]  # observation ids whose encodings back the proposal
    headline: str = ""


@dataclass(frozen=True)
class ScriptedRound:
    proposal: ScriptedProposal | None
    attacks: tuple[tuple[str, str], ...] = ()  # (target, justification)


@dataclass
class ScriptedFixture:
    observations: dict[str, ScriptedEncoding] = field(default_factory=dict)
    queries: dict[str, ScriptedRound] = field(default_factory=dict)


class ScriptedBackend(Backend):
    def __init__(self, fixture: ScriptedFixture):
        self.fixture = fixture

    def _encoding(self, config: PerspectiveConfig, observation: Observation) -> ScriptedEncoding:
        try:
            return self.fixture.observations[observation.id]
        except KeyError:
            raise FixtureGapError(f"{config.id}: no fixture entry for observation {observation.id!r}") from None

    def _round(self, config: PerspectiveConfig, ctx: QueryContext) -> ScriptedRound:
        try:
            return self.fixture.queries[ctx.id]
        except KeyError:
            raise FixtureGapError(f"{config.id}: no fixture entry for query {ctx.id!r}") from None

    def assess_relevance(self, config, observation):
        entry = self._encoding(config, observation)
        return RelevanceDecision(entry.relevant, entry.rationale)

    def encode(self, config, observation, graph):
        entry = self._encoding(config, observation)
        if not entry.relevant or not entry.triples:
            raise FixtureGapError(f"{config.id}: fixture has no encoding for observation {observation.id!r}")
        return EncodingResult.build(entry.tbox_delta, entry.triples)

    def propose(self, config, ctx, graph: PerspectiveGraph):
        script = self._round(config, ctx).proposal
        if script is None:
            return None
        supporting: list[str] = []
        for oid in script.evidence:
            ids = graph.encodings_for(oid)
            if not ids:
                raise FixtureGapError(f"{config.id}: proposal for {ctx.id!r} cites unencoded observation {oid!r}")
            supporting.extend(ids)
        return Proposal(config.id, script.interpretation, script.relevance_claim, tuple(supporting), script.headline)

    def critique(self, config, ctx, own, others: Sequence[Proposal], graph):
        # emitted as recorded; the arbiter rejects attacks on non-proposers
        return [Attack(config.id, target, text) for target, text in self._round(config, ctx).attacks]
