"""Keyword-rule backend: a deterministic, offline stand-in for model calls."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from ..kgstore import RDF_TYPE, Iri, PerspectiveGraph, TBox, Triple, parse_turtle
from .agent import Backend
from .models import Attack, BackendError, EncodingResult, Proposal, RelevanceDecision

_WORD = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")


def tokens(text: str) -> set[str]:
    return set(_WORD.findall(text.lower()))


@dataclass(frozen=True)
class EncodingRule:
    """Turtle template fired when the observation mentions a keyword.

    ``{obs}`` in the template is replaced by the observation id. A rule with
    no keywords fires only when no keyworded rule did.
    """

    keywords: frozenset[str]
    template: str
    tbox_delta: TBox = field(default_factory=TBox)


@dataclass(frozen=True)
class ProposalRule:
    decision_types: frozenset[str]
    keywords: frozenset[str]
    interpretation: str
    relevance_claim: str
    evidence: frozenset[Iri]  # classes or properties whose encodings back the proposal
    headline: str = ""

    def matches(self, ctx) -> bool:
        return ctx.decision_type in self.decision_types or bool(self.keywords & tokens(ctx.query))


@dataclass(frozen=True)
class CritiqueRule:
    decision_types: frozenset[str]
    target: str
    justification: str


@dataclass
class RuleSet:
    relevance_keywords: frozenset[str]
    encoding_rules: list[EncodingRule] = field(default_factory=list)
    proposal_rules: list[ProposalRule] = field(default_factory=list)
    critique_rules: list[CritiqueRule] = field(default_factory=list)


class RuleBackend(Backend):
    def __init__(self, rules: RuleSet):
        self.rules = rules

    def assess_relevance(self, config, observation):
        hits = sorted(self.rules.relevance_keywords & tokens(observation.content))
        if hits:
            return RelevanceDecision(True, f"{config.label} goal keywords present: {', '.join(hits)}")
        return RelevanceDecision(False, f"no {config.label} goal keyword in observation")

    def encode(self, config, observation, graph: PerspectiveGraph):
        words = tokens(observation.content)
        fired = [r for r in self.rules.encoding_rules if r.keywords & words]
        if not fired:
            fired = [r for r in self.rules.encoding_rules if not r.keywords]
        if not fired:
            raise BackendError(f"{config.id}: no encoding rule fires for {observation.id}")
        delta = TBox()
        triples: set[Triple] = set()
        for rule in fired:
            # deltas may lean on the seed TBox, so union them unchecked; the graph validates on insert
            delta = TBox(
                {**delta.classes, **rule.tbox_delta.classes},
                delta.subclass_edges | rule.tbox_delta.subclass_edges,
                {**delta.properties, **rule.tbox_delta.properties},
            )
            _, ts = parse_turtle(rule.template.replace("{obs}", observation.id), graph.prefixes)
            triples |= ts
        return EncodingResult.build(delta, triples)

    def propose(self, config, ctx, graph: PerspectiveGraph):
        for rule in self.rules.proposal_rules:
            if not rule.matches(ctx):
                continue
            cited = {
                t
                for t in graph.abox
                if t.predicate in rule.evidence or (t.predicate == RDF_TYPE and t.object in rule.evidence)
            }
            supporting = graph.encodings_containing(cited)
            if not supporting:
                return None
            return Proposal(config.id, rule.interpretation, rule.relevance_claim, tuple(supporting), rule.headline)
        return None

    def critique(self, config, ctx, own, others: Sequence[Proposal], graph):
        live = {p.perspective_id for p in others}
        return [
            Attack(config.id, r.target, r.justification)
            for r in self.rules.critique_rules
            if ctx.decision_type in r.decision_types and r.target in live
        ]
