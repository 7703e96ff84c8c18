"""Adapter for a remote text-generation service.

Each call sends ``{role, task, payload, schema, temperature}`` and expects a
JSON object that validates against ``schema``. Anything else counts as a
failure; a failed call is retried once, then raised as BackendError.
Not exercised against a live service.
"""

from __future__ import annotations

import json
import logging
import urllib.request
from typing import Any, Callable, Sequence

import jsonschema

from ..kgstore import Iri, Literal, Triple, expand, tbox_from_dict
from ..kgstore.terms import XSD_STRING
from .agent import Backend
from .models import Attack, BackendError, EncodingResult, Proposal, RelevanceDecision

logger = logging.getLogger(__name__)

Transport = Callable[[str, dict, float], dict]

_TERM = {"type": "string", "minLength": 1}

RELEVANCE_SCHEMA = {
    "type": "object",
    "required": ["relevant", "rationale"],
    "properties": {"relevant": {"type": "boolean"}, "rationale": {"type": "string", "minLength": 1}},
}

ENCODING_SCHEMA = {
    "type": "object",
    "required": ["tbox_delta", "triples"],
    "properties": {
        "tbox_delta": {
            "type": "object",
            "properties": {
                "classes": {"type": "object", "additionalProperties": {"type": "string"}},
                "subclass_of": {"type": "array", "items": {"type": "array", "items": _TERM, "minItems": 2, "maxItems": 2}},
                "properties": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "required": ["domain", "range"],
                        "properties": {"domain": _TERM, "range": _TERM},
                    },
                },
            },
            "additionalProperties": False,
        },
        "triples": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["subject", "predicate"],
                "properties": {
                    "subject": _TERM,
                    "predicate": _TERM,
                    "object": _TERM,
                    "literal": {"type": "string"},
                    "datatype": _TERM,
                    "language": _TERM,
                },
                "oneOf": [{"required": ["object"]}, {"required": ["literal"]}],
            },
        },
    },
}

PROPOSAL_SCHEMA = {
    "type": "object",
    "required": ["abstain"],
    "properties": {
        "abstain": {"type": "boolean"},
        "interpretation": {"type": "string"},
        "relevance_claim": {"type": "string"},
        "headline": {"type": "string"},
        "supporting_encodings": {"type": "array", "items": {"type": "string"}},
    },
    "if": {"properties": {"abstain": {"const": False}}},
    "then": {"required": ["interpretation", "relevance_claim", "supporting_encodings"]},
}

ATTACKS_SCHEMA = {
    "type": "object",
    "required": ["attacks"],
    "properties": {
        "attacks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["target", "justification"],
                "properties": {"target": _TERM, "justification": {"type": "string", "minLength": 1}},
            },
        }
    },
}


def http_transport(endpoint: str, request: dict, timeout: float) -> dict:
    req = urllib.request.Request(
        endpoint,
        data=json.dumps(request).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req, timeout=timeout) as resp:  # noqa: S310 - endpoint comes from the scenario
        return json.loads(resp.read().decode())


class ExternalBackend(Backend):
    def __init__(
        self,
        endpoint: str,
        *,
        timeout: float = 60.0,
        retries: int = 1,
        transport: Transport = http_transport,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.transport = transport

    def request(self, config, task: str, payload: dict, schema: dict) -> dict:
        body = {
            "role": f"You are the {config.label} perspective. Your goal: {config.goal_statement}",
            "task": task,
            "payload": payload,
            "schema": schema,
            "temperature": 0,
        }
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self.transport(self.endpoint, body, self.timeout)
                jsonschema.validate(response, schema)
                return response
            except Exception as exc:  # any transport or schema failure counts
                logger.warning("%s: %s call failed (attempt %d): %s", config.id, task, attempt + 1, exc)
                last = exc
        raise BackendError(f"{config.id}: {task} failed after {self.retries + 1} attempts") from last

    def assess_relevance(self, config, observation):
        data = self.request(
            config, "relevance", {"observation": observation.content, "id": observation.id}, RELEVANCE_SCHEMA
        )
        return RelevanceDecision(data["relevant"], data["rationale"])

    def encode(self, config, observation, graph):
        data = self.request(
            config,
            "encode",
            {
                "observation": observation.content,
                "id": observation.id,
                "prefixes": graph.prefixes,
                "classes": sorted(c.value for c in graph.tbox.classes),
                "properties": sorted(p.value for p in graph.tbox.properties),
            },
            ENCODING_SCHEMA,
        )
        try:
            delta = tbox_from_dict(data["tbox_delta"], graph.prefixes)
            triples = {self._triple(t, graph.prefixes) for t in data["triples"]}
        except (KeyError, ValueError) as exc:
            raise BackendError(f"{config.id}: malformed encoding response: {exc}") from exc
        return EncodingResult.build(delta, triples)

    @staticmethod
    def _triple(t: dict[str, Any], prefixes: dict[str, str]) -> Triple:
        def iri(name: str) -> Iri:
            # CURIEs with a known prefix expand; anything else is taken as absolute
            if name.partition(":")[0] in prefixes:
                return expand(name, prefixes)
            return Iri(name)

        if "object" in t:
            obj = iri(t["object"])
        elif "language" in t:
            obj = Literal(t["literal"], language=t["language"])
        else:
            obj = Literal(t["literal"], iri(t["datatype"]) if "datatype" in t else XSD_STRING)
        return Triple(iri(t["subject"]), iri(t["predicate"]), obj)

    def propose(self, config, ctx, graph):
        data = self.request(
            config,
            "propose",
            {
                "query": ctx.query,
                "querier": ctx.querier,
                "decision_type": ctx.decision_type,
                "priorities": list(ctx.current_priorities),
                "encodings": sorted(graph.encodings),
            },
            PROPOSAL_SCHEMA,
        )
        if data["abstain"]:
            return None
        return Proposal(
            config.id,
            data["interpretation"],
            data["relevance_claim"],
            tuple(data["supporting_encodings"]),
            data.get("headline", ""),
        )

    def critique(self, config, ctx, own, others: Sequence[Proposal], graph):
        # one batched call covering every other proposal
        data = self.request(
            config,
            "critique",
            {
                "query": ctx.query,
                "decision_type": ctx.decision_type,
                "own": own.interpretation if own else None,
                "others": [{"perspective": p.perspective_id, "interpretation": p.interpretation} for p in others],
            },
            ATTACKS_SCHEMA,
        )
        return [Attack(config.id, a["target"], a["justification"]) for a in data["attacks"]]
