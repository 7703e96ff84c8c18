"""Scenario files: perspectives, observations, queries and optional goldens.

A scenario is one JSON document. ``load_scenario`` validates its shape with
JSON Schema, then checks that ids agree across sections. Every error names
the offending field as a dotted path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .arbiter import CurationPolicy, RashomonMemory
from .buffer import Clock, Observation, ObservationBuffer
from .kgstore import DeclarationError, TBox, TBoxError, TurtleParseError, expand, merge_tbox, parse_turtle, tbox_from_dict
from .perspective import (
    CritiqueRule,
    EncodingRule,
    ExternalBackend,
    Perspective,
    PerspectiveConfig,
    ProposalRule,
    QueryContext,
    RuleBackend,
    RuleSet,
    ScriptedBackend,
    ScriptedEncoding,
    ScriptedFixture,
    ScriptedProposal,
    ScriptedRound,
)

BACKENDS = ("scripted", "rule_based", "external")

_STR = {"type": "string", "minLength": 1}
_STRS = {"type": "array", "items": _STR}
_TBOX = {
    "type": "object",
    "properties": {
        "classes": {"type": "object", "additionalProperties": {"type": "string"}},
        "subclass_of": {"type": "array", "items": {"type": "array", "items": _STR, "minItems": 2, "maxItems": 2}},
        "properties": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["domain", "range"],
                "properties": {"domain": _STR, "range": _STR},
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

SCENARIO_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["perspectives", "observations", "queries"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "prefixes": {"type": "object", "additionalProperties": _STR},
        "buffer": {
            "type": "object",
            "properties": {"ttl_seconds": {"type": ["number", "null"], "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "curation": {
            "type": "object",
            "properties": {
                "bump": {"type": "number", "minimum": 0},
                "decay": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "decay_every": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "perspectives": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "goal", "backend"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "pattern": r"^[A-Za-z0-9_-]+$"},
                    "label": _STR,
                    "framing": _STR,
                    "goal": _STR,
                    "seed_tbox": _TBOX,
                    "backend": {"enum": list(BACKENDS)},
                    "fixture": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "observations": {
                                "type": "object",
                                "additionalProperties": {
                                    "type": "object",
                                    "required": ["relevant", "rationale"],
                                    "additionalProperties": False,
                                    "properties": {
                                        "relevant": {"type": "boolean"},
                                        "rationale": _STR,
                                        "tbox_delta": _TBOX,
                                        "triples": _STR,
                                    },
                                },
                            },
                            "queries": {
                                "type": "object",
                                "additionalProperties": {
                                    "type": "object",
                                    "additionalProperties": False,
                                    "properties": {
                                        "proposal": {
                                            "type": ["object", "null"],
                                            "required": ["interpretation", "relevance_claim", "evidence"],
                                            "additionalProperties": False,
                                            "properties": {
                                                "interpretation": _STR,
                                                "relevance_claim": _STR,
                                                "headline": {"type": "string"},
                                                "evidence": {**_STRS, "minItems": 1},
                                            },
                                        },
                                        "attacks": {
                                            "type": "array",
                                            "items": {
                                                "type": "object",
                                                "required": ["target", "justification"],
                                                "additionalProperties": False,
                                                "properties": {"target": _STR, "justification": _STR},
                                            },
                                        },
                                    },
                                },
                            },
                        },
                    },
                    "rules": {
                        "type": "object",
                        "required": ["relevance_keywords"],
                        "additionalProperties": False,
                        "properties": {
                            "relevance_keywords": _STRS,
                            "encoding": {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "required": ["keywords", "template"],
                                    "additionalProperties": False,
                                    "properties": {"keywords": _STRS, "template": _STR, "tbox_delta": _TBOX},
                                },
                            },
                            "proposals": {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "required": ["interpretation", "relevance_claim", "evidence"],
                                    "additionalProperties": False,
                                    "properties": {
                                        "decision_types": _STRS,
                                        "keywords": _STRS,
                                        "interpretation": _STR,
                                        "relevance_claim": _STR,
                                        "headline": {"type": "string"},
                                        "evidence": _STRS,
                                    },
                                },
                            },
                            "critique": {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "required": ["decision_types", "target", "justification"],
                                    "additionalProperties": False,
                                    "properties": {"decision_types": _STRS, "target": _STR, "justification": _STR},
                                },
                            },
                        },
                    },
                    "endpoint": {
                        "type": "object",
                        "required": ["url"],
                        "properties": {
                            "url": _STR,
                            "timeout": {"type": "number", "exclusiveMinimum": 0},
                            "retries": {"type": "integer", "minimum": 0},
                        },
                        "additionalProperties": False,
                    },
                },
            },
        },
        "observations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "timestamp", "content"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "pattern": r"^[A-Za-z0-9_-]+$"},
                    "timestamp": _STR,
                    "content": _STR,
                    "source": {"type": "object", "additionalProperties": {"type": "string"}},
                },
            },
        },
        "queries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "query"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "pattern": r"^[A-Za-z0-9_-]+$"},
                    "query": _STR,
                    "querier": {"type": "string"},
                    "decision_type": {"type": "string"},
                    "priorities": _STRS,
                },
            },
        },
        "expected": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "encoding": {"type": "object", "additionalProperties": _STRS},
                "invocations": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "relevance": {"type": "integer"},
                        "encode": {"type": "integer"},
                        "per_query_max": {"type": "integer"},
                    },
                },
                "queries": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "attacks": {"type": "array", "items": {"type": "array", "items": _STR, "minItems": 2, "maxItems": 2}},
                            "grounded": _STRS,
                            "mode": _STR,
                            "preferred": {"type": "array", "items": _STRS},
                        },
                    },
                },
            },
        },
    },
}


class ScenarioError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


@dataclass
class QueryGolden:
    attacks: set[tuple[str, str]] | None = None
    grounded: frozenset[str] | None = None
    mode: str | None = None
    preferred: set[frozenset[str]] | None = None


@dataclass
class Golden:
    encoding: dict[str, list[str]] | None = None
    invocations: dict[str, int] = field(default_factory=dict)
    queries: dict[str, QueryGolden] = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    prefixes: dict[str, str]
    perspectives: list[dict[str, Any]]
    observations: list[Observation]
    queries: list[QueryContext]
    expected: Golden | None
    ttl: timedelta | None = None
    curation: CurationPolicy = field(default_factory=CurationPolicy)
    source: Path | None = None

    def query(self, query_id: str) -> QueryContext:
        for q in self.queries:
            if q.id == query_id:
                return q
        raise KeyError(query_id)

    def configs(self, backend: str | None = None) -> list[PerspectiveConfig]:
        return [_config(i, raw, self.prefixes, backend) for i, raw in enumerate(self.perspectives)]

    def build_memory(self, *, backend: str | None = None, clock: Clock | None = None) -> RashomonMemory:
        agents = [Perspective(c, self.prefixes) for c in self.configs(backend)]
        return RashomonMemory(agents, ObservationBuffer(ttl=self.ttl, clock=clock), self.curation)


def _turtle(text: str, prefixes: dict[str, str], path: str):
    try:
        return frozenset(parse_turtle(text, prefixes)[1])
    except TurtleParseError as exc:
        raise ScenarioError(path, f"Turtle error at {exc}") from None


def _tbox(data: dict | None, prefixes: dict[str, str], path: str, *, complete: bool = False) -> TBox:
    """Resolve a TBox; ``complete`` ones must stand alone, deltas may lean on a seed."""
    try:
        tbox = tbox_from_dict(data or {}, prefixes)
        return merge_tbox(TBox(), tbox) if complete else tbox
    except (DeclarationError, TBoxError) as exc:
        raise ScenarioError(path, str(exc)) from None


def _fixture(raw: dict, prefixes: dict[str, str], path: str) -> ScriptedFixture:
    fixture = ScriptedFixture()
    for oid, e in raw.get("observations", {}).items():
        p = f"{path}.observations.{oid}"
        triples = _turtle(e["triples"], prefixes, p + ".triples") if "triples" in e else frozenset()
        if e["relevant"] and not triples:
            raise ScenarioError(p + ".triples", "relevant observations need triples")
        fixture.observations[oid] = ScriptedEncoding(
            e["relevant"], e["rationale"], _tbox(e.get("tbox_delta"), prefixes, p + ".tbox_delta"), triples
        )
    for qid, r in raw.get("queries", {}).items():
        prop = r.get("proposal")
        proposal = None
        if prop is not None:
            proposal = ScriptedProposal(
                prop["interpretation"], prop["relevance_claim"], tuple(prop["evidence"]), prop.get("headline", "")
            )
        attacks = tuple((a["target"], a["justification"]) for a in r.get("attacks", []))
        fixture.queries[qid] = ScriptedRound(proposal, attacks)
    return fixture


def _rules(raw: dict, prefixes: dict[str, str], path: str) -> RuleSet:
    enc = []
    for i, r in enumerate(raw.get("encoding", [])):
        p = f"{path}.encoding[{i}]"
        # template must parse once {obs} is substituted
        _turtle(r["template"].replace("{obs}", "probe"), prefixes, p + ".template")
        enc.append(EncodingRule(frozenset(r["keywords"]), r["template"], _tbox(r.get("tbox_delta"), prefixes, p + ".tbox_delta")))
    props = []
    for i, r in enumerate(raw.get("proposals", [])):
        try:
            evidence = frozenset(expand(e, prefixes) for e in r["evidence"])
        except KeyError as exc:
            raise ScenarioError(f"{path}.proposals[{i}].evidence", str(exc.args[0])) from None
        props.append(
            ProposalRule(
                frozenset(r.get("decision_types", [])),
                frozenset(r.get("keywords", [])),
                r["interpretation"],
                r["relevance_claim"],
                evidence,
                r.get("headline", ""),
            )
        )
    crit = [CritiqueRule(frozenset(r["decision_types"]), r["target"], r["justification"]) for r in raw.get("critique", [])]
    return RuleSet(frozenset(raw["relevance_keywords"]), enc, props, crit)


def _config(i: int, raw: dict, prefixes: dict[str, str], override: str | None) -> PerspectiveConfig:
    path = f"perspectives[{i}]"
    kind = override or raw["backend"]
    if kind == "scripted":
        if "fixture" not in raw:
            raise ScenarioError(f"{path}.fixture", "scripted backend needs a fixture")
        backend = ScriptedBackend(_fixture(raw["fixture"], prefixes, f"{path}.fixture"))
    elif kind == "rule_based":
        if "rules" not in raw:
            raise ScenarioError(f"{path}.rules", "rule_based backend needs rules")
        backend = RuleBackend(_rules(raw["rules"], prefixes, f"{path}.rules"))
    elif kind == "external":
        if "endpoint" not in raw:
            raise ScenarioError(f"{path}.endpoint", "external backend needs an endpoint")
        ep = raw["endpoint"]
        backend = ExternalBackend(ep["url"], timeout=ep.get("timeout", 60.0), retries=ep.get("retries", 1))
    else:
        raise ScenarioError(f"{path}.backend", f"unknown backend {kind!r}")
    return PerspectiveConfig(
        id=raw["id"],
        label=raw.get("label", raw["id"]),
        goal_statement=raw["goal"],
        seed_tbox=_tbox(raw.get("seed_tbox"), prefixes, f"{path}.seed_tbox", complete=True),
        backend=backend,
        framing=raw.get("framing", ""),
    )


def _golden(raw: dict, obs_ids: list[str], persp_ids: list[str], query_ids: list[str]) -> Golden:
    golden = Golden()
    if "encoding" in raw:
        for oid, ps in raw["encoding"].items():
            if oid not in obs_ids:
                raise ScenarioError(f"expected.encoding.{oid}", "unknown observation")
            for p in ps:
                if p not in persp_ids:
                    raise ScenarioError(f"expected.encoding.{oid}", f"unknown perspective {p!r}")
        golden.encoding = {o: list(raw["encoding"].get(o, [])) for o in obs_ids}
    golden.invocations = dict(raw.get("invocations", {}))
    for qid, q in raw.get("queries", {}).items():
        if qid not in query_ids:
            raise ScenarioError(f"expected.queries.{qid}", "unknown query")
        for a, b in q.get("attacks", []):
            if a not in persp_ids or b not in persp_ids:
                raise ScenarioError(f"expected.queries.{qid}.attacks", f"unknown perspective in {a} -> {b}")
        golden.queries[qid] = QueryGolden(
            attacks={tuple(e) for e in q["attacks"]} if "attacks" in q else None,
            grounded=frozenset(q["grounded"]) if "grounded" in q else None,
            mode=q.get("mode"),
            preferred={frozenset(e) for e in q["preferred"]} if "preferred" in q else None,
        )
    return golden


def parse_scenario(data: Any, source: Path | None = None) -> Scenario:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        raise ScenarioError(_path(err.absolute_path), err.message)
    prefixes = dict(data.get("prefixes", {}))
    persp_ids = [p["id"] for p in data["perspectives"]]
    for kind, items in (("perspectives", data["perspectives"]), ("observations", data["observations"]), ("queries", data["queries"])):
        seen = set()
        for i, item in enumerate(items):
            if item["id"] in seen:
                raise ScenarioError(f"{kind}[{i}].id", f"duplicate id {item['id']!r}")
            seen.add(item["id"])
    observations = []
    for i, o in enumerate(data["observations"]):
        try:
            ts = datetime.fromisoformat(o["timestamp"].replace("Z", "+00:00"))
        except ValueError:
            raise ScenarioError(f"observations[{i}].timestamp", f"not an ISO-8601 instant: {o['timestamp']!r}") from None
        observations.append(Observation(o["id"], ts, o["content"], dict(o.get("source", {}))))
    queries = [
        QueryContext(q["id"], q["query"], q.get("querier", ""), q.get("decision_type", ""), tuple(q.get("priorities", [])))
        for q in data["queries"]
    ]
    obs_ids = [o.id for o in observations]
    query_ids = [q.id for q in queries]
    for i, p in enumerate(data["perspectives"]):
        fx = p.get("fixture", {})
        for oid in fx.get("observations", {}):
            if oid not in obs_ids:
                raise ScenarioError(f"perspectives[{i}].fixture.observations.{oid}", "unknown observation")
        for qid, r in fx.get("queries", {}).items():
            if qid not in query_ids:
                raise ScenarioError(f"perspectives[{i}].fixture.queries.{qid}", "unknown query")
            for j, a in enumerate(r.get("attacks", [])):
                if a["target"] not in persp_ids:
                    raise ScenarioError(f"perspectives[{i}].fixture.queries.{qid}.attacks[{j}].target", f"unknown perspective {a['target']!r}")
            prop = r.get("proposal")
            for oid in (prop or {}).get("evidence", []):
                if oid not in obs_ids:
                    raise ScenarioError(f"perspectives[{i}].fixture.queries.{qid}.proposal.evidence", f"unknown observation {oid!r}")
    expected = _golden(data["expected"], obs_ids, persp_ids, query_ids) if "expected" in data else None
    ttl = data.get("buffer", {}).get("ttl_seconds")
    cur = data.get("curation", {})
    scenario = Scenario(
        name=data.get("name", source.stem if source else "scenario"),
        prefixes=prefixes,
        perspectives=list(data["perspectives"]),
        observations=observations,
        queries=queries,
        expected=expected,
        ttl=timedelta(seconds=ttl) if ttl else None,
        curation=CurationPolicy(cur.get("bump", 1.0), cur.get("decay", 0.95), cur.get("decay_every", 1)),
        source=source,
    )
    # build every config once so fixture/rule errors surface at load time
    scenario.configs()
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_scenario(data, path)


def meridian_path() -> Path:
    return Path(str(resources.files("rashomon") / "data" / "meridian.json"))


def load_meridian() -> Scenario:
    return load_scenario(meridian_path())
