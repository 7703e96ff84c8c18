"""Small builders for hand-made perspectives used across test modules."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from rashomon.buffer import Observation
from rashomon.kgstore import TBox, parse_turtle, tbox_from_dict
from rashomon.perspective import (
    Perspective,
    PerspectiveConfig,
    ScriptedBackend,
    ScriptedEncoding,
    ScriptedFixture,
    ScriptedProposal,
    ScriptedRound,
)

EX = "http://example.org/toy#"
PREFIXES = {"ex": EX, "xsd": "http://www.w3.org/2001/XMLSchema#"}
SEED = {"classes": {"ex:Event": "Event"}, "properties": {"ex:note": {"domain": "ex:Event", "range": "xsd:string"}}}
T0 = datetime(2025, 1, 1, tzinfo=timezone.utc)
JUST = "this framing misreads what the question is asking"


def observation(oid: str, n: int = 0, content: str = "something happened") -> Observation:
    return Observation(oid, T0 + timedelta(hours=n), content, {})


def seed_tbox() -> TBox:
    return tbox_from_dict(SEED, PREFIXES)


def encoding(oid: str, note: str = "seen") -> ScriptedEncoding:
    _, triples = parse_turtle(f'ex:{oid} a ex:Event ; ex:note "{note}" .', PREFIXES)
    return ScriptedEncoding(True, f"relevant: {note}", TBox(), frozenset(triples))


def toy_perspective(pid, observations=("o1",), rounds=None, skip=()) -> Perspective:
    """Scripted agent that encodes ``observations`` and plays ``rounds``.

    ``rounds`` maps query id to either None (abstain) or a list of attack
    targets; attacks use a stock justification.
    """
    fixture = ScriptedFixture()
    for oid in observations:
        fixture.observations[oid] = encoding(oid, pid)
    for oid in skip:
        fixture.observations[oid] = ScriptedEncoding(False, f"{pid} does not care about {oid}")
    for qid, targets in (rounds or {}).items():
        if targets is None:
            fixture.queries[qid] = ScriptedRound(None)
        else:
            prop = ScriptedProposal(f"{pid} reading of {qid}", f"{pid} has evidence", tuple(observations[:1]), f"{pid} plan")
            fixture.queries[qid] = ScriptedRound(prop, tuple((t, f"{pid}: {JUST}") for t in targets))
    config = PerspectiveConfig(pid, pid.upper(), f"goal of {pid}", seed_tbox(), ScriptedBackend(fixture))
    return Perspective(config, PREFIXES)


def encoded(perspectives, observations=("o1",)):
    """Run each agent's encode step directly, bypassing the buffer."""
    for p in perspectives:
        for i, oid in enumerate(observations):
            p.encode(observation(oid, i))
    return perspectives
