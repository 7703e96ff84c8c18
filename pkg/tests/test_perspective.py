import threading

import pytest

from rashomon.buffer import Observation
from rashomon.kgstore import RDF_TYPE, Iri, TBox, parse_turtle
from rashomon.perspective import (
    BackendError,
    CritiqueRule,
    EncodingRule,
    ExternalBackend,
    FixtureGapError,
    InvocationCounter,
    Perspective,
    PerspectiveConfig,
    Proposal,
    ProposalRule,
    QueryContext,
    RuleBackend,
    RuleSet,
    TaskTrace,
    tokens,
)
from rashomon.scenario import load_meridian

from .helpers import EX, PREFIXES, T0, encoded, observation, seed_tbox, toy_perspective

Q = QueryContext("q", "what now?", decision_type="planning")


@pytest.fixture(scope="module")
def meridian():
    return load_meridian()


def meridian_agent(scenario, pid, backend=None):
    config = next(c for c in scenario.configs(backend) if c.id == pid)
    return Perspective(config, scenario.prefixes)


def test_scripted_relevance_and_encode(meridian):
    rel = meridian_agent(meridian, "rel")
    obs2 = meridian.observations[1]
    decision = rel.assess_relevance(obs2)
    assert decision.relevant and decision.rationale
    result, eid = rel.encode(obs2)
    assert eid == "rel/obs-2/0"
    levels = {t.object.lexical for t in rel.graph.match(predicate=Iri(PREFIXES_REL + "hasTrustLevel"))}
    assert levels == {"guarded"}
    assert rel.counter.snapshot() == {"encode": 1, "relevance": 1}


PREFIXES_REL = "http://example.org/rashomon/relationship#"


def test_scripted_skip_is_not_encodable(meridian):
    risk = meridian_agent(meridian, "risk")
    obs1 = meridian.observations[0]
    assert not risk.assess_relevance(obs1).relevant
    with pytest.raises(FixtureGapError):
        risk.encode(obs1)


def test_fixture_gap_names_the_missing_key():
    agent = toy_perspective("a", ("o1",))
    with pytest.raises(FixtureGapError, match="o9"):
        agent.assess_relevance(observation("o9"))


def test_propose_abstains_on_empty_graph_without_a_call():
    agent = toy_perspective("a", ("o1",), {"q": []})
    assert agent.propose(Q) is None
    assert agent.counter.total() == 0


def test_propose_resolves_evidence_to_encodings():
    agent = toy_perspective("a", ("o1",), {"q": []})
    encoded([agent])
    prop = agent.propose(Q)
    assert prop.supporting_encodings == ("a/o1/0",)
    assert prop.headline == "a plan"


def test_propose_citing_unencoded_observation_fails():
    agent = toy_perspective("a", ("o1", "o2"), {"q": []})
    agent.encode(observation("o2"))
    with pytest.raises(FixtureGapError, match="o1"):
        agent.propose(Q)


def test_critique_without_others_skips_the_call():
    agent = toy_perspective("a", ("o1",), {"q": ["b"]})
    own = Proposal("a", "x", "y", ("a/o1/0",))
    assert agent.critique(Q, own, [own]) == []
    assert agent.counter["critique"] == 0


def test_critique_is_one_batched_call():
    agent = toy_perspective("a", ("o1",), {"q": ["b", "c"]})
    others = [Proposal(p, "x", "y", (f"{p}/o1/0",)) for p in "bc"]
    attacks = agent.critique(Q, None, others)
    assert [a.edge for a in attacks] == [("a", "b"), ("a", "c")]
    assert agent.counter["critique"] == 1


def test_task_trace_splits_typing_taxonomy_and_relations(meridian):
    rel = meridian_agent(meridian, "rel")
    result, _ = rel.encode(meridian.observations[1])
    trace = result.task_trace
    assert [t.object.value for t in trace.term_typing] == [PREFIXES_REL + "TrustSignal"]
    assert trace.taxonomy == ((PREFIXES_REL + "TrustSignal", PREFIXES_REL + "RelationshipEvent"),)
    assert len(trace.relations) == 3
    for t in result.triples:
        assert trace.task_of(t) == ("A" if t.predicate == RDF_TYPE else "C")


def test_task_trace_rejects_foreign_triple():
    trace = TaskTrace.derive(TBox(), frozenset())
    _, ts = parse_turtle("ex:x a ex:Event .", PREFIXES)
    with pytest.raises(KeyError):
        trace.task_of(next(iter(ts)))


def test_tokens_keep_hyphenated_words():
    assert tokens("Tier-2 clients' PRICING, 15%") == {"tier-2", "clients", "pricing", "15"}


def rule_agent(rules):
    config = PerspectiveConfig("r", "Rules", "goal", seed_tbox(), RuleBackend(rules))
    return Perspective(config, PREFIXES)


def test_rule_relevance_rationale_lists_hits():
    agent = rule_agent(RuleSet(frozenset({"audit", "legal"})))
    yes = agent.assess_relevance(Observation("o", T0, "Legal asked the audit team", {}))
    assert yes.relevant and "audit, legal" in yes.rationale
    assert not agent.assess_relevance(Observation("o", T0, "lunch was good", {})).relevant


def test_rule_encoding_uses_fallback_only_when_nothing_fires():
    rules = RuleSet(
        frozenset({"x"}),
        [
            EncodingRule(frozenset({"audit"}), 'ex:{obs} a ex:Event ; ex:note "audit" .'),
            EncodingRule(frozenset(), 'ex:{obs} a ex:Event ; ex:note "generic" .'),
        ],
    )
    agent = rule_agent(rules)
    agent.encode(Observation("o1", T0, "the audit", {}))
    agent.encode(Observation("o2", T0, "other", {}))
    notes = {t.subject.value.rsplit("#")[-1]: t.object.lexical for t in agent.graph.match(predicate=Iri(EX + "note"))}
    assert notes == {"o1": "audit", "o2": "generic"}


def test_rule_encoding_without_any_rule_is_an_error():
    agent = rule_agent(RuleSet(frozenset({"x"})))
    with pytest.raises(BackendError):
        agent.encode(Observation("o1", T0, "x", {}))


def test_rule_proposal_abstains_without_evidence():
    rule = ProposalRule(frozenset({"planning"}), frozenset(), "i", "c", frozenset({Iri(EX + "Missing")}))
    agent = rule_agent(RuleSet(frozenset(), [EncodingRule(frozenset(), "ex:{obs} a ex:Event .")], [rule]))
    agent.encode(observation("o1"))
    assert agent.propose(Q) is None
    hit = ProposalRule(frozenset(), frozenset({"now"}), "i", "c", frozenset({Iri(EX + "Event")}))
    agent.backend.rules.proposal_rules.insert(0, hit)
    assert agent.propose(Q).supporting_encodings == ("r/o1/0",)


def test_rule_critique_only_targets_live_proposals():
    rules = RuleSet(
        frozenset(),
        critique_rules=[
            CritiqueRule(frozenset({"planning"}), "b", "b ignores the budget entirely"),
            CritiqueRule(frozenset({"planning"}), "c", "c ignores the budget entirely"),
            CritiqueRule(frozenset({"review"}), "b", "wrong decision type for this rule"),
        ],
    )
    agent = rule_agent(rules)
    attacks = agent.critique(Q, None, [Proposal("b", "x", "y", ("b/o/0",))])
    assert [a.edge for a in attacks] == [("r", "b")]


def test_rule_backend_reproduces_the_scripted_encoding_pattern(meridian):
    # rules are tuned to agree with the recorded relevance decisions
    for pid in ("rel", "risk", "fin"):
        scripted = meridian_agent(meridian, pid)
        rules = meridian_agent(meridian, pid, "rule_based")
        for obs in meridian.observations:
            assert scripted.assess_relevance(obs).relevant == rules.assess_relevance(obs).relevant, (pid, obs.id)


class FakeTransport:
    def __init__(self, *responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, endpoint, request, timeout):
        self.requests.append(request)
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def external_agent(transport, retries=1):
    backend = ExternalBackend("http://service.invalid/v1", transport=transport, retries=retries)
    config = PerspectiveConfig("ext", "External", "be useful", seed_tbox(), backend)
    return Perspective(config, PREFIXES)


def test_external_request_shape_and_relevance():
    fake = FakeTransport({"relevant": True, "rationale": "mentions events"})
    agent = external_agent(fake)
    assert agent.assess_relevance(observation("o1")).relevant
    req = fake.requests[0]
    assert set(req) == {"role", "task", "payload", "schema", "temperature"}
    assert req["temperature"] == 0 and req["task"] == "relevance"
    assert "be useful" in req["role"]


def test_external_encode_parses_structured_triples():
    fake = FakeTransport(
        {
            "tbox_delta": {"classes": {"ex:Audit": "Audit"}, "subclass_of": [["ex:Audit", "ex:Event"]]},
            "triples": [
                {"subject": "ex:o1", "predicate": "rdf:type", "object": "ex:Audit"},
                {"subject": "ex:o1", "predicate": "ex:note", "literal": "flagged"},
            ],
        }
    )
    agent = external_agent(fake)
    # rdf is not in the table, so the full IRI path is exercised too
    fake.responses[0]["triples"][0]["predicate"] = RDF_TYPE.value
    result, eid = agent.encode(observation("o1"))
    assert eid == "ext/o1/0"
    assert Iri(EX + "Audit") in agent.graph.tbox.classes
    assert len(result.triples) == 2


def test_external_retries_once_then_fails_on_schema_violation():
    fake = FakeTransport({"relevant": "yes"}, {"nope": 1})
    agent = external_agent(fake)
    with pytest.raises(BackendError, match="2 attempts"):
        agent.assess_relevance(observation("o1"))
    assert len(fake.requests) == 2


def test_external_recovers_on_retry_after_timeout():
    fake = FakeTransport(TimeoutError("slow"), {"relevant": False, "rationale": "off topic"})
    assert not external_agent(fake).assess_relevance(observation("o1")).relevant


def test_external_timeout_twice_is_backend_error():
    fake = FakeTransport(TimeoutError("slow"), TimeoutError("slow"))
    with pytest.raises(BackendError):
        external_agent(fake).assess_relevance(observation("o1"))


def test_external_propose_abstain_and_critique():
    agent = external_agent(
        FakeTransport(
            {"relevant": True, "rationale": "r"},
            {"tbox_delta": {}, "triples": [{"subject": "ex:o1", "predicate": "ex:note", "literal": "n"}]},
            {"abstain": True},
            {"abstain": False, "interpretation": "i", "relevance_claim": "c", "supporting_encodings": ["ext/o1/0"]},
            {"attacks": [{"target": "b", "justification": "b reads the wrong signal here"}]},
        )
    )
    agent.assess_relevance(observation("o1"))
    agent.encode(observation("o1"))
    assert agent.propose(Q) is None
    assert agent.propose(Q).supporting_encodings == ("ext/o1/0",)
    attacks = agent.critique(Q, None, [Proposal("b", "x", "y", ("b/o/0",))])
    assert attacks[0].edge == ("ext", "b")


def test_external_proposal_citing_unknown_encoding_is_rejected():
    agent = external_agent(
        FakeTransport(
            {"tbox_delta": {}, "triples": [{"subject": "ex:o1", "predicate": "ex:note", "literal": "n"}]},
            {"abstain": False, "interpretation": "i", "relevance_claim": "c", "supporting_encodings": ["ghost"]},
        )
    )
    agent.encode(observation("o1"))
    with pytest.raises(BackendError, match="ghost"):
        agent.propose(Q)


def test_invocation_counter_is_thread_safe():
    counter = InvocationCounter()

    def bump():
        for _ in range(1000):
            counter.add("x")

    threads = [threading.Thread(target=bump) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert counter["x"] == 8000 and counter.total() == 8000
    counter.reset()
    assert counter.snapshot() == {}


def test_query_context_rejects_blank_query():
    with pytest.raises(ValueError):
        QueryContext("q", "   ")
