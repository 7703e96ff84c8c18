"""Retrieval arbitration: encoding cycles and the four-phase query protocol.

A query is broadcast to every perspective, proposals are collected, every
perspective critiques the others' proposals in one batched call, and the
resulting attack graph is resolved with grounded semantics. The retrieval
mode, the composed response and the explanation all follow from that graph.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence, TypeVar

from .argumentation import (
    AttackGraph,
    ContractViolation,
    ModeKind,
    RetrievalMode,
    classify_mode,
    grounded_extension,
    preferred_extensions,
)
from .buffer import Observation, ObservationBuffer
from .kgstore import DEFAULT_BUMP, DEFAULT_DECAY
from .perspective import (
    MIN_JUSTIFICATION,
    Attack,
    BackendError,
    InvocationCounter,
    Perspective,
    Proposal,
    QueryContext,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

NO_PROPOSALS = "no perspective found the query relevant"

_NUMBERS = ["Zero", "One", "Two", "Three", "Four", "Five", "Six", "Seven", "Eight", "Nine", "Ten"]


def _fan_out(perspectives: Sequence[Perspective], fn: Callable[[Perspective], T]) -> list[T]:
    """Run ``fn`` on every perspective concurrently; results keep input order."""
    if len(perspectives) <= 1:
        return [fn(p) for p in perspectives]
    with ThreadPoolExecutor(max_workers=len(perspectives)) as pool:
        return list(pool.map(fn, perspectives))


# -- encoding ---------------------------------------------------------------


@dataclass(frozen=True)
class PairResult:
    status: str  # "encoded", "skipped" or "error"
    rationale: str
    encoding_id: str | None = None


@dataclass
class EncodingReport:
    observations: list[str] = field(default_factory=list)
    perspectives: list[str] = field(default_factory=list)
    matrix: dict[tuple[str, str], PairResult] = field(default_factory=dict)

    def encoded(self, perspective_id: str) -> list[str]:
        return [o for o in self.observations if self.matrix[(o, perspective_id)].status == "encoded"]

    @property
    def totals(self) -> dict[str, int]:
        return {p: len(self.encoded(p)) for p in self.perspectives}

    @property
    def total(self) -> int:
        return sum(self.totals.values())

    @property
    def errors(self) -> dict[tuple[str, str], str]:
        return {k: v.rationale for k, v in self.matrix.items() if v.status == "error"}

    def pattern(self) -> dict[str, list[str]]:
        """Observation id -> perspectives that encoded it."""
        return {o: [p for p in self.perspectives if self.matrix[(o, p)].status == "encoded"] for o in self.observations}


def run_encoding_cycle(
    observations: Iterable[Observation],
    perspectives: Sequence[Perspective],
    buffer: ObservationBuffer,
) -> EncodingReport:
    """Stage ``observations`` and let every perspective filter and encode them.

    Each (observation, perspective) pair gets one relevance check; relevant
    pairs get one encode call. A failing pair is recorded as an error and the
    cycle moves on. Everything processed is acknowledged, then evicted.
    """
    unregistered = [p.id for p in perspectives if p.id not in buffer.perspectives]
    if unregistered:
        raise ContractViolation(f"perspectives not registered with the buffer: {unregistered}")
    for obs in observations:
        buffer.append(obs)

    def work(p: Perspective) -> list[tuple[str, PairResult]]:
        out = []
        for obs in buffer.pending_for(p.id):
            try:
                decision = p.assess_relevance(obs)
                if decision.relevant:
                    _, eid = p.encode(obs)
                    result = PairResult("encoded", decision.rationale, eid)
                else:
                    result = PairResult("skipped", decision.rationale)
            except Exception as exc:  # recorded per pair; the cycle continues
                logger.warning("%s failed on %s: %s", p.id, obs.id, exc)
                result = PairResult("error", f"{type(exc).__name__}: {exc}")
            buffer.acknowledge(p.id, obs.id)
            out.append((obs.id, result))
        return out

    pending_order = [e.observation.id for e in buffer.entries()]
    results = _fan_out(perspectives, work)
    report = EncodingReport(perspectives=[p.id for p in perspectives])
    seen = set()
    for p, pairs in zip(perspectives, results):
        for oid, result in pairs:
            report.matrix[(oid, p.id)] = result
            seen.add(oid)
    report.observations = [o for o in pending_order if o in seen]
    buffer.evict()
    return report


# -- query ------------------------------------------------------------------


@dataclass(frozen=True)
class RejectedAttack:
    attack: Attack
    reason: str


@dataclass(frozen=True)
class SelectedEntry:
    perspective_id: str
    interpretation: str


@dataclass(frozen=True)
class RejectedEntry:
    perspective_id: str
    interpretation: str
    grounds: tuple[Attack, ...]
    counterattacked: bool


@dataclass
class Explanation:
    summary: str
    selected: list[SelectedEntry]
    rejected: list[RejectedEntry]
    graph: AttackGraph

    def render(self, labels: dict[str, str] | None = None) -> str:
        labels = labels or {}
        lines = [self.summary]
        if self.rejected:
            lines.append("")
            lines.append("Challenged proposals:")
            for entry in self.rejected:
                name = labels.get(entry.perspective_id, entry.perspective_id)
                status = "counterattacked" if entry.counterattacked else "not counterattacked"
                lines.append(f"- {name} ({status}): {entry.interpretation}")
                for att in entry.grounds:
                    lines.append(f'    attacked by {labels.get(att.attacker, att.attacker)}: "{att.justification}"')
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CurationPolicy:
    bump: float = DEFAULT_BUMP
    decay: float = DEFAULT_DECAY
    decay_every: int = 1  # query rounds between decays


@dataclass
class RetrievalOutcome:
    ctx: QueryContext
    proposals: list[Proposal]
    attacks: list[Attack]
    graph: AttackGraph
    grounded: frozenset[str]
    preferred: set[frozenset[str]] | None
    mode: RetrievalMode | None
    response: dict[str, Any]
    explanation: Explanation | None
    rejected_attacks: list[RejectedAttack] = field(default_factory=list)
    invocations: dict[str, int] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.proposals


def _number(n: int) -> str:
    return _NUMBERS[n] if n < len(_NUMBERS) else str(n)


def _join(items: Sequence[str]) -> str:
    if len(items) <= 1:
        return "".join(items)
    return ", ".join(items[:-1]) + " and " + items[-1]


def _section(p: Proposal, labels: dict[str, str]) -> dict[str, Any]:
    return {
        "perspective": p.perspective_id,
        "label": labels.get(p.perspective_id, p.perspective_id),
        "interpretation": p.interpretation,
        "supporting_encodings": list(p.supporting_encodings),
    }


def compose_response(
    mode: RetrievalMode,
    surviving: Sequence[Proposal],
    proposals: Sequence[Proposal],
    preferred: Iterable[frozenset[str]] | None = None,
    labels: dict[str, str] | None = None,
) -> dict[str, Any]:
    """Shape the answer for ``mode`` without merging or rewording proposals.

    Sections follow the order of ``proposals``, which is perspective
    registration order.
    """
    labels = labels or {}
    alive = {p.perspective_id for p in surviving}
    if mode.kind is ModeKind.SELECTION:
        if len(surviving) != 1:
            raise ContractViolation("selection needs exactly one surviving proposal")
        primary = _section(surviving[0], labels)
        return {"mode": "selection", "primary": primary, "text": primary["interpretation"]}
    if mode.kind is ModeKind.COMPOSITION:
        if not surviving:
            raise ContractViolation("composition needs surviving proposals")
        sections = [_section(p, labels) for p in proposals if p.perspective_id in alive]
        return {
            "mode": "composition",
            "detail": mode.detail.value,
            "sections": sections,
            "set_aside": [p.perspective_id for p in proposals if p.perspective_id not in alive],
            "text": "\n\n".join(f"{s['label']}: {s['interpretation']}" for s in sections),
        }
    if surviving:
        raise ContractViolation("surfacing has no surviving proposal")
    sections = [_section(p, labels) for p in proposals]
    conflict = f"{_number(len(proposals))} strategic perspectives apply and they conflict."
    return {
        "mode": "surfacing",
        "conflict": conflict,
        "sections": sections,
        "preferred": sorted(sorted(e) for e in (preferred or ())),
        "text": "\n\n".join([conflict] + [f"{s['label']}: {s['interpretation']}" for s in sections]),
    }


def _quote(att: Attack, labels: dict[str, str]) -> str:
    text = att.justification.strip()
    end = "" if text[-1:] in ".!?" else "."
    return (
        f"{labels.get(att.attacker, att.attacker)} argued against "
        f'{labels.get(att.target, att.target)}: "{text}"{end}'
    )


def assemble_explanation(
    graph: AttackGraph,
    grounded: frozenset[str],
    mode: RetrievalMode,
    proposals: Sequence[Proposal],
    attacks: Sequence[Attack],
    labels: dict[str, str] | None = None,
    framings: dict[str, str] | None = None,
) -> Explanation:
    labels = labels or {}
    framings = framings or {}
    label = lambda pid: labels.get(pid, pid)  # noqa: E731
    framing = lambda pid: f"{label(pid)}'s {framings.get(pid, 'framing')}"  # noqa: E731
    edges = {a.edge for a in attacks}

    selected, rejected = [], []
    for p in proposals:
        pid = p.perspective_id
        if pid in grounded:
            selected.append(SelectedEntry(pid, p.interpretation))
            continue
        grounds = tuple(a for a in attacks if a.target == pid)
        if not grounds:
            raise ContractViolation(f"{pid} is outside the grounded extension but unattacked")
        counter = any((pid, a.attacker) in edges for a in grounds)
        rejected.append(RejectedEntry(pid, p.interpretation, grounds, counter))

    def counter_sentence() -> str:
        if not rejected:
            return ""
        quiet = [r for r in rejected if not r.counterattacked]
        if len(quiet) == len(rejected):
            if len(rejected) == 1:
                return f"{label(rejected[0].perspective_id)} did not counterattack."
            if len(rejected) == 2:
                return "Neither perspective counterattacked."
            return "None of these perspectives counterattacked."
        parts = []
        for r in rejected:
            if r.counterattacked:
                parts.append(f"{label(r.perspective_id)} counterattacked, but no surviving proposal defended it.")
            else:
                parts.append(f"{label(r.perspective_id)} did not counterattack.")
        return " ".join(parts)

    quotes = " ".join(_quote(a, labels) for r in rejected for a in r.grounds)
    by_id = {p.perspective_id: p for p in proposals}

    if mode.kind is ModeKind.SELECTION:
        winner = selected[0].perspective_id
        sentences = [
            f"This response is based on {label(winner)}'s assessment.",
            f"{_join([framing(r.perspective_id) for r in rejected])} "
            f"{'was' if len(rejected) == 1 else 'were'} also considered but set aside.",
            quotes,
            counter_sentence(),
        ]
    elif mode.kind is ModeKind.COMPOSITION and not rejected:
        if len(proposals) == 1:
            sentences = [f"Only {label(proposals[0].perspective_id)} proposed an interpretation, and it was not challenged."]
        else:
            sentences = [
                f"All {_number(len(proposals)).lower()} perspectives contributed.",
                "No proposal was challenged, so their contributions are presented side by side.",
            ]
    elif mode.kind is ModeKind.COMPOSITION:
        sentences = [
            f"This response composes the assessments of {_join([label(s.perspective_id) for s in selected])}.",
            f"{_join([framing(r.perspective_id) for r in rejected])} "
            f"{'was' if len(rejected) == 1 else 'were'} also considered but set aside.",
            quotes,
            counter_sentence(),
        ]
    else:
        n = len(proposals)
        all_pairs = all((a, b) in edges for a in graph.arguments for b in graph.arguments if a != b)
        sentences = [f"{_number(n)} strategic perspectives apply and they conflict."]
        for p in proposals:
            head = by_id[p.perspective_id].headline
            if head:
                sentences.append(f"{label(p.perspective_id)} recommends {head}.")
            else:
                sentences.append(f"{label(p.perspective_id)} proposes: {p.interpretation}")
        if all_pairs:
            sentences.append("Each perspective argued that the others' framing would misdirect the response.")
        else:
            sentences.append("Every framing was challenged by another perspective and none survived unchallenged.")
        sentences.append(
            "The system cannot recommend one framing over the others without knowing "
            "which strategic priority the team is currently optimizing for."
        )
        sentences.append(quotes)
    summary = " ".join(s for s in sentences if s)
    return Explanation(summary, selected, rejected, graph)


def validate_attacks(
    attacks: Iterable[Attack], proposers: Sequence[str], caller: str | None = None
) -> tuple[list[Attack], list[RejectedAttack]]:
    """Split attacks into accepted and rejected, logging each rejection."""
    live = set(proposers)
    accepted, rejected, seen = [], [], set()
    for att in attacks:
        reason = None
        if caller is not None and att.attacker != caller:
            reason = f"submitted by {caller} on behalf of {att.attacker}"
        elif att.attacker == att.target:
            reason = "self-attack"
        elif att.attacker not in live:
            reason = "attacker has no live proposal"
        elif att.target not in live:
            reason = "target has no live proposal"
        elif len(att.justification.strip()) < MIN_JUSTIFICATION:
            reason = f"justification shorter than {MIN_JUSTIFICATION} characters"
        elif att.edge in seen:
            reason = "duplicate attack"
        if reason:
            logger.warning("dropping attack %s -> %s: %s", att.attacker, att.target, reason)
            rejected.append(RejectedAttack(att, reason))
        else:
            seen.add(att.edge)
            accepted.append(att)
    return accepted, rejected


def verify_outcome(outcome: RetrievalOutcome) -> None:
    """Check the structural invariants that tie an outcome together."""
    if outcome.empty:
        if outcome.attacks or outcome.graph.arguments or outcome.mode is not None:
            raise ContractViolation("empty outcome carries a graph")
        return
    ids = [p.perspective_id for p in outcome.proposals]
    if list(outcome.graph.arguments) != ids:
        raise ContractViolation("graph arguments differ from proposers")
    if outcome.graph.edges != frozenset(a.edge for a in outcome.attacks):
        raise ContractViolation("graph edges differ from accepted attacks")
    if any(a == b for a, b in outcome.graph.edges):
        raise ContractViolation("self-attack in graph")
    if outcome.grounded != grounded_extension(outcome.graph):
        raise ContractViolation("grounded extension mismatch")
    if outcome.mode != classify_mode(outcome.graph, outcome.grounded):
        raise ContractViolation("mode mismatch")
    exp = outcome.explanation
    covered = [s.perspective_id for s in exp.selected] + [r.perspective_id for r in exp.rejected]
    if sorted(covered) != sorted(ids) or len(set(covered)) != len(covered):
        raise ContractViolation("explanation does not partition the proposals")
    if any(not r.grounds for r in exp.rejected):
        raise ContractViolation("rejected proposal without grounds")
    if outcome.mode.kind is ModeKind.SURFACING and exp.selected:
        raise ContractViolation("surfacing explanation selects a proposal")


def run_query(
    ctx: QueryContext,
    perspectives: Sequence[Perspective],
    *,
    counter: InvocationCounter | None = None,
) -> RetrievalOutcome:
    """Broadcast, propose, critique, resolve."""
    if not perspectives:
        raise ContractViolation("run_query needs at least one perspective")
    counter = counter or perspectives[0].counter
    before = counter.snapshot()
    labels = {p.id: p.config.label for p in perspectives}
    framings = {p.id: p.config.framing for p in perspectives}

    def propose(p: Perspective) -> Proposal | None:
        try:
            return p.propose(ctx)
        except BackendError as exc:
            logger.warning("%s abstains on %s after backend failure: %s", p.id, ctx.id, exc)
            return None

    proposals = [x for x in _fan_out(perspectives, propose) if x is not None]
    if not proposals:
        outcome = RetrievalOutcome(
            ctx, [], [], AttackGraph(), frozenset(), None, None,
            {"mode": "none", "message": NO_PROPOSALS, "text": NO_PROPOSALS}, None,
        )
        outcome.invocations = _delta(before, counter.snapshot())
        return outcome
    own = {p.perspective_id: p for p in proposals}
    proposers = [p.perspective_id for p in proposals]

    def critique(p: Perspective) -> tuple[list[Attack], list[RejectedAttack]]:
        if p.id not in own:
            return [], []  # abstainers have no standing to attack
        others = [x for x in proposals if x.perspective_id != p.id]
        try:
            submitted = p.critique(ctx, own.get(p.id), others)
        except BackendError as exc:
            logger.warning("%s submits no attacks on %s after backend failure: %s", p.id, ctx.id, exc)
            return [], []
        return validate_attacks(submitted, proposers, caller=p.id)

    attacks: list[Attack] = []
    dropped: list[RejectedAttack] = []
    for ok, bad in _fan_out(perspectives, critique):
        attacks.extend(ok)
        dropped.extend(bad)

    graph = AttackGraph.build(proposers, [a.edge for a in attacks])
    grounded = grounded_extension(graph)
    mode = classify_mode(graph, grounded)
    preferred = preferred_extensions(graph) if mode.kind is ModeKind.SURFACING else None
    surviving = [p for p in proposals if p.perspective_id in grounded]
    counter.add("assemble")
    response = compose_response(mode, surviving, proposals, preferred, labels)
    explanation = assemble_explanation(graph, grounded, mode, proposals, attacks, labels, framings)
    outcome = RetrievalOutcome(
        ctx, proposals, attacks, graph, grounded, preferred, mode, response, explanation, dropped
    )
    outcome.invocations = _delta(before, counter.snapshot())
    verify_outcome(outcome)
    return outcome


def _delta(before: dict[str, int], after: dict[str, int]) -> dict[str, int]:
    return {k: after[k] - before.get(k, 0) for k in sorted(after) if after[k] - before.get(k, 0)}


class RashomonMemory:
    """Buffer, perspectives and curation policy wired together."""

    def __init__(
        self,
        perspectives: Sequence[Perspective],
        buffer: ObservationBuffer | None = None,
        curation: CurationPolicy | None = None,
        counter: InvocationCounter | None = None,
    ):
        ids = [p.id for p in perspectives]
        if len(set(ids)) != len(ids):
            raise ValueError("perspective ids must be unique")
        self.counter = counter or InvocationCounter()
        self.perspectives = list(perspectives)
        for p in self.perspectives:
            p.counter = self.counter
        self.buffer = buffer or ObservationBuffer()
        for p in self.perspectives:
            self.buffer.register(p.id)
        self.curation = curation or CurationPolicy()
        self.rounds = 0

    def perspective(self, perspective_id: str) -> Perspective:
        for p in self.perspectives:
            if p.id == perspective_id:
                return p
        raise KeyError(perspective_id)

    def encode(self, observations: Iterable[Observation]) -> EncodingReport:
        return run_encoding_cycle(observations, self.perspectives, self.buffer)

    def query(self, ctx: QueryContext) -> RetrievalOutcome:
        outcome = run_query(ctx, self.perspectives, counter=self.counter)
        self._curate(outcome)
        return outcome

    def _curate(self, outcome: RetrievalOutcome) -> None:
        self.rounds += 1
        for p in outcome.proposals:
            if p.perspective_id in outcome.grounded:
                self.perspective(p.perspective_id).graph.record_retrieval(
                    p.supporting_encodings, self.curation.bump
                )
        if self.curation.decay_every and self.rounds % self.curation.decay_every == 0:
            for p in self.perspectives:
                p.graph.decay_weights(self.curation.decay)
