"""Serialized forms of reports and outcomes: JSON documents, text tables, DOT."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .arbiter import EncodingReport, RetrievalOutcome
from .argumentation import AttackGraph

ACCEPTED_STYLE = 'style=filled fillcolor=lightblue'
DEFEATED_STYLE = 'style=filled fillcolor=gray85'


def ordered(members, graph: AttackGraph) -> list[str]:
    """Members of an extension in argument declaration order."""
    return [a for a in graph.arguments if a in members]


def braces(members, graph: AttackGraph) -> str:
    return "{" + ", ".join(ordered(members, graph)) + "}"


def report_to_dict(report: EncodingReport, labels: dict[str, str] | None = None, generated_at: str | None = None) -> dict[str, Any]:
    labels = labels or {}
    doc: dict[str, Any] = {}
    if generated_at is not None:
        doc["generated_at"] = generated_at
    doc["perspectives"] = [{"id": p, "label": labels.get(p, p)} for p in report.perspectives]
    doc["observations"] = list(report.observations)
    doc["matrix"] = {
        o: {
            p: {
                "status": r.status,
                "rationale": r.rationale,
                **({"encoding_id": r.encoding_id} if r.encoding_id else {}),
            }
            for p in report.perspectives
            for r in [report.matrix[(o, p)]]
        }
        for o in report.observations
    }
    doc["totals"] = {p: {"encoded": n, "of": len(report.observations)} for p, n in report.totals.items()}
    doc["total"] = {"encoded": report.total, "of": len(report.observations) * len(report.perspectives)}
    doc["errors"] = [{"observation": o, "perspective": p, "message": m} for (o, p), m in sorted(report.errors.items())]
    return doc


def report_table(report: EncodingReport, labels: dict[str, str] | None = None) -> str:
    """Check-mark table with one row per observation and a totals row."""
    labels = labels or {}
    marks = {"encoded": "✓", "skipped": "–", "error": "!"}
    heads = [labels.get(p, p) for p in report.perspectives]
    first = max([len("Observation"), len("Encoded / Total")] + [len(o) for o in report.observations])
    widths = [max(len(h), 5) for h in heads]
    rows = [["Observation"] + heads]
    for o in report.observations:
        rows.append([o] + [marks[report.matrix[(o, p)].status] for p in report.perspectives])
    n = len(report.observations)
    rows.append(["Encoded / Total"] + [f"{report.totals[p]}/{n}" for p in report.perspectives])
    lines = []
    for i, row in enumerate(rows):
        cells = [row[0].ljust(first)] + [c.center(w) for c, w in zip(row[1:], widths)]
        lines.append("  ".join(cells).rstrip())
        if i == 0 or i == len(rows) - 2:
            lines.append("  ".join(["-" * first] + ["-" * w for w in widths]))
    lines.append(f"{report.total} of {n * len(report.perspectives)} possible encodings")
    return "\n".join(lines) + "\n"


def outcome_to_dict(outcome: RetrievalOutcome, labels: dict[str, str] | None = None) -> dict[str, Any]:
    labels = labels or {}
    ctx = outcome.ctx
    graph = outcome.graph
    doc: dict[str, Any] = {
        "query": {
            "id": ctx.id,
            "text": ctx.query,
            "querier": ctx.querier,
            "decision_type": ctx.decision_type,
            "priorities": list(ctx.current_priorities),
        },
        "mode": str(outcome.mode) if outcome.mode else "none",
        "proposals": [
            {
                "perspective": p.perspective_id,
                "label": labels.get(p.perspective_id, p.perspective_id),
                "headline": p.headline,
                "interpretation": p.interpretation,
                "relevance_claim": p.relevance_claim,
                "supporting_encodings": list(p.supporting_encodings),
            }
            for p in outcome.proposals
        ],
        "attacks": [
            {"attacker": a.attacker, "target": a.target, "justification": a.justification}
            for a in sorted(outcome.attacks, key=lambda a: a.edge)
        ],
        "rejected_attacks": [
            {"attacker": r.attack.attacker, "target": r.attack.target, "reason": r.reason}
            for r in outcome.rejected_attacks
        ],
        "grounded": ordered(outcome.grounded, graph),
        "preferred": None
        if outcome.preferred is None
        else sorted((ordered(e, graph) for e in outcome.preferred), key=lambda e: [graph.arguments.index(a) for a in e]),
        "response": outcome.response,
        "explanation": None,
        "invocations": dict(outcome.invocations),
    }
    exp = outcome.explanation
    if exp is not None:
        doc["explanation"] = {
            "summary": exp.summary,
            "selected": [{"perspective": s.perspective_id, "interpretation": s.interpretation} for s in exp.selected],
            "rejected": [
                {
                    "perspective": r.perspective_id,
                    "interpretation": r.interpretation,
                    "counterattacked": r.counterattacked,
                    "grounds": [{"attacker": a.attacker, "justification": a.justification} for a in r.grounds],
                }
                for r in exp.rejected
            ],
        }
    return doc


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(outcome: RetrievalOutcome, labels: dict[str, str] | None = None) -> str:
    """Attack graph in DOT; grounded members are blue, defeated ones grey."""
    labels = labels or {}
    graph = outcome.graph
    name = outcome.ctx.id.replace('"', "")
    lines = [f'digraph "{name}" {{', "  rankdir=LR;", "  node [shape=box];"]
    for a in graph.arguments:
        style = ACCEPTED_STYLE if a in outcome.grounded else DEFEATED_STYLE
        lines.append(f"  {_dot_id(a)} [label={_dot_id(labels.get(a, a))} {style}];")
    for a, b in graph.sorted_edges():
        lines.append(f"  {_dot_id(a)} -> {_dot_id(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
