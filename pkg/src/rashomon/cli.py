"""Command-line driver: ``encode``, ``query``, ``replay`` and ``solve``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import artifacts
from .arbiter import EncodingReport, RashomonMemory, RetrievalOutcome
from .argumentation import AFParseError, InvalidArgumentError, grounded_extension, parse_af, preferred_extensions, serialize_af
from .buffer import Clock, LogicalClock
from .kgstore import serialize_turtle
from .scenario import BACKENDS, Scenario, ScenarioError, load_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _labels(memory: RashomonMemory) -> dict[str, str]:
    return {p.id: p.config.label for p in memory.perspectives}


def _setup(args) -> tuple[Scenario, RashomonMemory, Clock]:
    scenario = load_scenario(args.scenario)
    clock: Clock = LogicalClock() if args.logical_clock else Clock()
    return scenario, scenario.build_memory(backend=args.backend, clock=clock), clock


def _write_encoding(out: Path, memory: RashomonMemory, report: EncodingReport, clock: Clock) -> None:
    labels = _labels(memory)
    for p in memory.perspectives:
        artifacts.write_text(out / f"{p.id}.ttl", serialize_turtle(p.graph, include_tbox=True))
    doc = artifacts.report_to_dict(report, labels, generated_at=clock.now().isoformat())
    artifacts.write_text(out / "report.json", artifacts.dumps(doc))
    artifacts.write_text(out / "report.txt", artifacts.report_table(report, labels))


def _write_outcome(out: Path, memory: RashomonMemory, outcome: RetrievalOutcome) -> None:
    labels = _labels(memory)
    qid = outcome.ctx.id
    artifacts.write_text(out / f"{qid}.outcome.json", artifacts.dumps(artifacts.outcome_to_dict(outcome, labels)))
    artifacts.write_text(out / f"{qid}.af", serialize_af(outcome.graph))
    artifacts.write_text(out / f"{qid}.dot", artifacts.to_dot(outcome, labels))
    text = outcome.explanation.render(labels) if outcome.explanation else outcome.response["text"] + "\n"
    artifacts.write_text(out / f"{qid}.explanation.txt", text)


def _summary_line(outcome: RetrievalOutcome) -> str:
    mode = str(outcome.mode) if outcome.mode else "none"
    return f"mode: {mode}, grounded: {artifacts.braces(outcome.grounded, outcome.graph)}"


def cmd_encode(args) -> int:
    scenario, memory, clock = _setup(args)
    report = memory.encode(scenario.observations)
    print(artifacts.report_table(report, _labels(memory)), end="")
    if args.out:
        _write_encoding(Path(args.out), memory, report, clock)
    for (oid, pid), msg in sorted(report.errors.items()):
        print(f"error: {pid} on {oid}: {msg}", file=sys.stderr)
    return EXIT_FAIL if report.errors else EXIT_OK


def cmd_query(args) -> int:
    scenario, memory, clock = _setup(args)
    try:
        ctx = scenario.query(args.query)
    except KeyError:
        known = ", ".join(q.id for q in scenario.queries) or "none"
        print(f"error: unknown query {args.query!r} (known: {known})", file=sys.stderr)
        return EXIT_USAGE
    if not memory.perspectives:
        print("error: scenario declares no perspectives", file=sys.stderr)
        return EXIT_USAGE
    report = memory.encode(scenario.observations)
    outcome = memory.query(ctx)
    print(_summary_line(outcome))
    if outcome.preferred is not None:
        for ext in sorted(outcome.preferred, key=lambda e: artifacts.ordered(e, outcome.graph)):
            print(f"preferred: {artifacts.braces(ext, outcome.graph)}")
    if outcome.empty:
        print(outcome.response["message"])
    if args.out:
        out = Path(args.out)
        _write_encoding(out, memory, report, clock)
        _write_outcome(out, memory, outcome)
    return EXIT_OK


def replay_checks(scenario: Scenario, memory: RashomonMemory) -> tuple[list[tuple[str, bool, str]], EncodingReport, list[RetrievalOutcome]]:
    """Run the whole scenario and compare it against its goldens."""
    golden = scenario.expected
    checks: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        checks.append((name, ok, detail))

    before = memory.counter.snapshot()
    report = memory.encode(scenario.observations)
    after = memory.counter.snapshot()
    if golden.encoding is not None:
        got = report.pattern()
        diff = [f"{o}: expected {golden.encoding.get(o, [])} got {got.get(o, [])}" for o in sorted(set(got) | set(golden.encoding)) if sorted(got.get(o, [])) != sorted(golden.encoding.get(o, []))]
        check("encoding pattern", not diff, "; ".join(diff))
    for kind in ("relevance", "encode"):
        if kind in golden.invocations:
            n = after.get(kind, 0) - before.get(kind, 0)
            check(f"encoding {kind} calls", n == golden.invocations[kind], f"expected {golden.invocations[kind]} got {n}")
    check("encoding errors", not report.errors, "; ".join(f"{p} on {o}" for o, p in sorted(report.errors)))

    outcomes = []
    for ctx in scenario.queries:
        outcome = memory.query(ctx)
        outcomes.append(outcome)
        exp = golden.queries.get(ctx.id)
        if exp is None:
            continue
        graph = outcome.graph
        if exp.attacks is not None:
            got = set(graph.edges)
            check(
                f"{ctx.id} attacks",
                got == exp.attacks,
                f"missing {sorted(exp.attacks - got)} unexpected {sorted(got - exp.attacks)}",
            )
        if exp.grounded is not None:
            check(
                f"{ctx.id} grounded",
                outcome.grounded == exp.grounded,
                f"expected {sorted(exp.grounded)} got {sorted(outcome.grounded)}",
            )
        if exp.mode is not None:
            got_mode = str(outcome.mode) if outcome.mode else "none"
            ok = got_mode == exp.mode or got_mode.split("(")[0] == exp.mode
            check(f"{ctx.id} mode", ok, f"expected {exp.mode} got {got_mode}")
        if exp.preferred is not None:
            got_pref = outcome.preferred or set()
            check(
                f"{ctx.id} preferred",
                got_pref == exp.preferred,
                f"expected {sorted(map(sorted, exp.preferred))} got {sorted(map(sorted, got_pref))}",
            )
        if "per_query_max" in golden.invocations:
            calls = sum(outcome.invocations.values())
            limit = golden.invocations["per_query_max"]
            check(f"{ctx.id} agent calls", calls <= limit, f"{calls} > {limit}")
    return checks, report, outcomes


def cmd_replay(args) -> int:
    scenario, memory, clock = _setup(args)
    if scenario.expected is None:
        print(f"error: {args.scenario} has no 'expected' section to replay against", file=sys.stderr)
        return EXIT_USAGE
    checks, report, outcomes = replay_checks(scenario, memory)
    width = max((len(name) for name, _, _ in checks), default=0)
    for name, ok, detail in checks:
        line = f"{'PASS' if ok else 'FAIL'}  {name.ljust(width)}"
        if not ok and detail:
            line += f"  {detail}"
        print(line.rstrip())
    failed = [name for name, ok, _ in checks if not ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if args.out:
        out = Path(args.out)
        _write_encoding(out, memory, report, clock)
        for outcome in outcomes:
            _write_outcome(out, memory, outcome)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_solve(args) -> int:
    try:
        graph = parse_af(Path(args.af).read_text(encoding="utf-8"))
    except AFParseError as exc:
        print(f"error: {args.af}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except InvalidArgumentError as exc:
        print(f"error: {args.af}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.semantics == "grounded":
        extensions = [grounded_extension(graph)]
    else:
        extensions = sorted(preferred_extensions(graph), key=lambda e: sorted(e))
    for ext in extensions:
        print(" ".join(sorted(ext)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rashomon", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="directory for artifacts")
        p.add_argument("--logical-clock", action="store_true", help="use a deterministic clock for timestamps")
        p.add_argument("--backend", choices=BACKENDS, help="override every perspective's backend")

    p = sub.add_parser("encode", help="run one encoding cycle and report selectivity")
    scenario_args(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("query", help="encode, then answer one query")
    scenario_args(p)
    p.add_argument("--query", required=True, help="query id from the scenario")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("replay", help="run the whole scenario and diff it against its goldens")
    scenario_args(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("solve", help="print extensions of an AF file")
    p.add_argument("af", help="AF text file")
    p.add_argument("--semantics", choices=("grounded", "preferred"), default="grounded")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: scenario {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
