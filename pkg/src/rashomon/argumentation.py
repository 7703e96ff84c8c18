"""Abstract argumentation frameworks with grounded and preferred semantics.

Arguments are opaque string ids. In retrieval use each argument is the id of
the perspective that submitted a proposal, and each edge is an attack between
two proposals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator

Extension = frozenset  # frozenset[str]


class InvalidArgumentError(ValueError):
    """An argument id is not part of the framework."""


class ContractViolation(AssertionError):
    """A caller passed values that break an operation's precondition."""


class AFParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class AttackGraph:
    """Arguments plus directed attack edges.

    ``arguments`` keeps first-declared order; it only matters for
    serialization. All semantics are order independent.
    """

    arguments: tuple[str, ...] = ()
    edges: frozenset[tuple[str, str]] = frozenset()
    _attackers: dict[str, frozenset[str]] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        args = tuple(self.arguments)
        if len(set(args)) != len(args):
            raise ValueError("duplicate argument ids")
        if any(not a for a in args):
            raise ValueError("argument ids must be non-empty")
        edges = frozenset((str(a), str(b)) for a, b in self.edges)
        known = set(args)
        for a, b in edges:
            if a not in known or b not in known:
                raise InvalidArgumentError(f"edge ({a}, {b}) references an undeclared argument")
        object.__setattr__(self, "arguments", args)
        object.__setattr__(self, "edges", edges)
        attackers: dict[str, set[str]] = {a: set() for a in args}
        for a, b in edges:
            attackers[b].add(a)
        object.__setattr__(self, "_attackers", {k: frozenset(v) for k, v in attackers.items()})

    @classmethod
    def build(cls, arguments: Iterable[str], edges: Iterable[tuple[str, str]] = ()) -> AttackGraph:
        return cls(tuple(arguments), frozenset(edges))

    def __len__(self) -> int:
        return len(self.arguments)

    def __iter__(self) -> Iterator[str]:
        return iter(self.arguments)

    def __contains__(self, item: object) -> bool:
        return item in self._attackers

    def attackers_of(self, argument: str) -> frozenset[str]:
        self._check_members((argument,))
        return self._attackers[argument]

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(self.edges)

    def _check_members(self, members: Iterable[str]) -> None:
        unknown = sorted(m for m in members if m not in self._attackers)
        if unknown:
            raise InvalidArgumentError(f"not in framework: {', '.join(unknown)}")


class ModeKind(str, enum.Enum):
    SELECTION = "selection"
    COMPOSITION = "composition"
    SURFACING = "surfacing"


class CompositionDetail(str, enum.Enum):
    COMPLEMENTARY = "complementary"
    FILTERED = "filtered"


@dataclass(frozen=True)
class RetrievalMode:
    kind: ModeKind
    detail: CompositionDetail | None = None

    def __post_init__(self) -> None:
        if (self.kind is ModeKind.COMPOSITION) != (self.detail is not None):
            raise ValueError("composition modes carry a detail flag, other modes do not")

    def __str__(self) -> str:
        if self.detail is None:
            return self.kind.value
        return f"{self.kind.value}({self.detail.value})"


SELECTION = RetrievalMode(ModeKind.SELECTION)
SURFACING = RetrievalMode(ModeKind.SURFACING)
COMPOSITION_COMPLEMENTARY = RetrievalMode(ModeKind.COMPOSITION, CompositionDetail.COMPLEMENTARY)
COMPOSITION_FILTERED = RetrievalMode(ModeKind.COMPOSITION, CompositionDetail.FILTERED)


def is_conflict_free(graph: AttackGraph, s: Iterable[str]) -> bool:
    s = frozenset(s)
    graph._check_members(s)
    return not any(a in s and b in s for a, b in graph.edges)


def defends(graph: AttackGraph, s: Iterable[str], argument: str) -> bool:
    """True iff every attacker of ``argument`` is attacked by a member of ``s``."""
    s = frozenset(s)
    graph._check_members(s)
    return all(graph._attackers[b] & s for b in graph.attackers_of(argument))


def _defended_by(graph: AttackGraph, s: frozenset[str]) -> frozenset[str]:
    att = graph._attackers
    return frozenset(a for a in graph.arguments if all(att[b] & s for b in att[a]))


def grounded_extension(graph: AttackGraph) -> frozenset[str]:
    """Least fixed point of the defense operator.

    The first round admits every unattacked argument; each later round adds
    arguments whose attackers are all counterattacked by the current set.
    """
    current: frozenset[str] = frozenset()
    while True:
        nxt = _defended_by(graph, current)
        if nxt == current:
            return current
        current = nxt


def is_admissible(graph: AttackGraph, s: Iterable[str]) -> bool:
    s = frozenset(s)
    return is_conflict_free(graph, s) and all(defends(graph, s, a) for a in s)


def preferred_extensions(graph: AttackGraph) -> set[frozenset[str]]:
    """All maximal admissible sets, by search over conflict-free subsets.

    Exponential in the worst case; the argument count here is the number of
    participating perspectives.
    """
    args = list(graph.arguments)
    attacks = graph.edges
    admissible: list[frozenset[str]] = []

    def extend(i: int, chosen: list[str]) -> None:
        if i == len(args):
            s = frozenset(chosen)
            if all(defends(graph, s, a) for a in s):
                admissible.append(s)
            return
        a = args[i]
        if (a, a) not in attacks and not any(
            (a, c) in attacks or (c, a) in attacks for c in chosen
        ):
            chosen.append(a)
            extend(i + 1, chosen)
            chosen.pop()
        extend(i + 1, chosen)

    extend(0, [])
    return {s for s in admissible if not any(s < t for t in admissible)}


def classify_mode(graph: AttackGraph, grounded: Iterable[str], *, check: bool = True) -> RetrievalMode:
    grounded = frozenset(grounded)
    if not graph.arguments:
        raise ContractViolation("cannot classify an empty framework")
    if check and grounded != grounded_extension(graph):
        raise ContractViolation("supplied set is not the grounded extension of the graph")
    if grounded == frozenset(graph.arguments):
        # a lone surviving proposal has no alternatives to contrast against
        return COMPOSITION_COMPLEMENTARY
    if not grounded:
        return SURFACING
    if len(grounded) == 1:
        return SELECTION
    return COMPOSITION_FILTERED


def parse_af(text: str) -> AttackGraph:
    """Parse the line-oriented ``af <n>`` / ``att <a> <b>`` format."""
    lines = [
        (no, raw.split("#", 1)[0].strip())
        for no, raw in enumerate(text.splitlines(), start=1)
    ]
    lines = [(no, line) for no, line in lines if line]
    if not lines:
        raise AFParseError(1, "missing 'af <n>' header")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "af" or not parts[1].isdigit():
        raise AFParseError(no, f"expected 'af <n>', got {header!r}")
    n = int(parts[1])
    if len(lines) - 1 < n:
        raise AFParseError(lines[-1][0], f"header declares {n} arguments, found {len(lines) - 1}")
    arguments: list[str] = []
    seen: set[str] = set()
    for no, line in lines[1 : n + 1]:
        tokens = line.split()
        if len(tokens) != 1 or tokens[0] == "att":
            raise AFParseError(no, f"expected a single argument name, got {line!r}")
        if tokens[0] in seen:
            raise AFParseError(no, f"duplicate argument {tokens[0]!r}")
        seen.add(tokens[0])
        arguments.append(tokens[0])
    edges: set[tuple[str, str]] = set()
    for no, line in lines[n + 1 :]:
        tokens = line.split()
        if len(tokens) != 3 or tokens[0] != "att":
            raise AFParseError(no, f"expected 'att <attacker> <target>', got {line!r}")
        a, b = tokens[1], tokens[2]
        for name in (a, b):
            if name not in seen:
                raise AFParseError(no, f"undeclared argument {name!r}")
        if (a, b) in edges:
            raise AFParseError(no, f"duplicate attack {a} -> {b}")
        edges.add((a, b))
    return AttackGraph(tuple(arguments), frozenset(edges))


def serialize_af(graph: AttackGraph) -> str:
    out = [f"af {len(graph.arguments)}"]
    out.extend(graph.arguments)
    out.extend(f"att {a} {b}" for a, b in graph.sorted_edges())
    return "\n".join(out) + "\n"
