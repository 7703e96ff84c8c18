"""Parser and serializer for the Turtle subset used by perspective graphs.

Supported: ``@prefix`` directives, prefixed names, ``<absolute>`` IRIs,
double-quoted single-line strings with language tags or ``^^`` datatypes,
integer/decimal/boolean literals, ``a``, and ``;`` / ``,`` abbreviations.
Blank nodes, collections, long strings and ``@base`` are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Iterator

from .terms import (
    RDF_TYPE,
    XSD,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_INTEGER,
    XSD_STRING,
    Iri,
    Literal,
    Term,
    Triple,
)


class TurtleParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


PREFIX_RE = r"(?:[A-Za-z][A-Za-z0-9_-]*)?"
LOCAL_RE = r"(?:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?"
_LOCAL_SAFE = re.compile(r"[A-Za-z0-9_](?:[A-Za-z0-9_-]*)|")
_INTEGER = re.compile(r"[+-]?[0-9]+")
_DECIMAL = re.compile(r"[+-]?[0-9]*\.[0-9]+")

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<unterminated>")
  | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<decimal>[+-]?[0-9]*\.[0-9]+)
  | (?P<integer>[+-]?[0-9]+)
  | (?P<pname>"""
    + PREFIX_RE
    + ":"
    + LOCAL_RE
    + r""")
  | (?P<word>[A-Za-z_]+)
  | (?P<caret>\^\^)
  | (?P<punct>[.;,])
    """,
    re.VERBOSE,
)

_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", '"': '"', "'": "'", "\\": "\\"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> Iterator[_Tok]:
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise TurtleParseError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind == "unterminated":
            raise TurtleParseError(line, col, "unterminated string literal")
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            yield _Tok(kind, m.group(), line, col)
        pos = m.end()


def _unescape(body: str, tok: _Tok) -> str:
    out, i = [], 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt == "u" and re.fullmatch(r"[0-9A-Fa-f]{4}", body[i + 2 : i + 6]):
            out.append(chr(int(body[i + 2 : i + 6], 16)))
            i += 6
        else:
            raise TurtleParseError(tok.line, tok.col + i + 1, f"bad escape \\{nxt}")
    return "".join(out)


class _Parser:
    def __init__(self, text: str, prefixes: dict[str, str] | None):
        self.toks = list(_tokenize(text))
        self.i = 0
        self.prefixes: dict[str, str] = dict(prefixes or {})
        self.triples: list[Triple] = []

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, what: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else _Tok("", "", 1, 0)
            raise TurtleParseError(last.line, last.col + len(last.text), f"unexpected end of input, expected {what}")
        self.i += 1
        return tok

    def expect_punct(self, ch: str) -> None:
        tok = self.next(repr(ch))
        if tok.text != ch:
            raise TurtleParseError(tok.line, tok.col, f"expected {ch!r}, got {tok.text!r}")

    def parse(self) -> None:
        while self.peek() is not None:
            tok = self.peek()
            if tok.kind == "langtag" and tok.text == "@prefix":
                self.directive()
            elif tok.kind == "langtag":
                raise TurtleParseError(tok.line, tok.col, f"unsupported directive {tok.text}")
            else:
                self.statement()

    def directive(self) -> None:
        self.next("@prefix")
        name = self.next("prefix name")
        if name.kind != "pname" or not name.text.endswith(":") or name.text.count(":") != 1:
            raise TurtleParseError(name.line, name.col, f"bad prefix name {name.text!r}")
        iri = self.next("namespace IRI")
        if iri.kind != "iri":
            raise TurtleParseError(iri.line, iri.col, "namespace must be an <IRI>")
        self.prefixes[name.text[:-1]] = iri.text[1:-1]
        self.expect_punct(".")

    def iri(self, tok: _Tok) -> Iri:
        if tok.kind == "iri":
            if not tok.text[1:-1]:
                raise TurtleParseError(tok.line, tok.col, "empty IRI")
            return Iri(tok.text[1:-1])
        if tok.kind == "pname":
            pfx, _, local = tok.text.partition(":")
            if pfx not in self.prefixes:
                raise TurtleParseError(tok.line, tok.col, f"unknown prefix {pfx + ':'!r}")
            return Iri(self.prefixes[pfx] + local)
        raise TurtleParseError(tok.line, tok.col, f"expected an IRI, got {tok.text!r}")

    def statement(self) -> None:
        subject = self.iri(self.next("subject"))
        while True:
            verb_tok = self.next("predicate")
            predicate = RDF_TYPE if (verb_tok.kind == "word" and verb_tok.text == "a") else self.iri(verb_tok)
            while True:
                self.triples.append(Triple(subject, predicate, self.object()))
                tok = self.next("',', ';' or '.'")
                if tok.text == ",":
                    continue
                break
            if tok.text == ";":
                # trailing ';' before '.' is legal
                nxt = self.peek()
                if nxt is not None and nxt.text == ".":
                    self.i += 1
                    return
                continue
            if tok.text == ".":
                return
            raise TurtleParseError(tok.line, tok.col, f"expected ',', ';' or '.', got {tok.text!r}")

    def object(self) -> Term:
        tok = self.next("object")
        if tok.kind in ("iri", "pname"):
            return self.iri(tok)
        if tok.kind == "integer":
            return Literal(tok.text, XSD_INTEGER)
        if tok.kind == "decimal":
            return Literal(tok.text, XSD_DECIMAL)
        if tok.kind == "word" and tok.text in ("true", "false"):
            return Literal(tok.text, XSD_BOOLEAN)
        if tok.kind == "string":
            lexical = _unescape(tok.text[1:-1], tok)
            nxt = self.peek()
            if nxt is not None and nxt.kind == "langtag" and nxt.text != "@prefix":
                self.i += 1
                return Literal(lexical, language=nxt.text[1:])
            if nxt is not None and nxt.kind == "caret":
                self.i += 1
                return Literal(lexical, self.iri(self.next("datatype IRI")))
            return Literal(lexical)
        raise TurtleParseError(tok.line, tok.col, f"expected an object term, got {tok.text!r}")


def parse_turtle(text: str, prefixes: dict[str, str] | None = None) -> tuple[dict[str, str], set[Triple]]:
    """Parse a document into ``(prefixes, triples)``.

    ``prefixes`` pre-seeds the prefix table, which lets fixture snippets omit
    their ``@prefix`` header. The returned table includes both.
    """
    parser = _Parser(text, prefixes)
    parser.parse()
    return parser.prefixes, set(parser.triples)


def _escape(s: str) -> str:
    return (
        s.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


class _Namer:
    def __init__(self, prefixes: dict[str, str]):
        # longest namespace first so the most specific prefix wins
        self.ns = sorted(prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    def __call__(self, iri: Iri) -> str:
        for pfx, base in self.ns:
            if iri.value.startswith(base):
                local = iri.value[len(base) :]
                if _LOCAL_SAFE.fullmatch(local):
                    return f"{pfx}:{local}"
        return f"<{iri.value}>"


def _literal(lit: Literal, name: _Namer) -> str:
    if lit.language is not None:
        return f'"{_escape(lit.lexical)}"@{lit.language}'
    dt = lit.datatype
    if dt == XSD_INTEGER and _INTEGER.fullmatch(lit.lexical):
        return lit.lexical
    if dt == XSD_DECIMAL and _DECIMAL.fullmatch(lit.lexical):
        return lit.lexical
    if dt == XSD_BOOLEAN and lit.lexical in ("true", "false"):
        return lit.lexical
    if dt == XSD_STRING:
        return f'"{_escape(lit.lexical)}"'
    return f'"{_escape(lit.lexical)}"^^{name(dt)}'


def serialize_triples(prefixes: dict[str, str], triples: Iterable[Triple]) -> str:
    """Deterministic Turtle: prefixes by name, triples sorted by (s, p, o)."""
    name = _Namer(prefixes)

    def obj(t: Term) -> str:
        return name(t) if isinstance(t, Iri) else _literal(t, name)

    lines = [f"@prefix {pfx}: <{base}> ." for pfx, base in sorted(prefixes.items())]
    ordered = sorted(set(triples), key=Triple.sort_key)
    if lines and ordered:
        lines.append("")
    for subject, by_subject in groupby(ordered, key=lambda t: t.subject):
        groups = [
            (pred, [obj(t.object) for t in ts])
            for pred, ts in groupby(by_subject, key=lambda t: t.predicate)
        ]
        parts = []
        for pred, objects in groups:
            verb = "a" if pred == RDF_TYPE else name(pred)
            parts.append(f"{verb} {' , '.join(objects)}")
        lines.append(f"{name(subject)} " + " ;\n    ".join(parts) + " .")
    return "\n".join(lines) + "\n"


__all__ = ["TurtleParseError", "parse_turtle", "serialize_triples", "XSD"]
