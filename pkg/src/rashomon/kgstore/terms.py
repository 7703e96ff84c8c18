from __future__ import annotations

from dataclasses import dataclass
from typing import Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise ValueError("IRI must be non-empty")

    def __str__(self) -> str:
        return self.value


RDF_TYPE = Iri(RDF + "type")
RDF_PROPERTY = Iri(RDF + "Property")
RDF_LANGSTRING = Iri(RDF + "langString")
RDFS_LABEL = Iri(RDFS + "label")
RDFS_COMMENT = Iri(RDFS + "comment")
RDFS_SUBCLASS_OF = Iri(RDFS + "subClassOf")
RDFS_DOMAIN = Iri(RDFS + "domain")
RDFS_RANGE = Iri(RDFS + "range")
OWL_CLASS = Iri(OWL + "Class")
XSD_STRING = Iri(XSD + "string")
XSD_INTEGER = Iri(XSD + "integer")
XSD_DECIMAL = Iri(XSD + "decimal")
XSD_BOOLEAN = Iri(XSD + "boolean")

# predicates usable without a TBox declaration
BUILTIN_PREDICATES = frozenset({RDF_TYPE, RDFS_LABEL, RDFS_COMMENT})


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: Iri = XSD_STRING
    language: str | None = None

    def __post_init__(self) -> None:
        if self.language is not None:
            if not self.language:
                raise ValueError("empty language tag")
            object.__setattr__(self, "language", self.language.lower())
            object.__setattr__(self, "datatype", RDF_LANGSTRING)
        elif self.datatype == RDF_LANGSTRING:
            raise ValueError("rdf:langString literal needs a language tag")

    @classmethod
    def of(cls, value: str | int | float | bool) -> Literal:
        if isinstance(value, bool):
            return cls("true" if value else "false", XSD_BOOLEAN)
        if isinstance(value, int):
            return cls(str(value), XSD_INTEGER)
        if isinstance(value, float):
            return cls(repr(value), XSD_DECIMAL)
        return cls(value)

    def __str__(self) -> str:
        return self.lexical


Term = Union[Iri, Literal]


def term_key(term: Term) -> tuple:
    if isinstance(term, Iri):
        return (0, term.value, "", "")
    return (1, term.lexical, term.datatype.value, term.language or "")


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.subject, Iri) or not isinstance(self.predicate, Iri):
            raise TypeError("subject and predicate must be IRIs")
        if not isinstance(self.object, (Iri, Literal)):
            raise TypeError("object must be an IRI or a literal")

    def sort_key(self) -> tuple:
        return (self.subject.value, self.predicate.value, term_key(self.object))


def expand(name: str, prefixes: dict[str, str]) -> Iri:
    """Resolve ``pfx:local`` or ``<absolute>`` against ``prefixes``."""
    if name.startswith("<") and name.endswith(">"):
        return Iri(name[1:-1])
    if name == "a":
        return RDF_TYPE
    pfx, sep, local = name.partition(":")
    if not sep:
        raise KeyError(f"not a prefixed name: {name!r}")
    if pfx not in prefixes:
        raise KeyError(f"undeclared prefix {pfx!r} in {name!r}")
    return Iri(prefixes[pfx] + local)
