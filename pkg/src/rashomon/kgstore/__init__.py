"""Per-perspective knowledge graphs and the Turtle subset they persist to."""

from .graph import (
    DEFAULT_BUMP,
    DEFAULT_DECAY,
    Encoding,
    PerspectiveGraph,
    UndeclaredTermError,
    UnknownEncodingError,
    serialize_turtle,
)
from .tbox import (
    CycleError,
    DeclarationError,
    PropertyDef,
    TBox,
    TBoxError,
    merge_tbox,
    tbox_from_dict,
    tbox_to_dict,
)
from .terms import RDF_TYPE, Iri, Literal, Term, Triple, expand
from .turtle import TurtleParseError, parse_turtle, serialize_triples

__all__ = [
    "DEFAULT_BUMP",
    "DEFAULT_DECAY",
    "CycleError",
    "DeclarationError",
    "Encoding",
    "Iri",
    "Literal",
    "PerspectiveGraph",
    "PropertyDef",
    "RDF_TYPE",
    "TBox",
    "TBoxError",
    "Term",
    "Triple",
    "TurtleParseError",
    "UndeclaredTermError",
    "UnknownEncodingError",
    "expand",
    "merge_tbox",
    "tbox_from_dict",
    "tbox_to_dict",
    "parse_turtle",
    "serialize_triples",
    "serialize_turtle",
]
