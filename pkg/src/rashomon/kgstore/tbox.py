from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    OWL_CLASS,
    RDF_PROPERTY,
    RDF_TYPE,
    RDFS_DOMAIN,
    RDFS_LABEL,
    RDFS_RANGE,
    RDFS_SUBCLASS_OF,
    Iri,
    Literal,
    Triple,
    expand,
)


class TBoxError(ValueError):
    pass


class CycleError(TBoxError):
    def __init__(self, edge: tuple[Iri, Iri]):
        super().__init__(f"subclass edge {edge[0]} -> {edge[1]} would create a cycle")
        self.edge = edge


class DeclarationError(TBoxError):
    pass


@dataclass(frozen=True)
class PropertyDef:
    domain: Iri
    range: Iri


@dataclass
class TBox:
    """Class hierarchy and property signatures of one perspective.

    Also used as an update delta: a delta lists the classes, edges and
    properties it introduces or restates.
    """

    classes: dict[Iri, str] = field(default_factory=dict)
    subclass_edges: set[tuple[Iri, Iri]] = field(default_factory=set)
    properties: dict[Iri, PropertyDef] = field(default_factory=dict)

    def copy(self) -> TBox:
        return TBox(dict(self.classes), set(self.subclass_edges), dict(self.properties))

    def is_empty(self) -> bool:
        return not (self.classes or self.subclass_edges or self.properties)

    def parents(self, cls: Iri) -> set[Iri]:
        return {p for c, p in self.subclass_edges if c == cls}

    def ancestors(self, cls: Iri) -> set[Iri]:
        seen: set[Iri] = set()
        stack = [cls]
        while stack:
            for p in self.parents(stack.pop()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def triples(self) -> set[Triple]:
        """The TBox written as RDF(S)/OWL triples."""
        out: set[Triple] = set()
        for cls, label in self.classes.items():
            out.add(Triple(cls, RDF_TYPE, OWL_CLASS))
            if label:
                out.add(Triple(cls, RDFS_LABEL, Literal(label)))
        for child, parent in self.subclass_edges:
            out.add(Triple(child, RDFS_SUBCLASS_OF, parent))
        for prop, sig in self.properties.items():
            out.add(Triple(prop, RDF_TYPE, RDF_PROPERTY))
            out.add(Triple(prop, RDFS_DOMAIN, sig.domain))
            out.add(Triple(prop, RDFS_RANGE, sig.range))
        return out


def merge_tbox(base: TBox, delta: TBox) -> TBox:
    """Return ``base`` extended by ``delta``; ``base`` is left untouched.

    Raises on dangling references, conflicting property signatures, and
    subclass cycles. Merging the same delta twice gives the same result.
    """
    merged = base.copy()
    for cls, label in delta.classes.items():
        if cls in merged.classes and merged.classes[cls] and label and merged.classes[cls] != label:
            raise DeclarationError(f"class {cls} already labelled {merged.classes[cls]!r}")
        merged.classes[cls] = label or merged.classes.get(cls, "")
    for child, parent in sorted(delta.subclass_edges):
        for end in (child, parent):
            if end not in merged.classes:
                raise DeclarationError(f"subclass edge {child} -> {parent} references undeclared class {end}")
        if child == parent or child in merged.ancestors(parent):
            raise CycleError((child, parent))
        merged.subclass_edges.add((child, parent))
    for prop, sig in delta.properties.items():
        if sig.domain not in merged.classes:
            raise DeclarationError(f"property {prop} has undeclared domain {sig.domain}")
        old = merged.properties.get(prop)
        if old is not None and old != sig:
            raise DeclarationError(f"property {prop} redefined with a different signature")
        merged.properties[prop] = sig
    return merged


def tbox_from_dict(data: dict, prefixes: dict[str, str]) -> TBox:
    """Build a TBox (or delta) from its JSON form, resolving CURIEs.

    Shape: ``{"classes": {curie: label}, "subclass_of": [[child, parent]],
    "properties": {curie: {"domain": curie, "range": curie}}}``.
    """
    unknown = set(data) - {"classes", "subclass_of", "properties"}
    if unknown:
        raise DeclarationError(f"unknown TBox keys: {', '.join(sorted(unknown))}")
    try:
        classes = {expand(k, prefixes): str(v) for k, v in data.get("classes", {}).items()}
        edges = {(expand(c, prefixes), expand(p, prefixes)) for c, p in data.get("subclass_of", [])}
        props = {
            expand(k, prefixes): PropertyDef(expand(v["domain"], prefixes), expand(v["range"], prefixes))
            for k, v in data.get("properties", {}).items()
        }
    except KeyError as exc:
        raise DeclarationError(str(exc.args[0])) from None
    return TBox(classes, edges, props)


def tbox_to_dict(tbox: TBox) -> dict:
    return {
        "classes": {c.value: tbox.classes[c] for c in sorted(tbox.classes)},
        "subclass_of": [[c.value, p.value] for c, p in sorted(tbox.subclass_edges)],
        "properties": {
            p.value: {"domain": tbox.properties[p].domain.value, "range": tbox.properties[p].range.value}
            for p in sorted(tbox.properties)
        },
    }
