"""Declarative graph schemas and constraint checking.

A schema names the allowed entity, attribute, and relation types and a set
of applicability constraints: which entity types an attribute may decorate,
which entity types a relation may connect, and which attribute or relation
pairs are mutually exclusive.  Two schemas are built in: "sciclaim" for
scientific claims and "ethno" for ethnographic mental models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import SchemaParseError, UnknownTypeError, UnknownTypeReferenceError
from .graphs import KnowledgeGraph

__all__ = ["Schema", "Violation", "load_schema", "check_constraints", "BUILTIN_SCHEMAS"]


@dataclass(frozen=True)
class Schema:
    name: str
    entity_types: tuple[str, ...]
    attribute_types: tuple[str, ...]
    relation_types: tuple[str, ...]
    # attribute_type -> entity types it may decorate; absent key = unrestricted
    attribute_domains: Mapping[str, frozenset[str]] = field(default_factory=dict)
    # relation_type -> (allowed head types, allowed tail types); absent = unrestricted
    relation_signatures: Mapping[str, tuple[frozenset[str], frozenset[str]]] = field(
        default_factory=dict
    )
    # unordered attribute-type pairs forbidden on one entity
    exclusive_attribute_pairs: frozenset[frozenset[str]] = frozenset()
    # unordered relation-type pairs forbidden on one ordered node pair
    exclusive_relation_pairs: frozenset[frozenset[str]] = frozenset()
    # relation types rendered bold in DOT output
    causal_relation_types: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        ents = set(self.entity_types)
        attrs = set(self.attribute_types)
        rels = set(self.relation_types)
        for attr, domain in self.attribute_domains.items():
            if attr not in attrs:
                raise UnknownTypeReferenceError(f"attribute domain for undeclared {attr!r}")
            for t in domain:
                if t not in ents:
                    raise UnknownTypeReferenceError(
                        f"attribute domain of {attr!r} names undeclared entity type {t!r}"
                    )
        for rel, (heads, tails) in self.relation_signatures.items():
            if rel not in rels:
                raise UnknownTypeReferenceError(f"signature for undeclared relation {rel!r}")
            for t in heads | tails:
                if t not in ents:
                    raise UnknownTypeReferenceError(
                        f"signature of {rel!r} names undeclared entity type {t!r}"
                    )
        for pair in self.exclusive_attribute_pairs:
            if not pair <= attrs:
                raise UnknownTypeReferenceError(f"exclusive attribute pair {set(pair)} undeclared")
        for pair in self.exclusive_relation_pairs:
            if not pair <= rels:
                raise UnknownTypeReferenceError(f"exclusive relation pair {set(pair)} undeclared")
        if not self.causal_relation_types <= rels:
            raise UnknownTypeReferenceError("causal_relation_types not a subset of relation types")


@dataclass(frozen=True)
class Violation:
    """One schema conflict found in a graph.

    kind is one of AttributeDomain, RelationSignature, ExclusiveAttributes,
    ExclusiveRelations.  element_ids name the conflicting elements
    (entity ids, "<entity>#<attr>" attribute ids, or relation ids) and
    confidences align with them.
    """

    kind: str
    element_ids: tuple[str, ...]
    confidences: tuple[float, ...]


def _sciclaim() -> Schema:
    association_only = frozenset({"association"})
    factor = frozenset({"factor"})
    factor_assoc = frozenset({"factor", "association"})
    return Schema(
        name="sciclaim",
        entity_types=("factor", "evidence", "epistemic", "association", "magnitude", "qualifier"),
        attribute_types=("causation", "comparison", "indicates", "sign+", "sign-", "correlation", "test"),
        relation_types=("arg0", "arg1", "comp_to", "modifier", "subtype", "q+", "q-"),
        attribute_domains={
            attr: association_only
            for attr in ("causation", "comparison", "indicates", "sign+", "sign-", "correlation", "test")
        },
        relation_signatures={
            "arg0": (association_only, factor_assoc),
            "arg1": (association_only, factor_assoc),
            "comp_to": (association_only, factor_assoc),
            "subtype": (factor, factor),
            "q+": (factor_assoc, factor),
            "q-": (factor_assoc, factor),
        },
        exclusive_attribute_pairs=frozenset({frozenset({"sign+", "sign-"})}),
        exclusive_relation_pairs=frozenset({frozenset({"q+", "q-"})}),
        causal_relation_types=frozenset({"q+", "q-"}),
    )


def _ethno() -> Schema:
    return Schema(
        name="ethno",
        entity_types=("element", "qualifier"),
        attribute_types=("tradition", "event", "influence", "prescribed", "negated"),
        relation_types=(
            "agent", "object", "recipient", "consequent", "modifier",
            "intent+", "function+", "q+", "q-", "t+",
        ),
        causal_relation_types=frozenset({"q+", "q-", "intent+", "function+", "t+"}),
    )


BUILTIN_SCHEMAS = {"sciclaim": _sciclaim, "ethno": _ethno}


def load_schema(document: str) -> Schema:
    """Load a schema from a built-in name or a JSON schema document."""
    name = document.strip()
    if name in BUILTIN_SCHEMAS:
        return BUILTIN_SCHEMAS[name]()
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaParseError(f"not a built-in schema name and not valid JSON: {exc}") from exc
    return schema_from_dict(data)


def schema_from_dict(data: Mapping) -> Schema:
    try:
        return Schema(
            name=str(data["name"]),
            entity_types=tuple(data["entity_types"]),
            attribute_types=tuple(data["attribute_types"]),
            relation_types=tuple(data["relation_types"]),
            attribute_domains={
                k: frozenset(v) for k, v in data.get("attribute_domains", {}).items()
            },
            relation_signatures={
                k: (frozenset(v["head"]), frozenset(v["tail"]))
                for k, v in data.get("relation_signatures", {}).items()
            },
            exclusive_attribute_pairs=frozenset(
                frozenset(p) for p in data.get("exclusive_attribute_pairs", [])
            ),
            exclusive_relation_pairs=frozenset(
                frozenset(p) for p in data.get("exclusive_relation_pairs", [])
            ),
            causal_relation_types=frozenset(data.get("causal_relation_types", [])),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaParseError(f"malformed schema document: {exc}") from exc


def schema_to_dict(schema: Schema) -> dict:
    return {
        "name": schema.name,
        "entity_types": list(schema.entity_types),
        "attribute_types": list(schema.attribute_types),
        "relation_types": list(schema.relation_types),
        "attribute_domains": {k: sorted(v) for k, v in schema.attribute_domains.items()},
        "relation_signatures": {
            k: {"head": sorted(h), "tail": sorted(t)}
            for k, (h, t) in schema.relation_signatures.items()
        },
        "exclusive_attribute_pairs": sorted(sorted(p) for p in schema.exclusive_attribute_pairs),
        "exclusive_relation_pairs": sorted(sorted(p) for p in schema.exclusive_relation_pairs),
        "causal_relation_types": sorted(schema.causal_relation_types),
    }


def _check_known_types(graph: KnowledgeGraph, schema: Schema) -> None:
    ents = set(schema.entity_types)
    attrs = set(schema.attribute_types)
    rels = set(schema.relation_types)
    for e in graph.entities:
        if e.entity_type not in ents:
            raise UnknownTypeError(f"entity type {e.entity_type!r} not in schema {schema.name!r}")
        for t, _ in e.attributes:
            if t not in attrs:
                raise UnknownTypeError(f"attribute type {t!r} not in schema {schema.name!r}")
    for r in graph.relations:
        if r.relation_type not in rels:
            raise UnknownTypeError(f"relation type {r.relation_type!r} not in schema {schema.name!r}")


def check_constraints(graph: KnowledgeGraph, schema: Schema) -> list[Violation]:
    """Return every schema violation in the graph; empty iff it conforms.

    Pure and order-independent: the result is sorted by (kind, element ids).
    """
    _check_known_types(graph, schema)
    by_id = graph.entity_by_id()
    out: list[Violation] = []

    for e in graph.entities:
        for attr, conf in e.attributes:
            domain = schema.attribute_domains.get(attr)
            if domain is not None and e.entity_type not in domain:
                out.append(
                    Violation("AttributeDomain", (f"{e.id}#{attr}", e.id), (conf, e.confidence))
                )
        present = {t: c for t, c in e.attributes}
        for pair in schema.exclusive_attribute_pairs:
            if pair <= present.keys():
                a, b = sorted(pair)
                out.append(
                    Violation(
                        "ExclusiveAttributes",
                        (f"{e.id}#{a}", f"{e.id}#{b}"),
                        (present[a], present[b]),
                    )
                )

    for r in graph.relations:
        sig = schema.relation_signatures.get(r.relation_type)
        if sig is None:
            continue
        heads, tails = sig
        ids: list[str] = [r.id]
        confs: list[float] = [r.confidence]
        head_ent, tail_ent = by_id[r.head], by_id[r.tail]
        if head_ent.entity_type not in heads:
            ids.append(head_ent.id)
            confs.append(head_ent.confidence)
        if tail_ent.entity_type not in tails:
            ids.append(tail_ent.id)
            confs.append(tail_ent.confidence)
        if len(ids) > 1:
            out.append(Violation("RelationSignature", tuple(ids), tuple(confs)))

    by_pair: dict[tuple[str, str], dict[str, float]] = {}
    for r in graph.relations:
        by_pair.setdefault((r.head, r.tail), {})[r.relation_type] = r.confidence
    for (head, tail), types in sorted(by_pair.items()):
        for pair in schema.exclusive_relation_pairs:
            if pair <= types.keys():
                a, b = sorted(pair)
                out.append(
                    Violation(
                        "ExclusiveRelations",
                        (f"{head}->{tail}:{a}", f"{head}->{tail}:{b}"),
                        (types[a], types[b]),
                    )
                )

    out.sort(key=lambda v: (v.kind, v.element_ids))
    return out
