"""Graph-based causal reasoning: valence propagation and path queries.

Valence propagation walks forward from intentional, functional, or
prescribed source nodes, asserting the positive or negative desirability
of each reached node for the source's agent (or the generic NORM holder).
The sign flips on every "q-" edge traversed and on entry to every node
carrying the "negated" attribute.

Path queries run over a corpus graph: they enumerate simple paths between
nodes matching a start pattern and nodes matching an end pattern, moving
forward along directed edges and in both directions along "modifier" edges
and cross-sentence lemma links.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import SchemaMismatchError
from .graphs import CorpusGraph, Entity, KnowledgeGraph
from .schema import Schema

__all__ = [
    "NORM",
    "ValenceAssertion",
    "NodePattern",
    "QueryResult",
    "compute_valence",
    "find_paths",
]

NORM = "NORM"

# edge types followed during valence propagation; "agent" resolves the
# holder and is deliberately excluded from propagation
VALENCE_EDGES = frozenset(
    {"intent+", "function+", "consequent", "object", "recipient", "q+", "q-"}
)


@dataclass(frozen=True)
class ValenceAssertion:
    holder: str  # entity id or NORM
    target: str  # entity id
    sign: int  # +1 or -1

    def to_dict(self) -> dict:
        return {"holder": self.holder, "target": self.target, "sign": "+" if self.sign > 0 else "-"}


def compute_valence(graph: KnowledgeGraph, schema: Schema | None = None) -> list[ValenceAssertion]:
    """Valence assertions from intentional/functional/prescribed structure.

    Sources are nodes with an outgoing "intent+" or "function+" edge and
    nodes carrying the "prescribed" attribute.  Each (node, sign) pair is
    visited at most once per source, so cyclic graphs terminate.
    """
    if schema is not None:
        known = set(schema.relation_types)
        for r in graph.relations:
            if r.relation_type not in known:
                raise SchemaMismatchError(
                    f"relation type {r.relation_type!r} not in schema {schema.name!r}"
                )

    by_id = graph.entity_by_id()
    outgoing: dict[str, list] = {e.id: [] for e in graph.entities}
    for r in graph.relations:
        outgoing[r.head].append(r)
    for edges in outgoing.values():
        edges.sort(key=lambda r: (r.relation_type, r.tail))

    sources = []
    for e in graph.entities:
        if e.has_attribute("prescribed") or any(
            r.relation_type in ("intent+", "function+") for r in outgoing[e.id]
        ):
            sources.append(e)
    sources.sort(key=lambda e: e.id)

    assertions: list[ValenceAssertion] = []
    seen: set[tuple[str, str, int]] = set()
    for source in sources:
        agent_edges = [r for r in outgoing[source.id] if r.relation_type == "agent"]
        holder = agent_edges[0].tail if agent_edges else NORM

        start_sign = -1 if source.has_attribute("negated") else 1
        stack: list[tuple[str, int]] = [(source.id, start_sign)]
        visited: set[tuple[str, int]] = set()
        while stack:
            node_id, sign = stack.pop()
            if (node_id, sign) in visited:
                continue
            visited.add((node_id, sign))
            key = (holder, node_id, sign)
            if key not in seen:
                seen.add(key)
                assertions.append(ValenceAssertion(holder, node_id, sign))
            # reversed so the lexicographically first edge is expanded first
            for r in reversed(outgoing[node_id]):
                if r.relation_type not in VALENCE_EDGES:
                    continue
                next_sign = sign
                if r.relation_type == "q-":
                    next_sign = -next_sign
                if by_id[r.tail].has_attribute("negated"):
                    next_sign = -next_sign
                stack.append((r.tail, next_sign))
    return assertions


@dataclass(frozen=True)
class NodePattern:
    """Declarative match against a corpus node.

    All present fields must hold: any node lemma in lemma_any_of, the
    entity type equal, every required attribute present, and for each role
    constraint an outgoing edge of that relation type whose target matches
    the sub-pattern.  At least one field must be present.
    """

    lemma_any_of: frozenset[str] | None = None
    entity_type: str | None = None
    required_attributes: frozenset[str] | None = None
    role_constraints: tuple[tuple[str, "NodePattern"], ...] | None = None

    def __post_init__(self) -> None:
        if (
            self.lemma_any_of is None
            and self.entity_type is None
            and self.required_attributes is None
            and self.role_constraints is None
        ):
            raise ValueError("NodePattern must constrain at least one field")

    @staticmethod
    def from_dict(data: Mapping) -> "NodePattern":
        return NodePattern(
            lemma_any_of=(
                frozenset(data["lemma_any_of"]) if "lemma_any_of" in data else None
            ),
            entity_type=data.get("entity_type"),
            required_attributes=(
                frozenset(data["required_attributes"])
                if "required_attributes" in data
                else None
            ),
            role_constraints=(
                tuple(
                    (rc["relation"], NodePattern.from_dict(rc["pattern"]))
                    for rc in data["role_constraints"]
                )
                if "role_constraints" in data
                else None
            ),
        )

    def matches(self, graph: KnowledgeGraph, entity: Entity) -> bool:
        if self.lemma_any_of is not None:
            if not (self.lemma_any_of & graph.entity_lemmas(entity)):
                return False
        if self.entity_type is not None and entity.entity_type != self.entity_type:
            return False
        if self.required_attributes is not None:
            if not (self.required_attributes <= entity.attribute_types()):
                return False
        if self.role_constraints is not None:
            by_id = graph.entity_by_id()
            for rel_type, sub in self.role_constraints:
                if not any(
                    r.relation_type == rel_type and sub.matches(graph, by_id[r.tail])
                    for r in graph.outgoing(entity.id)
                ):
                    return False
        return True


@dataclass(frozen=True)
class QueryResult:
    """Paths as alternating node/edge id sequences plus their union subgraph."""

    paths: tuple[tuple[str, ...], ...]
    subgraph_nodes: tuple[str, ...] = field(default=())
    subgraph_edges: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "paths": [list(p) for p in self.paths],
            "subgraph": {
                "nodes": list(self.subgraph_nodes),
                "edges": list(self.subgraph_edges),
            },
        }


def _traversal_edges(corpus: CorpusGraph) -> dict[str, list[tuple[str, str]]]:
    """Adjacency of (edge_id, neighbor) per global node id.

    Directed relations go forward only; "modifier" relations and lemma
    links are traversable in both directions.
    """
    adjacency: dict[str, list[tuple[str, str]]] = {}
    for g in corpus.graphs:
        prov = g.provenance
        for e in g.entities:
            adjacency.setdefault(f"{prov}/{e.id}", [])
        for r in g.relations:
            head, tail = f"{prov}/{r.head}", f"{prov}/{r.tail}"
            edge_id = f"{prov}/{r.id}"
            adjacency[head].append((edge_id, tail))
            if r.relation_type == "modifier":
                adjacency[tail].append((edge_id, head))
    for a, b in sorted(corpus.lemma_links):
        edge_id = f"lemma:{a}~{b}"
        adjacency[a].append((edge_id, b))
        adjacency[b].append((edge_id, a))
    for edges in adjacency.values():
        edges.sort()
    return adjacency


def find_paths(
    corpus: CorpusGraph,
    start: NodePattern,
    end: NodePattern,
    max_len: int = 6,
) -> QueryResult:
    """All simple paths of edge-length <= max_len from start to end matches.

    A node matching both patterns yields a single-node path.  Paths never
    repeat a node.  Output order is deterministic: paths sorted
    lexicographically by their id sequences.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    nodes = corpus.nodes()
    adjacency = _traversal_edges(corpus)
    start_ids = sorted(gid for gid, (g, e) in nodes.items() if start.matches(g, e))
    end_ids = {gid for gid, (g, e) in nodes.items() if end.matches(g, e)}

    paths: list[tuple[str, ...]] = []

    def walk(path: list[str], on_path: set[str], edges_used: int) -> None:
        current = path[-1]
        if current in end_ids:
            paths.append(tuple(path))
        if edges_used == max_len:
            return
        for edge_id, neighbor in adjacency.get(current, []):
            if neighbor in on_path:
                continue
            path.extend((edge_id, neighbor))
            on_path.add(neighbor)
            walk(path, on_path, edges_used + 1)
            on_path.remove(neighbor)
            del path[-2:]

    for sid in start_ids:
        walk([sid], {sid}, 0)

    paths.sort()
    sub_nodes: set[str] = set()
    sub_edges: set[str] = set()
    for p in paths:
        sub_nodes.update(p[0::2])
        sub_edges.update(p[1::2])
    return QueryResult(
        paths=tuple(paths),
        subgraph_nodes=tuple(sorted(sub_nodes)),
        subgraph_edges=tuple(sorted(sub_edges)),
    )
