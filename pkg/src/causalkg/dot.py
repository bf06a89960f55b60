"""Graphviz DOT emission for knowledge graphs.

Nodes are labeled with the span text plus a parenthesized attribute list;
edges carry the relation type, with causal relation types rendered bold.
"""

from __future__ import annotations

from .graphs import KnowledgeGraph
from .schema import Schema

__all__ = ["emit_dot"]


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def emit_dot(graph: KnowledgeGraph, schema: Schema) -> str:
    """Render the graph as a DOT digraph; deterministic element order."""
    lines = ["digraph {", "  node [shape=box];"]
    for e in sorted(graph.entities, key=lambda e: e.id):
        label = _escape(graph.span_text(e.span))
        if e.attributes:
            # \n is the DOT line-break escape, applied after content escaping
            label += "\\n(" + _escape(", ".join(t for t, _ in e.attributes)) + ")"
        lines.append(f'  "{_escape(e.id)}" [label="{label}"];')
    for r in sorted(graph.relations, key=lambda r: r.id):
        style = "bold" if r.relation_type in schema.causal_relation_types else "solid"
        lines.append(
            f'  "{_escape(r.head)}" -> "{_escape(r.tail)}" '
            f'[label="{_escape(r.relation_type)}", style={style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
