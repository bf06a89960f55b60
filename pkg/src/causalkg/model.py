"""Span-classification model: span enumeration, attention pooling, and the
entity / attribute / relation classifier heads, plus decoding into a graph.

The model is a set of numpy parameter arrays over a frozen token encoder:

* attention scorer (w, b) that pools each candidate span's token vectors,
* a width-embedding table indexed by span length,
* a linear+softmax entity head over [span ; passage ; width] (null class 0),
* a linear+sigmoid attribute head over the same representation,
* a linear+sigmoid relation head over
  [head span ; head width ; between-context maxpool ; tail span ; tail width].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .encoder import EncoderConfig, TokenEncoding, encode_tokens
from .errors import DimensionMismatchError
from .graphs import KnowledgeGraph, Span, assemble_graph
from .schema import Schema, load_schema, schema_to_dict

__all__ = [
    "Model",
    "enumerate_spans",
    "span_attention",
    "entity_rep",
    "pair_rep",
    "classify_entities",
    "classify_attributes",
    "classify_relations",
    "extract",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Model:
    """Parameter set for one schema + encoder configuration.

    Entity classes are [null] + schema.entity_types, in that order.
    Parameter arrays are float64 and treated as immutable during inference.
    """

    schema: Schema
    encoder: EncoderConfig
    max_span_len: int = 10
    width_dim: int = 8
    theta_r: float = 0.4
    theta_a: float = 0.5
    attn_w: np.ndarray = field(default=None)  # (d,)
    attn_b: float = 0.0
    width: np.ndarray = field(default=None)  # (max_span_len, width_dim)
    ent_w: np.ndarray = field(default=None)  # (|Te|+1, 2d + dw)
    ent_b: np.ndarray = field(default=None)
    attr_w: np.ndarray = field(default=None)  # (|Ta|, 2d + dw)
    attr_b: np.ndarray = field(default=None)
    rel_w: np.ndarray = field(default=None)  # (|Tr|, 3d + 2dw)
    rel_b: np.ndarray = field(default=None)

    @property
    def dimension(self) -> int:
        return self.encoder.dimension

    @property
    def rep_dim(self) -> int:
        return 2 * self.dimension + self.width_dim

    @property
    def pair_dim(self) -> int:
        return 3 * self.dimension + 2 * self.width_dim

    @property
    def entity_classes(self) -> tuple[str, ...]:
        return (None,) + self.schema.entity_types  # class 0 is null

    @staticmethod
    def initialize(
        schema: Schema,
        encoder: EncoderConfig,
        max_span_len: int = 10,
        width_dim: int = 8,
        theta_r: float = 0.4,
        theta_a: float = 0.5,
        seed: int = 0,
    ) -> "Model":
        """Seeded init: zero biases, uniform(+/- 1/sqrt(fan_in)) weights."""
        if max_span_len < 1:
            raise ValueError("max_span_len must be >= 1")
        if not (0.0 < theta_r < 1.0 and 0.0 < theta_a < 1.0):
            raise ValueError("thresholds must lie in (0, 1)")
        d = encoder.dimension
        rep = 2 * d + width_dim
        pair = 3 * d + 2 * width_dim
        rng = np.random.default_rng(seed)

        def uniform(shape, fan_in):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        return Model(
            schema=schema,
            encoder=encoder,
            max_span_len=max_span_len,
            width_dim=width_dim,
            theta_r=theta_r,
            theta_a=theta_a,
            attn_w=uniform(d, d),
            attn_b=0.0,
            width=uniform((max_span_len, width_dim), width_dim),
            ent_w=uniform((len(schema.entity_types) + 1, rep), rep),
            ent_b=np.zeros(len(schema.entity_types) + 1),
            attr_w=uniform((len(schema.attribute_types), rep), rep),
            attr_b=np.zeros(len(schema.attribute_types)),
            rel_w=uniform((len(schema.relation_types), pair), pair),
            rel_b=np.zeros(len(schema.relation_types)),
        )

    def copy(self) -> "Model":
        return Model(
            schema=self.schema,
            encoder=self.encoder,
            max_span_len=self.max_span_len,
            width_dim=self.width_dim,
            theta_r=self.theta_r,
            theta_a=self.theta_a,
            attn_w=self.attn_w.copy(),
            attn_b=float(self.attn_b),
            width=self.width.copy(),
            ent_w=self.ent_w.copy(),
            ent_b=self.ent_b.copy(),
            attr_w=self.attr_w.copy(),
            attr_b=self.attr_b.copy(),
            rel_w=self.rel_w.copy(),
            rel_b=self.rel_b.copy(),
        )


def enumerate_spans(n: int, max_len: int) -> list[Span]:
    """All spans of length 1..max_len over n tokens, in (start, length) order."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    return [
        Span(start, start + length)
        for start in range(n)
        for length in range(1, min(max_len, n - start) + 1)
    ]


def span_attention(
    token_vectors: np.ndarray, span: Span, w: np.ndarray, b: float
) -> tuple[np.ndarray, np.ndarray]:
    """Attention-pooled span vector.

    Returns (alpha, pooled) where alpha is the softmax over the span of
    w . h_t + b and pooled the alpha-weighted sum of the token vectors.
    """
    h = token_vectors[span.start : span.end]
    alpha = softmax(h @ w + b)
    return alpha, alpha @ h


def entity_rep(
    span: Span, pooled: np.ndarray, passage: np.ndarray, width_table: np.ndarray
) -> np.ndarray:
    """Concatenate [pooled span ; passage vector ; width embedding]."""
    return np.concatenate([pooled, passage, width_table[len(span) - 1]])


def between_context(token_vectors: np.ndarray, a: Span, b: Span) -> np.ndarray:
    """Maxpool of the token vectors strictly between two spans.

    Zero vector when the spans are adjacent or overlap.
    """
    lo, hi = min(a.end, b.end), max(a.start, b.start)
    if hi <= lo:
        return np.zeros(token_vectors.shape[1])
    return token_vectors[lo:hi].max(axis=0)


def pair_rep(
    token_vectors: np.ndarray,
    head: Span,
    head_pooled: np.ndarray,
    tail: Span,
    tail_pooled: np.ndarray,
    width_table: np.ndarray,
) -> np.ndarray:
    """Relation-head input: [head ; head width ; between maxpool ; tail ; tail width]."""
    return np.concatenate(
        [
            head_pooled,
            width_table[len(head) - 1],
            between_context(token_vectors, head, tail),
            tail_pooled,
            width_table[len(tail) - 1],
        ]
    )


def classify_entities(model: Model, reps: np.ndarray) -> np.ndarray:
    """Per-span class distribution over [null] + entity types."""
    if reps.shape[-1] != model.rep_dim:
        raise DimensionMismatchError(f"expected rep dim {model.rep_dim}, got {reps.shape[-1]}")
    return softmax(reps @ model.ent_w.T + model.ent_b, axis=-1)


def classify_attributes(model: Model, reps: np.ndarray) -> np.ndarray:
    """Independent sigmoid score per attribute type for identified entities."""
    if reps.shape[-1] != model.rep_dim:
        raise DimensionMismatchError(f"expected rep dim {model.rep_dim}, got {reps.shape[-1]}")
    return sigmoid(reps @ model.attr_w.T + model.attr_b)


def classify_relations(model: Model, reps: np.ndarray) -> np.ndarray:
    """Independent sigmoid score per relation type for ordered entity pairs."""
    if reps.shape[-1] != model.pair_dim:
        raise DimensionMismatchError(f"expected pair dim {model.pair_dim}, got {reps.shape[-1]}")
    return sigmoid(reps @ model.rel_w.T + model.rel_b)


def span_representations(
    model: Model, encoding: TokenEncoding, spans: Sequence[Span]
) -> tuple[dict[Span, np.ndarray], np.ndarray]:
    """Pooled vector per span plus the stacked entity reps (same order)."""
    pooled: dict[Span, np.ndarray] = {}
    reps = np.empty((len(spans), model.rep_dim))
    for i, span in enumerate(spans):
        _, hhat = span_attention(encoding.token_vectors, span, model.attn_w, model.attn_b)
        pooled[span] = hhat
        reps[i] = entity_rep(span, hhat, encoding.passage_vector, model.width)
    return pooled, reps


def extract(
    tokens: Sequence[str],
    lemmas: Sequence[str] | None,
    model: Model,
    provenance: str = "",
) -> KnowledgeGraph:
    """Run the full pipeline on one sentence and decode a KnowledgeGraph.

    Spans whose entity argmax is non-null become entities (confidence =
    argmax probability); attributes with score >= theta_a attach to them;
    ordered entity pairs receive every relation scoring >= theta_r.
    """
    if len(tokens) == 0:
        return assemble_graph(tokens, lemmas, [], [], [], provenance=provenance)
    encoding = encode_tokens(tokens, model.encoder)
    spans = enumerate_spans(len(tokens), model.max_span_len)
    pooled, reps = span_representations(model, encoding, spans)
    probs = classify_entities(model, reps)
    classes = probs.argmax(axis=1)

    entities = []
    kept: list[tuple[Span, int]] = []  # (span, row in reps)
    for i, span in enumerate(spans):
        cls = int(classes[i])
        if cls == 0:
            continue
        ent_id = f"e{len(entities)}"
        entities.append((ent_id, span, model.entity_classes[cls], float(probs[i, cls])))
        kept.append((span, i))

    attributes = []
    relations = []
    if kept:
        kept_reps = reps[[i for _, i in kept]]
        attr_scores = classify_attributes(model, kept_reps)
        for (ent_id, _, _, _), scores in zip(entities, attr_scores):
            for j, attr in enumerate(model.schema.attribute_types):
                if scores[j] >= model.theta_a:
                    attributes.append((ent_id, attr, float(scores[j])))

        for hi, (head_span, _) in enumerate(kept):
            for ti, (tail_span, _) in enumerate(kept):
                if hi == ti:
                    continue
                rep = pair_rep(
                    encoding.token_vectors,
                    head_span,
                    pooled[head_span],
                    tail_span,
                    pooled[tail_span],
                    model.width,
                )
                scores = classify_relations(model, rep)
                for j, rel in enumerate(model.schema.relation_types):
                    if scores[j] >= model.theta_r:
                        relations.append(
                            (entities[hi][0], entities[ti][0], rel, float(scores[j]))
                        )

    return assemble_graph(tokens, lemmas, entities, attributes, relations, provenance=provenance)


def save_model(model: Model, path: str) -> None:
    """Persist the model as a versioned JSON container."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "schema": schema_to_dict(model.schema),
        "encoder": model.encoder.to_dict(),
        "max_span_len": model.max_span_len,
        "width_dim": model.width_dim,
        "theta_r": model.theta_r,
        "theta_a": model.theta_a,
        "parameters": {
            "attn_w": model.attn_w.tolist(),
            "attn_b": float(model.attn_b),
            "width": model.width.tolist(),
            "ent_w": model.ent_w.tolist(),
            "ent_b": model.ent_b.tolist(),
            "attr_w": model.attr_w.tolist(),
            "attr_b": model.attr_b.tolist(),
            "rel_w": model.rel_w.tolist(),
            "rel_b": model.rel_b.tolist(),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str) -> Model:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
    params = doc["parameters"]
    schema = load_schema(json.dumps(doc["schema"]))
    return Model(
        schema=schema,
        encoder=EncoderConfig.from_dict(doc["encoder"]),
        max_span_len=int(doc["max_span_len"]),
        width_dim=int(doc["width_dim"]),
        theta_r=float(doc["theta_r"]),
        theta_a=float(doc["theta_a"]),
        attn_w=np.array(params["attn_w"]),
        attn_b=float(params["attn_b"]),
        width=np.array(params["width"]),
        ent_w=np.array(params["ent_w"]),
        ent_b=np.array(params["ent_b"]),
        attr_w=np.array(params["attr_w"]),
        attr_b=np.array(params["attr_b"]),
        rel_w=np.array(params["rel_w"]),
        rel_b=np.array(params["rel_b"]),
    )
