"""Joint training: negative sampling, the three-part loss, analytic
gradients with finite-difference verification, and plain gradient descent.

The loss is the sum of three means:

* entity loss    - categorical cross-entropy over gold spans plus sampled
  non-gold spans (labeled null),
* relation loss  - binary cross-entropy over gold relation pairs plus
  sampled gold-entity pairs that carry no relation (teacher forcing),
* attribute loss - binary cross-entropy over the gold entity spans.

The encoder is frozen; gradients flow to the attention scorer, the width
embeddings, and the three classifier heads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .encoder import EncoderConfig, TokenEncoding, encode_tokens
from .errors import AlignmentError, NonFiniteGradientError, SchemaMismatchError
from .graphs import KnowledgeGraph, Span, assemble_graph
from .model import (
    Model,
    between_context,
    enumerate_spans,
    sigmoid,
    softmax,
)
from .schema import Schema

__all__ = [
    "TrainConfig",
    "Example",
    "Negatives",
    "LossBreakdown",
    "load_dataset",
    "gold_graph",
    "sample_negatives",
    "entity_loss",
    "binary_loss",
    "joint_loss",
    "example_loss",
    "example_loss_and_grads",
    "grad_check",
    "train",
]

_CLAMP = 1e-12

PARAM_GROUPS = ("attn_w", "attn_b", "width", "ent_w", "ent_b", "attr_w", "attr_b", "rel_w", "rel_b")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 1e-3
    batch_size: int = 1
    neg_entity_count: int = 100
    neg_relation_count: int = 50
    seed: int = 0
    max_span_len: int = 10
    theta_r: float = 0.4
    theta_a: float = 0.5

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.neg_entity_count < 0 or self.neg_relation_count < 0:
            raise ValueError("negative sample counts must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")

    @staticmethod
    def from_dict(data: dict) -> "TrainConfig":
        known = {f for f in TrainConfig.__dataclass_fields__}
        return TrainConfig(**{k: v for k, v in data.items() if k in known})


@dataclass(frozen=True)
class Example:
    """One gold-annotated sentence."""

    tokens: tuple[str, ...]
    lemmas: tuple[str, ...]
    entities: tuple[tuple[Span, str], ...]
    attributes: tuple[tuple[int, str], ...]  # (entity index, attribute type)
    relations: tuple[tuple[int, int, str], ...]  # (head index, tail index, type)
    provenance: str = ""


@dataclass(frozen=True)
class Negatives:
    spans: tuple[Span, ...]
    pairs: tuple[tuple[int, int], ...]  # gold-entity index pairs with no relation


@dataclass(frozen=True)
class LossBreakdown:
    entity: float
    relation: float
    attribute: float
    total: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "total", self.entity + self.relation + self.attribute)


def load_dataset(text: str) -> list[Example]:
    """Parse the dataset JSON format into Examples."""
    data = json.loads(text)
    out = []
    for i, ex in enumerate(data):
        tokens = tuple(ex["tokens"])
        lemmas = tuple(ex.get("lemmas") or (t.lower() for t in tokens))
        out.append(
            Example(
                tokens=tokens,
                lemmas=lemmas,
                entities=tuple(
                    (Span(int(e["start"]), int(e["end"])), e["type"]) for e in ex["entities"]
                ),
                attributes=tuple(
                    (int(a["entity"]), a["type"]) for a in ex.get("attributes", [])
                ),
                relations=tuple(
                    (int(r["head"]), int(r["tail"]), r["type"]) for r in ex.get("relations", [])
                ),
                provenance=ex.get("provenance", f"ex{i}"),
            )
        )
    return out


def gold_graph(example: Example) -> KnowledgeGraph:
    """The gold annotations as a KnowledgeGraph (all confidences 1.0)."""
    entities = [
        (f"e{i}", span, etype, 1.0) for i, (span, etype) in enumerate(example.entities)
    ]
    attributes = [(f"e{i}", attr, 1.0) for i, attr in example.attributes]
    relations = [(f"e{h}", f"e{t}", rtype, 1.0) for h, t, rtype in example.relations]
    return assemble_graph(
        example.tokens, example.lemmas, entities, attributes, relations,
        provenance=example.provenance,
    )


def check_dataset(dataset: Sequence[Example], schema: Schema) -> None:
    ents, attrs, rels = (
        set(schema.entity_types), set(schema.attribute_types), set(schema.relation_types)
    )
    for ex in dataset:
        for _, etype in ex.entities:
            if etype not in ents:
                raise SchemaMismatchError(
                    f"{ex.provenance}: entity type {etype!r} not in schema {schema.name!r}"
                )
        for _, atype in ex.attributes:
            if atype not in attrs:
                raise SchemaMismatchError(
                    f"{ex.provenance}: attribute type {atype!r} not in schema {schema.name!r}"
                )
        for _, _, rtype in ex.relations:
            if rtype not in rels:
                raise SchemaMismatchError(
                    f"{ex.provenance}: relation type {rtype!r} not in schema {schema.name!r}"
                )


def sample_negatives(
    example: Example,
    neg_entity_count: int,
    neg_relation_count: int,
    max_span_len: int,
    seed: int | np.random.SeedSequence = 0,
) -> Negatives:
    """Sample non-gold spans and relation-free gold-entity pairs.

    Uniform without replacement, deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    gold_spans = {span for span, _ in example.entities}
    candidates = [s for s in enumerate_spans(len(example.tokens), max_span_len) if s not in gold_spans]
    k = min(neg_entity_count, len(candidates))
    spans = tuple(candidates[i] for i in rng.choice(len(candidates), size=k, replace=False)) if k else ()

    linked = {(h, t) for h, t, _ in example.relations}
    pair_candidates = [
        (i, j)
        for i in range(len(example.entities))
        for j in range(len(example.entities))
        if i != j and (i, j) not in linked
    ]
    k = min(neg_relation_count, len(pair_candidates))
    pairs = (
        tuple(pair_candidates[i] for i in rng.choice(len(pair_candidates), size=k, replace=False))
        if k
        else ()
    )
    return Negatives(spans=spans, pairs=pairs)


def entity_loss(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean categorical cross-entropy; probabilities clamped away from 0/1."""
    if len(targets) == 0:
        return 0.0
    if probs.shape[0] != targets.shape[0]:
        raise AlignmentError(f"{probs.shape[0]} predictions vs {targets.shape[0]} targets")
    picked = np.clip(probs[np.arange(len(targets)), targets], _CLAMP, 1.0 - _CLAMP)
    return float(-np.log(picked).mean())


def binary_loss(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy over all score/label cells, clamped."""
    if scores.size == 0:
        return 0.0
    if scores.shape != labels.shape:
        raise AlignmentError(f"score shape {scores.shape} vs label shape {labels.shape}")
    p = np.clip(scores, _CLAMP, 1.0 - _CLAMP)
    return float(-(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)).mean())


def joint_loss(
    entity_probs: np.ndarray,
    entity_targets: np.ndarray,
    relation_scores: np.ndarray,
    relation_labels: np.ndarray,
    attribute_scores: np.ndarray,
    attribute_labels: np.ndarray,
) -> LossBreakdown:
    """Combine the three loss components; total is their exact sum."""
    return LossBreakdown(
        entity=entity_loss(entity_probs, entity_targets),
        relation=binary_loss(relation_scores, relation_labels),
        attribute=binary_loss(attribute_scores, attribute_labels),
    )


def _prepare(model: Model, example: Example, negatives: Negatives):
    """Index spans, targets, labels, and pair structure for one example."""
    schema = model.schema
    class_of = {t: i + 1 for i, t in enumerate(schema.entity_types)}
    attr_of = {t: i for i, t in enumerate(schema.attribute_types)}
    rel_of = {t: i for i, t in enumerate(schema.relation_types)}

    gold_spans = [span for span, _ in example.entities]
    ent_spans = gold_spans + list(negatives.spans)
    ent_targets = np.array(
        [class_of[etype] for _, etype in example.entities] + [0] * len(negatives.spans),
        dtype=int,
    )

    attr_labels = np.zeros((len(gold_spans), len(schema.attribute_types)))
    for idx, atype in example.attributes:
        attr_labels[idx, attr_of[atype]] = 1.0

    pair_labels_map: dict[tuple[int, int], np.ndarray] = {}
    pair_order: list[tuple[int, int]] = []
    for h, t, rtype in example.relations:
        key = (h, t)
        if key not in pair_labels_map:
            pair_labels_map[key] = np.zeros(len(schema.relation_types))
            pair_order.append(key)
        pair_labels_map[key][rel_of[rtype]] = 1.0
    for key in negatives.pairs:
        if key not in pair_labels_map:
            pair_labels_map[key] = np.zeros(len(schema.relation_types))
            pair_order.append(key)
    pair_labels = (
        np.stack([pair_labels_map[k] for k in pair_order])
        if pair_order
        else np.zeros((0, len(schema.relation_types)))
    )

    unique_spans: list[Span] = []
    span_index: dict[Span, int] = {}
    for span in ent_spans + [gold_spans[h] for h, _ in pair_order] + [gold_spans[t] for _, t in pair_order]:
        if span not in span_index:
            span_index[span] = len(unique_spans)
            unique_spans.append(span)

    return ent_spans, ent_targets, attr_labels, pair_order, pair_labels, unique_spans, span_index


def _forward(model: Model, encoding: TokenEncoding, unique_spans: list[Span]):
    """Attention pooling and entity reps for each unique span."""
    H = encoding.token_vectors
    d = model.dimension
    alphas = []
    pooled = np.empty((len(unique_spans), d))
    for i, span in enumerate(unique_spans):
        h = H[span.start : span.end]
        alpha = softmax(h @ model.attn_w + model.attn_b)
        alphas.append(alpha)
        pooled[i] = alpha @ h
    reps = np.empty((len(unique_spans), model.rep_dim))
    for i, span in enumerate(unique_spans):
        reps[i, :d] = pooled[i]
        reps[i, d : 2 * d] = encoding.passage_vector
        reps[i, 2 * d :] = model.width[len(span) - 1]
    return alphas, pooled, reps


def example_loss(
    model: Model,
    example: Example,
    negatives: Negatives,
    encoding: TokenEncoding | None = None,
) -> LossBreakdown:
    loss, _ = _loss_impl(model, example, negatives, encoding, with_grads=False)
    return loss


def example_loss_and_grads(
    model: Model,
    example: Example,
    negatives: Negatives,
    encoding: TokenEncoding | None = None,
) -> tuple[LossBreakdown, dict[str, np.ndarray]]:
    return _loss_impl(model, example, negatives, encoding, with_grads=True)


def _loss_impl(model, example, negatives, encoding, with_grads):
    if encoding is None:
        encoding = encode_tokens(example.tokens, model.encoder)
    (
        ent_spans, ent_targets, attr_labels, pair_order, pair_labels, unique_spans, span_index
    ) = _prepare(model, example, negatives)
    gold_spans = [span for span, _ in example.entities]
    d, dw = model.dimension, model.width_dim
    H = encoding.token_vectors

    alphas, pooled, reps = _forward(model, encoding, unique_spans)

    ent_rows = np.array([span_index[s] for s in ent_spans], dtype=int)
    ent_reps = reps[ent_rows] if len(ent_rows) else np.zeros((0, model.rep_dim))
    ent_probs = softmax(ent_reps @ model.ent_w.T + model.ent_b, axis=-1)

    attr_rows = np.array([span_index[s] for s in gold_spans], dtype=int)
    attr_reps = reps[attr_rows] if len(attr_rows) else np.zeros((0, model.rep_dim))
    attr_scores = sigmoid(attr_reps @ model.attr_w.T + model.attr_b)

    pair_reps = np.empty((len(pair_order), model.pair_dim))
    for i, (h, t) in enumerate(pair_order):
        hs, ts = gold_spans[h], gold_spans[t]
        pair_reps[i, :d] = pooled[span_index[hs]]
        pair_reps[i, d : d + dw] = model.width[len(hs) - 1]
        pair_reps[i, d + dw : 2 * d + dw] = between_context(H, hs, ts)
        pair_reps[i, 2 * d + dw : 3 * d + dw] = pooled[span_index[ts]]
        pair_reps[i, 3 * d + dw :] = model.width[len(ts) - 1]
    rel_scores = sigmoid(pair_reps @ model.rel_w.T + model.rel_b)

    loss = joint_loss(ent_probs, ent_targets, rel_scores, pair_labels, attr_scores, attr_labels)
    if not with_grads:
        return loss, None

    grads = {
        "attn_w": np.zeros_like(model.attn_w),
        "attn_b": 0.0,
        "width": np.zeros_like(model.width),
        "ent_w": np.zeros_like(model.ent_w),
        "ent_b": np.zeros_like(model.ent_b),
        "attr_w": np.zeros_like(model.attr_w),
        "attr_b": np.zeros_like(model.attr_b),
        "rel_w": np.zeros_like(model.rel_w),
        "rel_b": np.zeros_like(model.rel_b),
    }
    d_reps = np.zeros_like(reps)

    if len(ent_rows):
        g = ent_probs.copy()
        g[np.arange(len(ent_targets)), ent_targets] -= 1.0
        g /= len(ent_targets)
        grads["ent_w"] += g.T @ ent_reps
        grads["ent_b"] += g.sum(axis=0)
        dx = g @ model.ent_w
        np.add.at(d_reps, ent_rows, dx)

    if attr_scores.size:
        g = (attr_scores - attr_labels) / attr_scores.size
        grads["attr_w"] += g.T @ attr_reps
        grads["attr_b"] += g.sum(axis=0)
        dx = g @ model.attr_w
        np.add.at(d_reps, attr_rows, dx)

    d_pooled = np.zeros_like(pooled)
    if rel_scores.size:
        g = (rel_scores - pair_labels) / rel_scores.size
        grads["rel_w"] += g.T @ pair_reps
        grads["rel_b"] += g.sum(axis=0)
        dr = g @ model.rel_w
        for i, (h, t) in enumerate(pair_order):
            hs, ts = gold_spans[h], gold_spans[t]
            d_pooled[span_index[hs]] += dr[i, :d]
            grads["width"][len(hs) - 1] += dr[i, d : d + dw]
            d_pooled[span_index[ts]] += dr[i, 2 * d + dw : 3 * d + dw]
            grads["width"][len(ts) - 1] += dr[i, 3 * d + dw :]

    # entity-rep gradient: pooled segment and width segment (passage frozen)
    for i, span in enumerate(unique_spans):
        d_pooled[i] += d_reps[i, :d]
        grads["width"][len(span) - 1] += d_reps[i, 2 * d :]

    # attention backward per span
    for i, span in enumerate(unique_spans):
        h = H[span.start : span.end]
        alpha = alphas[i]
        d_alpha = h @ d_pooled[i]
        dz = alpha * (d_alpha - float(alpha @ d_alpha))
        grads["attn_w"] += h.T @ dz
        grads["attn_b"] += float(dz.sum())

    return loss, grads


def _get_group(model: Model, name: str) -> np.ndarray:
    value = getattr(model, name)
    return np.atleast_1d(np.asarray(value, dtype=float))


def _set_group(model: Model, name: str, value: np.ndarray) -> None:
    if name == "attn_b":
        model.attn_b = float(value.reshape(-1)[0])
    else:
        setattr(model, name, value.reshape(getattr(model, name).shape))


def grad_check(
    model: Model,
    example: Example,
    epsilon: float = 1e-5,
    negatives: Negatives | None = None,
) -> dict[str, float]:
    """Compare analytic gradients against central finite differences.

    Returns a relative error per parameter group plus a "max" entry.  The
    per-group error is ||analytic - numeric|| / (||analytic|| + ||numeric||),
    which sits at the finite-difference noise floor when the two agree.
    """
    if not (1e-6 <= epsilon <= 1e-3):
        raise ValueError("epsilon must lie in [1e-6, 1e-3]")
    if negatives is None:
        negatives = sample_negatives(example, 20, 10, model.max_span_len, seed=0)
    encoding = encode_tokens(example.tokens, model.encoder)
    _, grads = example_loss_and_grads(model, example, negatives, encoding)

    errors: dict[str, float] = {}
    probe = model.copy()
    for name in PARAM_GROUPS:
        analytic = np.atleast_1d(np.asarray(grads[name], dtype=float)).ravel()
        if not np.all(np.isfinite(analytic)):
            raise NonFiniteGradientError(f"non-finite analytic gradient in {name}")
        flat = _get_group(model, name).ravel().copy()
        numeric = np.empty_like(flat)
        for i in range(flat.size):
            for sign, slot in ((+1.0, 0), (-1.0, 1)):
                bumped = flat.copy()
                bumped[i] += sign * epsilon
                _set_group(probe, name, bumped)
                value = example_loss(probe, example, negatives, encoding).total
                if slot == 0:
                    hi = value
                else:
                    lo = value
            numeric[i] = (hi - lo) / (2.0 * epsilon)
        _set_group(probe, name, flat)
        # attn_b is softmax-shift-invariant, so both gradients can be ~0;
        # fall back to absolute error when the norms vanish
        denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
        diff = float(np.linalg.norm(analytic - numeric))
        errors[name] = diff / denom if denom > 1e-8 else diff
    errors["max"] = max(errors.values())
    return errors


def train(
    dataset: Sequence[Example],
    schema: Schema,
    config: TrainConfig,
    encoder_config: EncoderConfig | None = None,
    width_dim: int = 8,
    on_epoch: Callable[[int, float], None] | None = None,
) -> Model:
    """Plain gradient descent over the joint loss; deterministic per seed.

    Negatives are resampled each epoch from a seed derived from
    (config.seed, epoch, example index); example order is reshuffled each
    epoch from the same master seed.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    check_dataset(dataset, schema)
    if encoder_config is None:
        encoder_config = EncoderConfig()
    model = Model.initialize(
        schema,
        encoder_config,
        max_span_len=config.max_span_len,
        width_dim=width_dim,
        theta_r=config.theta_r,
        theta_a=config.theta_a,
        seed=config.seed,
    )
    encodings = [encode_tokens(ex.tokens, encoder_config) for ex in dataset]
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xC0FFEE]))

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(dataset))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_grads = None
            for idx in batch:
                ex = dataset[idx]
                negatives = sample_negatives(
                    ex,
                    config.neg_entity_count,
                    config.neg_relation_count,
                    config.max_span_len,
                    seed=np.random.SeedSequence([config.seed, epoch, int(idx)]),
                )
                loss, grads = example_loss_and_grads(model, ex, negatives, encodings[idx])
                epoch_loss += loss.total
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for k in grads:
                        batch_grads[k] = batch_grads[k] + grads[k]
            scale = config.learning_rate / len(batch)
            model.attn_w -= scale * batch_grads["attn_w"]
            model.attn_b -= scale * batch_grads["attn_b"]
            model.width -= scale * batch_grads["width"]
            model.ent_w -= scale * batch_grads["ent_w"]
            model.ent_b -= scale * batch_grads["ent_b"]
            model.attr_w -= scale * batch_grads["attr_w"]
            model.attr_b -= scale * batch_grads["attr_b"]
            model.rel_w -= scale * batch_grads["rel_w"]
            model.rel_b -= scale * batch_grads["rel_b"]
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss / len(dataset))
    return model
