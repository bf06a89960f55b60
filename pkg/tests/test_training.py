import json
import math

import numpy as np
import pytest

from causalkg.encoder import EncoderConfig
from causalkg.errors import AlignmentError, SchemaMismatchError
from causalkg.graphs import Span
from causalkg.model import Model
from causalkg.schema import load_schema
from causalkg.training import (
    PARAM_GROUPS,
    Example,
    Negatives,
    TrainConfig,
    binary_loss,
    entity_loss,
    example_loss,
    gold_graph,
    grad_check,
    joint_loss,
    load_dataset,
    sample_negatives,
    train,
)

from synth import build_corpus

SCICLAIM = load_schema("sciclaim")


def tiny_example():
    return Example(
        tokens=("smoking", "causes", "cancer", "in", "mice"),
        lemmas=("smoking", "cause", "cancer", "in", "mouse"),
        entities=((Span(0, 1), "factor"), (Span(1, 2), "association"), (Span(2, 3), "factor")),
        attributes=((1, "causation"),),
        relations=((1, 0, "arg0"), (1, 2, "arg1")),
        provenance="tiny",
    )


def tiny_model(seed=0):
    return Model.initialize(
        SCICLAIM,
        EncoderConfig(dimension=8, seed=seed, context_window=1),
        max_span_len=3,
        width_dim=2,
        seed=seed,
    )


def test_load_dataset():
    text = json.dumps([
        {
            "tokens": ["A", "causes", "B"],
            "entities": [
                {"start": 0, "end": 1, "type": "factor"},
                {"start": 1, "end": 2, "type": "association"},
            ],
            "attributes": [{"entity": 1, "type": "causation"}],
            "relations": [{"head": 1, "tail": 0, "type": "arg0"}],
        }
    ])
    (ex,) = load_dataset(text)
    assert ex.tokens == ("A", "causes", "B")
    assert ex.lemmas == ("a", "causes", "b")
    assert ex.entities == ((Span(0, 1), "factor"), (Span(1, 2), "association"))
    assert ex.relations == ((1, 0, "arg0"),)
    assert ex.provenance == "ex0"


def test_gold_graph():
    g = gold_graph(tiny_example())
    assert {e.id for e in g.entities} == {"e0", "e1", "e2"}
    assert g.entity_by_id()["e1"].attributes == (("causation", 1.0),)
    assert {(r.head, r.tail, r.relation_type) for r in g.relations} == {
        ("e1", "e0", "arg0"), ("e1", "e2", "arg1")
    }
    assert all(e.confidence == 1.0 for e in g.entities)


def test_sample_negatives_zero_counts():
    neg = sample_negatives(tiny_example(), 0, 0, max_span_len=3)
    assert neg.spans == () and neg.pairs == ()


def test_sample_negatives_contract():
    ex = tiny_example()
    neg = sample_negatives(ex, 5, 3, max_span_len=3, seed=2)
    gold_spans = {s for s, _ in ex.entities}
    assert len(neg.spans) == 5
    assert len(set(neg.spans)) == 5  # without replacement
    assert not (set(neg.spans) & gold_spans)
    linked = {(h, t) for h, t, _ in ex.relations}
    assert len(neg.pairs) == 3
    for h, t in neg.pairs:
        assert h != t and (h, t) not in linked
        assert 0 <= h < 3 and 0 <= t < 3  # drawn from gold entities only


def test_sample_negatives_deterministic():
    ex = tiny_example()
    a = sample_negatives(ex, 8, 4, max_span_len=3, seed=5)
    b = sample_negatives(ex, 8, 4, max_span_len=3, seed=5)
    c = sample_negatives(ex, 8, 4, max_span_len=3, seed=6)
    assert a == b
    assert a != c


def test_entity_loss_hand_computed():
    # single span, 2 classes: CE = -ln p(target)
    probs = np.array([[0.3, 0.7]])
    assert abs(entity_loss(probs, np.array([1])) - (-math.log(0.7))) < 1e-12
    assert entity_loss(np.zeros((0, 2)), np.zeros(0, dtype=int)) == 0.0
    with pytest.raises(AlignmentError):
        entity_loss(probs, np.array([0, 1]))


def test_binary_loss_hand_computed():
    scores = np.array([[0.9, 0.2]])
    labels = np.array([[1.0, 0.0]])
    expected = -(math.log(0.9) + math.log(0.8)) / 2.0
    assert abs(binary_loss(scores, labels) - expected) < 1e-12
    assert binary_loss(np.zeros((0, 3)), np.zeros((0, 3))) == 0.0
    with pytest.raises(AlignmentError):
        binary_loss(scores, labels.T)


def test_joint_loss_additivity_and_clamping():
    lb = joint_loss(
        np.array([[0.25, 0.75]]), np.array([1]),
        np.array([[0.4]]), np.array([[1.0]]),
        np.array([[0.5]]), np.array([[0.0]]),
    )
    assert lb.total == lb.entity + lb.relation + lb.attribute
    # perfect one-hot predictions cost ~0 after clamping
    perfect = joint_loss(
        np.array([[0.0, 1.0]]), np.array([1]),
        np.array([[1.0]]), np.array([[1.0]]),
        np.array([[0.0]]), np.array([[0.0]]),
    )
    assert perfect.total <= 1e-9
    # no relations / attributes -> total is just the entity term
    only_e = joint_loss(
        np.array([[0.25, 0.75]]), np.array([1]),
        np.zeros((0, 1)), np.zeros((0, 1)),
        np.zeros((0, 1)), np.zeros((0, 1)),
    )
    assert only_e.total == only_e.entity


def test_grad_check_full_model():
    errors = grad_check(tiny_model(seed=1), tiny_example())
    assert set(errors) == set(PARAM_GROUPS) | {"max"}
    assert errors["max"] < 1e-4


def test_grad_check_single_token_span():
    # attention over one-token spans is purely linear in the heads
    ex = Example(
        tokens=("a", "b"), lemmas=("a", "b"),
        entities=((Span(0, 1), "factor"),), attributes=(), relations=(),
        provenance="one",
    )
    errors = grad_check(tiny_model(seed=2), ex, negatives=Negatives((), ()))
    assert errors["max"] < 1e-6


def test_grad_check_epsilon_bounds():
    with pytest.raises(ValueError):
        grad_check(tiny_model(), tiny_example(), epsilon=1e-2)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    cfg = TrainConfig.from_dict({"epochs": 3, "unknown_key": 1})
    assert cfg.epochs == 3


def test_train_zero_epochs_is_initialization():
    enc = EncoderConfig(dimension=8, seed=0, context_window=1)
    cfg = TrainConfig(epochs=0, max_span_len=3, seed=4)
    m = train([tiny_example()], SCICLAIM, cfg, encoder_config=enc, width_dim=2)
    init = Model.initialize(SCICLAIM, enc, max_span_len=3, width_dim=2, seed=4)
    for name in PARAM_GROUPS:
        assert np.array_equal(
            np.atleast_1d(getattr(m, name)), np.atleast_1d(getattr(init, name))
        )


def test_train_deterministic_per_seed():
    dataset = build_corpus()[:4]
    enc = EncoderConfig(dimension=8, seed=0, context_window=1)
    cfg = TrainConfig(epochs=3, max_span_len=3, seed=11,
                      neg_entity_count=10, neg_relation_count=5)
    m1 = train(dataset, SCICLAIM, cfg, encoder_config=enc, width_dim=2)
    m2 = train(dataset, SCICLAIM, cfg, encoder_config=enc, width_dim=2)
    for name in PARAM_GROUPS:
        assert np.array_equal(
            np.atleast_1d(getattr(m1, name)), np.atleast_1d(getattr(m2, name))
        )


def test_train_loss_non_increasing_small_lr():
    # averaged over 5 seeds, lr=1e-3 must descend monotonically
    dataset = build_corpus()[:5]
    enc = EncoderConfig(dimension=8, seed=0, context_window=1)
    trajectories = []
    for seed in range(5):
        losses = []
        cfg = TrainConfig(epochs=15, learning_rate=1e-3, max_span_len=3, seed=seed,
                          neg_entity_count=10, neg_relation_count=5)
        train(dataset, SCICLAIM, cfg, encoder_config=enc, width_dim=2,
              on_epoch=lambda _, loss: losses.append(loss))
        trajectories.append(losses)
    mean = np.mean(trajectories, axis=0)
    assert np.all(np.diff(mean) <= 1e-12)


def test_train_rejects_schema_mismatch():
    bad = Example(
        tokens=("a",), lemmas=("a",),
        entities=((Span(0, 1), "martian"),), attributes=(), relations=(),
        provenance="bad",
    )
    with pytest.raises(SchemaMismatchError):
        train([bad], SCICLAIM, TrainConfig(epochs=1))
    with pytest.raises(ValueError):
        train([], SCICLAIM, TrainConfig(epochs=1))


def test_example_loss_finite_and_positive():
    m = tiny_model(seed=3)
    ex = tiny_example()
    neg = sample_negatives(ex, 10, 5, m.max_span_len, seed=0)
    lb = example_loss(m, ex, neg)
    assert math.isfinite(lb.total)
    assert lb.entity > 0 and lb.relation > 0 and lb.attribute > 0
