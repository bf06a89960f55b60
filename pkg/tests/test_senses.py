import numpy as np
import pytest

from causalkg.encoder import TokenEncoding
from causalkg.errors import DisjointTreesError, ZeroVectorError
from causalkg.graphs import Span, assemble_graph
from causalkg.senses import (
    SenseInventory,
    SenseRecord,
    lca_similarity,
    link_senses,
    load_inventory,
    node_vector,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def encoding_for(vectors):
    H = np.asarray(vectors, dtype=float)
    return TokenEncoding(passage_vector=H.mean(axis=0), token_vectors=H)


def one_node_graph(n_tokens=1, span=None):
    tokens = [f"t{i}" for i in range(n_tokens)]
    return assemble_graph(
        tokens, None, [("e0", span or Span(0, n_tokens), "element", 1.0)]
    )


def test_node_vector_single_token():
    H = np.array([[3.0, 4.0]])
    g = one_node_graph(1)
    assert np.allclose(node_vector(g.entities[0], H), [0.6, 0.8])


def test_node_vector_two_tokens_mean():
    H = np.array([[1.0, 0.0], [0.0, 1.0]])
    g = one_node_graph(2)
    assert np.allclose(node_vector(g.entities[0], H), unit([0.5, 0.5]))


def test_node_vector_three_token_fixture():
    # independent mean-then-normalize computation
    H = np.array([[1.0, 2.0, 0.0], [3.0, -1.0, 1.0], [-1.0, 2.0, 2.0]])
    mean = np.array([1.0, 1.0, 1.0])
    g = one_node_graph(3)
    assert np.allclose(node_vector(g.entities[0], H), mean / np.sqrt(3.0), atol=1e-12)


def test_node_vector_zero_mean_rejected():
    H = np.array([[1.0, 0.0], [-1.0, 0.0]])
    g = one_node_graph(2)
    with pytest.raises(ZeroVectorError):
        node_vector(g.entities[0], H)


def test_inventory_parsing_and_forest():
    text = (
        "animal.n.01\tanimal\t-\t1.0\t0.0\n"
        "cat.n.01\tcat\tanimal.n.01\t0.0\t2.0\n"
    )
    inv = load_inventory(text, glosses={"cat.n.01": "a small feline"})
    assert inv.records["cat.n.01"].gloss == "a small feline"
    # vectors normalized on load
    assert np.allclose(inv.records["cat.n.01"].vector, [0.0, 1.0])
    assert inv.ancestry("cat.n.01") == ["animal.n.01", "cat.n.01"]
    assert inv.depth("animal.n.01") == 1
    with pytest.raises(ValueError):
        load_inventory("a\tx\tb\t1.0\t0.0\nb\tx\ta\t1.0\t0.0\n")  # cycle
    with pytest.raises(ValueError):
        load_inventory("a\tx\tmissing\t1.0\t0.0\n")
    with pytest.raises(ZeroVectorError):
        load_inventory("a\tx\t-\t0.0\t0.0\n")


def test_link_senses_exact_match_scores_one():
    vec = unit([0.3, -0.2, 0.9])
    inv = SenseInventory([SenseRecord("s0", "t0", None, vec)])
    g = one_node_graph(1)
    linked = link_senses(g, encoding_for([vec]), inv)
    (sense,) = linked.entities[0].senses
    assert sense[0] == "s0"
    assert abs(sense[1] - 1.0) < 1e-9


def test_link_senses_threshold_is_strict():
    inv = SenseInventory([
        SenseRecord("lo", "t0", None, unit([0.0, 1.0])),
        SenseRecord("hi", "t0", None, unit([1.0, 0.1])),
    ])
    g = one_node_graph(1)
    linked = link_senses(g, encoding_for([[1.0, 0.0]]), inv, threshold=0.5)
    assert [s for s, _ in linked.entities[0].senses] == ["hi"]
    # all scores at or below threshold -> empty assignment
    ortho = link_senses(g, encoding_for([[0.0, -1.0]]), inv, threshold=0.5)
    assert ortho.entities[0].senses == ()


def test_link_senses_ranking_matches_argsort():
    rng = np.random.default_rng(17)
    records = [SenseRecord(f"s{i}", "w", None, unit(rng.standard_normal(6))) for i in range(5)]
    inv = SenseInventory(records)
    vec = rng.standard_normal(6)
    g = one_node_graph(1)
    linked = link_senses(g, encoding_for([vec]), inv, threshold=-2.0)
    got = [s for s, _ in linked.entities[0].senses]
    dots = {r.sense_id: float(r.vector @ unit(vec)) for r in records}
    expected = sorted(dots, key=lambda s: (-dots[s], s))
    assert got == expected
    confs = [c for _, c in linked.entities[0].senses]
    assert confs == sorted(confs, reverse=True)


def test_skip_list():
    inv = SenseInventory(
        [SenseRecord("s0", "the", None, unit([1.0, 0.0]))], skip_lemmas=["the"]
    )
    g = assemble_graph(
        ["the", "baby"], None,
        [("e0", Span(0, 1), "element", 1.0), ("e1", Span(0, 2), "element", 1.0)],
    )
    enc = encoding_for([[1.0, 0.0], [1.0, 0.0]])
    linked = link_senses(g, enc, inv, threshold=0.0)
    by_id = linked.entity_by_id()
    assert by_id["e0"].senses == ()  # all lemmas skipped
    assert by_id["e1"].senses != ()  # "baby" not in the skip list


SEVEN = (
    "root\tr\t-\t1.0\t0.0\n"
    "a\ta\troot\t1.0\t0.0\n"
    "b\tb\troot\t1.0\t0.0\n"
    "aa\taa\ta\t1.0\t0.0\n"
    "ab\tab\ta\t1.0\t0.0\n"
    "aaa\taaa\taa\t1.0\t0.0\n"
    "lone\tl\t-\t1.0\t0.0\n"
)


def brute_force_lca_similarity(x, y, inv):
    # oracle: ancestor-set intersection, deepest common member
    anc_x, anc_y = inv.ancestry(x), inv.ancestry(y)
    common = set(anc_x) & set(anc_y)
    if not common:
        return None
    depth = max(len(inv.ancestry(c)) for c in common)
    return 2.0 * depth / (len(anc_x) + len(anc_y))


def test_lca_similarity_fixture():
    inv = load_inventory(SEVEN)
    assert lca_similarity("aa", "aa", inv) == 1.0
    assert lca_similarity("a", "b", inv) == 0.5  # siblings at depth 2
    assert abs(lca_similarity("aaa", "ab", inv) - 2.0 * 2 / (4 + 3)) < 1e-12
    ids = [s for s in inv.records if s != "lone"]
    for x in ids:
        for y in ids:
            got = lca_similarity(x, y, inv)
            assert abs(got - brute_force_lca_similarity(x, y, inv)) < 1e-12
            assert got == lca_similarity(y, x, inv)  # symmetry
            assert (got == 1.0) == (x == y)
    with pytest.raises(DisjointTreesError):
        lca_similarity("lone", "root", inv)
