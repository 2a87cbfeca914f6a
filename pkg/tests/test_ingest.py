import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogcn.ingest import (
    EmptyGraphError,
    MonolithFormatError,
    MonolithValidationError,
    assemble_attributes,
    build_adjacency,
    build_attribute_blocks,
    build_graph,
    monolith_from_dict,
    normalize_adjacency,
    parse_monolith,
    prune_untraced,
)


def write(tmp_path, doc, name="app.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


def mono(classes, calls=(), inheritance=(), entrypoints=None):
    return monolith_from_dict({
        "classes": list(classes),
        "calls": [list(c) for c in calls],
        "inheritance": [list(p) for p in inheritance],
        "entrypoints": entrypoints if entrypoints is not None else {"ep": list(classes)},
    })


class TestParse:
    def test_minimal_file(self, tmp_path):
        path = write(tmp_path, {"classes": ["A", "B"], "calls": [["A", "B"]], "entrypoints": {"ep1": ["A", "B"]}})
        raw = parse_monolith(path)
        assert raw.classes == ("A", "B")
        assert raw.calls == (("A", "B"),)
        assert raw.entrypoint_traces == {"ep1": frozenset({"A", "B"})}

    def test_unknown_class_is_named(self, tmp_path):
        path = write(tmp_path, {"classes": ["A", "B"], "calls": [["A", "C"]], "entrypoints": {"ep1": ["A"]}})
        with pytest.raises(MonolithValidationError, match="'C'"):
            parse_monolith(path)

    def test_duplicate_calls_collapse(self):
        raw = mono(["A", "B"], calls=[("A", "B"), ("A", "B")])
        assert raw.calls == (("A", "B"),)

    def test_duplicate_class_names_dedup(self):
        assert mono(["A", "B", "A"]).classes == ("A", "B")

    def test_malformed_json_reports_line(self, tmp_path):
        path = write(tmp_path, '{\n  "classes": ["A",\n  "calls": []\n}')
        with pytest.raises(MonolithFormatError, match=r":3:"):
            parse_monolith(path)

    def test_unknown_top_level_key(self):
        with pytest.raises(MonolithFormatError, match="extra"):
            monolith_from_dict({"classes": ["A"], "entrypoints": {}, "extra": 1})

    def test_self_inheritance_rejected(self):
        with pytest.raises(MonolithValidationError):
            mono(["A"], inheritance=[("A", "A")])

    def test_entrypoints_sorted_lexicographically(self):
        raw = mono(["A", "B"], entrypoints={"zeta": ["A"], "alpha": ["B"]})
        assert raw.entrypoint_names == ["alpha", "zeta"]


class TestPrune:
    def test_untraced_removed(self):
        raw = mono(["A", "B", "C"], calls=[("A", "C"), ("A", "B")], entrypoints={"ep1": ["A", "B"]})
        pruned = prune_untraced(raw)
        assert pruned.classes == ("A", "B")
        assert pruned.calls == (("A", "B"),)

    def test_all_traced_identity(self):
        raw = mono(["A", "B"])
        assert prune_untraced(raw) is raw

    def test_empty_traces(self):
        with pytest.raises(EmptyGraphError):
            prune_untraced(mono(["A", "B"], entrypoints={}))


class TestAdjacency:
    def test_single_edge(self):
        np.testing.assert_array_equal(build_adjacency(mono(["A", "B"], calls=[("A", "B")])), [[0, 1], [0, 0]])

    def test_both_directions(self):
        raw = mono(["A", "B"], calls=[("A", "B"), ("B", "A")])
        np.testing.assert_array_equal(build_adjacency(raw), [[0, 1], [1, 0]])

    def test_inheritance_is_not_an_edge(self):
        raw = mono(["A", "Base"], inheritance=[("A", "Base")])
        np.testing.assert_array_equal(build_adjacency(raw), np.zeros((2, 2)))


def brute_force_blocks(classes, traces, inheritance):
    names = sorted(traces)
    n = len(classes)
    ep = [[1.0 if classes[i] in traces[p] else 0.0 for p in names] for i in range(n)]
    co = [[float(sum(classes[i] in traces[p] and classes[j] in traces[p] for p in names))
           for j in range(n)] for i in range(n)]
    pairs = {frozenset(p) for p in inheritance}
    inh = [[1.0 if frozenset((classes[i], classes[j])) in pairs else 0.0 for j in range(n)] for i in range(n)]
    return np.array(ep).reshape(n, len(names)), np.array(co), np.array(inh)


class TestAttributeBlocks:
    def test_two_trace_example(self):
        ep, co, inh = build_attribute_blocks(mono(["A", "B"], entrypoints={"ep1": ["A", "B"], "ep2": ["A"]}))
        np.testing.assert_array_equal(ep, [[1, 1], [1, 0]])
        np.testing.assert_array_equal(co, [[2, 1], [1, 1]])
        np.testing.assert_array_equal(inh, np.zeros((2, 2)))

    def test_inheritance_symmetric(self):
        _, _, inh = build_attribute_blocks(mono(["A", "B"], inheritance=[("A", "B")]))
        np.testing.assert_array_equal(inh, [[0, 1], [1, 0]])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        classes = [f"K{i}" for i in range(7)]
        traces = {f"e{p}": [c for c in classes if rng.random() < 0.5] for p in range(5)}
        inheritance = [("K0", "K3"), ("K5", "K1")]
        raw = mono(classes, inheritance=inheritance, entrypoints=traces)
        for got, want in zip(build_attribute_blocks(raw), brute_force_blocks(classes, traces, inheritance)):
            np.testing.assert_array_equal(got, want)


class TestAssemble:
    def test_l1_rows(self):
        ep = np.array([[1.0, 1.0, 0.0]])
        X = assemble_attributes((ep, np.array([[2.0]]), np.array([[0.0]])))
        np.testing.assert_allclose(X, [[0.5, 0.5, 0.0, 1.0, 0.0]])

    def test_zero_row_stays_zero(self):
        X = assemble_attributes((np.ones((2, 1)), np.ones((2, 2)), np.zeros((2, 2))))
        np.testing.assert_array_equal(X[:, 3:], 0.0)

    def test_daytrader_width(self):
        n, p = 111, 203
        X = assemble_attributes((np.ones((n, p)), np.ones((n, n)), np.zeros((n, n))))
        assert X.shape == (111, 425)

    def test_row_count_mismatch(self):
        with pytest.raises(ValueError):
            assemble_attributes((np.ones((2, 1)), np.ones((3, 3))))


class TestNormalizeAdjacency:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(normalize_adjacency(np.array([[0.0, 1.0], [1.0, 0.0]])), [[0.5, 0.5], [0.5, 0.5]])

    def test_edgeless_is_identity(self):
        np.testing.assert_allclose(normalize_adjacency(np.zeros((3, 3))), np.eye(3))

    def test_directed_edge_symmetrized(self):
        np.testing.assert_allclose(normalize_adjacency(np.array([[0.0, 1.0], [0.0, 0.0]])), 0.5)

    def test_literal_directed_variant(self):
        a_hat = normalize_adjacency(np.array([[0.0, 1.0], [0.0, 0.0]]), symmetrize_edges=False)
        d = np.array([2.0, 1.0])
        np.testing.assert_allclose(a_hat, np.array([[1, 1], [0, 1]]) / np.sqrt(np.outer(d, d)))


@st.composite
def monoliths(draw):
    n = draw(st.integers(1, 8))
    classes = [f"c{i}" for i in range(n)]
    pair = st.tuples(st.sampled_from(classes), st.sampled_from(classes))
    calls = draw(st.lists(pair, max_size=15))
    inheritance = [p for p in draw(st.lists(pair, max_size=5)) if p[0] != p[1]]
    traces = draw(st.dictionaries(st.text("abcxyz", min_size=1, max_size=3),
                                  st.lists(st.sampled_from(classes), max_size=n), min_size=1, max_size=5))
    if not any(traces.values()):
        traces[next(iter(traces))] = [classes[0]]
    return {"classes": classes, "calls": [list(c) for c in calls],
            "inheritance": [list(p) for p in inheritance], "entrypoints": traces}


@settings(max_examples=60, deadline=None)
@given(monoliths())
def test_graph_invariants(doc):
    g = build_graph(monolith_from_dict(doc))
    n = g.n_nodes
    assert g.attributes.shape == (n, len(g.entrypoint_names) + 2 * n)
    assert np.all(np.diag(g.adjacency) == 0)
    assert set(np.unique(g.adjacency)) <= {0.0, 1.0}
    np.testing.assert_array_equal(g.co, g.co.T)
    np.testing.assert_array_equal(g.inh, g.inh.T)
    np.testing.assert_array_equal(np.diag(g.co), g.ep.sum(axis=1))
    assert np.all(g.ep.sum(axis=1) >= 1)
    p = len(g.entrypoint_names)
    for block in (g.attributes[:, :p], g.attributes[:, p:p + n], g.attributes[:, p + n:]):
        sums = block.sum(axis=1)
        assert np.all((np.abs(sums - 1) < 1e-12) | (sums == 0))
    a_hat = normalize_adjacency(g.adjacency)
    np.testing.assert_allclose(a_hat, a_hat.T)


@settings(max_examples=40, deadline=None)
@given(monoliths())
def test_prune_idempotent(doc):
    once = prune_untraced(monolith_from_dict(doc))
    assert prune_untraced(once) == once


@settings(max_examples=40, deadline=None)
@given(monoliths(), st.randoms(use_true_random=False))
def test_list_order_independence(doc, rnd):
    shuffled = dict(doc)
    shuffled["calls"] = rnd.sample(doc["calls"], len(doc["calls"]))
    shuffled["inheritance"] = [p[::-1] for p in rnd.sample(doc["inheritance"], len(doc["inheritance"]))]
    shuffled["entrypoints"] = {k: rnd.sample(v, len(v)) for k, v in reversed(list(doc["entrypoints"].items()))}
    a, b = build_graph(monolith_from_dict(doc)), build_graph(monolith_from_dict(shuffled))
    assert a.node_names == b.node_names
    np.testing.assert_array_equal(a.adjacency, b.adjacency)
    np.testing.assert_array_equal(a.attributes, b.attributes)
