import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stable_streams.graphcore import (
    EmptyGraphError,
    Partition,
    conductance,
    jaccard,
    louvain,
    modularity,
    qc,
)
from stable_streams.linkstream import LinkStream, build_snapshot

from conftest import clique_rows


def graph(edges, weights=None):
    rows = []
    for k, (u, v) in enumerate(edges):
        rows.extend([(0, str(u), str(v))] * (weights[k] if weights else 1))
    return build_snapshot(LinkStream.from_interactions(rows), 0, 1)


# --- brute-force oracles (dense matrices, explicit double sums) --------------


def dense(g):
    nodes = sorted(g.nodes)
    idx = {n: i for i, n in enumerate(nodes)}
    A = np.zeros((len(nodes), len(nodes)))
    for (u, v), w in g.edges.items():
        A[idx[u], idx[v]] += w
        A[idx[v], idx[u]] += w
    return nodes, idx, A


def brute_conductance(g, members):
    nodes, idx, A = dense(g)
    inside = [idx[n] for n in members if n in idx]
    outside = [i for i in range(len(nodes)) if i not in inside]
    cut = sum(A[i, j] for i in inside for j in outside)
    vol_in = sum(A[i, j] for i in inside for j in range(len(nodes)))
    vol_out = sum(A[i, j] for i in outside for j in range(len(nodes)))
    if vol_in == 0 or vol_out == 0:
        return 1.0
    return cut / min(vol_in, vol_out)


def brute_modularity(g, blocks):
    nodes, idx, A = dense(g)
    k = A.sum(axis=1)
    two_m = A.sum()
    label = {n: b for b, block in enumerate(blocks) for n in block}
    q = 0.0
    for i, j in itertools.product(range(len(nodes)), repeat=2):
        if label[nodes[i]] == label[nodes[j]]:
            q += A[i, j] - k[i] * k[j] / two_m
    return q / two_m


def set_partitions(items, max_blocks):
    """All partitions of ``items`` into at most ``max_blocks`` blocks (restricted growth strings)."""
    n = len(items)

    def rec(i, labels, used):
        if i == n:
            yield [frozenset(items[j] for j in range(n) if labels[j] == b) for b in range(used)]
            return
        for b in range(min(used + 1, max_blocks)):
            labels.append(b)
            yield from rec(i + 1, labels, max(used, b + 1))
            labels.pop()

    yield from rec(0, [], 0)


# --- louvain -----------------------------------------------------------------


def two_cliques(k1, k2, bridge=True):
    a = [f"a{i}" for i in range(k1)]
    b = [f"b{i}" for i in range(k2)]
    rows = clique_rows(a, 0) + clique_rows(b, 0)
    if bridge:
        rows.append((0, a[-1], b[0]))
    return build_snapshot(LinkStream.from_interactions(rows), 0, 1), set(a), set(b)


def test_louvain_two_bridged_5_cliques_matches_bruteforce_optimum():
    g, a, b = two_cliques(5, 5)
    nodes = sorted(g.nodes)
    best = max(set_partitions(nodes, 3), key=lambda blocks: brute_modularity(g, blocks))
    assert {frozenset(x) for x in best} == {frozenset(a), frozenset(b)}
    p = louvain(g, rng_seed=7)
    assert set(p.communities.values()) == {frozenset(a), frozenset(b)}
    assert modularity(g, p) == pytest.approx(brute_modularity(g, best), abs=1e-12)


def test_louvain_triangle_single_community():
    p = louvain(graph([("a", "b"), ("b", "c"), ("a", "c")]), 0)
    assert list(p.communities.values()) == [frozenset("abc")]


def test_louvain_disconnected_edges():
    p = louvain(graph([("a", "b"), ("c", "d")]), 3)
    assert set(p.communities.values()) == {frozenset("ab"), frozenset("cd")}


def test_louvain_edgeless_graph_raises():
    s = LinkStream.from_interactions([(0, "a", "b")])
    with pytest.raises(EmptyGraphError):
        louvain(build_snapshot(s, 5, 1), 0)


def random_graph(rng, n_max=12):
    n = rng.randint(3, n_max)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
    if not pairs:
        pairs = [(0, 1)]
    weights = [rng.randint(1, 4) for _ in pairs]
    return graph(pairs, weights)


def test_louvain_invariants_on_random_graphs():
    rng = random.Random(11)
    for trial in range(40):
        g = random_graph(rng, 25)
        p = louvain(g, trial)
        # disjoint cover of exactly the active nodes, no empty community
        assert set(p.assignment) == g.nodes
        assert all(p.communities.values())
        trace = p.modularity_trace
        assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
        assert modularity(g, p) == pytest.approx(trace[-1], abs=1e-12)
        singletons = Partition({n: i for i, n in enumerate(sorted(g.nodes))})
        assert modularity(g, p) >= modularity(g, singletons) - 1e-12
        # determinism
        assert louvain(g, trial) == p


def test_louvain_agrees_with_networkx_quality():
    nx = pytest.importorskip("networkx")
    rng = random.Random(5)
    for trial in range(10):
        g = random_graph(rng, 30)
        G = nx.Graph()
        for (u, v), w in g.edges.items():
            G.add_edge(u, v, weight=w)
        ours = modularity(g, louvain(g, trial))
        theirs = nx.algorithms.community.modularity(
            G, nx.algorithms.community.louvain_communities(G, weight="weight", seed=trial)
        )
        ours_nx = nx.algorithms.community.modularity(G, louvain(g, trial).sets(), weight="weight")
        assert ours == pytest.approx(ours_nx, abs=1e-9)
        assert ours >= theirs - 0.05


# --- modularity ----------------------------------------------------------------


def test_modularity_two_triangles():
    g = graph([(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)])
    p = Partition.from_sets([{"1", "2", "3"}, {"4", "5", "6"}])
    assert modularity(g, p) == pytest.approx(0.5)


def test_modularity_single_community_is_zero():
    g = graph([(1, 2), (2, 3), (3, 4)])
    assert modularity(g, Partition.from_sets([g.nodes])) == pytest.approx(0.0)


def test_modularity_singletons_formula():
    g = graph([(1, 2), (2, 3), (3, 4)], [2, 1, 1])
    strengths = g.node_strengths
    two_m = 2 * g.total_weight
    expected = -sum((k / two_m) ** 2 for k in strengths.values())
    p = Partition({n: i for i, n in enumerate(sorted(g.nodes))})
    assert modularity(g, p) == pytest.approx(expected)


def test_modularity_requires_matching_cover():
    g = graph([(1, 2)])
    with pytest.raises(ValueError):
        modularity(g, Partition.from_sets([{"1"}]))


# --- conductance / qc ------------------------------------------------------------


def test_conductance_path(path_stream):
    g = build_snapshot(path_stream, 0, 1)
    assert conductance(g, {"a", "b"}) == pytest.approx(1 / 3)
    assert qc(g, {"a", "b"}) == pytest.approx(2 / 3)


def test_conductance_isolated_clique_is_zero():
    rows = clique_rows("abcd", 0) + clique_rows("wxyz", 0)
    g = build_snapshot(LinkStream.from_interactions(rows), 0, 1)
    assert conductance(g, set("abcd")) == 0.0
    assert qc(g, set("abcd")) == 1.0


def test_conductance_no_internal_edges_is_one():
    g = graph([("a", "x"), ("b", "y"), ("x", "y")])
    assert conductance(g, {"a", "b"}) == 1.0


def test_degenerate_conductance_cases():
    g = graph([("a", "b"), ("b", "c")])
    # silent set
    assert qc(g, {"q", "r"}) == 0.0
    # the set holds every active edge
    assert conductance(g, {"a", "b", "c"}) == 1.0
    # absent members contribute nothing
    assert conductance(g, {"a", "b", "zzz"}) == conductance(g, {"a", "b"})


def test_conductance_matches_bruteforce_on_random_graphs():
    rng = random.Random(2024)
    for _ in range(200):
        g = random_graph(rng)
        nodes = sorted(g.nodes)
        members = set(rng.sample(nodes, rng.randint(1, len(nodes))))
        expected = brute_conductance(g, members)
        assert abs(conductance(g, members) - expected) <= 1e-12
        assert abs(qc(g, members) - (1 - expected)) <= 1e-12


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_conductance_range_and_complement_symmetry(seed):
    rng = random.Random(seed)
    g = random_graph(rng)
    nodes = sorted(g.nodes)
    members = set(rng.sample(nodes, rng.randint(1, len(nodes))))
    c = conductance(g, members)
    assert 0.0 <= c <= 1.0
    assert qc(g, members) == 1.0 - c
    assert conductance(g, set(nodes) - members) == pytest.approx(c, abs=1e-12)


# --- jaccard -------------------------------------------------------------------


def test_jaccard_examples():
    assert jaccard({1, 2, 3}, {1, 2, 3}) == 1.0
    assert jaccard({1}, {2}) == 0.0
    assert jaccard({1, 2, 3}, {2, 3, 4}) == 0.5
    assert jaccard(set(), set()) == 0.0


def test_jaccard_matches_enumeration():
    rng = random.Random(3)
    universe = range(10)
    for _ in range(200):
        a = {x for x in universe if rng.random() < 0.5}
        b = {x for x in universe if rng.random() < 0.5}
        inter = sum(1 for x in universe if x in a and x in b)
        union = sum(1 for x in universe if x in a or x in b)
        assert jaccard(a, b) == (inter / union if union else 0.0)


small_sets = st.frozensets(st.integers(0, 8), max_size=8)


@settings(max_examples=200, deadline=None)
@given(a=small_sets, b=small_sets, c=small_sets)
def test_jaccard_distance_is_a_metric(a, b, c):
    assert jaccard(a, b) == jaccard(b, a)
    if a:
        assert jaccard(a, a) == 1.0
    d = lambda x, y: 1.0 - jaccard(x, y) if (x or y) else 0.0  # noqa: E731
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12
