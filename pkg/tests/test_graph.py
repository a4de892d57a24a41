from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from authnet.errors import PathCountOverflow, ValidationError, VertexNotFound
from authnet.graph import (
    DirGraph,
    Edge,
    Provenance,
    count_paths_through,
    descendants,
    diameter,
    eccentricity,
    graph_stats,
    kcore_out,
    reach_profile,
    shortest_path_dag,
    weak_components,
)

CHAIN = DirGraph("abc", [("a", "b"), ("b", "c")])
DIAMOND = DirGraph("abcd", [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])


@st.composite
def digraphs(draw, max_n=9, acyclic=False):
    n = draw(st.integers(1, max_n))
    names = [f"n{i}" for i in range(n)]
    pairs = [(a, b) for i, a in enumerate(names) for j, b in enumerate(names)
             if a != b and (not acyclic or i < j)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    return DirGraph(names, chosen)


class TestConstruction:
    def test_self_loop_rejected(self):
        with pytest.raises(ValidationError):
            DirGraph(["a"], [("a", "a")])

    def test_duplicate_triple_rejected(self):
        with pytest.raises(ValidationError):
            DirGraph("ab", [("a", "b"), ("a", "b")])

    def test_same_pair_different_provenance_allowed(self):
        g = DirGraph("ab", [Edge("a", "b", Provenance.LOCAL_ADMIN), Edge("a", "b", Provenance.SESSION, 0.5)])
        assert g.pair_count == 1
        assert g.edge_record_count == 2
        assert g.provenances("a", "b") == {Provenance.LOCAL_ADMIN, Provenance.SESSION}
        assert g.weight("a", "b") == 1.0

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            DirGraph("ab", [Edge("a", "b", weight=-1.0)])

    def test_endpoints_added_to_vertices(self):
        g = DirGraph([], [("x", "y")])
        assert g.vertices == {"x", "y"}

    def test_unknown_vertex(self):
        with pytest.raises(VertexNotFound):
            descendants(CHAIN, "zz")
        with pytest.raises(KeyError):
            eccentricity(CHAIN, "zz")

    def test_derived_graphs(self):
        g = DIAMOND.without_pairs([("a", "b")])
        assert not g.has_edge("a", "b") and g.has_edge("a", "c")
        sub = DIAMOND.subgraph({"a", "b", "d"})
        assert sub.pair_set() == {("a", "b"), ("b", "d")}
        merged = CHAIN.with_edges([Edge("a", "c", Provenance.SESSION)])
        assert merged.pair_count == 3


class TestReach:
    def test_chain_descendants(self):
        assert descendants(CHAIN, "a") == {"b", "c"}

    def test_isolated(self):
        g = DirGraph(["s"])
        assert descendants(g, "s") == set()
        assert eccentricity(g, "s") == 0

    def test_diamond(self):
        assert descendants(DIAMOND, "a") == {"b", "c", "d"}
        assert eccentricity(DIAMOND, "a") == 2

    def test_chain_ecc(self):
        assert eccentricity(CHAIN, "a") == 2
        assert eccentricity(CHAIN, "c") == 0

    def test_cycle_includes_self(self):
        g = DirGraph("ab", [("a", "b"), ("b", "a")])
        assert descendants(g, "a") == {"a", "b"}
        prof = reach_profile(g)
        assert list(prof.n_desc) == [2, 2]

    @given(digraphs())
    def test_descendants_match_closure(self, g):
        for v in g.order:
            assert descendants(g, v) == oracles.reachable(g, v)

    @given(digraphs())
    def test_bulk_profile_matches_single_source(self, g):
        prof = reach_profile(g)
        for i, v in enumerate(g.order):
            assert prof.n_desc[i] == len(descendants(g, v))
            assert prof.ecc[i] == eccentricity(g, v)
        assert diameter(g) == max(eccentricity(g, v) for v in g.order)


class TestShortestPaths:
    def test_diamond_count(self):
        dist, count, preds = shortest_path_dag(DIAMOND, "a")
        assert count["d"] == 2
        assert preds["d"] == {"b", "c"}
        assert dist["d"] == 2

    def test_chain_counts_one(self):
        _, count, _ = shortest_path_dag(CHAIN, "a")
        assert count == {"a": 1, "b": 1, "c": 1}

    def test_random_dags_match_enumeration(self):
        rng = random.Random(7)
        for _ in range(40):
            g = oracles.random_dag(rng, rng.randint(2, 10), 0.35)
            for s in g.order:
                dist, count, _ = shortest_path_dag(g, s)
                for t in g.order:
                    sp = oracles.shortest_paths(g, s, t)
                    if t == s:
                        continue
                    if sp:
                        assert count[t] == len(sp)
                        assert dist[t] == len(sp[0]) - 1
                    else:
                        assert t not in dist

    def test_overflow_detected(self):
        # layered graph with 2^70 shortest paths
        layers = [[f"l{i}a", f"l{i}b"] for i in range(71)]
        edges = [(u, w) for a, b in zip(layers, layers[1:]) for u in a for w in b]
        g = DirGraph([v for layer in layers for v in layer], edges)
        with pytest.raises(PathCountOverflow):
            shortest_path_dag(g, "l0a")


class TestPathCounting:
    def test_single_path(self):
        g = DirGraph(["a", "v", "b"], [("a", "v"), ("v", "b")])
        assert count_paths_through(g, "a", "b", max_len=3) == {2: 1}
        assert count_paths_through(g, "a", "b", via="v", max_len=3) == {2: 1}

    def test_two_routes(self):
        g = DirGraph(["a", "v", "b"], [("a", "b"), ("a", "v"), ("v", "b")])
        assert count_paths_through(g, "a", "b", max_len=2) == {1: 1, 2: 1}
        assert count_paths_through(g, "a", "b", via="v", max_len=2) == {2: 1}

    def test_same_endpoint(self):
        assert count_paths_through(CHAIN, "a", "a", max_len=3) == {}

    @given(digraphs(max_n=7), st.integers(1, 6))
    def test_matches_enumeration(self, g, max_len):
        order = g.order
        for s in order:
            for t in order:
                got = count_paths_through(g, s, t, max_len=max_len)
                paths = oracles.simple_paths(g, s, t, max_len)
                want: dict[int, int] = {}
                for p in paths:
                    want[len(p) - 1] = want.get(len(p) - 1, 0) + 1
                assert got == dict(sorted(want.items()))


class TestStats:
    def test_two_disjoint_edges(self):
        g = DirGraph("abcd", [("a", "b"), ("c", "d")])
        s = graph_stats(g)
        assert (s.component_count, s.tree_count, s.diameter) == (2, 2, 1)
        assert s.vertex_count == 4 and s.edge_count == 2
        assert s.mean_out_degree == 0.5

    def test_path_rgb(self):
        assert graph_stats(CHAIN).rgb_over_gcc == pytest.approx(1 / 3)

    def test_empty(self):
        s = graph_stats(DirGraph())
        assert s.vertex_count == 0 and s.rgb_over_gcc == 1.0 and s.diameter == 0

    def test_row_shape(self):
        row = graph_stats(DIAMOND).as_row()
        assert list(row) == ["V", "E", "mean_k_out", "trees", "components", "rgb_over_gcc",
                             "mean_ecc", "diameter", "mean_desc"]

    @given(digraphs(max_n=8))
    def test_rgb_matches_exhaustive(self, g):
        assert graph_stats(g).rgb_over_gcc == pytest.approx(oracles.articulation_ratio(g))

    @given(digraphs(max_n=6), digraphs(max_n=6))
    def test_disjoint_union_additive(self, g1, g2):
        h2 = g2.relabeled({v: "z" + v for v in g2.vertices})
        union = DirGraph(g1.vertices | h2.vertices, [*g1.edges, *h2.edges])
        s, a, b = graph_stats(union), graph_stats(g1), graph_stats(h2)
        assert s.vertex_count == a.vertex_count + b.vertex_count
        assert s.edge_count == a.edge_count + b.edge_count
        assert s.tree_count == a.tree_count + b.tree_count
        assert s.component_count == a.component_count + b.component_count

    @given(digraphs())
    def test_invariants(self, g):
        s = graph_stats(g)
        assert s.diameter >= s.mean_eccentricity >= 0
        assert 0 <= s.rgb_over_gcc <= 1

    def test_components_sorted(self):
        g = DirGraph("abcde", [("a", "b"), ("c", "d"), ("d", "e")])
        assert weak_components(g) == [{"c", "d", "e"}, {"a", "b"}]


class TestKcore:
    def test_chain_peels_completely(self):
        # every vertex of an acyclic chain loses its out-edge once the sink goes
        assert kcore_out(CHAIN) == {"a": 0, "b": 0, "c": 0}

    def test_three_cycle(self):
        g = DirGraph("abc", [("a", "b"), ("b", "c"), ("c", "a")])
        assert kcore_out(g) == {"a": 1, "b": 1, "c": 1}

    def test_empty(self):
        assert kcore_out(DirGraph()) == {}

    def test_complete_digraph(self):
        g = DirGraph("abcd", [(u, v) for u in "abcd" for v in "abcd" if u != v])
        assert set(kcore_out(g).values()) == {3}
