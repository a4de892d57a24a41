from __future__ import annotations

import random

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from authnet.errors import AnalysisError, ValidationError
from authnet.graph import DirGraph, weak_components
from authnet.ingest import ClusterMap
from authnet.outliers import DbscanParams
from authnet.spreaders import (
    compare_countermeasure,
    descendants_subgraph,
    find_spreaders,
    girvan_newman_bisect,
    girvan_newman_levels,
    ingress_risk,
)


def planted_hub_dag(seed: int, n: int = 500, hub_out: int = 50) -> DirGraph:
    rng = random.Random(seed)
    names = [f"v{i:03d}" for i in range(n)]
    edges = set()
    for i in range(1, n):
        for _ in range(rng.choice([0, 1, 1, 2])):
            j = rng.randrange(i + 1, n) if i + 1 < n else None
            if j is not None:
                edges.add((names[i], names[j]))
    hub = names[0]
    for j in rng.sample(range(1, n), hub_out):
        edges.add((hub, names[j]))
    return DirGraph(names, edges)


class TestFindSpreaders:
    def test_planted_hub(self):
        for seed in range(3):
            g = planted_hub_dag(seed)
            rep = find_spreaders(g, DbscanParams(min_pts=20))
            assert "v000" in rep.outliers

    def test_uniform_forest_has_no_outliers(self):
        edges = [(f"r{i}", f"r{i}c{j}") for i in range(30) for j in range(3)]
        rep = find_spreaders(DirGraph([], edges), DbscanParams(min_pts=5))
        assert rep.outliers == []

    def test_too_small(self):
        with pytest.raises(ValidationError):
            find_spreaders(DirGraph("abc", [("a", "b")]), DbscanParams(min_pts=5))

    def test_deterministic(self):
        g = planted_hub_dag(7, n=200, hub_out=30)
        a = find_spreaders(g, DbscanParams(min_pts=10))
        b = find_spreaders(g, DbscanParams(min_pts=10))
        assert a.outliers == b.outliers and a.epsilon == b.epsilon

    def test_report_outputs(self, tmp_path):
        g = planted_hub_dag(1, n=120, hub_out=30)
        rep = find_spreaders(g, DbscanParams(min_pts=10))
        doc = rep.to_json()
        assert doc["spreaders"] == rep.outliers
        assert {r["vertex"] for r in doc["vertices"] if r["is_outlier"]} == set(rep.outliers)
        path = tmp_path / "s.csv"
        rep.write_csv(path)
        lines = path.read_text().splitlines()
        assert len(lines) == len(g) + 1 and lines[0].startswith("vertex,v_desc,ecc")

    def test_descendants_subgraph(self):
        g = DirGraph("abcd", [("a", "b"), ("b", "c"), ("d", "a")])
        assert descendants_subgraph(g, "a").pair_set() == {("a", "b"), ("b", "c")}


BARBELL = DirGraph([], [("a", "b"), ("b", "c"), ("c", "a"), ("c", "d"), ("d", "e"), ("e", "f"), ("f", "d")])


class TestGirvanNewman:
    def test_barbell(self):
        bis = girvan_newman_bisect(BARBELL)
        assert bis.cut == (("c", "d"),)
        assert {bis.community_a, bis.community_b} == {frozenset("abc"), frozenset("def")}

    def test_path_cut_in_middle(self):
        bis = girvan_newman_bisect(DirGraph("abcd", [("a", "b"), ("b", "c"), ("c", "d")]))
        assert bis.removed == (("b", "c"),)

    def test_even_path_tie_by_edge_id(self):
        g = DirGraph("abcdef", [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "f")])
        assert girvan_newman_bisect(g).removed == (("c", "d"),)

    def test_disconnected_rejected(self):
        with pytest.raises(AnalysisError):
            girvan_newman_bisect(DirGraph("abcd", [("a", "b"), ("c", "d")]))

    def test_levels_refine(self):
        levels = list(girvan_newman_levels(BARBELL, max_levels=2))
        assert len(levels[0]) == 2 and len(levels[1]) == 3

    @given(st.integers(0, 2**31))
    def test_cut_disconnects(self, seed):
        rng = random.Random(seed)
        h = nx.connected_watts_strogatz_graph(rng.randint(4, 16), 2, 0.3, seed=rng.randrange(2**31))
        edges = [(f"n{u}", f"n{v}") if rng.random() < 0.5 else (f"n{v}", f"n{u}") for u, v in h.edges]
        g = DirGraph([f"n{v}" for v in h.nodes], edges)
        bis = girvan_newman_bisect(g)
        rest = g.without_pairs(bis.cut)
        assert len(weak_components(rest)) == 2
        assert bis.community_a | bis.community_b == g.vertices


class TestCompare:
    def test_chain_pruned(self):
        before = DirGraph("abc", [("a", "b"), ("b", "c")])
        after = before.without_pairs([("a", "b")])
        rows, unmatched = compare_countermeasure(before, after, top_k=1)
        assert unmatched == []
        (row,) = rows
        assert (row.vertex, row.desc_before, row.desc_after) == ("a", 2, 0)
        assert row.desc_reduction_pct == 100.0

    def test_identity(self):
        g = planted_hub_dag(2, n=60, hub_out=10)
        rows, _ = compare_countermeasure(g, g, top_k=10)
        assert all(r.desc_reduction_pct == 0 and r.ecc_reduction_pct == 0 for r in rows)

    def test_cluster_matching(self):
        before = DirGraph(["x", "y"], [("x", "y")])
        after = DirGraph(["x2", "y"], [("x2", "y")])
        cb = ClusterMap({"x": frozenset({"x", "m"}), "y": frozenset({"y"})})
        ca = ClusterMap({"x2": frozenset({"m"}), "y": frozenset({"y"})})
        rows, unmatched = compare_countermeasure(before, after, 2, cb, ca)
        assert rows[0].matched == "x2" and unmatched == []

    def test_unmatched(self):
        rows, unmatched = compare_countermeasure(DirGraph(["q"]), DirGraph(["r"]), top_k=1)
        assert unmatched == ["q"] and rows[0].desc_after is None


class TestIngressRisk:
    KINDS = {"w1": "workstation", "w2": "workstation", "s1": "server", "s2": "server"}

    def test_fraction(self):
        assert ingress_risk({"w1"}, self.KINDS, "workstation") == 0.5
        assert ingress_risk({"w1"}, self.KINDS) == 0.25

    def test_disjoint(self):
        assert ingress_risk({"w1"}, self.KINDS, "server") == 0

    def test_whole_population(self):
        assert ingress_risk({"s1", "s2"}, self.KINDS, "server") == 1

    def test_empty_population(self):
        with pytest.raises(ValidationError):
            ingress_risk(set(), {"a": "server"}, "workstation")
