from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from authnet.graph import DirGraph, Edge, Provenance, graph_stats
from authnet.io import read_edge_csv, read_graphml, to_dot, write_edge_csv, write_graphml

G = DirGraph(
    ["a", "b", "c"],
    [Edge("a", "b"), Edge("a", "b", Provenance.SESSION, 0.25), Edge("b", "c", Provenance.TRANSMISSION, 3.0)],
)


def test_graphml_round_trip(tmp_path):
    path = tmp_path / "g.graphml"
    write_graphml(G, path, {"a": "workstation"})
    back, kinds = read_graphml(path)
    assert back == G
    assert kinds["a"] == "workstation" and kinds["b"] == "system"


def test_graphml_bytes_stable(tmp_path):
    write_graphml(G, tmp_path / "1.graphml")
    write_graphml(DirGraph(reversed(G.order), reversed(G.edges)), tmp_path / "2.graphml")
    assert (tmp_path / "1.graphml").read_bytes() == (tmp_path / "2.graphml").read_bytes()


def test_edge_csv_round_trip(tmp_path):
    path = tmp_path / "g.csv"
    write_edge_csv(G, path)
    assert read_edge_csv(path, list(G.order)) == G
    assert path.read_text().splitlines()[0] == "src,dst,provenance,weight"


def test_dot_contains_attributes():
    text = to_dot(G, highlight={"a"})
    assert '"a" -> "b" [provenance="session", weight=0.25];' in text
    assert 'fillcolor="red"' in text
    assert text.startswith('digraph "authnet" {')


@given(st.lists(st.tuples(st.sampled_from("pqrstu"), st.sampled_from("pqrstu")), max_size=20))
def test_stats_survive_graphml(tmp_path_factory, pairs):
    g = DirGraph("pqrstu", {(a, b) for a, b in pairs if a != b})
    path = tmp_path_factory.mktemp("gml") / "g.graphml"
    write_graphml(g, path)
    back, _ = read_graphml(path)
    assert graph_stats(back) == graph_stats(g)
