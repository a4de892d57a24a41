"""GraphML / DOT / adjacency-CSV serialization for :class:`DirGraph`."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import networkx as nx

from authnet.errors import ValidationError
from authnet.graph import DirGraph, Edge, Provenance


def to_networkx(g: DirGraph, kinds: dict[str, str] | None = None) -> nx.MultiDiGraph:
    kinds = kinds or {}
    h = nx.MultiDiGraph()
    for v in g.order:
        h.add_node(v, kind=kinds.get(v, "system"))
    for e in g.edges:
        h.add_edge(e.src, e.dst, key=e.provenance.value, provenance=e.provenance.value, weight=e.weight)
    return h


def write_graphml(
    g: DirGraph,
    path: str | Path,
    kinds: dict[str, str] | None = None,
    weight_name: str = "weight",
) -> None:
    """Write *g* as GraphML with vertices and edges in canonical order."""
    h = to_networkx(g, kinds)
    if weight_name != "weight":
        for _, _, data in h.edges(data=True):
            data[weight_name] = data.pop("weight")
    nx.write_graphml(h, str(path), encoding="utf-8", prettyprint=True)


def read_graphml(path: str | Path, weight_name: str = "weight") -> tuple[DirGraph, dict[str, str]]:
    """Read a GraphML file written by :func:`write_graphml`; returns (graph, kinds)."""
    h = nx.read_graphml(str(path), force_multigraph=True)
    kinds = {str(v): str(d.get("kind", "system")) for v, d in h.nodes(data=True)}
    edges = []
    for u, v, d in h.edges(data=True):
        try:
            prov = Provenance(d.get("provenance", Provenance.LOCAL_ADMIN.value))
        except ValueError as exc:
            raise ValidationError(f"{path}: unknown provenance on {u}->{v}") from exc
        edges.append(Edge(str(u), str(v), prov, float(d.get(weight_name, 1.0))))
    return DirGraph(kinds, edges), kinds


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: DirGraph, name: str = "authnet", kinds: dict[str, str] | None = None,
           highlight: set[str] | None = None) -> str:
    kinds = kinds or {}
    highlight = highlight or set()
    out = io.StringIO()
    out.write(f"digraph {_dot_id(name)} {{\n")
    for v in g.order:
        attrs = [f"kind={_dot_id(kinds.get(v, 'system'))}"]
        if v in highlight:
            attrs.append("style=filled")
            attrs.append('fillcolor="red"')
        out.write(f"  {_dot_id(v)} [{', '.join(attrs)}];\n")
    for e in g.edges:
        out.write(
            f"  {_dot_id(e.src)} -> {_dot_id(e.dst)} "
            f"[provenance={_dot_id(e.provenance.value)}, weight={e.weight!r}];\n"
        )
    out.write("}\n")
    return out.getvalue()


def write_dot(g: DirGraph, path: str | Path, **kw) -> None:
    Path(path).write_text(to_dot(g, **kw), encoding="utf-8")


CSV_FIELDS = ("src", "dst", "provenance", "weight")


def write_edge_csv(g: DirGraph, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for e in g.edges:
            w.writerow([e.src, e.dst, e.provenance.value, repr(e.weight)])


def read_edge_csv(path: str | Path, vertices: list[str] | None = None) -> DirGraph:
    """Adjacency CSV with header src,dst[,provenance[,weight]]."""
    edges = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"src", "dst"} <= set(reader.fieldnames):
            raise ValidationError(f"{path}: adjacency CSV needs src,dst columns")
        for lineno, row in enumerate(reader, start=2):
            try:
                prov = Provenance(row.get("provenance") or Provenance.LOCAL_ADMIN.value)
                weight = float(row.get("weight") or 1.0)
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            edges.append(Edge(row["src"], row["dst"], prov, weight))
    return DirGraph(vertices or (), edges)
