"""Spreader analysis: spreadability vectors, outlier mining, remediation helpers."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from authnet.centrality import SPREAD_FIELDS, KatzParams, SpreadVector, spread_vectors
from authnet.errors import AnalysisError, ValidationError
from authnet.graph import DirGraph, descendants, reach_profile
from authnet.ingest.build import ClusterMap
from authnet.outliers import DbscanParams, dbscan, standardize

log = logging.getLogger(__name__)


@dataclass
class SpreaderReport:
    vertices: list[str]
    vectors: dict[str, SpreadVector]
    standardized: dict[str, tuple[float, ...]]
    outliers: list[str]
    epsilon: float
    params: DbscanParams
    kinds: dict[str, str] = field(default_factory=dict)

    def is_outlier(self, v: str) -> bool:
        return v in self._outlier_set

    @property
    def _outlier_set(self) -> set[str]:
        return set(self.outliers)

    def to_json(self) -> dict:
        return {
            "min_pts": self.params.min_pts,
            "epsilon": self.epsilon,
            "spreaders": self.outliers,
            "vertices": [
                {
                    "vertex": v,
                    "kind": self.kinds.get(v, "system"),
                    "metrics": dict(zip(SPREAD_FIELDS, self.vectors[v].as_tuple())),
                    "standardized": dict(zip(SPREAD_FIELDS, self.standardized[v])),
                    "is_outlier": v in self._outlier_set,
                }
                for v in self.vertices
            ],
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vertex", *SPREAD_FIELDS, *(f"z_{f}" for f in SPREAD_FIELDS), "is_outlier"])
            for v in self.vertices:
                raw = self.vectors[v].as_tuple()
                z = self.standardized[v]
                w.writerow([v, *(repr(x) for x in raw), *(repr(float(x)) for x in z), int(self.is_outlier(v))])


def find_spreaders(
    g: DirGraph,
    params: DbscanParams | None = None,
    katz: KatzParams | None = None,
    mode: str = "equal",
    max_paths: int | None = None,
) -> SpreaderReport:
    """Spreaders are DBSCAN outliers in the standardized five-metric space."""
    params = params or DbscanParams()
    if len(g) < params.min_pts:
        raise ValidationError(f"{len(g)} vertices is fewer than min_pts={params.min_pts}")
    vectors = spread_vectors(g, katz, mode, max_paths)
    order = list(g.order)
    z = standardize([vectors[v].as_tuple() for v in order])
    result = dbscan(z, params)
    outliers = [order[i] for i in result.outliers]
    return SpreaderReport(
        vertices=order,
        vectors=vectors,
        standardized={v: tuple(float(c) for c in z[i]) for i, v in enumerate(order)},
        outliers=outliers,
        epsilon=result.epsilon,
        params=params,
    )


def descendants_subgraph(g: DirGraph, v: str) -> DirGraph:
    """The vertex, its descendants, and every edge among them."""
    return g.subgraph(descendants(g, v) | {v})


# ---------------------------------------------------------------------------
# Girvan-Newman remediation


def _undirected(g: DirGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(g.order)
    h.add_edges_from((u, v) for u, v in g.pairs)
    return h


def _edge_key(e: tuple[str, str]) -> tuple[str, str]:
    return tuple(sorted(e))


@dataclass(frozen=True)
class Bisection:
    community_a: frozenset[str]
    community_b: frozenset[str]
    cut: tuple[tuple[str, str], ...]  # directed original edges between the communities
    removed: tuple[tuple[str, str], ...]  # undirected edges removed, in order


def girvan_newman_bisect(g: DirGraph) -> Bisection:
    """Remove highest edge-betweenness edges (undirected projection) until the
    graph falls into two weakly connected components.

    Ties are broken by the smallest (sorted endpoint) edge id.
    """
    h = _undirected(g)
    if h.number_of_nodes() < 2 or not nx.is_connected(h):
        raise AnalysisError("Girvan-Newman bisection needs a connected graph with >= 2 vertices")
    removed: list[tuple[str, str]] = []
    while nx.is_connected(h):
        eb = nx.edge_betweenness_centrality(h, normalized=False)
        top = max(eb.values())
        cands = sorted(_edge_key(e) for e, val in eb.items() if val >= top - 1e-9 * max(1.0, top))
        e = cands[0]
        h.remove_edge(*e)
        removed.append(e)
    comps = sorted((frozenset(c) for c in nx.connected_components(h)), key=lambda c: min(c))
    a, b = comps[0], comps[1]
    cut = tuple(sorted((u, v) for u, v in g.pairs if (u in a) != (v in a)))
    return Bisection(a, b, cut, tuple(removed))


def girvan_newman_levels(g: DirGraph, max_levels: int | None = None):
    """Yield successively finer partitions (as lists of vertex sets)."""
    h = _undirected(g)
    n_comp = nx.number_connected_components(h)
    levels = 0
    while h.number_of_edges():
        eb = nx.edge_betweenness_centrality(h, normalized=False)
        top = max(eb.values())
        e = sorted(_edge_key(e) for e, val in eb.items() if val >= top - 1e-9 * max(1.0, top))[0]
        h.remove_edge(*e)
        now = nx.number_connected_components(h)
        if now > n_comp:
            n_comp = now
            yield sorted((frozenset(c) for c in nx.connected_components(h)), key=lambda c: min(c))
            levels += 1
            if max_levels is not None and levels >= max_levels:
                return


# ---------------------------------------------------------------------------
# countermeasure comparison and ingress risk


@dataclass(frozen=True)
class ComparisonRow:
    vertex: str
    matched: str | None
    desc_before: int
    desc_after: int | None
    ecc_before: int
    ecc_after: int | None

    @staticmethod
    def _pct(before: int, after: int | None) -> float | None:
        if after is None:
            return None
        return 0.0 if before == 0 else 100.0 * (before - after) / before

    @property
    def desc_reduction_pct(self) -> float | None:
        return self._pct(self.desc_before, self.desc_after)

    @property
    def ecc_reduction_pct(self) -> float | None:
        return self._pct(self.ecc_before, self.ecc_after)

    def to_json(self) -> dict:
        return {
            "vertex": self.vertex,
            "matched": self.matched,
            "v_desc_before": self.desc_before,
            "v_desc_after": self.desc_after,
            "v_desc_reduction_pct": self.desc_reduction_pct,
            "ecc_before": self.ecc_before,
            "ecc_after": self.ecc_after,
            "ecc_reduction_pct": self.ecc_reduction_pct,
        }


def _profile_map(g: DirGraph) -> dict[str, tuple[int, int]]:
    prof = reach_profile(g)
    return {v: (int(prof.n_desc[i]), int(prof.ecc[i])) for i, v in enumerate(g.order)}


def compare_countermeasure(
    before: DirGraph,
    after: DirGraph,
    top_k: int = 20,
    clusters_before: ClusterMap | None = None,
    clusters_after: ClusterMap | None = None,
) -> tuple[list[ComparisonRow], list[str]]:
    """Before/after descendants and eccentricity for the top *top_k* vertices of
    *before* (ranked by descendants, then eccentricity).  Returns (rows, unmatched).

    Vertices are matched through cluster membership when maps are given; a
    before-vertex whose members landed in several after-clusters is compared
    against the largest of them.
    """
    pb, pa = _profile_map(before), _profile_map(after)
    ranked = sorted(before.order, key=lambda v: (-pb[v][0], -pb[v][1], v))[:top_k]
    rows, unmatched = [], []
    rep_after = clusters_after.rep_of if clusters_after else {}
    for v in ranked:
        members = clusters_before.members.get(v, frozenset({v})) if clusters_before else {v}
        cands = {rep_after.get(m, m) for m in members} & after.vertices
        if not cands:
            unmatched.append(v)
            rows.append(ComparisonRow(v, None, pb[v][0], None, pb[v][1], None))
            continue
        m = max(sorted(cands), key=lambda c: pa[c])
        rows.append(ComparisonRow(v, m, pb[v][0], pa[m][0], pb[v][1], pa[m][1]))
    return rows, unmatched


POPULATIONS = ("all", "workstation", "server")


def ingress_risk(spreaders: list[str] | set[str], kinds: dict[str, str], population: str = "all") -> float:
    """Chance that a uniformly random ingress point in *population* is a spreader."""
    if population == "all":
        pop = set(kinds)
    else:
        pop = {v for v, k in kinds.items() if k == population}
    if not pop:
        raise ValidationError(f"population {population!r} is empty")
    return len(set(spreaders) & pop) / len(pop)
