"""
Gatekeeper analysis around a defended target set.

The target subgraph keeps only edges on shortest paths into the targets.
Gatekeepers are non-target vertices whose target-restricted betweenness is
an outlier on the high side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from authnet.centrality import target_betweenness_all
from authnet.contagion import Model
from authnet.errors import ConfigError, ValidationError
from authnet.graph import DirGraph, Edge, reverse_bfs_distances
from authnet.ingest.records import SessionRecord
from authnet.outliers import DbscanParams, dbscan, standardize

log = logging.getLogger(__name__)


class Betweenness(str, Enum):
    SUM_OVER_TARGETS = "sum"
    MAX_OVER_TARGETS = "max"
    WEIGHTED_MAX_OVER_TARGETS = "weighted_max"


class WeightBase(str, Enum):
    SURVIVAL = "survival"  # p = 1 - detect_prob
    DETECTION = "detection"  # p = detect_prob


def _targets_in(g: DirGraph, targets) -> frozenset[str]:
    ts = frozenset(targets)
    if not ts:
        raise ValidationError("target set is empty")
    for t in ts:
        g.check(t)
    return ts


def _tight_edges(g: DirGraph, targets: frozenset[str]):
    """Yield (x, y, t, d(x, t)) for every edge on a shortest path into target t."""
    for t in sorted(targets):
        dist = reverse_bfs_distances(g, t)
        for y, dy in dist.items():
            for x in g.pred(y):
                if dist.get(x) == dy + 1:
                    yield x, y, t, dy + 1


def target_subgraph(combined: DirGraph, targets) -> DirGraph:
    """Union of all shortest s -> t paths over sources s and targets t."""
    ts = _targets_in(combined, targets)
    keep: set[tuple[str, str]] = {(x, y) for x, y, _, _ in _tight_edges(combined, ts)}
    verts = set(ts) | {x for x, _ in keep} | {y for _, y in keep}
    if not keep:
        log.warning("no vertex reaches any target; target subgraph is empty")
    edges = [e for e in combined.edges if (e.src, e.dst) in keep]
    return DirGraph(verts, edges)


def weight_edges_sir(
    subgraph: DirGraph,
    targets,
    detect_prob: float,
    base: WeightBase | str = WeightBase.SURVIVAL,
) -> DirGraph:
    """Weight each edge by p^(n-1), n being the hop count of the shortest
    target path it serves, keeping the largest candidate.

    Every shortest s -> t path hands p^(d(s,t)-1) to its edges; along a fixed
    edge (x, y) the largest candidate comes from s = x, so the weight is
    p^(d(x,t)-1) minimized over the targets t the edge leads to.
    """
    if not 0.0 <= detect_prob < 1.0:
        raise ValidationError("detect_prob must lie in [0, 1)")
    base = WeightBase(base)
    p = 1.0 - detect_prob if base is WeightBase.SURVIVAL else detect_prob
    ts = _targets_in(subgraph, targets)
    hops: dict[tuple[str, str], int] = {}
    for x, y, _, n in _tight_edges(subgraph, ts):
        if n < hops.get((x, y), n + 1):
            hops[(x, y)] = n
    weights = {pair: p ** (n - 1) for pair, n in hops.items()}
    edges = [Edge(e.src, e.dst, e.provenance, weights.get((e.src, e.dst), 1.0)) for e in subgraph.edges]
    return DirGraph(subgraph.order, edges)


@dataclass(frozen=True)
class TargetQuery:
    targets: frozenset[str]
    mode: Model = Model.SI
    detect_prob: float = 0.0
    betweenness: Betweenness = Betweenness.SUM_OVER_TARGETS
    dbscan: DbscanParams = field(default_factory=DbscanParams)
    weight_base: WeightBase = WeightBase.SURVIVAL
    top_k: int = 10
    prune_dominated: bool = False

    def __post_init__(self) -> None:
        if not self.targets:
            raise ValidationError("target set is empty")
        if self.mode is Model.SIR:
            if self.betweenness is not Betweenness.WEIGHTED_MAX_OVER_TARGETS:
                raise ValidationError("SIR queries use the weighted max-over-targets betweenness")
            if not 0.0 <= self.detect_prob < 1.0:
                raise ValidationError("detect_prob must lie in [0, 1)")
        elif self.detect_prob != 0.0:
            raise ValidationError("detect_prob only applies to SIR queries")
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")


@dataclass
class Gatekeeper:
    vertex: str
    score: float
    z: float
    witness: str | None

    def to_json(self) -> dict:
        return {"vertex": self.vertex, "score": self.score, "z": self.z, "witness": self.witness}


@dataclass
class GatekeeperReport:
    query: TargetQuery
    subgraph: DirGraph
    scores: dict[str, tuple[float, str | None]]
    gatekeepers: list[Gatekeeper]
    epsilon: float | None
    fallback: bool = False
    pruned: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "targets": sorted(self.query.targets),
            "mode": self.query.mode.value,
            "detect_prob": self.query.detect_prob,
            "betweenness": self.query.betweenness.value,
            "subgraph_vertices": len(self.subgraph),
            "subgraph_edges": self.subgraph.pair_count,
            "epsilon": self.epsilon,
            "fallback_top_k": self.fallback,
            "gatekeepers": [g.to_json() for g in self.gatekeepers],
            "pruned": self.pruned,
            "exposure": [{"target": t, "k_in": k} for t, k in target_exposure_ranking(self.subgraph, self.query.targets)],
        }


def _dominated(sub: DirGraph, v: str, others: set[str], targets: frozenset[str]) -> bool:
    """True when every path from v to a target meets another gatekeeper."""
    seen = {v}
    stack = [v]
    while stack:
        x = stack.pop()
        for y in sub.succ(x):
            if y in targets:
                return False
            if y in seen or y in others:
                continue
            seen.add(y)
            stack.append(y)
    return True


def find_gatekeepers(query: TargetQuery, combined: DirGraph) -> GatekeeperReport:
    sub = target_subgraph(combined, query.targets)
    if query.mode is Model.SIR:
        sub = weight_edges_sir(sub, query.targets, query.detect_prob, query.weight_base)
    scores = target_betweenness_all(sub, query.targets, query.betweenness.value) if len(sub) else {}
    order = [v for v in sub.order if v not in query.targets]
    if not order or not sub.pair_count:
        return GatekeeperReport(query, sub, scores, [], None)

    raw = np.array([scores[v][0] for v in order])
    z = standardize(raw)[:, 0]
    fallback = len(order) < query.dbscan.min_pts
    if fallback:
        log.warning("%d candidate vertices is fewer than min_pts=%d; reporting top %d by score",
                    len(order), query.dbscan.min_pts, query.top_k)
        ranked = sorted((i for i in range(len(order)) if raw[i] > 0), key=lambda i: (-raw[i], order[i]))
        picked = ranked[: query.top_k]
        eps = None
    else:
        res = dbscan(z[:, None], query.dbscan)
        # only the high tail matters for a conduit
        picked = sorted((i for i in res.outliers if z[i] > 0), key=lambda i: (-raw[i], order[i]))
        eps = res.epsilon
    keepers = [Gatekeeper(order[i], float(raw[i]), float(z[i]), scores[order[i]][1]) for i in picked]

    pruned: list[str] = []
    if query.prune_dominated and keepers:
        names = {g.vertex for g in keepers}
        pruned = sorted(g.vertex for g in keepers if _dominated(sub, g.vertex, names - {g.vertex}, query.targets))
        keepers = [g for g in keepers if g.vertex not in pruned]
    return GatekeeperReport(query, sub, scores, keepers, eps, fallback, pruned)


def target_exposure_ranking(subgraph: DirGraph, targets) -> list[tuple[str, int]]:
    """Targets by in-degree within the target subgraph, largest first."""
    ts = [t for t in targets if t in subgraph]
    return sorted(((t, subgraph.in_degree(t)) for t in ts), key=lambda p: (-p[1], p[0]))


def resolve_targets(
    selector: str,
    sessions: list[SessionRecord],
    account_tiers: dict[str, str | None],
    rep_of: dict[str, str] | None = None,
) -> frozenset[str]:
    """Parse a target selector.

    ``sessions:tier=<label>`` selects the hosts of active sessions held by
    accounts of that tier; anything else is a file with one vertex id per line.
    """
    rep_of = rep_of or {}
    if selector.startswith("sessions:"):
        key, _, label = selector[len("sessions:"):].partition("=")
        if key != "tier" or not label:
            raise ConfigError(f"bad target selector {selector!r}; expected sessions:tier=<label>")
        return frozenset(
            rep_of.get(s.host, s.host)
            for s in sessions
            if s.active and account_tiers.get(s.account) == label
        )
    path = Path(selector)
    if not path.is_file():
        raise ConfigError(f"target file {selector!r} not found")
    lines = path.read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip() for line in lines if line.strip() and not line.lstrip().startswith("#"))
