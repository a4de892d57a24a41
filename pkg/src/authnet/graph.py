"""
Immutable directed authentication graph and the structural algorithms
the exposure analyses are built on.

Vertices are system ids (strings).  Edges carry a provenance tag that
records *why* the edge exists (a local administrator grant, credential
residue from a logon session, or an observed contagion transmission) and
a non-negative weight.  Structural algorithms work on the *pair* view of
the graph: u -> v is adjacent if any provenance connects them.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from authnet.errors import PathCountOverflow, ValidationError, VertexNotFound

INT64_MAX = 2**63 - 1


class Provenance(str, Enum):
    LOCAL_ADMIN = "local_admin"
    SESSION = "session"
    TRANSMISSION = "transmission"


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    provenance: Provenance = Provenance.LOCAL_ADMIN
    weight: float = 1.0


def _as_edge(item) -> Edge:
    if isinstance(item, Edge):
        return item
    src, dst, *rest = item
    prov = Provenance(rest[0]) if rest else Provenance.LOCAL_ADMIN
    weight = float(rest[1]) if len(rest) > 1 else 1.0
    return Edge(str(src), str(dst), prov, weight)


class DirGraph:
    """Directed graph with provenance-tagged edges.

    Instances never change after construction; derived graphs are built with
    :meth:`with_edges`, :meth:`without_pairs` or :meth:`subgraph`.
    """

    def __init__(self, vertices: Iterable[str] = (), edges: Iterable = ()) -> None:
        verts = {str(v) for v in vertices}
        table: dict[tuple[str, str, Provenance], float] = {}
        for item in edges:
            e = _as_edge(item)
            if e.src == e.dst:
                raise ValidationError(f"self-loop on {e.src!r}")
            if not (e.weight >= 0 and math.isfinite(e.weight)):
                raise ValidationError(f"edge {e.src}->{e.dst} has invalid weight {e.weight}")
            key = (e.src, e.dst, e.provenance)
            if key in table:
                raise ValidationError(f"duplicate edge {e.src}->{e.dst} ({e.provenance.value})")
            table[key] = e.weight
            verts.add(e.src)
            verts.add(e.dst)
        self._vertices = frozenset(verts)
        self._table = table
        succ: dict[str, set[str]] = {v: set() for v in verts}
        pred: dict[str, set[str]] = {v: set() for v in verts}
        pair_w: dict[tuple[str, str], float] = {}
        for (u, v, _), w in table.items():
            succ[u].add(v)
            pred[v].add(u)
            pair_w[(u, v)] = max(w, pair_w.get((u, v), 0.0))
        self._succ = {v: frozenset(s) for v, s in succ.items()}
        self._pred = {v: frozenset(s) for v, s in pred.items()}
        self._pair_w = pair_w

    # -- basic accessors -------------------------------------------------

    @property
    def vertices(self) -> frozenset[str]:
        return self._vertices

    @cached_property
    def order(self) -> tuple[str, ...]:
        """Vertices in canonical (sorted) order."""
        return tuple(sorted(self._vertices))

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.order)}

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(
            sorted(Edge(u, v, p, w) for (u, v, p), w in self._table.items())
        )

    @property
    def pairs(self) -> Iterator[tuple[str, str]]:
        return iter(self._pair_w)

    def pair_set(self) -> set[tuple[str, str]]:
        return set(self._pair_w)

    def __len__(self) -> int:
        return len(self._vertices)

    def __contains__(self, v: object) -> bool:
        return v in self._vertices

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DirGraph):
            return NotImplemented
        return self._vertices == other._vertices and self._table == other._table

    def __hash__(self) -> int:
        return hash((self._vertices, frozenset(self._table.items())))

    def __repr__(self) -> str:
        return f"DirGraph(|V|={len(self._vertices)}, |E|={self.pair_count})"

    @property
    def pair_count(self) -> int:
        """Number of distinct adjacent (src, dst) pairs."""
        return len(self._pair_w)

    @property
    def edge_record_count(self) -> int:
        return len(self._table)

    def check(self, v: str) -> None:
        if v not in self._vertices:
            raise VertexNotFound(v)

    def succ(self, v: str) -> frozenset[str]:
        try:
            return self._succ[v]
        except KeyError:
            raise VertexNotFound(v) from None

    def pred(self, v: str) -> frozenset[str]:
        try:
            return self._pred[v]
        except KeyError:
            raise VertexNotFound(v) from None

    def out_degree(self, v: str) -> int:
        return len(self.succ(v))

    def in_degree(self, v: str) -> int:
        return len(self.pred(v))

    def has_edge(self, u: str, v: str, provenance: Provenance | None = None) -> bool:
        if provenance is None:
            return (u, v) in self._pair_w
        return (u, v, provenance) in self._table

    def weight(self, u: str, v: str) -> float:
        """Largest weight over the provenances connecting u -> v."""
        return self._pair_w[(u, v)]

    def provenances(self, u: str, v: str) -> set[Provenance]:
        return {p for p in Provenance if (u, v, p) in self._table}

    # -- derived graphs --------------------------------------------------

    def with_edges(self, edges: Iterable, vertices: Iterable[str] = ()) -> DirGraph:
        """Union with extra edges; an existing (src, dst, provenance) keeps the larger weight."""
        table = dict(self._table)
        for item in edges:
            e = _as_edge(item)
            key = (e.src, e.dst, e.provenance)
            table[key] = max(e.weight, table.get(key, e.weight))
        return DirGraph(
            self._vertices | set(vertices),
            (Edge(u, v, p, w) for (u, v, p), w in table.items()),
        )

    def without_pairs(self, pairs: Iterable[tuple[str, str]]) -> DirGraph:
        drop = set(pairs)
        return DirGraph(
            self._vertices,
            (Edge(u, v, p, w) for (u, v, p), w in self._table.items() if (u, v) not in drop),
        )

    def subgraph(self, keep: Iterable[str]) -> DirGraph:
        keep = set(keep)
        return DirGraph(
            keep & self._vertices,
            (
                Edge(u, v, p, w)
                for (u, v, p), w in self._table.items()
                if u in keep and v in keep
            ),
        )

    def reweighted(self, weights: dict[tuple[str, str], float]) -> DirGraph:
        """Copy with pair weights replaced (pairs absent from *weights* keep theirs)."""
        return DirGraph(
            self._vertices,
            (
                Edge(u, v, p, weights.get((u, v), w))
                for (u, v, p), w in self._table.items()
            ),
        )

    def relabeled(self, mapping: dict[str, str]) -> DirGraph:
        return DirGraph(
            (mapping.get(v, v) for v in self._vertices),
            (
                Edge(mapping.get(u, u), mapping.get(v, v), p, w)
                for (u, v, p), w in self._table.items()
            ),
        )

    # -- matrix views ----------------------------------------------------

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """0/1 adjacency (pair view) in :attr:`order` indexing."""
        n = len(self.order)
        idx = self.index
        if not self._pair_w:
            return sparse.csr_matrix((n, n), dtype=np.float64)
        rows = np.fromiter((idx[u] for u, _ in self._pair_w), dtype=np.int64)
        cols = np.fromiter((idx[v] for _, v in self._pair_w), dtype=np.int64)
        data = np.ones(len(rows), dtype=np.float64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    @cached_property
    def on_cycle(self) -> frozenset[str]:
        """Vertices lying on at least one directed cycle."""
        if not self._pair_w:
            return frozenset()
        _, labels = csgraph.connected_components(self.adjacency, directed=True, connection="strong")
        sizes = np.bincount(labels)
        return frozenset(v for v, lab in zip(self.order, labels) if sizes[lab] > 1)


# ---------------------------------------------------------------------------
# single-source traversals


def bfs_distances(g: DirGraph, source: str) -> dict[str, int]:
    """Hop distances from *source* to every vertex it reaches (source at 0)."""
    g.check(source)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in g.succ(u):
            if w not in dist:
                dist[w] = du
                queue.append(w)
    return dist


def reverse_bfs_distances(g: DirGraph, target: str | Iterable[str]) -> dict[str, int]:
    """Hop distances *to* a target (or to the nearest of several targets)."""
    sources = [target] if isinstance(target, str) else list(target)
    for t in sources:
        g.check(t)
    dist = {t: 0 for t in sources}
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in g.pred(u):
            if w not in dist:
                dist[w] = du
                queue.append(w)
    return dist


def descendants(g: DirGraph, v: str) -> set[str]:
    """Vertices reachable from *v* by a path of length >= 1."""
    g.check(v)
    seen: set[str] = set()
    stack = list(g.succ(v))
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(w for w in g.succ(u) if w not in seen)
    return seen


def eccentricity(g: DirGraph, v: str) -> int:
    """Largest shortest-path hop count from *v* to a vertex it reaches."""
    return max(bfs_distances(g, v).values())


def shortest_path_dag(
    g: DirGraph, s: str
) -> tuple[dict[str, int], dict[str, int], dict[str, set[str]]]:
    """BFS distances, exact shortest-path counts and predecessor sets from *s*."""
    g.check(s)
    dist = {s: 0}
    count = {s: 1}
    preds: dict[str, set[str]] = {s: set()}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in g.succ(u):
            if w not in dist:
                dist[w] = du
                count[w] = 0
                preds[w] = set()
                queue.append(w)
            if dist[w] == du:
                count[w] += count[u]
                if count[w] > INT64_MAX:
                    raise PathCountOverflow(f"shortest-path count {s}->{w} overflows 64 bits")
                preds[w].add(u)
    return dist, count, preds


def count_paths_through(
    g: DirGraph, s: str, t: str, via: str | None = None, max_len: int = 1
) -> dict[int, int]:
    """Count simple directed paths s -> t by length (1..max_len).

    With *via*, only paths having *via* as an interior vertex are counted.
    """
    g.check(s)
    g.check(t)
    if via is not None:
        g.check(via)
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    counts: dict[int, int] = {}
    if s == t or via in (s, t):
        return counts
    on_path = {s}
    # iterative DFS: stack of (vertex, iterator over successors, via_seen)
    stack = [(s, iter(sorted(g.succ(s))), False)]
    while stack:
        u, it, through = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            on_path.discard(u)
            continue
        if nxt in on_path:
            continue
        depth = len(stack)
        if nxt == t:
            if via is None or through:
                counts[depth] = counts.get(depth, 0) + 1
                if counts[depth] > INT64_MAX:
                    raise PathCountOverflow(f"path count {s}->{t} overflows 64 bits")
            continue
        if depth < max_len:
            on_path.add(nxt)
            stack.append((nxt, iter(sorted(g.succ(nxt))), through or nxt == via))
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# whole-graph structure


def distance_rows(g: DirGraph, chunk: int = 256) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (row index, hop-distance row) for every vertex; inf marks unreachable."""
    n = len(g.order)
    if n == 0:
        return
    adj = g.adjacency
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        if adj.nnz == 0:
            block = np.full((len(idx), n), np.inf)
            block[np.arange(len(idx)), idx] = 0.0
        else:
            block = csgraph.shortest_path(adj, method="D", directed=True, unweighted=True, indices=idx)
        for k, i in enumerate(idx):
            yield int(i), block[k]


@dataclass(frozen=True)
class ReachProfile:
    """Per-vertex descendant counts and eccentricities in :attr:`DirGraph.order` order."""

    n_desc: np.ndarray
    ecc: np.ndarray


def reach_profile(g: DirGraph) -> ReachProfile:
    n = len(g.order)
    n_desc = np.zeros(n, dtype=np.int64)
    ecc = np.zeros(n, dtype=np.int64)
    cyc = g.on_cycle
    for i, row in distance_rows(g):
        finite = np.isfinite(row)
        cnt = int(finite.sum()) - 1
        if g.order[i] in cyc:
            cnt += 1
        n_desc[i] = cnt
        ecc[i] = int(row[finite].max()) if cnt else 0
    return ReachProfile(n_desc, ecc)


@dataclass(frozen=True)
class GraphStats:
    vertex_count: int
    edge_count: int
    mean_out_degree: float
    tree_count: int
    component_count: int
    rgb_over_gcc: float
    mean_eccentricity: float
    diameter: int
    mean_descendants: float

    def as_row(self) -> dict[str, float | int]:
        return {
            "V": self.vertex_count,
            "E": self.edge_count,
            "mean_k_out": round(self.mean_out_degree, 4),
            "trees": self.tree_count,
            "components": self.component_count,
            "rgb_over_gcc": round(self.rgb_over_gcc, 4),
            "mean_ecc": round(self.mean_eccentricity, 4),
            "diameter": self.diameter,
            "mean_desc": round(self.mean_descendants, 4),
        }


def weak_components(g: DirGraph) -> list[set[str]]:
    """Weakly connected components, largest first (ties: smallest member id)."""
    if not g.vertices:
        return []
    _, labels = csgraph.connected_components(g.adjacency, directed=True, connection="weak")
    comps: dict[int, set[str]] = {}
    for v, lab in zip(g.order, labels):
        comps.setdefault(int(lab), set()).add(v)
    return sorted(comps.values(), key=lambda c: (-len(c), min(c)))


def residual_giant_ratio(g: DirGraph) -> float:
    """Largest remaining component over the giant weak component after the
    most damaging single articulation-point removal (1.0 if none exists)."""
    import networkx as nx

    comps = weak_components(g)
    if not comps:
        return 1.0
    gcc = comps[0]
    und = nx.Graph()
    und.add_nodes_from(gcc)
    und.add_edges_from((u, v) for u, v in g.pairs if u in gcc)
    best = len(gcc)
    for ap in sorted(nx.articulation_points(und)):
        h = und.subgraph(n for n in und if n != ap)
        largest = max((len(c) for c in nx.connected_components(h)), default=0)
        best = min(best, largest)
    return best / len(gcc)


def graph_stats(g: DirGraph) -> GraphStats:
    n = len(g)
    if n == 0:
        return GraphStats(0, 0, 0.0, 0, 0, 1.0, 0.0, 0, 0.0)
    prof = reach_profile(g)
    trees = sum(1 for v in g.order if not g.pred(v) and g.succ(v))
    return GraphStats(
        vertex_count=n,
        edge_count=g.pair_count,
        mean_out_degree=g.pair_count / n,
        tree_count=trees,
        component_count=len(weak_components(g)),
        rgb_over_gcc=residual_giant_ratio(g),
        mean_eccentricity=float(prof.ecc.mean()),
        diameter=int(prof.ecc.max()),
        mean_descendants=float(prof.n_desc.mean()),
    )


def diameter(g: DirGraph) -> int:
    if not g.vertices:
        return 0
    return int(reach_profile(g).ecc.max())


def kcore_out(g: DirGraph) -> dict[str, int]:
    """Out-degree shell index: the largest k whose out-k-core contains the vertex."""
    deg = {v: g.out_degree(v) for v in g.vertices}
    alive = set(g.vertices)
    shell: dict[str, int] = {}
    k = 0
    while alive:
        queue = deque(v for v in alive if deg[v] <= k)
        while queue:
            v = queue.popleft()
            if v not in alive:
                continue
            alive.discard(v)
            shell[v] = k
            for p in g.pred(v):
                if p in alive:
                    deg[p] -= 1
                    if deg[p] == k:
                        queue.append(p)
        k += 1
    return shell
