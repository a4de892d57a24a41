"""
Centrality measures behind the spreader, escalator and gatekeeper analyses.

Betweenness variants follow the Freeman endpoint convention: a vertex never
counts as lying "between" a pair it is an endpoint of.  Pairs that are not
connected contribute nothing.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from authnet.errors import AnalysisError, DivergenceError, PathCountOverflow, ValidationError
from authnet.graph import (
    INT64_MAX,
    DirGraph,
    distance_rows,
    reach_profile,
    reverse_bfs_distances,
)

# ---------------------------------------------------------------------------
# shortest-path betweenness


def freeman_betweenness_all(g: DirGraph) -> dict[str, float]:
    """Brandes accumulation of sum_{s != v != t} n^v_st / g_st for every vertex."""
    bc = dict.fromkeys(g.vertices, 0.0)
    for s in g.order:
        stack = []
        preds: dict[str, list[str]] = defaultdict(list)
        sigma = {s: 1}
        dist = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            stack.append(u)
            for w in g.succ(u):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    sigma[w] = 0
                    queue.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
                    preds[w].append(u)
        delta = dict.fromkeys(stack, 0.0)
        while stack:
            w = stack.pop()
            for u in preds[w]:
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def freeman_betweenness(g: DirGraph, v: str) -> float:
    g.check(v)
    return freeman_betweenness_all(g)[v]


# ---------------------------------------------------------------------------
# communicability betweenness over simple paths


def _path_weight(length: int, mode: str) -> float | int:
    if mode == "equal":
        return 1
    if mode == "factorial":
        return 1.0 / math.factorial(length)
    raise ValueError(f"unknown path weighting {mode!r}")


def communicability_betweenness_all(
    g: DirGraph,
    max_len: int,
    mode: str = "equal",
    max_paths: int | None = None,
) -> dict[str, float]:
    """Sum over ordered pairs of (weighted paths through v) / (weighted paths).

    Paths are simple directed paths of length 1..max_len.  ``mode="equal"``
    gives every path weight one; ``mode="factorial"`` weights a path of
    length k by 1/k!.  ``max_paths`` caps the enumeration per source and
    raises :class:`AnalysisError` when exceeded.
    """
    out = dict.fromkeys(g.vertices, 0.0)
    if max_len < 1:
        return out
    weights = [_path_weight(k, mode) if k else 0 for k in range(max_len + 1)]
    succ = {v: sorted(g.succ(v)) for v in g.order}
    for s in g.order:
        if not succ[s]:
            continue
        total: dict[str, float | int] = defaultdict(int)
        through: dict[tuple[str, str], float | int] = defaultdict(int)
        path = [s]
        on_path = {s}
        iters = [iter(succ[s])]
        n_paths = 0
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                iters.pop()
                on_path.discard(path.pop())
                continue
            if nxt in on_path:
                continue
            depth = len(path)
            w = weights[depth]
            total[nxt] += w
            for y in path[1:]:
                through[(y, nxt)] += w
            n_paths += 1
            if max_paths is not None and n_paths > max_paths:
                raise AnalysisError(
                    f"more than {max_paths} simple paths from {s!r}; raise max_paths or lower max_len"
                )
            if depth < max_len and succ[nxt]:
                path.append(nxt)
                on_path.add(nxt)
                iters.append(iter(succ[nxt]))
        if mode == "equal" and total and max(total.values()) > INT64_MAX:
            raise PathCountOverflow(f"path count from {s!r} overflows 64 bits")
        for (y, t), c in through.items():
            out[y] += c / total[t]
    return out


def communicability_betweenness_unnorm(
    g: DirGraph, v: str, max_len: int, mode: str = "equal"
) -> float:
    g.check(v)
    return communicability_betweenness_all(g, max_len, mode)[v]


# ---------------------------------------------------------------------------
# Katz centrality (left / out-edge orientation)


@dataclass(frozen=True)
class KatzParams:
    alpha: float | None = None  # None: derive from the spectral radius
    beta: float = 1.0
    tolerance: float = 1e-12
    max_iterations: int = 100_000
    bound: float = 1e150
    alpha_scale: float = 0.99  # fraction of 1/lambda_1 used on cyclic graphs

    def __post_init__(self) -> None:
        if self.alpha is not None and not self.alpha > 0:
            raise ValidationError("Katz alpha must be positive")
        if not 0 < self.alpha_scale <= 1:
            raise ValidationError("alpha_scale must lie in (0, 1]")


def spectral_radius(g: DirGraph) -> float:
    """Largest eigenvalue modulus of the adjacency matrix (0 for acyclic graphs)."""
    adj = g.adjacency
    if adj.nnz == 0:
        return 0.0
    n_comp, labels = csgraph.connected_components(adj, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=n_comp)
    best = 0.0
    for comp in np.flatnonzero(sizes > 1):
        idx = np.flatnonzero(labels == comp)
        sub = adj[idx][:, idx]
        if len(idx) <= 1500:
            lam = float(np.max(np.linalg.eigvals(sub.toarray()).real))
        else:
            from scipy.sparse.linalg import eigs

            lam = float(eigs(sub.astype(float), k=1, which="LR", return_eigenvectors=False)[0].real)
        best = max(best, lam)
    return best


def resolve_alpha(g: DirGraph, params: KatzParams) -> float:
    if params.alpha is not None:
        return params.alpha
    lam = spectral_radius(g)
    if lam <= 1e-9:
        return 1.0
    return params.alpha_scale / lam


def katz_left(g: DirGraph, params: KatzParams | None = None) -> dict[str, float]:
    """Fixed point of e(v) = alpha * sum_{v->s} e(s) + beta by Jacobi iteration."""
    params = params or KatzParams()
    n = len(g.order)
    if n == 0:
        return {}
    alpha = resolve_alpha(g, params)
    adj = g.adjacency
    x = np.full(n, params.beta, dtype=float)
    for _ in range(params.max_iterations):
        nxt = alpha * (adj @ x) + params.beta
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > params.bound:
            raise DivergenceError(
                f"Katz iteration exceeded bound {params.bound:g} (alpha={alpha:g})",
                dict(zip(g.order, x.tolist())),
            )
        if np.max(np.abs(nxt - x)) <= params.tolerance:
            return dict(zip(g.order, nxt.tolist()))
        x = nxt
    raise DivergenceError(
        f"Katz iteration did not converge in {params.max_iterations} steps (alpha={alpha:g})",
        dict(zip(g.order, x.tolist())),
    )


# ---------------------------------------------------------------------------
# collective influence


def collective_influence(g: DirGraph, v: str, level: int) -> float:
    """(k_out(v) - 1) * sum over vertices at exact distance *level* of max(k_out - 1, 0)."""
    from authnet.graph import bfs_distances

    if level < 1:
        raise ValueError("level must be >= 1")
    dist = bfs_distances(g, v)
    frontier = [u for u, d in dist.items() if d == level]
    if not frontier:
        return 0.0
    return float((g.out_degree(v) - 1) * sum(max(g.out_degree(u) - 1, 0) for u in frontier))


# ---------------------------------------------------------------------------
# spreadability vector


@dataclass(frozen=True)
class SpreadVector:
    v_desc: int
    ecc: int
    comm_betweenness: float
    katz: float
    collective_influence: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            float(self.v_desc),
            float(self.ecc),
            self.comm_betweenness,
            self.katz,
            self.collective_influence,
        )


SPREAD_FIELDS = ("v_desc", "ecc", "comm_betweenness", "katz", "collective_influence")


def spread_vector(g: DirGraph, v: str, katz_values: dict[str, float], diameter: int,
                  mode: str = "equal") -> SpreadVector:
    from authnet.graph import bfs_distances, descendants

    g.check(v)
    dist = bfs_distances(g, v)
    level = max(diameter, 1)
    return SpreadVector(
        v_desc=len(descendants(g, v)),
        ecc=max(dist.values()),
        comm_betweenness=communicability_betweenness_unnorm(g, v, level, mode) if diameter else 0.0,
        katz=katz_values[v],
        collective_influence=collective_influence(g, v, level),
    )


def spread_vectors(
    g: DirGraph,
    katz_params: KatzParams | None = None,
    mode: str = "equal",
    max_paths: int | None = None,
) -> dict[str, SpreadVector]:
    """Spreadability vectors for every vertex, sharing one all-pairs sweep."""
    n = len(g.order)
    if n == 0:
        return {}
    prof = reach_profile(g)
    diam = int(prof.ecc.max())
    katz = katz_left(g, katz_params)
    kout = np.asarray(g.adjacency.sum(axis=1)).ravel()
    excess = np.maximum(kout - 1, 0)
    ci = np.zeros(n)
    if diam >= 1:
        for i, row in distance_rows(g):
            if kout[i] == 0:
                continue
            ci[i] = (kout[i] - 1) * excess[row == diam].sum()
    comm = communicability_betweenness_all(g, diam, mode, max_paths) if diam else dict.fromkeys(g.order, 0.0)
    return {
        v: SpreadVector(int(prof.n_desc[i]), int(prof.ecc[i]), comm[v], katz[v], float(ci[i]))
        for i, v in enumerate(g.order)
    }


# ---------------------------------------------------------------------------
# target-restricted betweenness


def _check_targets(g: DirGraph, targets: Iterable[str]) -> frozenset[str]:
    ts = frozenset(targets)
    if not ts:
        raise ValidationError("target set is empty")
    for t in ts:
        g.check(t)
    return ts


def per_target_betweenness(
    g: DirGraph, targets: Iterable[str], weighted: bool = False
) -> dict[str, dict[str, float]]:
    """For each target t, sum over non-target sources s of n^v_st / g_st
    (or the edge-weight analogue w^v_st / w_st) for every non-target v.

    Works one target at a time on its shortest-path DAG, so the cost is
    O(|targets| * |E|) rather than a per-source enumeration.
    """
    ts = _check_targets(g, targets)
    out: dict[str, dict[str, float]] = {}
    for t in sorted(ts):
        dist = reverse_bfs_distances(g, t)
        by_dist = sorted(dist, key=lambda x: (dist[x], x))
        # dag successors of x toward t: y with dist[y] == dist[x] - 1
        sigma: dict[str, float] = {t: 1}
        wsum: dict[str, float] = {t: 0.0}
        down: dict[str, list[str]] = {}
        for x in by_dist[1:]:
            nxt = [y for y in g.succ(x) if dist.get(y) == dist[x] - 1]
            down[x] = nxt
            sigma[x] = sum(sigma[y] for y in nxt)
            if weighted:
                wsum[x] = sum(wsum[y] + g.weight(x, y) * sigma[y] for y in nxt)
        h1: dict[str, float] = defaultdict(float)
        h2: dict[str, float] = defaultdict(float)
        for u in reversed(by_dist[1:]):
            if weighted:
                src = 1.0 / wsum[u] if (u not in ts and wsum[u] > 0) else 0.0
            else:
                src = 1.0 / sigma[u] if u not in ts else 0.0
            a = h1[u] + src
            for y in down[u]:
                h1[y] += a
                if weighted:
                    h2[y] += h2[u] + g.weight(u, y) * a
        contrib: dict[str, float] = {}
        for v in by_dist[1:]:
            if v in ts:
                continue
            val = sigma[v] * h2[v] + wsum[v] * h1[v] if weighted else sigma[v] * h1[v]
            if val:
                contrib[v] = val
        out[t] = contrib
    return out


def target_betweenness(g: DirGraph, v: str, targets: Iterable[str]) -> float:
    g.check(v)
    per = per_target_betweenness(g, targets)
    return sum(c.get(v, 0.0) for c in per.values())


def max_target_betweenness(g: DirGraph, v: str, targets: Iterable[str]) -> float:
    g.check(v)
    per = per_target_betweenness(g, targets)
    return max(c.get(v, 0.0) for c in per.values())


def weighted_target_betweenness(g: DirGraph, v: str, targets: Iterable[str]) -> float:
    g.check(v)
    per = per_target_betweenness(g, targets, weighted=True)
    return max(c.get(v, 0.0) for c in per.values())


def target_betweenness_all(
    g: DirGraph, targets: Iterable[str], mode: str = "sum"
) -> dict[str, tuple[float, str | None]]:
    """Score every non-target vertex; returns v -> (score, witness target).

    ``mode`` is ``"sum"`` (over targets), ``"max"`` or ``"weighted_max"``.
    The witness is the maximizing target for the max modes (ties: smallest id)
    and ``None`` for the sum.
    """
    if mode not in ("sum", "max", "weighted_max"):
        raise ValueError(f"unknown betweenness mode {mode!r}")
    ts = _check_targets(g, targets)
    per = per_target_betweenness(g, ts, weighted=(mode == "weighted_max"))
    out: dict[str, tuple[float, str | None]] = {}
    for v in g.order:
        if v in ts:
            continue
        if mode == "sum":
            out[v] = (sum(c.get(v, 0.0) for c in per.values()), None)
            continue
        best, witness = 0.0, None
        for t in sorted(per):
            val = per[t].get(v, 0.0)
            if val > best:
                best, witness = val, t
        out[v] = (best, witness)
    return out


def rank_scores(scores: dict[str, float], digits: int = 9) -> list[str]:
    """Vertices ordered by descending score (rounded to absorb float noise), then id."""
    return sorted(scores, key=lambda v: (-round(scores[v], digits), v))
