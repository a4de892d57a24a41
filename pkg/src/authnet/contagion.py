"""
SI / SIR contagion on an authnet.

A scenario starts from one compromised system and spreads serially, one
access at a time.  Infected systems stay infected.  Under SIR the adversary
is detected with probability ``detect_prob`` before each new access, which
ends the whole scenario.  An ensemble of scenarios is summarized as an
infection network whose edge weights count transmissions.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from authnet.errors import ValidationError
from authnet.graph import DirGraph, Edge, Provenance, bfs_distances, reverse_bfs_distances

MASK64 = (1 << 64) - 1


class Model(str, Enum):
    SI = "SI"
    SIR = "SIR"


class Strategy(str, Enum):
    RANDOM_SPREAD = "random"
    SHORTEST_PATH_TO_TARGETS = "shortest_path"


@dataclass(frozen=True)
class EpidemicConfig:
    model: Model = Model.SI
    detect_prob: float = 0.0
    strategy: Strategy = Strategy.RANDOM_SPREAD
    targets: frozenset[str] = frozenset()
    master_seed: int = 0
    max_scenarios: int | None = None  # default: 10 * max(|V|, |E|)
    coverage: str = "edges"  # or "vertices"

    def __post_init__(self) -> None:
        if not 0.0 <= self.detect_prob <= 1.0:
            raise ValidationError("detect_prob must lie in [0, 1]")
        if self.model is Model.SI and self.detect_prob != 0.0:
            raise ValidationError("SI model cannot have a detection probability")
        if self.strategy is Strategy.SHORTEST_PATH_TO_TARGETS and not self.targets:
            raise ValidationError("shortest-path strategy needs a nonempty target set")
        if self.coverage not in ("edges", "vertices"):
            raise ValidationError(f"unknown coverage rule {self.coverage!r}")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def scenario_seed(master_seed: int, index: int) -> int:
    return splitmix64(splitmix64(master_seed & MASK64) ^ (index & MASK64))


class _Allowed:
    """Edge filter for the shortest-path-to-targets strategy."""

    def __init__(self, g: DirGraph, targets: frozenset[str]) -> None:
        self.g = g
        self.to_target = {t: reverse_bfs_distances(g, t) for t in sorted(targets)}

    def edges_from(self, start: str) -> set[tuple[str, str]]:
        ds = bfs_distances(self.g, start)
        keep: set[tuple[str, str]] = set()
        for t, dt in self.to_target.items():
            if t not in ds or t == start:
                continue
            total = ds[t]
            for x, dx in ds.items():
                if x not in dt or dx + dt[x] != total:
                    continue
                for y in self.g.succ(x):
                    if dt.get(y) == dt[x] - 1:
                        keep.add((x, y))
        return keep


def run_scenario(
    g: DirGraph,
    start: str,
    cfg: EpidemicConfig,
    seed: int,
    allowed: set[tuple[str, str]] | None = None,
) -> list[tuple[str, str]]:
    """One serial epidemic from *start*; returns transmissions in order.

    Each step draws uniformly among frontier edges (infected -> susceptible).
    """
    g.check(start)
    if allowed is None and cfg.strategy is Strategy.SHORTEST_PATH_TO_TARGETS:
        allowed = _Allowed(g, cfg.targets).edges_from(start)
    rng = random.Random(seed)

    def out_edges(u: str) -> list[tuple[str, str]]:
        succ = sorted(g.succ(u))
        if allowed is not None:
            return [(u, w) for w in succ if (u, w) in allowed]
        return [(u, w) for w in succ]

    infected = {start}
    frontier = out_edges(start)
    transmissions: list[tuple[str, str]] = []
    while frontier:
        k = rng.randrange(len(frontier))
        u, w = frontier[k]
        frontier[k] = frontier[-1]
        frontier.pop()
        if w in infected:
            continue
        if cfg.model is Model.SIR and cfg.detect_prob > 0 and rng.random() < cfg.detect_prob:
            break
        infected.add(w)
        transmissions.append((u, w))
        frontier.extend(e for e in out_edges(w) if e[1] not in infected)
    return transmissions


@dataclass
class InfectionNetwork:
    graph: DirGraph
    infections: dict[str, int]
    scenarios: int
    uncovered: frozenset[str] = frozenset()
    uncovered_edges: frozenset[tuple[str, str]] = frozenset()
    traces: list[dict] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.uncovered and not self.uncovered_edges

    def transmissions(self, u: str, v: str) -> int:
        return int(self.graph.weight(u, v)) if self.graph.has_edge(u, v) else 0

    def write_traces(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.traces:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def run_ensemble(
    g: DirGraph, cfg: EpidemicConfig, threads: int = 1, keep_traces: bool = False
) -> InfectionNetwork:
    """Run scenarios in passes until coverage is reached or the budget runs out.

    The first pass starts once from every vertex.  Later passes restart from
    the sources of edges (or predecessors of vertices) not yet covered.  Pass
    membership depends only on earlier passes, and scenario *i* always uses
    the seed derived from (master_seed, i), so results do not depend on
    ``threads``.
    """
    order = g.order
    budget = cfg.max_scenarios if cfg.max_scenarios is not None else 10 * max(len(order), g.pair_count, 1)

    allowed_by_start: dict[str, set[tuple[str, str]]] | None = None
    if cfg.strategy is Strategy.SHORTEST_PATH_TO_TARGETS:
        allowed_obj = _Allowed(g, cfg.targets)
        allowed_by_start = {v: allowed_obj.edges_from(v) for v in order}
        eligible_edges = set().union(*allowed_by_start.values()) if allowed_by_start else set()
    else:
        eligible_edges = g.pair_set()
    eligible_vertices = {w for _, w in eligible_edges}

    counts: Counter[tuple[str, str]] = Counter()
    infections: Counter[str] = Counter()
    traces: list[dict] = []
    covered_edges: set[tuple[str, str]] = set()
    covered_vertices: set[str] = set()
    index = 0

    def one(job: tuple[int, str]) -> tuple[int, str, list[tuple[str, str]]]:
        i, start = job
        allowed = allowed_by_start[start] if allowed_by_start is not None else None
        return i, start, run_scenario(g, start, cfg, scenario_seed(cfg.master_seed, i), allowed)

    starts = list(order)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        while starts and index < budget:
            jobs = list(enumerate(starts[: budget - index], start=index))
            index += len(jobs)
            for i, start, trans in pool.map(one, jobs):
                infections[start] += 1
                for u, w in trans:
                    counts[(u, w)] += 1
                    infections[w] += 1
                    covered_edges.add((u, w))
                    covered_vertices.add(w)
                if keep_traces:
                    traces.append({"scenario": i, "start": start, "transmissions": trans})
            if cfg.coverage == "edges":
                missing = eligible_edges - covered_edges
                starts = sorted({u for u, _ in missing})
            else:
                missing_v = eligible_vertices - covered_vertices
                starts = sorted({u for u, w in eligible_edges if w in missing_v})

    net = DirGraph(
        order,
        (Edge(u, w, Provenance.TRANSMISSION, float(c)) for (u, w), c in sorted(counts.items())),
    )
    return InfectionNetwork(
        graph=net,
        infections={v: infections.get(v, 0) for v in order},
        scenarios=index,
        uncovered=frozenset(eligible_vertices - covered_vertices),
        uncovered_edges=frozenset(eligible_edges - covered_edges) if cfg.coverage == "edges" else frozenset(),
        traces=traces,
    )
