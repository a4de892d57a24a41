"""
Cross-tier escalation analysis on the combined authnet.

An escalator is a system u holding a session of some tier while one of its
out-neighbors v concurrently holds a session of a strictly higher tier:
compromising u puts the higher-tier credential one hop away.
"""

from __future__ import annotations

import csv
from collections import defaultdict, deque
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from authnet.errors import ConfigError
from authnet.graph import DirGraph, Provenance
from authnet.ingest.records import SessionRecord


class Neighborhoods:
    """Out-neighborhoods as integer bitsets for fast set differences."""

    def __init__(self, g: DirGraph) -> None:
        self.g = g
        self._bits: dict[str, int] = {}

    def bits(self, v: str) -> int:
        b = self._bits.get(v)
        if b is None:
            idx = self.g.index
            b = 0
            for w in self.g.succ(v):
                b |= 1 << idx[w]
            self._bits[v] = b
        return b

    def gain(self, u: str, v: str) -> int:
        """|N(v) - N(v) & N(u)|"""
        return (self.bits(v) & ~self.bits(u)).bit_count()


@dataclass(frozen=True)
class DeltaMax:
    value: int
    witness: str | None

    @property
    def empty(self) -> bool:
        return self.witness is None


def delta_n_max(combined: DirGraph, u: str, candidates, nb: Neighborhoods | None = None) -> DeltaMax:
    """Largest neighborhood gain over the qualifying neighbors *candidates* of u."""
    nb = nb or Neighborhoods(combined)
    succ = combined.succ(u)
    best, witness = 0, None
    for v in sorted(candidates):
        if v not in succ:
            continue
        gain = nb.gain(u, v)
        if witness is None or gain > best:
            best, witness = gain, v
    return DeltaMax(best, witness)


def delta_n_avg(combined: DirGraph, u: str, nb: Neighborhoods | None = None) -> float:
    """Neighborhood gain averaged over all out-neighbors of u."""
    nb = nb or Neighborhoods(combined)
    succ = combined.succ(u)
    if not succ:
        raise ValueError(f"average neighborhood gain undefined: {u!r} has no out-neighbors")
    return sum(nb.gain(u, v) for v in succ) / len(succ)


@dataclass(frozen=True)
class Escalator:
    lower_host: str
    higher_host: str
    lower_session: SessionRecord
    higher_session: SessionRecord
    delta: int  # gain for this particular (u, v)
    delta_max: int
    delta_avg: float

    def to_json(self) -> dict:
        return {
            "lower_host": self.lower_host,
            "higher_host": self.higher_host,
            "lower_session": self.lower_session.sid,
            "lower_account": self.lower_session.account,
            "higher_session": self.higher_session.sid,
            "higher_account": self.higher_session.account,
            "delta": self.delta,
            "delta_max": self.delta_max,
            "delta_avg": self.delta_avg,
        }


class TierOrder:
    """Tier labels ordered from highest privilege to lowest."""

    def __init__(self, labels, account_tiers: dict[str, str | None]) -> None:
        self.labels = list(labels)
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("tier ordering has duplicate labels")
        self.rank = {t: i for i, t in enumerate(self.labels)}
        self.account_tiers = account_tiers

    def of(self, account: str) -> int:
        tier = self.account_tiers.get(account)
        if tier is None:
            raise ConfigError(f"account {account!r} has no tier")
        if tier not in self.rank:
            raise ConfigError(f"account {account!r} has tier {tier!r} outside the configured ordering")
        return self.rank[tier]

    def label(self, account: str) -> str | None:
        return self.account_tiers.get(account)


def _host_sessions(sessions: list[SessionRecord], rep_of: dict[str, str] | None):
    rep_of = rep_of or {}
    by_host: dict[str, list[SessionRecord]] = defaultdict(list)
    for s in sessions:
        by_host[rep_of.get(s.host, s.host)].append(s)
    return by_host


def find_escalators(
    combined: DirGraph,
    sessions: list[SessionRecord],
    tiers: TierOrder,
    window_end: datetime,
    require_residue: bool = True,
    rep_of: dict[str, str] | None = None,
) -> list[Escalator]:
    """All concurrent cross-tier session pairs one hop apart, lower tier on the tail.

    With *require_residue*, the higher-tier session must have left credential
    residue on its host (otherwise there is nothing to steal there).
    """
    for s in sessions:
        tiers.of(s.account)
    by_host = _host_sessions(sessions, rep_of)
    nb = Neighborhoods(combined)
    found: list[tuple[str, str, SessionRecord, SessionRecord]] = []
    for u in sorted(by_host):
        if u not in combined:
            continue
        for v in sorted(combined.succ(u) & by_host.keys()):
            for lo in by_host[u]:
                r_lo = tiers.of(lo.account)
                for hi in by_host[v]:
                    if tiers.of(hi.account) >= r_lo:
                        continue
                    if require_residue and not hi.chainable:
                        continue
                    if lo.overlaps(hi, window_end):
                        found.append((u, v, lo, hi))
    qualifying: dict[str, set[str]] = defaultdict(set)
    for u, v, _, _ in found:
        qualifying[u].add(v)
    dmax = {u: delta_n_max(combined, u, vs, nb).value for u, vs in qualifying.items()}
    davg = {u: delta_n_avg(combined, u, nb) for u in qualifying}
    out = [
        Escalator(u, v, lo, hi, nb.gain(u, v), dmax[u], davg[u])
        for u, v, lo, hi in found
    ]
    out.sort(key=lambda e: (-e.delta_max, -e.delta, e.lower_host, e.higher_host,
                            e.lower_session.sid, e.higher_session.sid))
    return out


def escalator_hosts(escalators: list[Escalator]) -> list[str]:
    return sorted({e.lower_host for e in escalators})


def account_exposure_matrix(
    combined: DirGraph,
    sessions: list[SessionRecord],
    require_residue: bool = True,
    rep_of: dict[str, str] | None = None,
) -> dict[tuple[str, str], int]:
    """(x, y) -> largest neighborhood gain from a host with x's session to an
    adjacent host with y's session."""
    by_host = _host_sessions(sessions, rep_of)
    nb = Neighborhoods(combined)
    out: dict[tuple[str, str], int] = {}
    for u in sorted(by_host):
        if u not in combined:
            continue
        xs = {s.account for s in by_host[u]}
        for v in combined.succ(u) & by_host.keys():
            ys = {s.account for s in by_host[v] if s.chainable or not require_residue}
            if not ys:
                continue
            gain = nb.gain(u, v)
            for x in xs:
                for y in ys:
                    if x == y:
                        continue
                    if gain > out.get((x, y), -1):
                        out[(x, y)] = gain
    return dict(sorted(out.items()))


def write_exposure_csv(matrix: dict[tuple[str, str], int], tiers: TierOrder, path: str | Path) -> None:
    accounts = sorted({a for pair in matrix for a in pair}, key=lambda a: (tiers.rank.get(tiers.label(a), 1 << 30), a))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account", "tier", *accounts])
        w.writerow(["", "", *(tiers.label(a) or "" for a in accounts)])
        for x in accounts:
            w.writerow([x, tiers.label(x) or "", *(matrix.get((x, y), "") for y in accounts)])


def local_admin_session_reach(
    local: DirGraph,
    combined: DirGraph,
    sessions: list[SessionRecord],
    rep_of: dict[str, str] | None = None,
) -> tuple[set[str], set[str]]:
    """Systems holding local-admin credentials (tails of LocalAdmin edges) that
    can reach a session host in the combined authnet, and the session hosts
    they reach."""
    rep_of = rep_of or {}
    hosts = {rep_of.get(s.host, s.host) for s in sessions if s.chainable} & combined.vertices
    sources = {e.src for e in local.edges if e.provenance is Provenance.LOCAL_ADMIN}
    # ancestors of session hosts via paths of length >= 1
    anc: set[str] = set()
    queue = deque(p for h in hosts for p in combined.pred(h))
    while queue:
        x = queue.popleft()
        if x in anc:
            continue
        anc.add(x)
        queue.extend(p for p in combined.pred(x) if p not in anc)
    reaching = sources & anc
    seen: set[str] = set()
    queue = deque(w for s in reaching for w in combined.succ(s))
    while queue:
        x = queue.popleft()
        if x in seen:
            continue
        seen.add(x)
        queue.extend(w for w in combined.succ(x) if w not in seen)
    return reaching, seen & hosts
