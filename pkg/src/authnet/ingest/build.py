"""Authnet construction: local-administrator graph, similar-system clustering,
and the combined graph that adds credential-residue edges from sessions."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from authnet.errors import IngestError
from authnet.graph import DirGraph, Edge, Provenance
from authnet.ingest.records import (
    Account,
    AccessRecord,
    ObjectKind,
    Relation,
    SessionRecord,
    SubjectKind,
    System,
)


def _group_graph(records: Iterable[AccessRecord], accounts: Iterable[Account]):
    """Direct memberships: principal -> set of groups (users and groups alike)."""
    member: dict[tuple[SubjectKind, str], set[str]] = defaultdict(set)
    for acct in accounts:
        member[(SubjectKind.USER, acct.id)].update(acct.groups)
    for rec in records:
        if rec.relation is Relation.MEMBER_OF:
            member[(rec.subject_kind, rec.subject)].add(rec.object)
    return member


def expand_groups(records: list[AccessRecord], accounts: list[Account]) -> dict[str, frozenset[str]]:
    """Transitive group membership per account id.

    Raises :class:`IngestError` when nested group membership forms a cycle.
    """
    member = _group_graph(records, accounts)
    nested = {g: member.get((SubjectKind.GROUP, g), set()) for (k, g) in list(member) if k is SubjectKind.GROUP}
    closure: dict[str, frozenset[str]] = {}
    state: dict[str, int] = {}  # 1 = visiting, 2 = done

    def visit(group: str, trail: list[str]) -> frozenset[str]:
        if state.get(group) == 2:
            return closure[group]
        if state.get(group) == 1:
            cycle = trail[trail.index(group):] + [group]
            raise IngestError("group membership cycle", [" -> ".join(cycle)])
        state[group] = 1
        trail.append(group)
        acc = {group}
        for parent in sorted(nested.get(group, ())):
            acc |= visit(parent, trail)
        trail.pop()
        state[group] = 2
        closure[group] = frozenset(acc)
        return closure[group]

    for g in sorted(nested):
        visit(g, [])
    out: dict[str, frozenset[str]] = {}
    for acct in accounts:
        groups: set[str] = set()
        for g in member.get((SubjectKind.USER, acct.id), ()):
            groups |= visit(g, [])
        out[acct.id] = frozenset(groups)
    return out


def validate_records(
    records: list[AccessRecord], accounts: list[Account], systems: list[System] | None = None
) -> None:
    """Reject dangling account/system references."""
    known_accounts = {a.id for a in accounts}
    dupes = sorted(k for k, n in Counter(a.id for a in accounts).items() if n > 1)
    if dupes:
        raise IngestError("duplicate account ids", dupes)
    bad = [
        r.to_json() for r in records
        if r.subject_kind is SubjectKind.USER and r.subject not in known_accounts
    ]
    if systems:
        known_systems = {s.id for s in systems}
        bad += [
            r.to_json() for r in records
            if r.object_kind is ObjectKind.SYSTEM and r.object not in known_systems
        ]
        bad += [
            a.to_json() for a in accounts
            if a.local_to is not None and a.local_to not in known_systems
        ]
    if bad:
        raise IngestError("dangling references", bad)


def admin_scopes(records: list[AccessRecord], accounts: list[Account]) -> dict[str, frozenset[str]]:
    """Systems each account administers, directly or through (nested) groups."""
    groups = expand_groups(records, accounts)
    direct_user: dict[str, set[str]] = defaultdict(set)
    direct_group: dict[str, set[str]] = defaultdict(set)
    for rec in records:
        if rec.relation is not Relation.ADMIN_TO:
            continue
        if rec.subject_kind is SubjectKind.USER:
            direct_user[rec.subject].add(rec.object)
        else:
            direct_group[rec.subject].add(rec.object)
    out = {}
    for acct in accounts:
        scope = set(direct_user.get(acct.id, ()))
        for g in groups.get(acct.id, ()):
            scope |= direct_group.get(g, set())
        out[acct.id] = frozenset(scope)
    return out


def system_universe(
    records: list[AccessRecord], accounts: list[Account], systems: list[System] | None = None
) -> set[str]:
    universe = {s.id for s in systems or ()}
    universe |= {r.object for r in records if r.object_kind is ObjectKind.SYSTEM}
    universe |= {a.local_to for a in accounts if a.local_to is not None}
    return universe


def build_local_admin_authnet(
    records: list[AccessRecord], accounts: list[Account], systems: list[System] | None = None
) -> DirGraph:
    """Edge u -> v iff an account local to u administers v (directly or via groups)."""
    validate_records(records, accounts, systems)
    scopes = admin_scopes(records, accounts)
    edges = set()
    for acct in accounts:
        if acct.local_to is None:
            continue
        for target in scopes[acct.id]:
            if target != acct.local_to:
                edges.add((acct.local_to, target))
    return DirGraph(
        system_universe(records, accounts, systems),
        (Edge(u, v, Provenance.LOCAL_ADMIN) for u, v in sorted(edges)),
    )


# ---------------------------------------------------------------------------
# clustering


@dataclass(frozen=True)
class ClusterMap:
    """Cluster representative -> member systems, plus the ownership tags used."""

    members: dict[str, frozenset[str]]
    ownership: dict[str, str] = field(default_factory=dict)

    @cached_property
    def rep_of(self) -> dict[str, str]:
        return {m: rep for rep, ms in self.members.items() for m in ms}

    def rep(self, system: str) -> str:
        return self.rep_of[system]

    @classmethod
    def identity(cls, vertices: Iterable[str]) -> ClusterMap:
        return cls({v: frozenset({v}) for v in vertices})

    def to_json(self) -> dict[str, list[str]]:
        return {rep: sorted(ms) for rep, ms in sorted(self.members.items())}


def merge_vertices(g: DirGraph, rep_of: dict[str, str]) -> DirGraph:
    """Relabel vertices onto representatives, merging parallel edges (max weight)
    and dropping edges that collapse into self-loops."""
    table: dict[tuple[str, str, Provenance], float] = {}
    for e in g.edges:
        u, v = rep_of.get(e.src, e.src), rep_of.get(e.dst, e.dst)
        if u == v:
            continue
        key = (u, v, e.provenance)
        table[key] = max(e.weight, table.get(key, e.weight))
    verts = {rep_of.get(v, v) for v in g.vertices}
    return DirGraph(verts, (Edge(u, v, p, w) for (u, v, p), w in table.items()))


def cluster_similar(g: DirGraph, ownership: dict[str, str] | None = None) -> tuple[DirGraph, ClusterMap]:
    """Merge systems with one owner, then systems sharing both parent and child
    sets, repeating the neighborhood merge until nothing changes.

    Vertices without any neighbor are left alone: an empty neighborhood says
    nothing about two systems being alike.
    """
    ownership = dict(ownership or {})
    by_owner: dict[str, list[str]] = defaultdict(list)
    for v in g.order:
        tag = ownership.get(v)
        if tag is not None:
            by_owner[tag].append(v)
    rep_of = {v: v for v in g.vertices}
    for vs in by_owner.values():
        rep = min(vs)
        for v in vs:
            rep_of[v] = rep
    current = merge_vertices(g, rep_of)
    members: dict[str, set[str]] = defaultdict(set)
    for v, rep in rep_of.items():
        members[rep].add(v)

    while True:
        sig: dict[tuple[frozenset, frozenset], list[str]] = defaultdict(list)
        for v in current.order:
            parents, children = current.pred(v), current.succ(v)
            if parents or children:
                sig[(parents, children)].append(v)
        step = {v: vs[0] for vs in sig.values() if len(vs) > 1 for v in vs}
        if not step:
            break
        current = merge_vertices(current, step)
        for v, rep in step.items():
            if v != rep:
                members[rep] |= members.pop(v)

    return current, ClusterMap(
        {rep: frozenset(ms) for rep, ms in members.items()}, ownership
    )


# ---------------------------------------------------------------------------
# combined authnet


def build_combined_authnet(
    local: DirGraph,
    sessions: list[SessionRecord],
    accounts: list[Account],
    records: list[AccessRecord],
    cluster_map: ClusterMap | None = None,
) -> DirGraph:
    """Add Session edges H -> X wherever a session of account A on host H left
    usable residue and A administers X."""
    known = {a.id for a in accounts}
    rep_of = cluster_map.rep_of if cluster_map else {}
    bad = []
    for s in sessions:
        if s.account not in known:
            bad.append(f"{s.sid or s.host}: unknown account {s.account!r}")
        elif rep_of.get(s.host, s.host) not in local.vertices:
            bad.append(f"{s.sid or s.host}: unknown system {s.host!r}")
    if bad:
        raise IngestError("sessions reference unknown entities", bad)
    if not sessions:
        return local
    scopes = admin_scopes(records, accounts)
    new_edges = set()
    for s in sessions:
        if not s.chainable:
            continue
        h = rep_of.get(s.host, s.host)
        for x in scopes.get(s.account, ()):
            x = rep_of.get(x, x)
            if x != h:
                new_edges.add((h, x))
    return local.with_edges(Edge(u, v, Provenance.SESSION) for u, v in sorted(new_edges))
