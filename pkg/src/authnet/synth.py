"""
Synthetic enterprise networks in the ingest file formats.

The generated Local Administrator authnet is shallow and acyclic: about
half the systems hold local accounts with admin grants, the rest are pure
sinks, and grants between grant-holding systems only point from a higher
level to a lower one.  Optional planted structure gives tests known answers.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from authnet.errors import ValidationError
from authnet.ingest.records import (
    AccessRecord,
    Account,
    EventKind,
    IngestInputs,
    ObjectKind,
    Relation,
    SessionEvent,
    SubjectKind,
    System,
    write_jsonl,
)
from authnet.ingest.residue import Impersonation, Package

WINDOW_START = datetime(2026, 1, 5, tzinfo=timezone.utc)
WINDOW_LENGTH = timedelta(days=7)
MAX_LEVEL = 3
LEVEL_WEIGHTS = (0.65, 0.25, 0.1)
LEVEL_LINK_PROB = 0.1

_LOGON_MENU = [
    (2, Package.NTLMV2, Impersonation.IDENTIFICATION),
    (2, Package.KERBEROS, Impersonation.IMPERSONATION),
    (3, Package.NTLMV2, Impersonation.IDENTIFICATION),
    (3, Package.KERBEROS, Impersonation.IMPERSONATION),
    (3, Package.KERBEROS, Impersonation.DELEGATION),
    (10, Package.NTLMV2, Impersonation.IMPERSONATION),
    (10, Package.KERBEROS, Impersonation.IMPERSONATION),
    (10, Package.KERBEROS, Impersonation.DELEGATION),
]


@dataclass(frozen=True)
class SynthSpec:
    n_systems: int = 3500
    workstation_fraction: float = 0.85
    n_accounts: int = 60  # domain accounts
    group_count: int = 30  # groups of local accounts
    admin_edge_density: float = 10000 / 3500  # target local edges per system
    session_count: int = 400
    tier_distribution: tuple[tuple[str, float], ...] = (("tier0", 0.1), ("tier1", 0.3), ("tier2", 0.6))
    seed: int = 0
    source_fraction: float = 0.45
    planted_hub: bool = True
    planted_chain: int = 6  # hops; 0 disables
    planted_cross_tier: bool = True

    def __post_init__(self) -> None:
        counts = (self.n_systems, self.n_accounts, self.group_count, self.session_count, self.planted_chain)
        if any(c < 0 for c in counts):
            raise ValidationError("synthetic counts must be >= 0")
        for name in ("workstation_fraction", "source_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if self.admin_edge_density < 0:
            raise ValidationError("admin_edge_density must be >= 0")
        if not self.tier_distribution or any(w < 0 for _, w in self.tier_distribution):
            raise ValidationError("tier_distribution needs nonnegative weights")
        if sum(w for _, w in self.tier_distribution) <= 0:
            raise ValidationError("tier_distribution weights sum to zero")
        reserved = (self.planted_chain + 1 if self.planted_chain else 0) + (1 if self.planted_hub else 0)
        if reserved + 2 > self.n_systems:
            raise ValidationError("too few systems for the planted structure")
        if self.planted_cross_tier and len(self.tier_distribution) < 2:
            raise ValidationError("a cross-tier pair needs at least two tiers")
        if self.planted_cross_tier and not self.planted_hub:
            raise ValidationError("the cross-tier pair is planted on the hub; enable planted_hub")
        if self.session_count and self.n_accounts == 0:
            raise ValidationError("sessions need domain accounts")

    @property
    def tiers(self) -> list[str]:
        return [t for t, _ in self.tier_distribution]


@dataclass
class Planted:
    hub: str | None = None
    chain: list[str] = field(default_factory=list)
    cross_tier: dict | None = None

    @property
    def chain_head(self) -> str | None:
        return self.chain[0] if self.chain else None


@dataclass
class SynthNetwork:
    spec: SynthSpec
    inputs: IngestInputs
    planted: Planted

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "access_records.jsonl", self.inputs.records)
        write_jsonl(out / "accounts.jsonl", self.inputs.accounts)
        write_jsonl(out / "session_events.jsonl", self.inputs.events)
        write_jsonl(out / "systems.jsonl", self.inputs.systems)
        with open(out / "planted.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(self.planted), fh, indent=2, sort_keys=True)
            fh.write("\n")
        w0, w1 = self.inputs.window
        tiers = ", ".join(json.dumps(t) for t in self.spec.tiers)
        with open(out / "config.toml", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                '[inputs]\ndata = "."\n\n'
                f'[window]\nstart = "{w0:%Y-%m-%dT%H:%M:%SZ}"\nend = "{w1:%Y-%m-%dT%H:%M:%SZ}"\n\n'
                f"[tiers]\norder = [{tiers}]\n\n[run]\nseed = {self.spec.seed}\n"
            )


def _admin(subject: str, kind: SubjectKind, system: str) -> AccessRecord:
    return AccessRecord(subject, kind, Relation.ADMIN_TO, system, ObjectKind.SYSTEM)


def _member(account: str, group: str) -> AccessRecord:
    return AccessRecord(account, SubjectKind.USER, Relation.MEMBER_OF, group, ObjectKind.GROUP)


def gen_synthetic(spec: SynthSpec) -> SynthNetwork:
    """Deterministic for a given spec (including its seed)."""
    rng = random.Random(spec.seed)
    n = spec.n_systems
    width = max(4, len(str(n)))
    n_ws = round(n * spec.workstation_fraction)
    systems = [
        System(f"{'ws' if i < n_ws else 'srv'}{i:0{width}d}", "workstation" if i < n_ws else "server", f"owner{i:0{width}d}")
        for i in range(n)
    ]
    ids = [s.id for s in systems]
    pos = {s: i for i, s in enumerate(ids)}
    kind = {s.id: s.kind for s in systems}

    pool = ids[:]
    rng.shuffle(pool)
    planted = Planted()
    if spec.planted_chain:
        planted.chain = pool[: spec.planted_chain + 1]
        pool = pool[spec.planted_chain + 1:]
    if spec.planted_hub:
        planted.hub = pool[0]
        pool = pool[1:]
    ordinary = sorted(pool, key=pos.__getitem__)

    n_src = min(len(ordinary), max(1, round(n * spec.source_fraction))) if spec.admin_edge_density else 0
    sources = rng.sample(ordinary, n_src)
    # grants only point to lower levels, so natural chains have at most MAX_LEVEL hops
    level = {s: rng.choices(range(1, MAX_LEVEL + 1), LEVEL_WEIGHTS)[0] for s in sources}
    by_level = {lv: [s for s in sources if level[s] == lv] for lv in range(1, MAX_LEVEL + 1)}
    sinks = [s for s in ordinary if s not in level]

    accounts: list[Account] = []
    records: list[AccessRecord] = []
    local_acct = {s: f"{s}$adm" for s in ids}
    grant_holders = set(sources) | set(planted.chain[:-1]) | ({planted.hub} if planted.hub else set())

    target_edges = spec.admin_edge_density * n
    group_share = 0.3 if spec.group_count and n_src >= 2 else 0.0

    def pick_target(src: str) -> str:
        # mostly sinks; sometimes a grant holder on a lower level
        if level[src] > 1 and rng.random() < LEVEL_LINK_PROB:
            lower = by_level[rng.randrange(1, level[src])]
            if lower:
                return lower[rng.randrange(len(lower))]
        return sinks[rng.randrange(len(sinks))] if sinks else src

    # direct local grants, heavy tailed
    direct = (1 - group_share) * target_edges
    if n_src and sinks:
        raw = [rng.paretovariate(2.5) for _ in sources]
        scale = direct / sum(raw)
        for s, r in zip(sources, raw):
            for x in sorted({pick_target(s) for _ in range(max(1, round(r * scale)))} - {s}):
                records.append(_admin(local_acct[s], SubjectKind.USER, x))

    # groups of local accounts granted admin on shared target sets
    if group_share and sinks:
        per_group = group_share * target_edges / spec.group_count
        for g in range(spec.group_count):
            gid = f"lgroup{g:03d}"
            members = rng.sample(sources, min(len(sources), rng.randint(2, 6)))
            k = max(1, round(per_group / len(members)))
            for m in sorted(members):
                records.append(_member(local_acct[m], gid))
            for x in sorted(set(rng.sample(sinks, min(len(sinks), k)))):
                records.append(_admin(gid, SubjectKind.GROUP, x))

    if spec.planted_chain:
        c = planted.chain
        for a, b in zip(c, c[1:]):
            records.append(_admin(local_acct[a], SubjectKind.USER, b))

    if planted.hub and sinks:
        outdeg: dict[str, set[str]] = {}
        members: dict[str, list[str]] = {}
        for r in records:
            if r.relation is Relation.MEMBER_OF:
                members.setdefault(r.object, []).append(r.subject)
        grp_targets: dict[str, set[str]] = {}
        for r in records:
            if r.relation is Relation.ADMIN_TO:
                if r.subject_kind is SubjectKind.USER:
                    outdeg.setdefault(r.subject, set()).add(r.object)
                else:
                    grp_targets.setdefault(r.subject, set()).add(r.object)
        for gid, ms in members.items():
            for m in ms:
                outdeg.setdefault(m, set()).update(grp_targets.get(gid, ()))
        med = statistics.median([len(v) for v in outdeg.values()]) if outdeg else 1
        k = min(len(sinks), max(int(10 * med) + 10, 2 * max((len(v) for v in outdeg.values()), default=0)))
        for x in sorted(rng.sample(sinks, k)):
            records.append(_admin(local_acct[planted.hub], SubjectKind.USER, x))

    for s in ids:
        if s in grant_holders:
            accounts.append(Account(local_acct[s], local_to=s))

    # domain accounts by tier
    tiers = spec.tiers
    weights = [w for _, w in spec.tier_distribution]
    servers = [s for s in ids if kind[s] == "server"]
    workstations = [s for s in ids if kind[s] == "workstation"]
    domain: list[tuple[str, str]] = []
    for i in range(spec.n_accounts):
        t = tiers[i] if i < len(tiers) else rng.choices(tiers, weights)[0]
        domain.append((f"adm{i:03d}", t))
    for i, t in enumerate(tiers):
        gid = f"{t}-admins"
        level = i / max(1, len(tiers) - 1)  # 0 = highest tier
        if level == 0:
            scope = ids
        elif level < 1 or not workstations:
            scope = servers or ids
        else:
            scope = []
        for x in scope:
            records.append(_admin(gid, SubjectKind.GROUP, x))
    for acct, t in domain:
        accounts.append(Account(acct, tier=t, groups=frozenset({f"{t}-admins"})))
        records.append(_member(acct, f"{t}-admins"))
        if t == tiers[-1] and workstations:
            slice_size = max(1, len(workstations) // 25)
            for x in sorted(rng.sample(workstations, slice_size)):
                records.append(_admin(acct, SubjectKind.USER, x))

    # sessions
    w0, w1 = WINDOW_START, WINDOW_START + WINDOW_LENGTH
    span = int(WINDOW_LENGTH.total_seconds())
    events: list[SessionEvent] = []
    by_tier: dict[str, list[str]] = {}
    for acct, t in domain:
        by_tier.setdefault(t, []).append(acct)
    session_weights = [0.05] + [0.2] * (len(tiers) - 2) + [0.75] if len(tiers) > 1 else [1.0]
    protected = {x for x in ([planted.hub] if planted.hub else [])}
    pair = None
    if spec.planted_cross_tier and planted.hub and spec.session_count:
        hub_targets = sorted(r.object for r in records if r.subject == local_acct[planted.hub])
        v = hub_targets[rng.randrange(len(hub_targets))]
        lo, hi = by_tier.get(tiers[-1]), by_tier.get(tiers[0])
        if lo and hi:
            pair = (planted.hub, v, lo[0], hi[0])
            protected.add(v)
            ts = w0 + timedelta(hours=1)
            events.append(SessionEvent(planted.hub, lo[0], EventKind.LOGON, ts, 2, Package.KERBEROS, Impersonation.IMPERSONATION))
            events.append(SessionEvent(v, hi[0], EventKind.LOGON, ts + timedelta(minutes=5), 10, Package.KERBEROS, Impersonation.DELEGATION))
            planted.cross_tier = {"lower_host": planted.hub, "higher_host": v,
                                  "lower_account": lo[0], "higher_account": hi[0]}
    remaining = spec.session_count - (2 if pair else 0)
    occupied = [t for t in tiers if by_tier.get(t)]
    occ_w = [session_weights[tiers.index(t)] for t in occupied]
    for _ in range(max(0, remaining)):
        t = rng.choices(occupied, occ_w)[0]
        acct = by_tier[t][rng.randrange(len(by_tier[t]))]
        on_server = t != tiers[-1] and rng.random() < 0.8
        hosts = servers if (on_server and servers) else (workstations or ids)
        host = hosts[rng.randrange(len(hosts))]
        lt, pkg, imp = _LOGON_MENU[rng.randrange(len(_LOGON_MENU))]
        start = w0 + timedelta(seconds=rng.randrange(span - 3600))
        events.append(SessionEvent(host, acct, EventKind.LOGON, start, lt, pkg, imp))
        roll = rng.random()
        if roll < 0.45:
            end = start + timedelta(seconds=rng.randrange(60, 3600 * 8))
            if end < w1:
                events.append(SessionEvent(host, acct, EventKind.LOGOFF, end))
        elif roll < 0.5 and host not in protected:
            end = start + timedelta(seconds=rng.randrange(60, 3600 * 24))
            if end < w1:
                events.append(SessionEvent(host, "", EventKind.REBOOT, end))
    events.sort(key=lambda e: (e.timestamp, e.host, e.account, e.kind.value))

    inputs = IngestInputs(records=records, accounts=accounts, events=events, systems=systems, window=(w0, w1))
    return SynthNetwork(spec, inputs, planted)
