from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from authnet.errors import IngestError, UnsupportedCombination
from authnet.graph import DirGraph, Provenance, eccentricity
from authnet.ingest import (
    AccessRecord,
    Account,
    Artifact,
    ClusterMap,
    Countermeasure,
    EventKind,
    Impersonation,
    IngestInputs,
    ObjectKind,
    Package,
    Protections,
    Relation,
    SessionEvent,
    SubjectKind,
    System,
    apply_countermeasure,
    build_combined_authnet,
    build_local_admin_authnet,
    build_network,
    cluster_similar,
    expand_groups,
    load_access_records,
    load_accounts,
    load_session_events,
    resolve_active_sessions,
    residue_for,
)
from authnet.ingest.records import parse_ts, write_jsonl

T0 = datetime(2026, 3, 2, 8, 0, tzinfo=timezone.utc)
K, N = Package.KERBEROS, Package.NTLMV2
ID, IMP, DEL = Impersonation.IDENTIFICATION, Impersonation.IMPERSONATION, Impersonation.DELEGATION


def admin(subject, obj, kind=SubjectKind.USER):
    return AccessRecord(subject, kind, Relation.ADMIN_TO, obj, ObjectKind.SYSTEM)


def member(subject, group):
    return AccessRecord(subject, SubjectKind.USER, Relation.MEMBER_OF, group, ObjectKind.GROUP)


def logon(host, account, minutes, lt=10, pkg=K, imp=DEL):
    return SessionEvent(host, account, EventKind.LOGON, T0 + timedelta(minutes=minutes), lt, pkg, imp)


def logoff(host, account, minutes):
    return SessionEvent(host, account, EventKind.LOGOFF, T0 + timedelta(minutes=minutes))


def reboot(host, minutes):
    return SessionEvent(host, "", EventKind.REBOOT, T0 + timedelta(minutes=minutes))


# Two local users on S1: A administers S2 directly, B reaches S3 through group G.
GRANTS_RECORDS = [admin("A", "S2"), member("B", "G"), admin("G", "S3", SubjectKind.GROUP)]
GRANTS_ACCOUNTS = [Account("A", local_to="S1"), Account("B", local_to="S1")]


class TestLocalAuthnet:
    def test_direct_and_group_edges(self):
        g = build_local_admin_authnet(GRANTS_RECORDS, GRANTS_ACCOUNTS)
        assert g.pair_set() == {("S1", "S2"), ("S1", "S3")}
        assert all(e.provenance is Provenance.LOCAL_ADMIN for e in g.edges)

    def test_own_host_only(self):
        g = build_local_admin_authnet([admin("A", "S1")], [Account("A", local_to="S1")])
        assert g.pair_count == 0 and g.vertices == {"S1"}

    def test_domain_accounts_add_no_local_edges(self):
        g = build_local_admin_authnet([admin("D", "S2")], [Account("D"), Account("A", local_to="S1")])
        assert g.pair_count == 0

    def test_nested_groups(self):
        recs = [member("A", "G1"),
                AccessRecord("G1", SubjectKind.GROUP, Relation.MEMBER_OF, "G2", ObjectKind.GROUP),
                admin("G2", "S9", SubjectKind.GROUP)]
        g = build_local_admin_authnet(recs, [Account("A", local_to="S1")])
        assert g.pair_set() == {("S1", "S9")}
        assert expand_groups(recs, [Account("A", local_to="S1")])["A"] == {"G1", "G2"}

    def test_group_cycle_rejected(self):
        recs = [AccessRecord("G1", SubjectKind.GROUP, Relation.MEMBER_OF, "G2", ObjectKind.GROUP),
                AccessRecord("G2", SubjectKind.GROUP, Relation.MEMBER_OF, "G1", ObjectKind.GROUP)]
        with pytest.raises(IngestError):
            build_local_admin_authnet(recs, [Account("A", local_to="S1")])

    def test_dangling_user(self):
        with pytest.raises(IngestError) as err:
            build_local_admin_authnet([admin("ghost", "S2")], GRANTS_ACCOUNTS)
        assert err.value.offending


class TestResidue:
    def test_table_rows(self):
        kerb = {Artifact.TGT, Artifact.ST, Artifact.TGS_SK}
        assert residue_for(10, K, DEL, False) == (kerb, kerb)
        assert residue_for(10, K, DEL, True) == (set(), {Artifact.ST})
        assert residue_for(3, N, ID, False) == ({Artifact.HASH}, set())

    def test_type2_delegation_unsupported(self):
        with pytest.raises(UnsupportedCombination):
            residue_for(2, K, DEL)

    def test_string_arguments(self):
        assert residue_for(3, "kerberos", "imp") == residue_for(3, K, IMP)

    def test_wcg_never_adds(self):
        for lt in (2, 3, 10):
            for pkg in Package:
                for imp in Impersonation:
                    try:
                        plain = residue_for(lt, pkg, imp, False)
                    except UnsupportedCombination:
                        continue
                    wcg = residue_for(lt, pkg, imp, True)
                    assert wcg[0] <= plain[0] and wcg[1] <= plain[1]


class TestSessions:
    def test_logon_logoff(self):
        (s,) = resolve_active_sessions([logon("H", "u", 0), logoff("H", "u", 30)])
        assert (s.start, s.end) == (T0, T0 + timedelta(minutes=30))
        assert not s.active

    def test_reboot_closes(self):
        (s,) = resolve_active_sessions([logon("H", "u", 0), reboot("H", 45)])
        assert s.end == T0 + timedelta(minutes=45)

    def test_earliest_closed_first(self):
        out = resolve_active_sessions([logon("H", "u", 10), logon("H", "u", 0), logoff("H", "u", 20)])
        closed = [s for s in out if not s.active]
        active = [s for s in out if s.active]
        assert len(closed) == 1 and closed[0].start == T0
        assert len(active) == 1 and active[0].start == T0 + timedelta(minutes=10)

    def test_orphan_logoff_dropped(self, caplog):
        out = resolve_active_sessions([logoff("H", "u", 5)])
        assert out == []
        assert "without open session" in caplog.text

    def test_residue_and_protections(self):
        prot = Protections(protected_users=frozenset({"p"}))
        a, b = resolve_active_sessions([logon("H", "u", 0), logon("H", "p", 1)], protections=prot)
        assert a.chainable and a.residue_remote
        assert not b.chainable and not b.residue_local

    def test_window_filter(self):
        out = resolve_active_sessions([logon("H", "u", -60), logon("H", "v", 5)], window=(T0, T0 + timedelta(days=1)))
        assert [s.account for s in out] == ["v"]

    def test_type2_uses_local_column(self):
        (s,) = resolve_active_sessions([logon("H", "u", 0, lt=2, pkg=N, imp=ID)])
        assert s.residue_on_host == {Artifact.HASH}

    @given(st.lists(st.tuples(st.sampled_from(["logon", "logoff", "reboot"]),
                              st.sampled_from(["h1", "h2"]), st.sampled_from(["u", "v"]),
                              st.integers(0, 50)), max_size=30))
    def test_interval_oracle(self, raw):
        """Replay events against a naive interval matcher."""
        events = []
        for kind, host, acct, minute in raw:
            if kind == "logon":
                events.append(logon(host, acct, minute))
            elif kind == "logoff":
                events.append(logoff(host, acct, minute))
            else:
                events.append(reboot(host, minute))
        key = lambda r: (r[0], r[1], r[2], r[3] or T0 + timedelta(days=9))  # noqa: E731
        got = sorted(((s.host, s.account, s.start, s.end) for s in resolve_active_sessions(events)), key=key)
        ordered = sorted(range(len(events)), key=lambda i: (events[i].timestamp, i))
        open_: list[list] = []
        done = []
        for i in ordered:
            ev = events[i]
            if ev.kind is EventKind.LOGON:
                open_.append([ev.host, ev.account, ev.timestamp])
            elif ev.kind is EventKind.LOGOFF:
                match = [o for o in open_ if o[0] == ev.host and o[1] == ev.account]
                if match:
                    first = min(match, key=lambda o: o[2])
                    open_.remove(first)
                    done.append((first[0], first[1], first[2], ev.timestamp))
            else:
                for o in [o for o in open_ if o[0] == ev.host]:
                    open_.remove(o)
                    done.append((o[0], o[1], o[2], ev.timestamp))
        done += [(o[0], o[1], o[2], None) for o in open_]
        assert got == sorted(done, key=key)


class TestCombined:
    def setup_method(self):
        self.local = DirGraph(["S1", "S2", "S3", "S4", "S5"], [("S1", "S2")])
        self.accounts = [Account("C", tier="t1")]
        self.records = [admin("C", "S4"), admin("C", "S5")]

    def test_session_sprouts_edges(self):
        sessions = resolve_active_sessions([logon("S2", "C", 0, 10, K, DEL)])
        g = build_combined_authnet(self.local, sessions, self.accounts, self.records)
        assert {("S2", "S4"), ("S2", "S5")} <= g.pair_set()
        assert g.provenances("S2", "S4") == {Provenance.SESSION}

    def test_wcg_keeps_delegation_edges(self):
        sessions = resolve_active_sessions([logon("S2", "C", 0, 10, K, DEL)], protections=Protections(wcg_all=True))
        g = build_combined_authnet(self.local, sessions, self.accounts, self.records)
        assert ("S2", "S4") in g.pair_set()

    def test_wcg_identification_has_no_edges(self):
        sessions = resolve_active_sessions([logon("S2", "C", 0, 10, K, ID)], protections=Protections(wcg_all=True))
        g = build_combined_authnet(self.local, sessions, self.accounts, self.records)
        assert g == self.local

    def test_no_admin_rights(self):
        sessions = resolve_active_sessions([logon("S2", "C", 0)])
        g = build_combined_authnet(self.local, sessions, self.accounts, [])
        assert g == self.local

    def test_empty_sessions_identity(self):
        assert build_combined_authnet(self.local, [], self.accounts, self.records) == self.local

    def test_unknown_entities(self):
        sessions = resolve_active_sessions([logon("S9", "C", 0), logon("S2", "nobody", 0)])
        with pytest.raises(IngestError) as err:
            build_combined_authnet(self.local, sessions, self.accounts, self.records)
        assert len(err.value.offending) == 2


class TestClustering:
    def test_compute_nodes_merge(self):
        g = DirGraph(["h", "n1", "n2"], [("h", "n1"), ("h", "n2")])
        merged, cmap = cluster_similar(g)
        assert len(merged) == 2
        assert cmap.members[cmap.rep("n1")] == {"n1", "n2"}

    def test_unique_neighborhoods_unchanged(self):
        g = DirGraph("abc", [("a", "b"), ("b", "c")])
        merged, cmap = cluster_similar(g)
        assert merged == g
        assert all(len(m) == 1 for m in cmap.members.values())

    def test_star_leaves(self):
        g = DirGraph(["hub"] + [f"l{i}" for i in range(6)], [("hub", f"l{i}") for i in range(6)])
        merged, _ = cluster_similar(g)
        assert merged.pair_count == 1 and len(merged) == 2

    def test_owner_merge(self):
        g = DirGraph(["a", "b", "c"], [("a", "c")])
        merged, cmap = cluster_similar(g, {"a": "alice", "b": "alice"})
        assert cmap.rep("b") == "a" and merged.pair_set() == {("a", "c")}

    def test_fixpoint_cascade(self):
        # the owner merge gives the two children a common parent
        g = DirGraph([], [("p1", "c1"), ("p2", "c2"), ("r", "p1"), ("r", "p2")])
        assert len(cluster_similar(g)[0]) == 5
        merged, _ = cluster_similar(g, {"p1": "o", "p2": "o"})
        assert len(merged) == 3

    @given(st.lists(st.tuples(st.sampled_from("abcdefg"), st.sampled_from("abcdefg")), max_size=15))
    def test_idempotent_and_partition(self, pairs):
        g = DirGraph("abcdefg", {(a, b) for a, b in pairs if a != b})
        once, cmap = cluster_similar(g)
        twice, _ = cluster_similar(once)
        assert twice == once
        members = [m for ms in cmap.members.values() for m in ms]
        assert sorted(members) == sorted(g.vertices)

    def test_identity_map(self):
        cmap = ClusterMap.identity(["x", "y"])
        assert cmap.rep("x") == "x"


def grants_inputs(**kw) -> IngestInputs:
    return IngestInputs(records=list(GRANTS_RECORDS), accounts=list(GRANTS_ACCOUNTS), **kw)


class TestCountermeasures:
    def test_disable_local_remote_keeps_group_edge(self):
        before = build_network(grants_inputs())
        after = apply_countermeasure(grants_inputs(), "disable-local-remote")
        assert after.local.pair_set() == {("S1", "S3")}
        assert before.local.pair_count - after.local.pair_count == 1

    def test_disable_local_remote_can_raise_eccentricity(self):
        # the direct grant S1 -> S3 is a shortcut past S1 -> S2 -> S3
        records = [admin("A", "S3"), member("B", "G"), admin("G", "S2", SubjectKind.GROUP),
                   member("C", "H"), admin("H", "S3", SubjectKind.GROUP)]
        accounts = [Account("A", local_to="S1"), Account("B", local_to="S1"), Account("C", local_to="S2")]
        inputs = IngestInputs(records=records, accounts=accounts)
        before = build_network(inputs).local
        after = apply_countermeasure(inputs, "disable-local-remote").local
        assert after.pair_set() < before.pair_set()
        assert eccentricity(before, "S1") == 1 and eccentricity(after, "S1") == 2

    def test_group_only_fixed_point(self):
        inputs = IngestInputs(records=GRANTS_RECORDS[1:], accounts=GRANTS_ACCOUNTS)
        assert apply_countermeasure(inputs, "disable-local-remote").local == build_network(inputs).local

    def test_type2_sessions_vanish_under_wcg(self):
        inputs = IngestInputs(records=[admin("D", "S2")], accounts=[Account("D", tier="t0")],
                              events=[logon("S1", "D", 0, 2, K, IMP)], systems=[System("S1"), System("S2")])
        assert ("S1", "S2") in build_network(inputs).combined.pair_set()
        after = apply_countermeasure(inputs, Countermeasure.parse("remote-credential-guard"))
        assert after.combined.pair_count == 0

    def test_protected_users(self):
        inputs = IngestInputs(records=[admin("D", "S2")], accounts=[Account("D", tier="t0")],
                              events=[logon("S1", "D", 0)], systems=[System("S1"), System("S2")])
        after = apply_countermeasure(inputs, "protected-users:D")
        assert after.combined == after.local

    def test_parse(self):
        m = Countermeasure.parse("protected-users:b,a")
        assert str(m) == "protected-users:a,b"
        with pytest.raises(Exception):
            Countermeasure.parse("firewall")

    def test_wcg_subset_random(self):
        rng = random.Random(3)
        hosts = [f"h{i}" for i in range(8)]
        for _ in range(20):
            accounts = [Account(f"a{i}", tier="t") for i in range(4)]
            records = [admin(f"a{rng.randrange(4)}", rng.choice(hosts)) for _ in range(12)]
            events = []
            for i in range(10):
                lt, pkg, imp = rng.choice([(2, N, ID), (3, K, DEL), (10, K, IMP), (10, N, IMP), (3, N, ID)])
                events.append(logon(rng.choice(hosts), f"a{rng.randrange(4)}", i, lt, pkg, imp))
            inputs = IngestInputs(records=records, accounts=accounts, events=events,
                                  systems=[System(h) for h in hosts])
            base = build_network(inputs)
            wcg = apply_countermeasure(inputs, "remote-credential-guard")
            assert wcg.combined.pair_set() <= base.combined.pair_set()


class TestFiles:
    def test_round_trip(self, tmp_path):
        write_jsonl(tmp_path / "r.jsonl", GRANTS_RECORDS)
        write_jsonl(tmp_path / "a.jsonl", GRANTS_ACCOUNTS)
        ev = [logon("S1", "A", 0), logoff("S1", "A", 5), reboot("S1", 9)]
        write_jsonl(tmp_path / "e.jsonl", ev)
        assert load_access_records(tmp_path / "r.jsonl") == GRANTS_RECORDS
        assert load_accounts(tmp_path / "a.jsonl") == GRANTS_ACCOUNTS
        assert load_session_events(tmp_path / "e.jsonl") == ev

    def test_malformed_lines_collected(self, tmp_path):
        p = tmp_path / "e.jsonl"
        p.write_text(
            json.dumps({"host": "h", "account": "a", "event": "logon", "logon_type": 2,
                        "package": "kerberos", "impersonation": "del", "ts": "2026-01-01T00:00:00Z"}) + "\n"
            + json.dumps({"host": "h", "event": "teleport", "ts": "2026-01-01T00:00:00Z"}) + "\n"
            + "{not json\n"
        )
        with pytest.raises(IngestError) as err:
            load_session_events(p)
        assert len(err.value.offending) == 3

    def test_timestamps(self):
        assert parse_ts("2026-01-01T00:00:00Z") == datetime(2026, 1, 1, tzinfo=timezone.utc)
        assert parse_ts("2026-01-01T02:00:00+02:00") == datetime(2026, 1, 1, tzinfo=timezone.utc)
        with pytest.raises(ValueError):
            parse_ts("2026-01-01T00:00:00")
