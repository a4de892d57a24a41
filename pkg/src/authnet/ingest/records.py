"""Ingestion record types and their JSON-lines parsers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from authnet.errors import IngestError
from authnet.ingest.residue import LOGON_TYPES, Artifact, Impersonation, Package


class Relation(str, Enum):
    ADMIN_TO = "admin_to"
    MEMBER_OF = "member_of"


class SubjectKind(str, Enum):
    USER = "user"
    GROUP = "group"


class ObjectKind(str, Enum):
    SYSTEM = "system"
    GROUP = "group"


class EventKind(str, Enum):
    LOGON = "logon"
    LOGOFF = "logoff"
    REBOOT = "reboot"


class Protection(str, Enum):
    WCG = "wcg"
    PROTECTED_USERS = "protected_users"
    RESTRICTED_ADMIN = "restricted_admin"
    NO_DOMAIN_CACHING = "no_domain_caching"


@dataclass(frozen=True)
class AccessRecord:
    subject: str
    subject_kind: SubjectKind
    relation: Relation
    object: str
    object_kind: ObjectKind

    def to_json(self) -> dict[str, str]:
        return {
            "subject": self.subject,
            "subject_kind": self.subject_kind.value,
            "relation": self.relation.value,
            "object": self.object,
            "object_kind": self.object_kind.value,
        }


@dataclass(frozen=True)
class Account:
    id: str
    local_to: str | None = None  # None for domain accounts
    tier: str | None = None
    groups: frozenset[str] = frozenset()

    @property
    def is_local(self) -> bool:
        return self.local_to is not None

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "scope": f"local:{self.local_to}" if self.local_to else "domain",
            "tier": self.tier,
            "groups": sorted(self.groups),
        }


@dataclass(frozen=True)
class System:
    id: str
    kind: str = "system"
    owner: str | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "kind": self.kind}
        if self.owner is not None:
            out["owner"] = self.owner
        return out


@dataclass(frozen=True)
class SessionEvent:
    host: str
    account: str
    kind: EventKind
    timestamp: datetime
    logon_type: int | None = None
    package: Package | None = None
    impersonation: Impersonation | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"host": self.host, "account": self.account, "event": self.kind.value}
        if self.kind is EventKind.LOGON:
            out["logon_type"] = self.logon_type
            out["package"] = self.package.value
            out["impersonation"] = self.impersonation.value
        out["ts"] = format_ts(self.timestamp)
        return out


@dataclass(frozen=True)
class SessionRecord:
    host: str
    account: str
    logon_type: int
    package: Package
    impersonation: Impersonation
    start: datetime
    end: datetime | None = None
    protections: frozenset[Protection] = frozenset()
    residue_local: frozenset[Artifact] = frozenset()
    residue_remote: frozenset[Artifact] = frozenset()
    sid: str = ""

    @property
    def active(self) -> bool:
        return self.end is None

    @property
    def residue_on_host(self) -> frozenset[Artifact]:
        """Residue sitting on :attr:`host`: the local column for console
        logons, the remote column for network and remote-interactive ones."""
        return self.residue_local if self.logon_type == 2 else self.residue_remote

    @property
    def chainable(self) -> bool:
        return bool(self.residue_on_host)

    def overlaps(self, other: SessionRecord, window_end: datetime) -> bool:
        a_end = self.end or window_end
        b_end = other.end or window_end
        return self.start <= b_end and other.start <= a_end

    def to_json(self) -> dict[str, Any]:
        return {
            "sid": self.sid,
            "host": self.host,
            "account": self.account,
            "logon_type": self.logon_type,
            "package": self.package.value,
            "impersonation": self.impersonation.value,
            "start": format_ts(self.start),
            "end": format_ts(self.end) if self.end else None,
            "protections": sorted(p.value for p in self.protections),
            "residue_local": sorted(a.value for a in self.residue_local),
            "residue_remote": sorted(a.value for a in self.residue_remote),
        }


@dataclass(frozen=True)
class Protections:
    """Credential protections in force when sessions are resolved."""

    wcg_all: bool = False
    wcg_hosts: frozenset[str] = frozenset()
    protected_users: frozenset[str] = frozenset()
    restricted_admin_hosts: frozenset[str] = frozenset()
    no_domain_caching_hosts: frozenset[str] = frozenset()

    def for_session(self, host: str, account: str) -> frozenset[Protection]:
        out = set()
        if self.wcg_all or host in self.wcg_hosts:
            out.add(Protection.WCG)
        if account in self.protected_users:
            out.add(Protection.PROTECTED_USERS)
        if host in self.restricted_admin_hosts:
            out.add(Protection.RESTRICTED_ADMIN)
        if host in self.no_domain_caching_hosts:
            out.add(Protection.NO_DOMAIN_CACHING)
        return frozenset(out)


@dataclass
class IngestInputs:
    """Everything an authnet build needs; countermeasures transform a copy."""

    records: list[AccessRecord]
    accounts: list[Account]
    events: list[SessionEvent] = field(default_factory=list)
    systems: list[System] = field(default_factory=list)
    window: tuple[datetime, datetime] | None = None
    protections: Protections = Protections()


# ---------------------------------------------------------------------------
# parsing


def parse_ts(raw: str) -> datetime:
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {raw!r} lacks a UTC offset")
    return ts.astimezone(timezone.utc)


def format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_access_record(obj: dict[str, Any]) -> AccessRecord:
    rec = AccessRecord(
        subject=str(obj["subject"]),
        subject_kind=SubjectKind(obj["subject_kind"]),
        relation=Relation(obj["relation"]),
        object=str(obj["object"]),
        object_kind=ObjectKind(obj["object_kind"]),
    )
    if rec.relation is Relation.ADMIN_TO and rec.object_kind is not ObjectKind.SYSTEM:
        raise ValueError("admin_to objects must be systems")
    if rec.relation is Relation.MEMBER_OF and rec.object_kind is not ObjectKind.GROUP:
        raise ValueError("member_of objects must be groups")
    return rec


def parse_account(obj: dict[str, Any]) -> Account:
    scope = str(obj.get("scope", "domain"))
    if scope == "domain":
        local_to = None
    elif scope.startswith("local:") and len(scope) > len("local:"):
        local_to = scope[len("local:"):]
    else:
        raise ValueError(f"bad scope {scope!r}")
    tier = obj.get("tier")
    return Account(
        id=str(obj["id"]),
        local_to=local_to,
        tier=str(tier) if tier not in (None, "") else None,
        groups=frozenset(str(g) for g in obj.get("groups", [])),
    )


def parse_system(obj: dict[str, Any]) -> System:
    owner = obj.get("owner")
    return System(id=str(obj["id"]), kind=str(obj.get("kind", "system")),
                  owner=str(owner) if owner not in (None, "") else None)


def parse_session_event(obj: dict[str, Any]) -> SessionEvent:
    kind = EventKind(obj["event"])
    ts = parse_ts(str(obj["ts"]))
    if kind is not EventKind.LOGON:
        return SessionEvent(str(obj["host"]), str(obj.get("account", "")), kind, ts)
    logon_type = int(obj["logon_type"])
    if logon_type not in LOGON_TYPES:
        raise ValueError(f"unsupported logon type {logon_type}")
    package = Package(str(obj["package"]).lower())
    imp = Impersonation(str(obj["impersonation"]).lower())
    if logon_type == 2 and imp is Impersonation.DELEGATION:
        raise ValueError("interactive logons cannot carry delegation")
    return SessionEvent(str(obj["host"]), str(obj["account"]), kind, ts, logon_type, package, imp)


def _read_jsonl(path: str | Path, parse) -> list:
    out, bad = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(parse(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                bad.append(f"{Path(path).name}:{lineno}: {exc}")
    if bad:
        raise IngestError("malformed records", bad)
    return out


def load_access_records(path: str | Path) -> list[AccessRecord]:
    return _read_jsonl(path, parse_access_record)


def load_accounts(path: str | Path) -> list[Account]:
    return _read_jsonl(path, parse_account)


def load_systems(path: str | Path) -> list[System]:
    return _read_jsonl(path, parse_system)


def load_session_events(path: str | Path) -> list[SessionEvent]:
    return _read_jsonl(path, parse_session_event)


def write_jsonl(path: str | Path, items: Iterable) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in items:
            obj = item.to_json() if hasattr(item, "to_json") else item
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
