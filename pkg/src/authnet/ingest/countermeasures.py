"""Countermeasure what-ifs: transform the ingestion inputs, then rebuild."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum

from authnet.errors import ConfigError
from authnet.graph import DirGraph
from authnet.ingest.build import (
    ClusterMap,
    build_combined_authnet,
    build_local_admin_authnet,
    cluster_similar,
)
from authnet.ingest.records import (
    AccessRecord,
    IngestInputs,
    Relation,
    SessionRecord,
    SubjectKind,
)
from authnet.ingest.sessions import resolve_active_sessions


class MeasureKind(str, Enum):
    DISABLE_LOCAL_REMOTE = "disable-local-remote"
    REMOTE_CREDENTIAL_GUARD = "remote-credential-guard"
    PROTECTED_USERS = "protected-users"


@dataclass(frozen=True)
class Countermeasure:
    kind: MeasureKind
    accounts: frozenset[str] = frozenset()

    @classmethod
    def parse(cls, text: str) -> Countermeasure:
        """``disable-local-remote``, ``remote-credential-guard`` or ``protected-users:a,b``."""
        name, _, rest = text.partition(":")
        try:
            kind = MeasureKind(name.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown countermeasure {text!r}") from None
        accounts = frozenset(a.strip() for a in rest.split(",") if a.strip())
        if kind is MeasureKind.PROTECTED_USERS and not accounts:
            raise ConfigError("protected-users needs at least one account")
        return cls(kind, accounts)

    def __str__(self) -> str:
        if self.kind is MeasureKind.PROTECTED_USERS:
            return f"{self.kind.value}:{','.join(sorted(self.accounts))}"
        return self.kind.value


@dataclass
class Network:
    """Authnets built from one set of inputs."""

    inputs: IngestInputs
    local: DirGraph
    combined: DirGraph
    sessions: list[SessionRecord]
    clusters: ClusterMap
    kinds: dict[str, str] = field(default_factory=dict)

    @property
    def window_end(self) -> datetime | None:
        if self.inputs.window is not None:
            return self.inputs.window[1]
        if not self.sessions:
            return None
        return max(max(s.start, s.end or s.start) for s in self.sessions)


def build_network(inputs: IngestInputs, cluster: bool = False) -> Network:
    local = build_local_admin_authnet(inputs.records, inputs.accounts, inputs.systems or None)
    if cluster:
        ownership = {s.id: s.owner for s in inputs.systems if s.owner}
        local, clusters = cluster_similar(local, ownership)
    else:
        clusters = ClusterMap.identity(local.vertices)
    sessions = resolve_active_sessions(inputs.events, inputs.window, inputs.protections)
    combined = build_combined_authnet(
        local, sessions, inputs.accounts, inputs.records, clusters if cluster else None
    )
    kinds = {s.id: s.kind for s in inputs.systems}
    kinds = {v: kinds.get(v, "system") for v in combined.vertices}
    return Network(inputs, local, combined, sessions, clusters, kinds)


def disable_local_remote(inputs: IngestInputs) -> IngestInputs:
    """Drop direct admin grants held by local user accounts on other systems."""
    local_home = {a.id: a.local_to for a in inputs.accounts if a.local_to is not None}

    def keep(rec: AccessRecord) -> bool:
        return not (
            rec.relation is Relation.ADMIN_TO
            and rec.subject_kind is SubjectKind.USER
            and rec.subject in local_home
            and rec.object != local_home[rec.subject]
        )

    return replace(inputs, records=[r for r in inputs.records if keep(r)])


def transform_inputs(inputs: IngestInputs, measure: Countermeasure) -> IngestInputs:
    if measure.kind is MeasureKind.DISABLE_LOCAL_REMOTE:
        return disable_local_remote(inputs)
    if measure.kind is MeasureKind.REMOTE_CREDENTIAL_GUARD:
        return replace(inputs, protections=replace(inputs.protections, wcg_all=True))
    prot = inputs.protections
    return replace(
        inputs,
        protections=replace(prot, protected_users=prot.protected_users | measure.accounts),
    )


def apply_countermeasure(inputs: IngestInputs, measure: Countermeasure | str,
                         cluster: bool = False) -> Network:
    if isinstance(measure, str):
        measure = Countermeasure.parse(measure)
    return build_network(transform_inputs(inputs, measure), cluster=cluster)
