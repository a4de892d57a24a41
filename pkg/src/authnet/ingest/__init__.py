"""Record ingestion, session resolution, authnet construction and countermeasures."""

from authnet.ingest.build import (
    ClusterMap,
    admin_scopes,
    build_combined_authnet,
    build_local_admin_authnet,
    cluster_similar,
    expand_groups,
    merge_vertices,
)
from authnet.ingest.countermeasures import (
    Countermeasure,
    MeasureKind,
    Network,
    apply_countermeasure,
    build_network,
    transform_inputs,
)
from authnet.ingest.records import (
    AccessRecord,
    Account,
    EventKind,
    IngestInputs,
    ObjectKind,
    Protection,
    Protections,
    Relation,
    SessionEvent,
    SessionRecord,
    SubjectKind,
    System,
    load_access_records,
    load_accounts,
    load_session_events,
    load_systems,
    parse_ts,
)
from authnet.ingest.residue import RESIDUE_TABLE, Artifact, Impersonation, Package, residue_for
from authnet.ingest.sessions import resolve_active_sessions

__all__ = [
    "AccessRecord", "Account", "Artifact", "ClusterMap", "Countermeasure", "EventKind",
    "Impersonation", "IngestInputs", "MeasureKind", "Network", "ObjectKind", "Package",
    "Protection", "Protections", "RESIDUE_TABLE", "Relation", "SessionEvent", "SessionRecord",
    "SubjectKind", "System", "admin_scopes", "apply_countermeasure", "build_combined_authnet",
    "build_local_admin_authnet", "build_network", "cluster_similar", "expand_groups",
    "load_access_records", "load_accounts", "load_session_events", "load_systems",
    "merge_vertices", "parse_ts", "residue_for", "resolve_active_sessions", "transform_inputs",
]
