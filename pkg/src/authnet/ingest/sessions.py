"""Turn logon / logoff / reboot events into session intervals with residue."""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from datetime import datetime

from authnet.errors import IngestError
from authnet.ingest.records import (
    EventKind,
    Protection,
    Protections,
    SessionEvent,
    SessionRecord,
    format_ts,
)
from authnet.ingest.residue import residue_for

log = logging.getLogger(__name__)


def session_residue(logon_type, package, impersonation, protections: frozenset[Protection]):
    if Protection.PROTECTED_USERS in protections:
        return frozenset(), frozenset()
    return residue_for(logon_type, package, impersonation, Protection.WCG in protections)


def resolve_active_sessions(
    events: list[SessionEvent],
    window: tuple[datetime, datetime] | None = None,
    protections: Protections | None = None,
) -> list[SessionRecord]:
    """Pair logons with the logoff or reboot that ended them.

    A logoff closes the earliest still-open session of that account on that
    host; a reboot closes every open session on the host.  Sessions still open
    at the end of the window are returned with ``end=None``.
    """
    protections = protections or Protections()
    if window is not None:
        t0, t1 = window
        if not t0 < t1:
            raise IngestError("analysis window must satisfy start < end", [f"{t0} .. {t1}"])
    for ev in events:
        if ev.kind is EventKind.LOGON and None in (ev.logon_type, ev.package, ev.impersonation):
            raise IngestError("logon event missing logon attributes", [ev])
    ordered = sorted(enumerate(events), key=lambda p: (p[1].timestamp, p[0]))
    if window is not None:
        inside = [(i, ev) for i, ev in ordered if window[0] <= ev.timestamp <= window[1]]
        if len(inside) != len(ordered):
            log.warning("ignoring %d events outside the analysis window", len(ordered) - len(inside))
        ordered = inside

    open_by_key: dict[tuple[str, str], deque[SessionEvent]] = defaultdict(deque)
    open_by_host: dict[str, list[tuple[str, str]]] = defaultdict(list)
    closed: list[tuple[SessionEvent, datetime | None]] = []

    for _, ev in ordered:
        key = (ev.host, ev.account)
        if ev.kind is EventKind.LOGON:
            open_by_key[key].append(ev)
            open_by_host[ev.host].append(key)
        elif ev.kind is EventKind.LOGOFF:
            if open_by_key.get(key):
                closed.append((open_by_key[key].popleft(), ev.timestamp))
            else:
                log.warning("logoff without open session: %s on %s at %s",
                            ev.account, ev.host, format_ts(ev.timestamp))
        else:
            for k in open_by_host.pop(ev.host, []):
                while open_by_key.get(k):
                    closed.append((open_by_key[k].popleft(), ev.timestamp))

    for q in open_by_key.values():
        closed.extend((ev, None) for ev in q)
    closed.sort(key=lambda p: (p[0].timestamp, p[0].host, p[0].account))

    out = []
    for n, (ev, end) in enumerate(closed):
        prot = protections.for_session(ev.host, ev.account)
        local, remote = session_residue(ev.logon_type, ev.package, ev.impersonation, prot)
        out.append(
            SessionRecord(
                host=ev.host,
                account=ev.account,
                logon_type=ev.logon_type,
                package=ev.package,
                impersonation=ev.impersonation,
                start=ev.timestamp,
                end=end,
                protections=prot,
                residue_local=local,
                residue_remote=remote,
                sid=f"s{n:05d}",
            )
        )
    return out
