"""Credential residue left by a logon, keyed by logon type, authentication
package, impersonation level and Windows (Remote) Credential Guard."""

from __future__ import annotations

from enum import Enum

from authnet.errors import UnsupportedCombination


class Package(str, Enum):
    NTLMV2 = "ntlmv2"
    KERBEROS = "kerberos"


class Impersonation(str, Enum):
    IDENTIFICATION = "id"
    IMPERSONATION = "imp"
    DELEGATION = "del"


class Artifact(str, Enum):
    HASH = "Hash"
    TGT = "TGT"
    ST = "ST"
    TGS_SK = "TGS_SK"


LOGON_TYPES = (2, 3, 10)

_NONE: frozenset[Artifact] = frozenset()
_HASH = frozenset({Artifact.HASH})
_KERB = frozenset({Artifact.TGT, Artifact.ST, Artifact.TGS_SK})
_ST = frozenset({Artifact.ST})

N, K = Package.NTLMV2, Package.KERBEROS
ID, IMP, DEL = Impersonation.IDENTIFICATION, Impersonation.IMPERSONATION, Impersonation.DELEGATION

# (logon type, package, impersonation) -> (local, remote, local w/ WCG, remote w/ WCG)
# Interactive (type 2) logons have no remote side; their WCG local column is empty.
RESIDUE_TABLE: dict[tuple[int, Package, Impersonation], tuple[frozenset, frozenset, frozenset, frozenset]] = {
    (2, N, ID): (_HASH, _NONE, _NONE, _NONE),
    (2, N, IMP): (_HASH, _NONE, _NONE, _NONE),
    (2, K, ID): (_KERB, _NONE, _NONE, _NONE),
    (2, K, IMP): (_KERB, _NONE, _NONE, _NONE),
    (3, N, ID): (_HASH, _NONE, _HASH, _NONE),
    (3, N, IMP): (_HASH, _NONE, _HASH, _NONE),
    (3, K, ID): (_KERB, _NONE, _KERB, _NONE),
    (3, K, IMP): (_KERB, _ST, _KERB, _ST),
    (3, K, DEL): (_KERB, _KERB, _KERB, _ST),
    (10, N, ID): (_HASH, _NONE, _HASH, _NONE),
    (10, N, IMP): (_HASH, _HASH, _NONE, _NONE),
    (10, K, ID): (_KERB, _NONE, _NONE, _NONE),
    (10, K, IMP): (_KERB, _ST, _NONE, _ST),
    (10, K, DEL): (_KERB, _KERB, _NONE, _ST),
}


def residue_for(
    logon_type: int,
    package: Package | str,
    impersonation: Impersonation | str,
    wcg: bool = False,
) -> tuple[frozenset[Artifact], frozenset[Artifact]]:
    """Return (local, remote) residue for one logon configuration."""
    try:
        key = (int(logon_type), Package(package), Impersonation(impersonation))
        row = RESIDUE_TABLE[key]
    except (KeyError, ValueError):
        raise UnsupportedCombination(
            f"no residue rule for logon type {logon_type}, {package}, {impersonation}"
        ) from None
    local, remote, local_wcg, remote_wcg = row
    return (local_wcg, remote_wcg) if wcg else (local, remote)
