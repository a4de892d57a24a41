"""Exception hierarchy shared by every analysis module."""

from __future__ import annotations


class AuthnetError(Exception):
    """Base class for all package errors."""


class ValidationError(AuthnetError):
    """Bad input data or configuration (CLI exit status 2)."""


class IngestError(ValidationError):
    """Malformed or inconsistent ingestion records."""

    def __init__(self, message: str, offending: list | None = None) -> None:
        self.offending = list(offending or [])
        if self.offending:
            shown = "; ".join(str(o) for o in self.offending[:10])
            more = len(self.offending) - 10
            if more > 0:
                shown += f"; ... ({more} more)"
            message = f"{message}: {shown}"
        super().__init__(message)


class ConfigError(ValidationError):
    """Invalid configuration value."""


class UnsupportedCombination(ValidationError):
    """Logon type / package / impersonation combination absent from the residue table."""


class AnalysisError(AuthnetError):
    """An analysis could not be completed (CLI exit status 3)."""


class VertexNotFound(AnalysisError, KeyError):
    """Vertex id not present in the graph."""

    def __str__(self) -> str:
        return f"unknown vertex: {self.args[0]!r}"


class PathCountOverflow(AnalysisError):
    """A path count exceeded the signed 64-bit range."""


class DivergenceError(AnalysisError):
    """An iterative solver failed to converge."""

    def __init__(self, message: str, last_iterate=None) -> None:
        super().__init__(message)
        self.last_iterate = last_iterate
