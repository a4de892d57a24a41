"""Authentication-network analysis: credential chaining, spreaders, escalators, gatekeepers."""

from authnet.errors import AnalysisError, AuthnetError, ConfigError, IngestError, ValidationError
from authnet.graph import DirGraph, Edge, Provenance, graph_stats

__version__ = "0.1.0"

__all__ = [
    "AnalysisError", "AuthnetError", "ConfigError", "DirGraph", "Edge", "IngestError",
    "Provenance", "ValidationError", "graph_stats", "__version__",
]
