"""Call-graph analyzers.

Every analyzer maps ``(inventory, g0)`` to a graph with exactly ``g0``'s nodes and
its own labelled edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

KINDS = ("static", "acg", "native-calls", "dynamic-trace", "external")

# default analyzer name for each built-in kind
BUILTIN = {
    "static": "static",
    "acg": "acg",
    "native-calls": "native-calls",
    "dynamic": "dynamic-trace",
}


class AnalyzerError(Exception):
    """An analyzer failed; the ensemble continues without it."""

    def __init__(self, analyzer: str, message: str):
        self.analyzer = analyzer
        super().__init__(f"analyzer {analyzer!r}: {message}")


@dataclass(frozen=True)
class AnalyzerSpec:
    name: str
    kind: str
    config: dict[str, Any] = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if not self.name:
            raise ValueError("analyzer name must be non-empty")
        if self.kind not in KINDS:
            raise ValueError(f"unknown analyzer kind {self.kind!r}")


from .acg import run_acg, run_native_calls  # noqa: E402
from .dynamic import instrument, parse_trace, run_dynamic  # noqa: E402
from .external import run_external  # noqa: E402
from .static import run_static  # noqa: E402

__all__ = [
    "AnalyzerError", "AnalyzerSpec", "BUILTIN", "KINDS", "instrument", "parse_trace",
    "run_acg", "run_dynamic", "run_external", "run_native_calls", "run_static",
]
