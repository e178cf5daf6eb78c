"""Lexically resolved direct calls."""

from __future__ import annotations

from .. import jsast
from ..graph import CallGraph
from ..inventory import ScriptInventory
from ..scope import ScopeAnalysis


def run_static(
    inventory: ScriptInventory,
    g0: CallGraph,
    name: str = "static",
    scopes: ScopeAnalysis | None = None,
) -> CallGraph:
    """Edges for ``f(...)`` and ``new f(...)`` where ``f`` resolves to a function binding.

    Only bindings initialised with (or assigned) a function literal count; property
    access, receivers, ``eval`` and ``with`` are ignored.
    """
    scopes = scopes or ScopeAnalysis.of_inventory(inventory)
    pairs = set()
    for call in scopes.calls:
        callee = jsast.unwrap_parens(call.callee)
        if callee is None or callee.type != "identifier":
            continue
        binding = scopes.binding_of(call.file, callee)
        if binding is None:
            continue
        for target in binding.functions:
            pairs.add((call.caller, target))
    return g0.without_edges().with_edges(sorted(pairs), name)
