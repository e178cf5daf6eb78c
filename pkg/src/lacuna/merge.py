"""Union of per-analyzer call graphs with label accumulation."""

from __future__ import annotations

from typing import Iterable

from .graph import CallGraph, GraphError


class NodeSetMismatchError(GraphError):
    def __init__(self, analyzer: str, missing: int, extra: int):
        self.analyzer = analyzer
        super().__init__(
            f"analyzer {analyzer!r} returned a graph whose nodes differ from G0 "
            f"({missing} missing, {extra} extra)"
        )


def merge(g0: CallGraph, results: Iterable[tuple[str, CallGraph]]) -> CallGraph:
    """Merge analyzer results over ``g0``'s nodes.

    Each merged edge is labelled with exactly the names of the analyzers whose
    graph contains it.
    """
    base = g0.node_ids
    merged = g0.without_edges()
    for name, graph in results:
        if graph.node_ids != base:
            raise NodeSetMismatchError(name, len(base - graph.node_ids), len(graph.node_ids - base))
        merged = merged.with_edges(graph.edge_pairs, name)
    return merged
