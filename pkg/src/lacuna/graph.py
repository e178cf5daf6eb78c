"""Call-graph data model shared by the parser, analyzers, merger and eliminator."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

GLOBAL_FILE = "<global>"

NODE_KINDS = frozenset(
    {"global", "declaration", "expression", "arrow", "method", "inline-html"}
)

_ID_RE = re.compile(r"^(?P<file>.*)\[(?P<start>\d+):(?P<end>\d+)\]$")


class GraphError(Exception):
    """Base class for call-graph errors."""


class UnknownEndpointError(GraphError):
    """An edge refers to a function id that is not a node of the graph."""

    def __init__(self, fid: "FunctionId", analyzer: str | None = None):
        self.fid = fid
        self.analyzer = analyzer
        who = f" (from analyzer {analyzer!r})" if analyzer else ""
        super().__init__(f"unknown call-graph node {fid}{who}")


@dataclass(frozen=True, order=True)
class FunctionId:
    file: str
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < 0:
            raise ValueError(f"negative offset in {self.file}[{self.start}:{self.end}]")
        if self.file == GLOBAL_FILE:
            if self.start or self.end:
                raise ValueError("the global root has span [0:0]")
        elif self.start >= self.end:
            raise ValueError(f"empty span in {self.file}[{self.start}:{self.end}]")

    def __str__(self) -> str:
        return f"{self.file}[{self.start}:{self.end}]"

    @property
    def is_global(self) -> bool:
        return self.file == GLOBAL_FILE

    @classmethod
    def parse(cls, text: str) -> "FunctionId":
        m = _ID_RE.match(text.strip())
        if not m:
            raise ValueError(f"malformed function id: {text!r}")
        return cls(m["file"], int(m["start"]), int(m["end"]))


GLOBAL_ID = FunctionId(GLOBAL_FILE, 0, 0)


@dataclass(frozen=True)
class FunctionNode:
    id: FunctionId
    kind: str
    name: str | None = None

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if (self.kind == "global") != self.id.is_global:
            raise ValueError(f"node {self.id} has inconsistent kind {self.kind!r}")


GLOBAL_NODE = FunctionNode(GLOBAL_ID, "global", None)


@dataclass(frozen=True)
class CallEdge:
    caller: FunctionId
    callee: FunctionId
    labels: frozenset[str]

    def __post_init__(self):
        if not self.labels:
            raise ValueError(f"edge {self.caller} -> {self.callee} has no labels")


class CallGraph:
    """Directed call graph with a single global root and analyzer-labelled edges.

    Instances behave as values: every mutating operation returns a new graph.
    """

    __slots__ = ("_nodes", "_edges")

    def __init__(
        self,
        nodes: Iterable[FunctionNode] = (),
        edges: Iterable[CallEdge] = (),
    ):
        table: dict[FunctionId, FunctionNode] = {}
        for node in nodes:
            if node.id in table and table[node.id] != node:
                raise GraphError(f"duplicate node id {node.id}")
            table[node.id] = node
        if GLOBAL_ID not in table:
            table[GLOBAL_ID] = GLOBAL_NODE
        globals_ = [n for n in table.values() if n.kind == "global"]
        if len(globals_) != 1:
            raise GraphError("a call graph has exactly one global node")
        self._nodes = table
        self._edges: dict[tuple[FunctionId, FunctionId], frozenset[str]] = {}
        for edge in edges:
            self._put(edge.caller, edge.callee, edge.labels)

    def _put(self, caller: FunctionId, callee: FunctionId, labels: Iterable[str]):
        for fid in (caller, callee):
            if fid not in self._nodes:
                raise UnknownEndpointError(fid)
        labels = frozenset(labels)
        if not labels or any(not lab for lab in labels):
            raise ValueError("edge labels must be non-empty strings")
        key = (caller, callee)
        self._edges[key] = self._edges.get(key, frozenset()) | labels

    # -- value-style construction -------------------------------------------------

    def copy(self) -> "CallGraph":
        g = CallGraph.__new__(CallGraph)
        g._nodes = dict(self._nodes)
        g._edges = dict(self._edges)
        return g

    def add_edge(self, caller: FunctionId, callee: FunctionId, analyzer: str) -> "CallGraph":
        return self.with_edges([(caller, callee)], analyzer)

    def with_edges(
        self, pairs: Iterable[tuple[FunctionId, FunctionId]], analyzer: str
    ) -> "CallGraph":
        """Return a copy with every ``(caller, callee)`` pair added under ``analyzer``."""
        if not analyzer:
            raise ValueError("analyzer name must be non-empty")
        g = self.copy()
        for caller, callee in pairs:
            try:
                g._put(caller, callee, (analyzer,))
            except UnknownEndpointError as exc:
                raise UnknownEndpointError(exc.fid, analyzer) from None
        return g

    def without_edges(self) -> "CallGraph":
        g = CallGraph.__new__(CallGraph)
        g._nodes = dict(self._nodes)
        g._edges = {}
        return g

    def relabeled(self, analyzer: str) -> "CallGraph":
        return self.without_edges().with_edges(self._edges, analyzer)

    # -- queries ------------------------------------------------------------------

    @property
    def root(self) -> FunctionNode:
        return self._nodes[GLOBAL_ID]

    @property
    def nodes(self) -> frozenset[FunctionNode]:
        return frozenset(self._nodes.values())

    @property
    def node_ids(self) -> frozenset[FunctionId]:
        return frozenset(self._nodes)

    @property
    def edges(self) -> frozenset[CallEdge]:
        return frozenset(CallEdge(a, b, labs) for (a, b), labs in self._edges.items())

    @property
    def edge_pairs(self) -> frozenset[tuple[FunctionId, FunctionId]]:
        return frozenset(self._edges)

    def node(self, fid: FunctionId) -> FunctionNode:
        return self._nodes[fid]

    def labels(self, caller: FunctionId, callee: FunctionId) -> frozenset[str]:
        return self._edges.get((caller, callee), frozenset())

    def function_nodes(self) -> list[FunctionNode]:
        """All non-global nodes in id order."""
        return sorted((n for n in self._nodes.values() if n.kind != "global"), key=lambda n: n.id)

    def successors(self) -> dict[FunctionId, set[FunctionId]]:
        succ: dict[FunctionId, set[FunctionId]] = {fid: set() for fid in self._nodes}
        for a, b in self._edges:
            succ[a].add(b)
        return succ

    def incoming_labels(self) -> dict[FunctionId, frozenset[str]]:
        out: dict[FunctionId, frozenset[str]] = {}
        for (_, b), labs in self._edges.items():
            out[b] = out.get(b, frozenset()) | labs
        return out

    def __iter__(self) -> Iterator[FunctionNode]:
        return iter(self._nodes.values())

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CallGraph):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __repr__(self) -> str:
        return f"CallGraph({len(self._nodes)} nodes, {len(self._edges)} edges)"


def add_edge(graph: CallGraph, caller: FunctionId, callee: FunctionId, analyzer: str) -> CallGraph:
    return graph.add_edge(caller, callee, analyzer)


def reachable_from_root(graph: CallGraph) -> set[FunctionId]:
    """Ids reachable from the global root following caller -> callee edges."""
    succ = graph.successors()
    seen = {GLOBAL_ID}
    stack = [GLOBAL_ID]
    while stack:
        for nxt in succ[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


# -- exchange format ---------------------------------------------------------------


def graph_to_dict(graph: CallGraph) -> dict:
    nodes = sorted(graph.nodes, key=lambda n: n.id)
    edges = sorted(graph.edges, key=lambda e: (e.caller, e.callee))
    return {
        "nodes": [{"id": str(n.id), "kind": n.kind, "name": n.name} for n in nodes],
        "edges": [
            {"caller": str(e.caller), "callee": str(e.callee), "labels": sorted(e.labels)}
            for e in edges
        ],
    }


def serialize_graph(graph: CallGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=1)


def graph_from_dict(doc: Mapping) -> CallGraph:
    try:
        nodes = [
            FunctionNode(FunctionId.parse(n["id"]), n["kind"], n.get("name"))
            for n in doc["nodes"]
        ]
        edges = [
            CallEdge(FunctionId.parse(e["caller"]), FunctionId.parse(e["callee"]), frozenset(e["labels"]))
            for e in doc.get("edges", [])
        ]
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed call-graph document: {exc}") from exc
    return CallGraph(nodes, edges)


def deserialize_graph(text: str) -> CallGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"call-graph document is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphError("call-graph document must be a JSON object")
    return graph_from_dict(doc)
