"""Field-based flow analysis in the style of approximate call graphs (ACG).

Every property name is one abstract field shared by all objects, global variables
are fields of the global object, and local variables are tracked per binding.
Function values flow through initialisers, assignments, object literals and class
bodies; no flow crosses a call boundary (arguments, returns).
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Hashable, Iterable

from tree_sitter import Node

from .. import jsast
from ..graph import GLOBAL_ID, CallGraph, FunctionId
from ..inventory import ScriptInventory
from ..scope import CallSite, ScopeAnalysis

Vertex = Hashable


@dataclass(frozen=True)
class NativeTable:
    callback_functions: frozenset[str]
    callback_methods: frozenset[str]
    callback_constructors: frozenset[str]
    receiver_invokers: frozenset[str]
    handler_property_prefix: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "NativeTable":
        return cls(
            frozenset(doc.get("callback_functions", ())),
            frozenset(doc.get("callback_methods", ())),
            frozenset(doc.get("callback_constructors", ())),
            frozenset(doc.get("receiver_invokers", ())),
            doc.get("handler_property_prefix") or None,
        )

    @classmethod
    def load(cls, path: str | Path | None = None) -> "NativeTable":
        if path is None:
            return default_natives()
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@lru_cache(maxsize=None)
def default_natives() -> NativeTable:
    text = resources.files(__package__).joinpath("natives.json").read_text(encoding="utf-8")
    return NativeTable.from_dict(json.loads(text))


class FlowGraph:
    def __init__(self, scopes: ScopeAnalysis, natives: NativeTable | None = None):
        self.sa = scopes
        self.natives = natives
        self.succ: dict[Vertex, set[Vertex]] = defaultdict(set)
        self._values: dict[Vertex, frozenset[FunctionId]] | None = None

    # vertices -----------------------------------------------------------------------

    def var(self, file: str, ident: Node) -> Vertex:
        binding = self.sa.binding_of(file, ident)
        if binding is None or binding.is_global:
            return ("prop", jsast.text(ident))
        return ("var", id(binding))

    def sources(self, file: str, expr: Node | None) -> list[Vertex]:
        """Vertices whose values ``expr`` may evaluate to."""
        expr = jsast.unwrap_parens(expr)
        if expr is None:
            return []
        t = expr.type
        if t in jsast.FUNCTION_KINDS or t == "class":
            fid = self.sa.function_value(file, expr)
            return [("fn", fid)] if fid is not None else []
        if t == "identifier":
            return [self.var(file, expr)]
        if t in ("member_expression", "subscript_expression"):
            name = jsast.member_property(expr)
            return [("prop", name)] if name is not None else []
        if t == "ternary_expression":
            return (self.sources(file, expr.child_by_field_name("consequence"))
                    + self.sources(file, expr.child_by_field_name("alternative")))
        if t == "binary_expression":
            op = expr.child_by_field_name("operator")
            if op is not None and op.type in ("||", "&&", "??"):
                return (self.sources(file, expr.child_by_field_name("left"))
                        + self.sources(file, expr.child_by_field_name("right")))
            return []
        if t == "sequence_expression":
            return self.sources(file, expr.named_children[-1]) if expr.named_children else []
        if t == "assignment_expression":
            return self.sources(file, expr.child_by_field_name("right"))
        if t == "call_expression" and self.natives is not None:
            callee = jsast.unwrap_parens(expr.child_by_field_name("function"))
            # f.bind(...) evaluates to (a bound copy of) f
            if (callee is not None and callee.type == "member_expression"
                    and jsast.member_property(callee) == "bind"
                    and "bind" in self.natives.receiver_invokers):
                return self.sources(file, callee.child_by_field_name("object"))
        return []

    def flow(self, dst: Vertex, srcs: Iterable[Vertex]):
        for s in srcs:
            if s != dst:
                self.succ[s].add(dst)
        self._values = None

    # constraint collection ---------------------------------------------------------

    def add_source(self, file: str, root: Node):
        for node in jsast.walk(root):
            t = node.type
            if t in ("function_declaration", "generator_function_declaration",
                     "function_expression", "function", "generator_function"):
                name = node.child_by_field_name("name")
                if name is not None:
                    self.flow(self.var(file, name), [("fn", self._fid(file, node))])
            elif t in ("class_declaration", "class"):
                name = node.child_by_field_name("name")
                if name is not None:
                    self.flow(self.var(file, name), self._class_ctor(file, node))
                self._class_members(file, node)
            elif t == "variable_declarator":
                self._bind_pattern(file, node.child_by_field_name("name"),
                                   node.child_by_field_name("value"))
            elif t == "assignment_expression":
                self._assign(file, node.child_by_field_name("left"), node.child_by_field_name("right"))
            elif t == "object":
                self._object_literal(file, node)

    def _fid(self, file: str, node: Node) -> FunctionId:
        return FunctionId(file, node.start_byte, node.end_byte)

    def _class_ctor(self, file: str, node: Node) -> list[Vertex]:
        fid = self.sa.function_value(file, node)
        return [("fn", fid)] if fid is not None else []

    def _class_members(self, file: str, node: Node):
        body = node.child_by_field_name("body")
        if body is None:
            return
        for member in body.named_children:
            if member.type == "method_definition":
                name = jsast.property_name(member.child_by_field_name("name"))
                if name is not None:
                    self.flow(("prop", name), [("fn", self._fid(file, member))])
            elif member.type == "field_definition":
                name = jsast.property_name(member.child_by_field_name("property"))
                if name is not None:
                    self.flow(("prop", name), self.sources(file, member.child_by_field_name("value")))

    def _object_literal(self, file: str, node: Node):
        for member in node.named_children:
            if member.type == "pair":
                name = jsast.property_name(member.child_by_field_name("key"))
                if name is not None:
                    self.flow(("prop", name), self.sources(file, member.child_by_field_name("value")))
            elif member.type == "method_definition":
                name = jsast.property_name(member.child_by_field_name("name"))
                if name is not None:
                    self.flow(("prop", name), [("fn", self._fid(file, member))])
            elif member.type == "shorthand_property_identifier":
                self.flow(("prop", jsast.text(member)), [self.var(file, member)])

    def _bind_pattern(self, file: str, pat: Node | None, value: Node | None):
        if pat is None:
            return
        if pat.type == "identifier":
            self.flow(self.var(file, pat), self.sources(file, value))
        elif pat.type == "object_pattern":
            for member in pat.named_children:
                if member.type == "shorthand_property_identifier_pattern":
                    self.flow(self.var(file, member), [("prop", jsast.text(member))])
                elif member.type == "pair_pattern":
                    key = jsast.property_name(member.child_by_field_name("key"))
                    target = member.child_by_field_name("value")
                    if key is not None and target is not None and target.type == "identifier":
                        self.flow(self.var(file, target), [("prop", key)])

    def _assign(self, file: str, left: Node | None, right: Node | None):
        left = jsast.unwrap_parens(left)
        if left is None:
            return
        if left.type == "identifier":
            self.flow(self.var(file, left), self.sources(file, right))
        elif left.type in ("member_expression", "subscript_expression"):
            name = jsast.member_property(left)
            if name is not None:
                self.flow(("prop", name), self.sources(file, right))
        elif left.type == "object_pattern":
            self._bind_pattern(file, left, right)

    # solving ------------------------------------------------------------------------

    def values(self) -> dict[Vertex, frozenset[FunctionId]]:
        if self._values is None:
            reach: dict[Vertex, set[FunctionId]] = defaultdict(set)
            for start in [v for v in list(self.succ) if isinstance(v, tuple) and v[0] == "fn"]:
                fid = start[1]
                stack = [start]
                while stack:
                    v = stack.pop()
                    for w in self.succ.get(v, ()):
                        if fid not in reach[w]:
                            reach[w].add(fid)
                            stack.append(w)
            self._values = {v: frozenset(s) for v, s in reach.items()}
        return self._values

    def eval(self, file: str, expr: Node | None) -> set[FunctionId]:
        """Functions ``expr`` may evaluate to."""
        vals = self.values()
        out: set[FunctionId] = set()
        for v in self.sources(file, expr):
            if v[0] == "fn":
                out.add(v[1])
            else:
                out |= vals.get(v, frozenset())
        return out


def build_flow(scopes: ScopeAnalysis, inventory: ScriptInventory, natives: NativeTable | None) -> FlowGraph:
    flow = FlowGraph(scopes, natives)
    for src in inventory.sources:
        flow.add_source(src.app_path, inventory.tree(src.app_path).root_node)
    return flow


def _acg_pairs(flow: FlowGraph, scopes: ScopeAnalysis) -> set[tuple[FunctionId, FunctionId]]:
    pairs = set()
    for call in scopes.calls:
        for target in flow.eval(call.file, call.callee):
            pairs.add((call.caller, target))
    return pairs


def run_acg(
    inventory: ScriptInventory,
    g0: CallGraph,
    name: str = "acg",
    scopes: ScopeAnalysis | None = None,
) -> CallGraph:
    scopes = scopes or ScopeAnalysis.of_inventory(inventory)
    flow = build_flow(scopes, inventory, None)
    return g0.without_edges().with_edges(sorted(_acg_pairs(flow, scopes)), name)


def _native_pairs(flow: FlowGraph, scopes: ScopeAnalysis, table: NativeTable):
    pairs = set()
    for call in scopes.calls:
        pairs |= _native_call_edges(flow, scopes, table, call)
    return pairs


def _native_call_edges(flow: FlowGraph, scopes: ScopeAnalysis, table: NativeTable, call: CallSite):
    callee = jsast.unwrap_parens(call.callee)
    if callee is None:
        return set()
    hit = False
    if callee.type == "identifier":
        name = jsast.text(callee)
        binding = scopes.binding_of(call.file, callee)
        native = binding is None or (binding.is_global and not binding.functions)
        if native:
            pool = table.callback_constructors if call.node.type == "new_expression" else table.callback_functions
            hit = name in pool
    elif callee.type in ("member_expression", "subscript_expression"):
        prop = jsast.member_property(callee)
        if prop in table.receiver_invokers:
            receiver = callee.child_by_field_name("object")
            if prop == "bind":
                return set()  # binding does not invoke; the bound value flows instead
            return {(call.caller, f) for f in flow.eval(call.file, receiver)}
        if call.node.type == "new_expression":
            hit = prop in table.callback_constructors
        else:
            hit = prop in table.callback_methods
    if not hit:
        return set()
    edges = set()
    for arg in call.arguments:
        for f in flow.eval(call.file, arg):
            edges.add((call.caller, f))
    return edges


def _handler_property_edges(flow: FlowGraph, scopes: ScopeAnalysis, inventory: ScriptInventory,
                            prefix: str) -> set[tuple[FunctionId, FunctionId]]:
    """``el.onclick = fn`` registers ``fn`` with the host like addEventListener."""
    pairs = set()
    owner_of = _owner_index(scopes)
    for src in inventory.sources:
        root = inventory.tree(src.app_path).root_node
        for node in jsast.walk(root):
            if node.type != "assignment_expression":
                continue
            left = jsast.unwrap_parens(node.child_by_field_name("left"))
            if left is None or left.type not in ("member_expression", "subscript_expression"):
                continue
            prop = jsast.member_property(left)
            if not prop or not prop.startswith(prefix) or len(prop) <= len(prefix):
                continue
            caller = owner_of(src.app_path, node)
            for f in flow.eval(src.app_path, node.child_by_field_name("right")):
                pairs.add((caller, f))
    return pairs


def _owner_index(scopes: ScopeAnalysis):
    by_file: dict[str, list[FunctionId]] = defaultdict(list)
    for fid in scopes.functions:
        by_file[fid.file].append(fid)

    def owner(file: str, node: Node) -> FunctionId:
        best = GLOBAL_ID
        for fid in by_file.get(file, ()):
            if fid.start <= node.start_byte and node.end_byte <= fid.end:
                if best.is_global or fid.start >= best.start:
                    best = fid
        return best

    return owner


def run_native_calls(
    inventory: ScriptInventory,
    g0: CallGraph,
    name: str = "native-calls",
    scopes: ScopeAnalysis | None = None,
    natives: NativeTable | None = None,
) -> CallGraph:
    """ACG plus edges through higher-order natives (timers, array methods, promises, events)."""
    table = natives or default_natives()
    scopes = scopes or ScopeAnalysis.of_inventory(inventory)
    flow = build_flow(scopes, inventory, table)
    pairs = _acg_pairs(flow, scopes) | _native_pairs(flow, scopes, table)
    if table.handler_property_prefix:
        pairs |= _handler_property_edges(flow, scopes, inventory, table.handler_property_prefix)
    return g0.without_edges().with_edges(sorted(pairs), name)
