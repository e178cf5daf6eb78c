"""Lexical scope resolution over every script of an app.

All classic scripts of a page share one global scope, so top-level declarations
from every source land in a single :class:`Scope`.  Resolution is flow-insensitive:
every declaration in a scope is visible throughout it (hoisting and TDZ are not
distinguished).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from tree_sitter import Node

from . import jsast
from .graph import GLOBAL_ID, FunctionId

if TYPE_CHECKING:
    from .inventory import ScriptInventory

_NEW_BLOCK = {"statement_block", "switch_body", "for_statement", "for_in_statement",
              "class_body"}
_PATTERN_CONTAINERS = {"object_pattern", "array_pattern", "pair_pattern", "assignment_pattern",
                       "rest_pattern"}


@dataclass(eq=False)
class Binding:
    name: str
    scope: "Scope"
    kind: str
    functions: set[FunctionId] = field(default_factory=set)
    decl: Node | None = None

    @property
    def is_global(self) -> bool:
        return self.scope.kind == "global"

    def __repr__(self) -> str:
        return f"Binding({self.name!r}, {self.kind}, {self.scope.kind}@{self.scope.owner})"


@dataclass(eq=False)
class Scope:
    kind: str  # global | function | block | catch | class
    parent: "Scope | None"
    owner: FunctionId
    bindings: dict[str, Binding] = field(default_factory=dict)

    def declare(self, name: str, kind: str, decl: Node | None = None) -> Binding:
        b = self.bindings.get(name)
        if b is None:
            b = self.bindings[name] = Binding(name, self, kind, decl=decl)
        return b

    def function_scope(self) -> "Scope":
        s = self
        while s.kind not in ("function", "global"):
            s = s.parent
        return s

    def lookup(self, name: str) -> Binding | None:
        s: Scope | None = self
        while s is not None:
            b = s.bindings.get(name)
            if b is not None:
                return b
            s = s.parent
        return None


@dataclass(frozen=True)
class CallSite:
    file: str
    node: Node  # call_expression or new_expression
    scope: Scope

    @property
    def caller(self) -> FunctionId:
        return self.scope.owner

    @property
    def callee(self) -> Node:
        field_ = "constructor" if self.node.type == "new_expression" else "function"
        return self.node.child_by_field_name(field_)

    @property
    def arguments(self) -> list[Node]:
        args = self.node.child_by_field_name("arguments")
        if args is None or args.type != "arguments":
            return []
        return [a for a in args.named_children if a.type != "comment"]


@dataclass(frozen=True)
class FunctionInfo:
    id: FunctionId
    node: Node
    scope: Scope  # scope the function is defined in
    body_scope: Scope


class ScopeAnalysis:
    """Scopes, identifier resolution and call sites for a whole inventory."""

    def __init__(self):
        self.global_scope = Scope("global", None, GLOBAL_ID)
        self.calls: list[CallSite] = []
        self.functions: dict[FunctionId, FunctionInfo] = {}
        self._refs: list[tuple[str, Node, Scope]] = []
        self._assigned: list[tuple[str, Node, Node, Scope]] = []
        self.resolved: dict[tuple[str, int], Binding | None] = {}
        self.declared: dict[tuple[str, int], Binding] = {}

    # -- public -------------------------------------------------------------------

    @classmethod
    def of_inventory(cls, inventory: "ScriptInventory") -> "ScopeAnalysis":
        sa = cls()
        for src in inventory.sources:
            sa.add_source(src.app_path, inventory.tree(src.app_path).root_node)
        sa.finish()
        return sa

    @classmethod
    def of_sources(cls, sources: Iterable[tuple[str, Node]]) -> "ScopeAnalysis":
        sa = cls()
        for file, root in sources:
            sa.add_source(file, root)
        sa.finish()
        return sa

    def add_source(self, file: str, root: Node):
        _Walker(self, file).visit_children(root, self.global_scope)

    def finish(self):
        for file, node, scope in self._refs:
            self.resolved[(file, node.start_byte)] = scope.lookup(jsast.text(node))
        for file, target, value, scope in self._assigned:
            b = self.binding_of(file, target)
            fid = self.function_value(file, value)
            if b is not None and fid is not None:
                b.functions.add(fid)

    def binding_of(self, file: str, ident: Node) -> Binding | None:
        """Binding an identifier (reference or declaration) denotes; None for implicit globals."""
        key = (file, ident.start_byte)
        if key in self.declared:
            return self.declared[key]
        return self.resolved.get(key)

    def is_reference(self, file: str, ident: Node) -> bool:
        return (file, ident.start_byte) in self.resolved

    def references(self) -> Iterable[tuple[str, Node, Binding | None]]:
        for file, node, _ in self._refs:
            yield file, node, self.resolved[(file, node.start_byte)]

    def function_value(self, file: str, value: Node | None) -> FunctionId | None:
        """Id of the function a syntactic value denotes directly (function or class literal)."""
        value = jsast.unwrap_parens(value)
        if value is None:
            return None
        if jsast.is_function(value):
            return FunctionId(file, value.start_byte, value.end_byte)
        if value.type in ("class", "class_declaration"):
            ctor = constructor_of(value)
            if ctor is not None:
                return FunctionId(file, ctor.start_byte, ctor.end_byte)
        return None


def constructor_of(class_node: Node) -> Node | None:
    body = class_node.child_by_field_name("body")
    if body is None:
        return None
    for member in body.named_children:
        if member.type == "method_definition" and jsast.property_name(
            member.child_by_field_name("name")
        ) == "constructor":
            return member
    return None


class _Walker:
    def __init__(self, sa: ScopeAnalysis, file: str):
        self.sa = sa
        self.file = file

    def fid(self, node: Node) -> FunctionId:
        return FunctionId(self.file, node.start_byte, node.end_byte)

    def ref(self, node: Node, scope: Scope):
        self.sa._refs.append((self.file, node, scope))

    def declare(self, scope: Scope, ident: Node, kind: str) -> Binding:
        b = scope.declare(jsast.text(ident), kind, ident)
        self.sa.declared[(self.file, ident.start_byte)] = b
        return b

    # patterns ----------------------------------------------------------------------

    def declare_pattern(self, pat: Node | None, scope: Scope, kind: str, value: Node | None = None):
        if pat is None:
            return
        t = pat.type
        if t in ("identifier", "shorthand_property_identifier_pattern"):
            b = self.declare(scope, pat, kind)
            fid = self.sa.function_value(self.file, value)
            if fid is not None:
                b.functions.add(fid)
        elif t == "assignment_pattern":
            self.declare_pattern(pat.child_by_field_name("left"), scope, kind)
            self.visit(pat.child_by_field_name("right"), scope)
        elif t == "pair_pattern":
            key = pat.child_by_field_name("key")
            if key is not None and key.type == "computed_property_name":
                self.visit(key, scope)
            self.declare_pattern(pat.child_by_field_name("value"), scope, kind)
        elif t in _PATTERN_CONTAINERS:
            for c in pat.named_children:
                self.declare_pattern(c, scope, kind)
        elif t == "object_assignment_pattern":
            self.declare_pattern(pat.child_by_field_name("left"), scope, kind)
            self.visit(pat.child_by_field_name("right"), scope)

    # traversal -----------------------------------------------------------------------

    def visit_children(self, node: Node, scope: Scope):
        for c in node.named_children:
            self.visit(c, scope)

    def visit(self, node: Node | None, scope: Scope):
        if node is None:
            return
        t = node.type
        if t in jsast.FUNCTION_KINDS:
            self.visit_function(node, scope)
        elif t == "identifier":
            self.ref(node, scope)
        elif t == "shorthand_property_identifier":
            self.ref(node, scope)
        elif t == "variable_declaration":
            target = scope.function_scope()
            for decl in node.named_children:
                if decl.type == "variable_declarator":
                    value = decl.child_by_field_name("value")
                    self.declare_pattern(decl.child_by_field_name("name"), target, "var", value)
                    self.visit(value, scope)
        elif t == "lexical_declaration":
            kind_node = node.child_by_field_name("kind")
            kind = jsast.text(kind_node) if kind_node is not None else "let"
            for decl in node.named_children:
                if decl.type == "variable_declarator":
                    value = decl.child_by_field_name("value")
                    self.declare_pattern(decl.child_by_field_name("name"), scope, kind, value)
                    self.visit(value, scope)
        elif t in ("class_declaration", "class"):
            self.visit_class(node, scope)
        elif t == "for_in_statement":
            inner = Scope("block", scope, scope.owner)
            left = node.child_by_field_name("left")
            kind_node = node.child_by_field_name("kind")
            if kind_node is not None:
                kind = jsast.text(kind_node)
                target = inner if kind != "var" else scope.function_scope()
                self.declare_pattern(left, target, kind)
            else:
                self.visit(left, inner)
            self.visit(node.child_by_field_name("right"), inner)
            self.visit(node.child_by_field_name("body"), inner)
        elif t == "catch_clause":
            inner = Scope("catch", scope, scope.owner)
            self.declare_pattern(node.child_by_field_name("parameter"), inner, "catch")
            body = node.child_by_field_name("body")
            if body is not None:
                self.visit_children(body, inner)
        elif t in _NEW_BLOCK:
            self.visit_children(node, Scope("block", scope, scope.owner))
        elif t in ("call_expression", "new_expression"):
            self.sa.calls.append(CallSite(self.file, node, scope))
            self.visit_children(node, scope)
        elif t == "assignment_expression":
            left = jsast.unwrap_parens(node.child_by_field_name("left"))
            right = node.child_by_field_name("right")
            if left is not None and left.type == "identifier":
                self.sa._assigned.append((self.file, left, right, scope))
            self.visit(left, scope)
            self.visit(right, scope)
        elif t in ("import_statement",):
            for n in jsast.walk(node):
                if n.type == "identifier":
                    self.declare(scope, n, "import")
        elif t in ("labeled_statement", "break_statement", "continue_statement"):
            body = node.child_by_field_name("body")
            if body is not None:
                self.visit(body, scope)
        elif t == "export_specifier":
            name = node.child_by_field_name("name")
            if name is not None and name.type == "identifier":
                self.ref(name, scope)
        elif t in ("comment", "string", "template_string", "regex", "number", "property_identifier",
                   "statement_identifier"):
            if t == "template_string":
                self.visit_children(node, scope)
        else:
            self.visit_children(node, scope)

    def visit_class(self, node: Node, scope: Scope):
        name = node.child_by_field_name("name")
        inner = scope
        if node.type == "class_declaration" and name is not None:
            b = self.declare(scope, name, "class")
            fid = self.sa.function_value(self.file, node)
            if fid is not None:
                b.functions.add(fid)
        elif name is not None:
            inner = Scope("class", scope, scope.owner)
            b = self.declare(inner, name, "class")
            fid = self.sa.function_value(self.file, node)
            if fid is not None:
                b.functions.add(fid)
        for c in node.named_children:
            if c.type == "class_heritage":
                self.visit_children(c, inner)
        body = node.child_by_field_name("body")
        if body is None:
            return
        body_scope = Scope("block", inner, inner.owner)
        for member in body.named_children:
            if member.type == "method_definition":
                self.visit_function(member, body_scope)
            elif member.type == "field_definition":
                prop = member.child_by_field_name("property")
                if prop is not None and prop.type == "computed_property_name":
                    self.visit(prop, body_scope)
                self.visit(member.child_by_field_name("value"), body_scope)
            elif member.type == "class_static_block":
                self.visit_children(member, body_scope)

    def visit_function(self, node: Node, scope: Scope):
        fid = self.fid(node)
        name = node.child_by_field_name("name")
        if node.type in ("function_declaration", "generator_function_declaration") and name is not None:
            b = self.declare(scope, name, "function")
            b.functions.add(fid)
        if node.type == "method_definition" and name is not None and name.type == "computed_property_name":
            self.visit(name, scope)
        fscope = Scope("function", scope, fid)
        if node.type in ("function_expression", "function", "generator_function") and name is not None:
            b = self.declare(fscope, name, "fn-name")
            b.functions.add(fid)
        self.sa.functions[fid] = FunctionInfo(fid, node, scope, fscope)
        params = node.child_by_field_name("parameters")
        if params is not None:
            for p in params.named_children:
                self.declare_pattern(p, fscope, "param")
        single = node.child_by_field_name("parameter")
        if single is not None:
            self.declare_pattern(single, fscope, "param")
        body = node.child_by_field_name("body")
        if body is None:
            return
        if body.type == "statement_block":
            self.visit_children(body, fscope)
        else:
            self.visit(body, fscope)
