"""Thin layer over tree-sitter's JavaScript grammar."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import tree_sitter_javascript
from tree_sitter import Language, Node, Parser, Tree

FUNCTION_KINDS = {
    "function_declaration": "declaration",
    "generator_function_declaration": "declaration",
    "function_expression": "expression",
    "function": "expression",
    "generator_function": "expression",
    "arrow_function": "arrow",
    "method_definition": "method",
}


class JSSyntaxError(Exception):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


@lru_cache(maxsize=None)
def _language() -> Language:
    return Language(tree_sitter_javascript.language())


def parse(source: bytes) -> Tree:
    """Parse ``source`` and raise :class:`JSSyntaxError` if the tree has errors."""
    tree = Parser(_language()).parse(source)
    if tree.root_node.has_error:
        bad = first_error(tree.root_node)
        where = bad.start_byte if bad is not None else None
        line = bad.start_point[0] + 1 if bad is not None else "?"
        raise JSSyntaxError(f"syntax error near line {line}", where)
    return tree


def parses(source: bytes) -> bool:
    try:
        parse(source)
    except JSSyntaxError:
        return False
    return True


def first_error(node: Node) -> Node | None:
    if node.type == "ERROR" or node.is_missing:
        return node
    for child in node.children:
        if child.has_error:
            found = first_error(child)
            if found is not None:
                return found
    return None


def walk(node: Node) -> Iterator[Node]:
    """Pre-order walk over named nodes."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.named_children))


def text(node: Node) -> str:
    return node.text.decode("utf-8", "surrogateescape")


def is_function(node: Node) -> bool:
    return node.type in FUNCTION_KINDS


def unwrap_parens(node: Node | None) -> Node | None:
    while node is not None and node.type == "parenthesized_expression":
        inner = node.named_children
        if len(inner) != 1:
            break
        node = inner[0]
    return node


def property_name(node: Node | None) -> str | None:
    """Static name of a property key (identifier, string or number literal)."""
    if node is None:
        return None
    if node.type in ("property_identifier", "private_property_identifier", "identifier",
                     "shorthand_property_identifier"):
        return text(node)
    if node.type == "string":
        return string_value(node)
    if node.type == "number":
        return text(node)
    return None


def string_value(node: Node) -> str | None:
    if node.type != "string":
        return None
    parts = [c for c in node.named_children if c.type != "string_fragment"]
    if parts:  # escapes; give up on anything but plain fragments
        return None
    return "".join(text(c) for c in node.named_children)


def member_property(node: Node) -> str | None:
    """Static property name of ``o.p`` or ``o["p"]``; None for computed access."""
    if node.type == "member_expression":
        return property_name(node.child_by_field_name("property"))
    if node.type == "subscript_expression":
        idx = unwrap_parens(node.child_by_field_name("index"))
        if idx is not None and idx.type == "string":
            return string_value(idx)
    return None


def function_body(node: Node) -> Node:
    return node.child_by_field_name("body")


def is_async(node: Node) -> bool:
    return any(c.type == "async" for c in node.children)


def is_generator(node: Node) -> bool:
    return node.type.startswith("generator_") or any(c.type == "*" for c in node.children)


@dataclass(frozen=True)
class FunctionSite:
    """A function construct located in one source."""

    node: Node
    kind: str
    name: str | None

    @property
    def start(self) -> int:
        return self.node.start_byte

    @property
    def end(self) -> int:
        return self.node.end_byte


def infer_name(node: Node) -> str | None:
    """Declared name, falling back to the binding or property it is assigned to."""
    own = node.child_by_field_name("name")
    if own is not None:
        return property_name(own) or text(own)
    parent = node.parent
    while parent is not None and parent.type == "parenthesized_expression":
        parent = parent.parent
    if parent is None:
        return None
    if parent.type == "variable_declarator":
        target = parent.child_by_field_name("name")
        if target is not None and target.type == "identifier":
            return text(target)
    elif parent.type == "pair":
        return property_name(parent.child_by_field_name("key"))
    elif parent.type == "field_definition":
        return property_name(parent.child_by_field_name("property"))
    elif parent.type in ("assignment_expression", "assignment_pattern"):
        target = parent.child_by_field_name("left")
        if target is not None:
            if target.type == "identifier":
                return text(target)
            return member_property(target)
    return None


def collect_functions(tree: Tree) -> list[FunctionSite]:
    sites = []
    for node in walk(tree.root_node):
        kind = FUNCTION_KINDS.get(node.type)
        if kind is not None:
            sites.append(FunctionSite(node, kind, infer_name(node)))
    sites.sort(key=lambda s: (s.start, -s.end))
    return sites
