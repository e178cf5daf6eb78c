"""Dead-function classification and source rewriting at optimization levels 0-3."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote, unquote

from tree_sitter import Node

from . import jsast
from .graph import GLOBAL_ID, CallGraph, FunctionId, reachable_from_root
from .inventory import BODY_STORE_DIR, ScriptInventory, copy_app, write_sources
from .scope import ScopeAnalysis

log = logging.getLogger(__name__)

DEFAULT_LAZY_PORT = 8125
LOADER_NAME = "lacunaLazyLoad"
BODY_SUFFIX = ".body"


class OptimizationLevel(enum.IntEnum):
    OL0 = 0
    OL1 = 1
    OL2 = 2
    OL3 = 3

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, value: "str | int | OptimizationLevel") -> "OptimizationLevel":
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper()
        if text.startswith("OL"):
            text = text[2:]
        try:
            return cls(int(text))
        except ValueError:
            raise ValueError(f"unknown optimization level {value!r}") from None


ACTIONS = {
    OptimizationLevel.OL0: "report",
    OptimizationLevel.OL1: "lazy-stub",
    OptimizationLevel.OL2: "empty-body",
    OptimizationLevel.OL3: "remove",
}


class RewriteError(Exception):
    pass


class RewriteConflictError(RewriteError):
    pass


@dataclass
class EliminationPlan:
    dead: frozenset[FunctionId]
    alive: frozenset[FunctionId]
    actions: dict[FunctionId, str] = field(default_factory=dict)
    level: OptimizationLevel | None = None

    def __post_init__(self):
        if self.dead & self.alive:
            raise ValueError("a function cannot be both dead and alive")
        if GLOBAL_ID in self.dead or GLOBAL_ID in self.alive:
            raise ValueError("the global root is not part of a plan")


def classify(gw: CallGraph) -> EliminationPlan:
    """Everything reachable from the global root is alive; the rest is dead."""
    reached = reachable_from_root(gw)
    functions = {n.id for n in gw.function_nodes()}
    return EliminationPlan(frozenset(functions - reached), frozenset(functions & reached))


def outermost(ids) -> list[FunctionId]:
    """Drop ids whose span lies inside another id's span in the same file."""
    out: list[FunctionId] = []
    for fid in sorted(ids, key=lambda f: (f.file, f.start, -f.end)):
        if out and out[-1].file == fid.file and out[-1].start <= fid.start and fid.end <= out[-1].end:
            continue
        out.append(fid)
    return out


def plan_for_level(plan: EliminationPlan, level: OptimizationLevel | int | str) -> EliminationPlan:
    level = OptimizationLevel.parse(level)
    action = ACTIONS[level]
    return EliminationPlan(plan.dead, plan.alive, {f: action for f in outermost(plan.dead)}, level)


# -- body store naming ----------------------------------------------------------------


def body_filename(fid: FunctionId | str) -> str:
    return quote(str(fid), safe="") + BODY_SUFFIX


def id_from_body_filename(name: str) -> str:
    if not name.endswith(BODY_SUFFIX):
        raise ValueError(f"not a body-store file: {name}")
    return unquote(name[: -len(BODY_SUFFIX)])


# -- rewriting ------------------------------------------------------------------------


@dataclass
class RewriteResult:
    output: Path
    level: OptimizationLevel
    changed: list[str] = field(default_factory=list)  # app paths of rewritten sources
    bodies: dict[str, bytes] = field(default_factory=dict)  # OL1 body store contents
    nulled_refs: int = 0


Edit = tuple[int, int, bytes]


def loader_helper(lazy_url: str) -> bytes:
    url = json.dumps(lazy_url)
    return (
        f"\nfunction {LOADER_NAME}(id, cb) {{ fetch({url}, {{ method: \"POST\", body: id }})"
        ".then(function (r) { if (!r.ok) throw new Error(\"lazy load failed: \" + id); return r.text(); })"
        ".then(cb); }\n"
    ).encode("utf-8")


def _simple_params(params: Node | None) -> list[str] | None:
    if params is None:
        return []
    if params.type == "identifier":
        return [jsast.text(params)]
    names = []
    for p in params.named_children:
        if p.type != "identifier":
            return None
        names.append(jsast.text(p))
    return names


def lazy_stub(node: Node, fid: FunctionId) -> bytes:
    """Replacement body that fetches the original body and runs it with the same arguments."""
    ident = json.dumps(str(fid))
    body = jsast.function_body(node)
    params = node.child_by_field_name("parameters") or node.child_by_field_name("parameter")
    params_text = jsast.text(params) if params is not None else "()"
    prefix = "async " if jsast.is_async(node) else ""
    if node.type == "arrow_function":
        header = json.dumps(f"({prefix}{params_text} => ")
        names = _simple_params(params)
        args = ", ".join(names) if names is not None else ""
        call = f"eval({header} + fd + \")\")({args})"
    else:
        star = "*" if jsast.is_generator(node) else ""
        if not params_text.startswith("("):
            params_text = f"({params_text})"
        header = json.dumps(f"({prefix}function{star} {params_text} ")
        call = f"eval({header} + fd + \")\").apply(this, arguments)"
    del body
    return (f"{{ /* lazy-loaded body */ {LOADER_NAME}({ident}, (fd) => {call}); }}").encode("utf-8")


def _removal_edit(node: Node) -> Edit:
    parent = node.parent
    if node.type in ("function_declaration", "generator_function_declaration"):
        if parent is not None and parent.type == "export_statement":
            return (parent.start_byte, parent.end_byte, b"")
        if parent is not None and parent.type in ("program", "statement_block", "switch_case",
                                                   "switch_default", "class_body"):
            return (node.start_byte, node.end_byte, b"")
        return (node.start_byte, node.end_byte, b";")
    if node.type == "method_definition":
        if parent is not None and parent.type == "object":
            key = node.child_by_field_name("name")
            return (node.start_byte, node.end_byte, key.text + b": null")
        return (node.start_byte, node.end_byte, b"")
    # expression position
    return (node.start_byte, node.end_byte, b"null")


def _is_write_target(ident: Node) -> bool:
    parent = ident.parent
    if parent is None:
        return False
    if parent.type in ("assignment_expression", "augmented_assignment_expression"):
        return parent.child_by_field_name("left") == ident
    if parent.type == "update_expression":
        return True
    if parent.type == "for_in_statement":
        return parent.child_by_field_name("left") == ident
    return False


def _reference_edits(
    scopes: ScopeAnalysis, removed: dict[FunctionId, Node], by_file_removed: dict[str, list[FunctionId]]
) -> dict[str, list[Edit]]:
    """Replace references to removed top-level function declarations with ``null``."""
    removed_bindings = set()
    for fid, node in removed.items():
        if node.type not in ("function_declaration", "generator_function_declaration"):
            continue
        name = node.child_by_field_name("name")
        binding = scopes.binding_of(fid.file, name) if name is not None else None
        if binding is None or not binding.is_global or binding.kind != "function":
            continue
        if not binding.functions <= removed.keys():
            continue
        removed_bindings.add(id(binding))

    refs = [(f, n, b) for f, n, b in scopes.references() if b is not None and id(b) in removed_bindings]
    if any(_is_write_target(n) for _, n, _ in refs):
        written = {id(b) for _, n, b in refs if _is_write_target(n)}
        refs = [r for r in refs if id(r[2]) not in written]

    edits: dict[str, list[Edit]] = {}
    for file, node, _ in refs:
        if any(f.start <= node.start_byte and node.end_byte <= f.end for f in by_file_removed.get(file, ())):
            continue
        parent = node.parent
        if node.type == "shorthand_property_identifier":
            edit = (node.start_byte, node.end_byte, node.text + b": null")
        elif parent is not None and parent.type in ("call_expression", "new_expression") and (
            parent.child_by_field_name("function") == node or parent.child_by_field_name("constructor") == node
        ):
            edit = (parent.start_byte, parent.end_byte, b"null")
        else:
            edit = (node.start_byte, node.end_byte, b"null")
        edits.setdefault(file, []).append(edit)
    return edits


def _resolve_overlaps(edits: list[Edit], file: str) -> list[Edit]:
    """Drop edits nested inside another edit; reject partial overlaps."""
    out: list[Edit] = []
    for e in sorted(set(edits), key=lambda e: (e[0], -e[1])):
        if out and e[0] < out[-1][1]:
            if e[1] <= out[-1][1] and e[0] >= out[-1][0]:
                continue
            raise RewriteConflictError(f"{file}: overlapping rewrites at {out[-1][:2]} and {e[:2]}")
        out.append(e)
    return out


def apply_edits(data: bytes, edits: list[Edit]) -> bytes:
    for a, b, new in sorted(edits, key=lambda e: (e[0], e[1]), reverse=True):
        data = data[:a] + new + data[b:]
    return data


def rewrite(
    inventory: ScriptInventory,
    plan: EliminationPlan,
    level: OptimizationLevel | int | str,
    out_dir: Path | str,
    *,
    lazy_url: str = f"http://127.0.0.1:{DEFAULT_LAZY_PORT}",
    copy: bool = True,
    scopes: ScopeAnalysis | None = None,
) -> RewriteResult:
    """Write the optimized app to ``out_dir`` (a fresh copy unless ``copy`` is false)."""
    level = OptimizationLevel.parse(level)
    if plan.level != level or not plan.actions and plan.dead:
        plan = plan_for_level(plan, level)
    out = copy_app(inventory.app_root, out_dir) if copy else Path(out_dir)
    result = RewriteResult(out, level)
    if level is OptimizationLevel.OL0:
        return result

    nodes: dict[FunctionId, Node] = {}
    for src in inventory.sources:
        tree = inventory.tree(src.app_path)
        for site in jsast.collect_functions(tree):
            nodes[FunctionId(src.app_path, site.start, site.end)] = site.node

    edits: dict[str, list[Edit]] = {}
    for fid in plan.actions:
        node = nodes.get(fid)
        if node is None:
            raise RewriteError(f"plan names {fid}, which the inventory does not contain")
        body = jsast.function_body(node)
        if level is OptimizationLevel.OL1:
            result.bodies[str(fid)] = body.text
            edit = (body.start_byte, body.end_byte, lazy_stub(node, fid))
        elif level is OptimizationLevel.OL2:
            edit = (body.start_byte, body.end_byte, b"{}")
        else:
            edit = _removal_edit(node)
        edits.setdefault(fid.file, []).append(edit)

    if level is OptimizationLevel.OL3:
        removed = {fid: nodes[fid] for fid in plan.actions}
        by_file: dict[str, list[FunctionId]] = {}
        for fid in removed:
            by_file.setdefault(fid.file, []).append(fid)
        scopes = scopes or ScopeAnalysis.of_inventory(inventory)
        for file, extra in _reference_edits(scopes, removed, by_file).items():
            result.nulled_refs += len(extra)
            edits.setdefault(file, []).extend(extra)

    new_data: dict[str, bytes] = {}
    for file, file_edits in edits.items():
        src = inventory.source(file)
        data = apply_edits(src.data, _resolve_overlaps(file_edits, file))
        if level is OptimizationLevel.OL1:
            data = data + loader_helper(lazy_url)
        try:
            jsast.parse(data)
        except jsast.JSSyntaxError as exc:
            raise RewriteError(f"rewritten {file} no longer parses: {exc}") from exc
        new_data[file] = data
        result.changed.append(file)
    write_sources(inventory, out, new_data)

    if level is OptimizationLevel.OL1:
        write_body_store(out / BODY_STORE_DIR, result.bodies)
    return result


def write_body_store(directory: Path, bodies: dict[str, bytes]):
    directory.mkdir(parents=True, exist_ok=True)
    for fid, body in bodies.items():
        (directory / body_filename(fid)).write_bytes(body)


# -- reporting ------------------------------------------------------------------------


def emit_report(
    plan: EliminationPlan,
    gw: CallGraph,
    *,
    app: str = "",
    level: OptimizationLevel | int | str | None = None,
) -> dict:
    level = OptimizationLevel.parse(level if level is not None else (plan.level or 0))
    incoming = gw.incoming_labels()
    functions = []
    for node in gw.function_nodes():
        alive = node.id in plan.alive
        functions.append({
            "id": str(node.id),
            "name": node.name,
            "kind": node.kind,
            "status": "alive" if alive else "dead",
            "incoming_labels": sorted(incoming.get(node.id, ())) if alive else [],
        })
    return {
        "app": app,
        "level": str(level),
        "functions": functions,
        "stats": {"total": len(functions), "dead": sum(f["status"] == "dead" for f in functions)},
    }
