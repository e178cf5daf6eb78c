"""Run-time call graphs from function-entry probes.

Instrumented functions report ``CALL <caller> <callee>`` lines.  Callers come from
a shadow call stack maintained by the probes; callbacks handed to timers,
promises and event listeners remember the function that scheduled them.
"""

from __future__ import annotations

import json
import logging
import re
import shlex
import subprocess
import tempfile
from pathlib import Path
from typing import Iterable

from tree_sitter import Node

from .. import jsast
from ..graph import GLOBAL_ID, CallGraph, FunctionId
from ..inventory import ScriptInventory, copy_app, write_sources
from . import AnalyzerError

log = logging.getLogger(__name__)

_TRACE_LINE = re.compile(r"^CALL (?P<caller>.+?\[\d+:\d+\]) (?P<callee>.+\[\d+:\d+\])$")

PRELUDE = r"""(function (g) {
  if (g.__lacuna_enter) return;
  var ROOT = "<global>[0:0]", stack = [], ctx = null, seen = Object.create(null), log = [];
  function current() { return stack.length ? stack[stack.length - 1] : (ctx || ROOT); }
  g.__lacuna_trace = log;
  g.__lacuna_enter = function (id, logOnly) {
    var line = "CALL " + current() + " " + id;
    if (!seen[line]) {
      seen[line] = 1;
      log.push(line);
      if (typeof g.__lacuna_sink === "function") { try { g.__lacuna_sink(line); } catch (e) {} }
    }
    if (logOnly) return 0;
    stack.push(id);
    return stack.length;
  };
  g.__lacuna_exit = function (depth) { if (depth > 0) stack.length = depth - 1; };
  function adopt(fn) {
    if (typeof fn !== "function") return fn;
    var owner = current();
    return function () {
      var saved = ctx;
      ctx = owner;
      try { return fn.apply(this, arguments); } finally { ctx = saved; }
    };
  }
  function hook(obj, name) {
    var orig = obj && obj[name];
    if (typeof orig !== "function" || orig.__lacuna_hooked) return;
    var wrapped = function () {
      var args = Array.prototype.slice.call(arguments);
      for (var i = 0; i < args.length; i++) args[i] = adopt(args[i]);
      return orig.apply(this, args);
    };
    wrapped.__lacuna_hooked = true;
    try { obj[name] = wrapped; } catch (e) {}
  }
  ["setTimeout", "setInterval", "setImmediate", "requestAnimationFrame",
   "requestIdleCallback", "queueMicrotask"].forEach(function (n) { hook(g, n); });
  if (g.Promise) ["then", "catch", "finally"].forEach(function (n) { hook(g.Promise.prototype, n); });
  if (g.EventTarget) hook(g.EventTarget.prototype, "addEventListener");
})(typeof globalThis !== "undefined" ? globalThis : this);
"""

_PRELUDE_ONE_LINE = " ".join(line.strip() for line in PRELUDE.splitlines())


def _directive_end(stmts: Iterable[Node]) -> int | None:
    """End offset of a leading directive prologue (``"use strict";`` ...), if any."""
    end = None
    for st in stmts:
        if st.type == "comment":
            continue
        if st.type == "expression_statement" and st.named_child_count == 1 \
                and st.named_children[0].type == "string":
            end = st.end_byte
            continue
        break
    return end


def _probe(fid: FunctionId, log_only: bool) -> tuple[str, str]:
    ident = json.dumps(str(fid))
    if log_only:
        return f" __lacuna_enter({ident}, true);", ""
    return (f" var __lacuna_d = __lacuna_enter({ident}); try {{",
            " } finally { __lacuna_exit(__lacuna_d); }")


def instrument_source(data: bytes, app_path: str, tree=None) -> bytes:
    """Insert entry probes into every function of one script."""
    tree = tree or jsast.parse(data)
    inserts: list[tuple[int, int, int, str]] = []  # (offset, phase, depth, text)
    for site in jsast.collect_functions(tree):
        node = site.node
        fid = FunctionId(app_path, site.start, site.end)
        log_only = jsast.is_async(node) or jsast.is_generator(node)
        head, tail = _probe(fid, log_only)
        depth = _depth(node)
        body = jsast.function_body(node)
        if body.type == "statement_block":
            at = _directive_end(body.named_children)
            at = at if at is not None else body.start_byte + 1
            if at == body.end_byte - 1:  # empty body: head and tail meet
                inserts.append((at, 1, depth, head + tail))
            else:
                inserts.append((at, 1, depth, head))
                if tail:
                    inserts.append((body.end_byte - 1, 0, -depth, tail))
        else:  # concise arrow body
            inserts.append((body.start_byte, 1, depth, "{" + head + " return ("))
            inserts.append((body.end_byte, 0, -depth, ");" + tail + " }"))
    top = _directive_end(tree.root_node.named_children)
    prelude_at = top if top is not None else 0
    prelude = ("\n" if top is not None else "") + _PRELUDE_ONE_LINE + "\n"
    inserts.append((prelude_at, -1, 0, prelude))
    # closing text for inner functions precedes that of outer ones at equal offsets
    inserts.sort(key=lambda t: (t[0], t[1], t[2]))
    out, pos = [], 0
    for off, _, _, text_ in inserts:
        out.append(data[pos:off])
        out.append(text_.encode("utf-8"))
        pos = off
    out.append(data[pos:])
    return b"".join(out)


def _depth(node: Node) -> int:
    d, p = 0, node.parent
    while p is not None:
        d += 1
        p = p.parent
    return d


def instrument(inventory: ScriptInventory, out_dir: Path | str) -> Path:
    """Write an instrumented copy of the app to ``out_dir``.

    Sources that failed to parse are absent from ``inventory.sources`` and are
    therefore copied through unchanged.
    """
    out = copy_app(inventory.app_root, out_dir)
    edits = {
        src.app_path: instrument_source(src.data, src.app_path, inventory.tree(src.app_path))
        for src in inventory.sources
    }
    write_sources(inventory, out, edits)
    return out


# -- traces --------------------------------------------------------------------------


def parse_trace(lines: Iterable[str]) -> tuple[list[tuple[FunctionId, FunctionId]], list[str]]:
    """Parse trace lines into (caller, callee) records plus per-line diagnostics."""
    records, problems = [], []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        m = _TRACE_LINE.match(line)
        if not m:
            problems.append(f"line {lineno}: malformed trace record {line!r}")
            continue
        try:
            records.append((FunctionId.parse(m["caller"]), FunctionId.parse(m["callee"])))
        except ValueError as exc:
            problems.append(f"line {lineno}: {exc}")
    return records, problems


def read_trace(path: Path | str) -> tuple[list[tuple[FunctionId, FunctionId]], list[str]]:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh)


def run_dynamic(
    inventory: ScriptInventory,
    g0: CallGraph,
    trace: Iterable[tuple[FunctionId, FunctionId]],
    name: str = "dynamic",
) -> CallGraph:
    """One edge per distinct resolvable (caller, callee) record."""
    known = g0.node_ids
    pairs = set()
    for caller, callee in trace:
        if caller not in known or callee not in known:
            log.warning("%s: trace record %s -> %s does not match the app; skipped", name, caller, callee)
            continue
        pairs.add((caller, callee))
    return g0.without_edges().with_edges(sorted(pairs), name)


def record_trace(
    inventory: ScriptInventory,
    runner: str | list[str],
    *,
    timeout: float = 60.0,
    work_dir: Path | str | None = None,
    name: str = "dynamic",
) -> list[tuple[FunctionId, FunctionId]]:
    """Instrument the app, execute it with ``runner`` and return the trace records.

    The runner is invoked as ``<runner> <instrumented-app-root> <trace-output-path>``.
    """
    argv = shlex.split(runner) if isinstance(runner, str) else list(runner)
    with tempfile.TemporaryDirectory(prefix="lacuna-dyn-", dir=work_dir) as tmp:
        app = instrument(inventory, Path(tmp) / "app")
        trace_path = Path(tmp) / "trace.txt"
        try:
            proc = subprocess.run(argv + [str(app), str(trace_path)], capture_output=True,
                                  timeout=timeout, text=True)
        except subprocess.TimeoutExpired as exc:
            raise AnalyzerError(name, f"runner timed out after {timeout}s") from exc
        except OSError as exc:
            raise AnalyzerError(name, f"cannot start runner: {exc}") from exc
        if proc.returncode != 0:
            raise AnalyzerError(name, f"runner exited with {proc.returncode}: {proc.stderr.strip()[-500:]}")
        if not trace_path.exists():
            raise AnalyzerError(name, "runner produced no trace file")
        records, problems = read_trace(trace_path)
    for p in problems:
        log.warning("%s: %s", name, p)
    return records


__all__ = ["GLOBAL_ID", "PRELUDE", "instrument", "instrument_source", "parse_trace", "read_trace",
           "record_trace", "run_dynamic"]
