"""Adapter for third-party analyzers speaking the call-graph exchange format."""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path

from ..graph import CallGraph, GraphError, UnknownEndpointError, deserialize_graph, serialize_graph
from ..inventory import ScriptInventory
from . import AnalyzerError, AnalyzerSpec


def run_external(
    inventory: ScriptInventory,
    g0: CallGraph,
    spec: AnalyzerSpec,
    *,
    app_path: Path | str | None = None,
) -> CallGraph:
    """Run ``<cmd> <app-root> <g0-path>`` and read its graph from standard output.

    Every reported id must be a node of ``g0``; edges are relabelled to ``spec.name``.
    """
    if spec.kind != "external":
        raise ValueError(f"{spec.name} is not an external analyzer")
    command = spec.config.get("command")
    if not command:
        raise AnalyzerError(spec.name, "no command configured")
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    timeout = float(spec.config.get("timeout", 120))
    root = Path(app_path or inventory.app_root)

    with tempfile.TemporaryDirectory(prefix="lacuna-ext-") as tmp:
        g0_path = Path(tmp) / "g0.json"
        g0_path.write_text(serialize_graph(g0.without_edges()), encoding="utf-8")
        try:
            proc = subprocess.run(argv + [str(root), str(g0_path)], capture_output=True,
                                  timeout=timeout, text=True)
        except subprocess.TimeoutExpired as exc:
            raise AnalyzerError(spec.name, f"timed out after {timeout}s") from exc
        except OSError as exc:
            raise AnalyzerError(spec.name, f"cannot start {argv[0]!r}: {exc}") from exc

    if proc.returncode != 0:
        raise AnalyzerError(spec.name, f"exited with status {proc.returncode}: {proc.stderr.strip()[-300:]}")
    try:
        reported = deserialize_graph(proc.stdout)
    except UnknownEndpointError as exc:
        raise AnalyzerError(spec.name, f"unknown node id {exc.fid}") from exc
    except (GraphError, ValueError) as exc:
        raise AnalyzerError(spec.name, f"malformed output: {exc}") from exc

    unknown = reported.node_ids - g0.node_ids
    if unknown:
        raise AnalyzerError(spec.name, f"unknown node id {min(unknown)}")
    return g0.without_edges().with_edges(sorted(reported.edge_pairs), spec.name)
