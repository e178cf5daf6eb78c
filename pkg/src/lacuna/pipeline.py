"""End-to-end orchestration: parse, analyze in parallel, merge, classify, rewrite."""

from __future__ import annotations

import concurrent.futures as cf
import hashlib
import json
import logging
import shutil
import sys
import tempfile
import urllib.parse
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .analyzers import AnalyzerError, AnalyzerSpec, BUILTIN
from .analyzers.acg import NativeTable, run_acg, run_native_calls
from .analyzers.dynamic import read_trace, record_trace, run_dynamic
from .analyzers.external import run_external
from .analyzers.static import run_static
from .eliminate import (DEFAULT_LAZY_PORT, EliminationPlan, OptimizationLevel, RewriteResult, classify,
                        emit_report, plan_for_level, rewrite)
from .graph import CallGraph, serialize_graph
from .inventory import FetchError, Fetcher, ScriptInventory, copy_app, initialize_cg, parse_app
from .merge import merge
from .scope import ScopeAnalysis

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

CONFIG_FILE = "lacuna.toml"
DEFAULT_ANALYZERS = ("static", "acg", "native-calls")
DEFAULT_TIMEOUT = 120.0


class ConfigError(Exception):
    pass


class PipelineError(Exception):
    def __init__(self, module: str, message: str):
        self.module = module
        super().__init__(f"[{module}] {message}")


# -- configuration --------------------------------------------------------------------


@dataclass
class RunConfig:
    app_root: Path
    output_dir: Path | None = None
    level: OptimizationLevel = OptimizationLevel.OL0
    analyzers: list[AnalyzerSpec] = field(default_factory=list)
    lazy_port: int = DEFAULT_LAZY_PORT
    emit_graph: Path | None = None
    timeout_s: float = DEFAULT_TIMEOUT
    report: Path | None = None
    cdn_mirror: Path | None = None
    download: bool = True

    def validate(self, *, need_output: bool = True):
        if not Path(self.app_root).is_dir():
            raise ConfigError(f"app root {self.app_root} is not a directory")
        if need_output:
            if self.output_dir is None:
                raise ConfigError("an output directory is required")
            if Path(self.output_dir).resolve() == Path(self.app_root).resolve():
                raise ConfigError("output directory must differ from the app root")
        if not self.analyzers:
            raise ConfigError("at least one analyzer is required")
        names = [a.name for a in self.analyzers]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigError(f"duplicate analyzer names: {', '.join(dupes)}")
        if not 0 < self.lazy_port < 65536:
            raise ConfigError(f"invalid lazy-load port {self.lazy_port}")
        if self.timeout_s <= 0:
            raise ConfigError("timeout must be positive")


def load_config_file(path: Path | str) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def build_specs(
    names: Iterable[str],
    *,
    externals: Iterable[str] = (),
    trace: Path | str | None = None,
    runner: str | None = None,
    natives: Path | str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    per_app_traces: bool = False,
) -> list[AnalyzerSpec]:
    """Turn analyzer names and ``name:cmd`` external entries into specs.

    With ``per_app_traces`` the dynamic analyzer may be left without a trace; corpus
    evaluation supplies each app's recorded trace later.
    """
    specs = []
    for name in names:
        name = name.strip()
        if not name:
            continue
        kind = BUILTIN.get(name, name)
        if kind not in ("static", "acg", "native-calls", "dynamic-trace"):
            raise ConfigError(f"unknown analyzer {name!r} (built-ins: {', '.join(BUILTIN)})")
        cfg: dict[str, Any] = {"timeout": timeout}
        if kind == "dynamic-trace":
            if trace is None and runner is None and not per_app_traces:
                raise ConfigError("the dynamic analyzer needs --trace or --runner")
            cfg.update(trace=str(trace) if trace else None, runner=runner)
        if kind == "native-calls" and natives:
            cfg["natives"] = str(natives)
        specs.append(AnalyzerSpec(name, kind, cfg))
    for entry in externals:
        name, sep, cmd = entry.partition(":")
        if not sep or not name.strip() or not cmd.strip():
            raise ConfigError(f"external analyzer must be given as name:command, got {entry!r}")
        specs.append(AnalyzerSpec(name.strip(), "external", {"command": cmd.strip(), "timeout": timeout}))
    return specs


# -- external-script fetching from a local mirror --------------------------------------


def mirror_fetcher(mirror: Path | str) -> Fetcher:
    """Serve ``http(s)://host/path`` from ``<mirror>/host/path`` instead of the network."""
    mirror = Path(mirror)

    def fetch(url: str) -> bytes:
        parts = urllib.parse.urlsplit("https:" + url if url.startswith("//") else url)
        path = mirror / (parts.hostname or "") / parts.path.lstrip("/")
        try:
            return path.read_bytes()
        except OSError as exc:
            raise FetchError(f"{url}: not in mirror ({exc.strerror})") from exc

    return fetch


# -- hashing --------------------------------------------------------------------------


def tree_hash(root: Path | str) -> str:
    """Content hash over relative paths and bytes of every file below ``root``."""
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode() + b"\0")
        h.update(hashlib.sha256(path.read_bytes()).digest())
    return h.hexdigest()


# -- analysis -------------------------------------------------------------------------


def run_analyzer(
    spec: AnalyzerSpec, inventory: ScriptInventory, g0: CallGraph, scopes: ScopeAnalysis | None = None
) -> CallGraph:
    cfg = spec.config
    try:
        if spec.kind == "static":
            return run_static(inventory, g0, spec.name, scopes=scopes)
        if spec.kind == "acg":
            return run_acg(inventory, g0, spec.name, scopes=scopes)
        if spec.kind == "native-calls":
            natives = NativeTable.load(cfg["natives"]) if cfg.get("natives") else None
            return run_native_calls(inventory, g0, spec.name, scopes=scopes, natives=natives)
        if spec.kind == "dynamic-trace":
            if cfg.get("trace"):
                records, problems = read_trace(cfg["trace"])
                for p in problems:
                    log.warning("%s: %s", spec.name, p)
            else:
                records = record_trace(inventory, cfg["runner"], timeout=cfg.get("timeout", DEFAULT_TIMEOUT),
                                       name=spec.name)
            return run_dynamic(inventory, g0, records, spec.name)
        return run_external(inventory, g0, spec)
    except AnalyzerError:
        raise
    except OSError as exc:
        raise AnalyzerError(spec.name, str(exc)) from exc


def run_analyzers(
    inventory: ScriptInventory,
    g0: CallGraph,
    specs: list[AnalyzerSpec],
    *,
    timeout: float = DEFAULT_TIMEOUT,
    workers: int | None = None,
) -> tuple[list[tuple[str, CallGraph]], dict[str, str]]:
    """Run analyzers concurrently; failures are collected instead of raised."""
    scopes = ScopeAnalysis.of_inventory(inventory)
    results: dict[str, CallGraph] = {}
    failures: dict[str, str] = {}
    pool = cf.ThreadPoolExecutor(max_workers=workers or min(8, max(1, len(specs))))
    try:
        futures = {spec.name: pool.submit(run_analyzer, spec, inventory, g0, scopes) for spec in specs}
        for spec in specs:
            try:
                results[spec.name] = futures[spec.name].result(timeout=timeout)
            except cf.TimeoutError:
                failures[spec.name] = f"timed out after {timeout}s"
            except AnalyzerError as exc:
                failures[spec.name] = str(exc)
            except Exception as exc:  # analyzer bugs must not sink the ensemble
                log.exception("analyzer %s crashed", spec.name)
                failures[spec.name] = f"{type(exc).__name__}: {exc}"
            if spec.name in failures:
                log.warning("analyzer %s failed and is left out: %s", spec.name, failures[spec.name])
    finally:
        pool.shutdown(wait=False, cancel_futures=True)
    return [(s.name, results[s.name]) for s in specs if s.name in results], failures


@dataclass
class Analysis:
    inventory: ScriptInventory
    g0: CallGraph
    results: list[tuple[str, CallGraph]]
    failures: dict[str, str]
    gw: CallGraph
    plan: EliminationPlan

    def edge_counts(self) -> dict[str, int]:
        return {name: len(g.edge_pairs) for name, g in self.results}


def analyze(config: RunConfig, work_dir: Path | str) -> Analysis:
    """Parse a working copy of the app at ``work_dir`` and build the merged graph."""
    fetch = mirror_fetcher(config.cdn_mirror) if config.cdn_mirror else None
    work = copy_app(config.app_root, work_dir)
    try:
        inventory = parse_app(work, fetch=fetch, download=config.download)
    except OSError as exc:
        raise PipelineError("app-parser", str(exc)) from exc
    g0 = initialize_cg(inventory)
    results, failures = run_analyzers(inventory, g0, config.analyzers, timeout=config.timeout_s)
    if not results:
        raise PipelineError("analyzers", "every analyzer failed: " + "; ".join(failures.values()))
    gw = merge(g0, results)
    return Analysis(inventory, g0, results, failures, gw, classify(gw))


@dataclass
class OptimizeResult:
    analysis: Analysis
    report: dict
    rewrite: RewriteResult | None
    output: Path

    def summary(self) -> str:
        a = self.analysis
        stats = self.report["stats"]
        lines = [
            f"app: {self.report['app']}",
            f"level: {self.report['level']}",
            f"functions: {stats['total']}",
            f"dead: {stats['dead']}",
            f"sources: {len(a.inventory.sources)} parsed, {len(a.inventory.parse_failures)} unparseable",
        ]
        for name, count in a.edge_counts().items():
            lines.append(f"edges[{name}]: {count}")
        for name, why in a.failures.items():
            lines.append(f"failed[{name}]: {why}")
        return "\n".join(lines)


def _write_outputs(config: RunConfig, analysis: Analysis, report: dict):
    if config.emit_graph:
        Path(config.emit_graph).parent.mkdir(parents=True, exist_ok=True)
        Path(config.emit_graph).write_text(serialize_graph(analysis.gw), encoding="utf-8")
    if config.report:
        Path(config.report).parent.mkdir(parents=True, exist_ok=True)
        Path(config.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


def optimize(config: RunConfig) -> OptimizeResult:
    config.validate()
    out = Path(config.output_dir)
    if out.exists() and any(out.iterdir()):
        raise ConfigError(f"output directory {out} is not empty")
    with tempfile.TemporaryDirectory(prefix="lacuna-work-") as tmp:
        analysis = analyze(config, Path(tmp) / "app")
        plan = plan_for_level(analysis.plan, config.level)
        report = emit_report(plan, analysis.gw, app=Path(config.app_root).name, level=config.level)
        if config.level is OptimizationLevel.OL0:
            copy_app(config.app_root, out)
            result = None
        else:
            try:
                result = rewrite(analysis.inventory, plan, config.level, out,
                                 lazy_url=f"http://127.0.0.1:{config.lazy_port}")
            except Exception:
                shutil.rmtree(out, ignore_errors=True)
                raise
    if config.report is None:
        config.report = out.parent / f"{out.name}.report.json"
    _write_outputs(config, analysis, report)
    return OptimizeResult(analysis, report, result, out)


def analyze_only(config: RunConfig) -> tuple[Analysis, dict]:
    config.validate(need_output=False)
    with tempfile.TemporaryDirectory(prefix="lacuna-work-") as tmp:
        analysis = analyze(config, Path(tmp) / "app")
    report = emit_report(analysis.plan, analysis.gw, app=Path(config.app_root).name,
                         level=OptimizationLevel.OL0)
    _write_outputs(config, analysis, report)
    return analysis, report
