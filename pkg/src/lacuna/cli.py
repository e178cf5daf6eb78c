"""Command-line entry point: ``lacuna {optimize,analyze,serve,eval,instrument}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from pathlib import Path
from typing import Any

from .analyzers import AnalyzerError
from .eliminate import DEFAULT_LAZY_PORT, OptimizationLevel, RewriteError
from .graph import GraphError
from .inventory import BODY_STORE_DIR, copy_app, parse_app
from .pipeline import (CONFIG_FILE, DEFAULT_ANALYZERS, DEFAULT_TIMEOUT, ConfigError, PipelineError, RunConfig,
                       analyze_only, build_specs, load_config_file, mirror_fetcher, optimize)

log = logging.getLogger("lacuna")

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _csv(values: list[str] | None) -> list[str]:
    out = []
    for v in values or []:
        out.extend(x.strip() for x in v.split(",") if x.strip())
    return out


def _analysis_flags(p: argparse.ArgumentParser):
    p.add_argument("--app", required=True, type=Path, help="root directory of the web app")
    p.add_argument("--config", type=Path, help=f"settings file (default <app>/{CONFIG_FILE} if present)")
    p.add_argument("--analyzer", action="append", metavar="NAME[,NAME...]",
                   help="built-in analyzers: static, acg, native-calls, dynamic (default: static,acg,native-calls)")
    p.add_argument("--external", action="append", metavar="NAME:CMD", help="external analyzer command")
    p.add_argument("--trace", type=Path, help="recorded trace for the dynamic analyzer")
    p.add_argument("--runner", help="runner command for recording a trace (e.g. 'lacuna-run')")
    p.add_argument("--natives", type=Path, help="native callback table for native-calls (JSON)")
    p.add_argument("--timeout", type=float, help=f"per-analyzer timeout in seconds (default {DEFAULT_TIMEOUT:g})")
    p.add_argument("--emit-graph", type=Path, help="write the merged call graph here")
    p.add_argument("--report", type=Path, help="write the JSON report here")
    p.add_argument("--cdn-mirror", type=Path, help="serve external scripts from this directory (host/path)")
    p.add_argument("--no-download", action="store_true", help="ignore externally hosted scripts")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lacuna", description="Find and eliminate dead JavaScript functions in web apps.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("-q", "--quiet", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="analyze and write an optimized copy of the app")
    _analysis_flags(p)
    p.add_argument("--out", type=Path, help="output directory for the optimized copy")
    p.add_argument("--olevel", type=int, choices=range(4), help="optimization level 0-3 (default 0)")
    p.add_argument("--lazy-port", type=int, help=f"lazy-load server port baked into stubs (default {DEFAULT_LAZY_PORT})")

    p = sub.add_parser("analyze", help="build and merge call graphs, report dead functions")
    _analysis_flags(p)

    p = sub.add_parser("serve", help="run the lazy-load server for an OL1 output")
    p.add_argument("--store", type=Path, help=f"body store directory (or an OL1 output containing {BODY_STORE_DIR}/)")
    p.add_argument("--out", type=Path, help=argparse.SUPPRESS)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--lazy-port", "--port", dest="lazy_port", type=int, default=DEFAULT_LAZY_PORT)

    p = sub.add_parser("eval", help="score analyzers against a corpus with ground truth")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--analyzer", action="append", metavar="NAME[,NAME...]")
    p.add_argument("--external", action="append", metavar="NAME:CMD")
    p.add_argument("--natives", type=Path)
    p.add_argument("--sweep", action="store_true", help="score every non-empty analyzer subset")
    p.add_argument("--report", type=Path, help="write all reports as JSON here")
    p.add_argument("--figures", type=Path, help="render PNG figures into this directory")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)

    p = sub.add_parser("instrument", help="write a copy of the app with call-tracing probes")
    p.add_argument("--app", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--cdn-mirror", type=Path)
    return ap


def _setting(args, cfg: dict[str, Any], key: str, default=None, *, base: Path | None = None, path=False):
    value = getattr(args, key, None)
    if value is not None:
        return value
    value = cfg.get(key, cfg.get(key.replace("_", "-")))
    if value is None:
        return default
    if path:
        value = Path(value)
        if base is not None and not value.is_absolute():
            value = base / value
    return value


def make_config(args, *, need_output: bool) -> RunConfig:
    """Flags override the per-app settings file, which overrides defaults."""
    cfg_path = args.config or (args.app / CONFIG_FILE)
    cfg: dict[str, Any] = {}
    if args.config is not None or cfg_path.is_file():
        if not cfg_path.is_file():
            raise ConfigError(f"config file {cfg_path} not found")
        cfg = load_config_file(cfg_path)
    base = cfg_path.parent

    names = _csv(args.analyzer)
    if not names:
        raw = cfg.get("analyzers", cfg.get("analyzer"))
        names = _csv([raw] if isinstance(raw, str) else list(raw or []))
    externals = list(args.external or [])
    if not externals:
        raw = cfg.get("external", {})
        externals = [f"{k}:{v}" for k, v in raw.items()] if isinstance(raw, dict) else list(raw)
    trace = _setting(args, cfg, "trace", base=base, path=True)
    runner = _setting(args, cfg, "runner")
    if not names and not externals:
        names = list(DEFAULT_ANALYZERS) + (["dynamic"] if trace or runner else [])
    timeout = float(_setting(args, cfg, "timeout", DEFAULT_TIMEOUT))
    specs = build_specs(names, externals=externals, trace=trace, runner=runner,
                        natives=_setting(args, cfg, "natives", base=base, path=True), timeout=timeout)

    level = _setting(args, cfg, "olevel", 0)
    config = RunConfig(
        app_root=args.app,
        output_dir=_setting(args, cfg, "out", base=base, path=True),
        level=OptimizationLevel.parse(level),
        analyzers=specs,
        lazy_port=int(_setting(args, cfg, "lazy_port", DEFAULT_LAZY_PORT)),
        emit_graph=_setting(args, cfg, "emit_graph", base=base, path=True),
        timeout_s=timeout,
        report=_setting(args, cfg, "report", base=base, path=True),
        cdn_mirror=_setting(args, cfg, "cdn_mirror", base=base, path=True),
        download=not args.no_download,
    )
    config.validate(need_output=need_output)
    return config


def cmd_optimize(args) -> int:
    config = make_config(args, need_output=True)
    result = optimize(config)
    print(result.summary())
    print(f"output: {result.output}")
    print(f"report: {config.report}")
    if result.rewrite and result.rewrite.bodies:
        print(f"body store: {result.output / BODY_STORE_DIR} ({len(result.rewrite.bodies)} bodies)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = make_config(args, need_output=False)
    analysis, report = analyze_only(config)
    stats = report["stats"]
    print(f"functions: {stats['total']}")
    print(f"dead: {stats['dead']}")
    for name, count in analysis.edge_counts().items():
        print(f"edges[{name}]: {count}")
    for name, why in analysis.failures.items():
        print(f"failed[{name}]: {why}")
    for f in report["functions"]:
        if f["status"] == "dead":
            print(f"dead {f['id']} {f['name'] or '<anonymous>'}")
    if config.report is None:
        json.dump(report, sys.stdout, indent=2)
        print()
    return EXIT_OK


def cmd_serve(args) -> int:
    from .lazyload import load_store, serve

    store_dir = args.store or args.out
    if store_dir is None:
        raise ConfigError("serve needs --store")
    if (store_dir / BODY_STORE_DIR).is_dir():
        store_dir = store_dir / BODY_STORE_DIR
    store = load_store(store_dir)
    server = serve(store, args.host, args.lazy_port)
    print(f"serving {len(store)} function bodies at {server.url}", flush=True)
    try:
        server.wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import evaluate_corpus, format_table

    names = _csv(args.analyzer)
    if not names and not args.external:
        names = list(DEFAULT_ANALYZERS) + ["dynamic"]
    specs = build_specs(names, externals=args.external or [], natives=args.natives, timeout=args.timeout,
                        per_app_traces=True)
    with tempfile.TemporaryDirectory(prefix="lacuna-eval-") as tmp:
        res = evaluate_corpus(args.corpus, specs, sweep=args.sweep, work_dir=tmp, timeout=args.timeout)
    print(format_table(res.per_app))
    print()
    print(format_table(res.aggregates))
    for app, why in res.errors.items():
        print(f"error[{app}]: {why}", file=sys.stderr)
    if args.report:
        args.report.parent.mkdir(parents=True, exist_ok=True)
        args.report.write_text(json.dumps(res.to_dict(), indent=2) + "\n", encoding="utf-8")
    if args.figures:
        from .plotting import render_eval

        for path in render_eval(res.per_app, res.aggregates, args.figures):
            print(f"figure: {path}")
    return EXIT_OK if res.aggregates else EXIT_FAILED


def cmd_instrument(args) -> int:
    from .analyzers.dynamic import instrument

    if args.out.resolve() == args.app.resolve():
        raise ConfigError("output directory must differ from the app root")
    fetch = mirror_fetcher(args.cdn_mirror) if args.cdn_mirror else None
    with tempfile.TemporaryDirectory(prefix="lacuna-work-") as tmp:
        inventory = parse_app(copy_app(args.app, Path(tmp) / "app"), fetch=fetch)
        instrument(inventory, args.out)
    print(f"instrumented {len(inventory.sources)} scripts into {args.out}")
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "analyze": cmd_analyze,
    "serve": cmd_serve,
    "eval": cmd_eval,
    "instrument": cmd_instrument,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    level = logging.ERROR if args.quiet else (logging.DEBUG if args.verbose > 1 else
                                               logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"lacuna: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PipelineError as exc:
        print(f"lacuna: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except RewriteError as exc:
        print(f"lacuna: [eliminator] {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (GraphError, AnalyzerError) as exc:
        print(f"lacuna: [merger] {exc}", file=sys.stderr)
        return EXIT_FAILED
    except Exception as exc:
        if type(exc).__module__.endswith("lazyload"):
            print(f"lacuna: [lazyload-server] {exc}", file=sys.stderr)
        else:
            log.exception("unexpected failure")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
