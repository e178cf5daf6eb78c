"""Ground-truth scoring and analyzer-combination sweeps."""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Mapping

from .analyzers import AnalyzerSpec
from .eliminate import classify
from .graph import CallGraph, FunctionId
from .inventory import ScriptInventory, copy_app, initialize_cg, parse_app
from .merge import merge
from .pipeline import mirror_fetcher, run_analyzers

log = logging.getLogger(__name__)

TRUTH_FILE = "truth.json"
TRACE_FILE = "trace.txt"
APP_DIR = "app"
MIRROR_DIR = "cdn"


class TruthError(Exception):
    pass


class CoverageError(TruthError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    app: str
    dead: frozenset[FunctionId]
    alive: frozenset[FunctionId]

    def __post_init__(self):
        if self.dead & self.alive:
            raise TruthError(f"{self.app}: functions marked both dead and alive")

    @property
    def universe(self) -> frozenset[FunctionId]:
        return self.dead | self.alive


def truth_from_dict(doc: Mapping, functions: Iterable[FunctionId] | None = None) -> GroundTruth:
    app = str(doc.get("app", ""))
    dead, alive, seen = set(), set(), set()
    for entry in doc.get("functions", []):
        try:
            fid = FunctionId.parse(entry["id"])
            status = entry["status"]
        except (KeyError, TypeError, ValueError) as exc:
            raise TruthError(f"{app}: bad entry {entry!r}: {exc}") from exc
        if fid in seen:
            raise TruthError(f"{app}: duplicate entry for {fid}")
        seen.add(fid)
        if status == "dead":
            dead.add(fid)
        elif status == "alive":
            alive.add(fid)
        else:
            raise TruthError(f"{app}: {fid} has unknown status {status!r}")
    if functions is not None:
        parsed = set(functions)
        unknown = sorted(seen - parsed)
        if unknown:
            raise CoverageError(f"{app}: truth names unknown function {unknown[0]}"
                                + (f" (+{len(unknown) - 1} more)" if len(unknown) > 1 else ""))
        missing = sorted(parsed - seen)
        if missing:
            raise CoverageError(f"{app}: truth is missing function {missing[0]}"
                                + (f" (+{len(missing) - 1} more)" if len(missing) > 1 else ""))
    return GroundTruth(app, frozenset(dead), frozenset(alive))


def load_truth(path: Path | str, functions: Iterable[FunctionId] | None = None) -> GroundTruth:
    text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text) if text.strip() else {"functions": []}
    return truth_from_dict(doc, functions)


def truth_to_dict(truth: GroundTruth) -> dict:
    entries = [{"id": str(f), "status": "dead"} for f in truth.dead]
    entries += [{"id": str(f), "status": "alive"} for f in truth.alive]
    entries.sort(key=lambda e: FunctionId.parse(e["id"]))
    return {"app": truth.app, "functions": entries}


# -- scoring --------------------------------------------------------------------------


@dataclass
class EvalReport:
    app: str
    combination: tuple[str, ...]
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f_score: float | None
    undefined_precision: bool = False
    error: str | None = None

    @property
    def name(self) -> str:
        return "+".join(self.combination)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["combination"] = list(self.combination)
        return d


def metrics(tp: int, fp: int, fn: int, truth_dead: int) -> tuple[float, float, float | None, bool]:
    """Precision, recall, F-score and the undefined-precision flag."""
    undefined = False
    if tp + fp > 0:
        precision = tp / (tp + fp)
    elif truth_dead == 0:
        precision = 1.0
    else:
        precision, undefined = 0.0, True
    recall = tp / (tp + fn) if tp + fn > 0 else 1.0
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else None
    return precision, recall, f, undefined


def score(detected: Iterable[FunctionId], truth: GroundTruth, combination: Iterable[str] = ()) -> EvalReport:
    detected = frozenset(detected)
    outside = detected - truth.universe
    if outside:
        raise CoverageError(f"{truth.app}: detected id {min(outside)} is not in the ground truth")
    tp = len(detected & truth.dead)
    fp = len(detected & truth.alive)
    fn = len(truth.dead - detected)
    tn = len(truth.alive - detected)
    p, r, f, undefined = metrics(tp, fp, fn, len(truth.dead))
    return EvalReport(truth.app, tuple(sorted(combination)), tp, fp, fn, tn, p, r, f, undefined)


def failed_report(app: str, combination: Iterable[str], error: str) -> EvalReport:
    return EvalReport(app, tuple(sorted(combination)), 0, 0, 0, 0, 0.0, 0.0, None, error=error)


def rank_key(rep: EvalReport):
    return (-(rep.f_score or 0.0), -rep.precision, rep.name)


def combinations(names: Iterable[str]) -> list[tuple[str, ...]]:
    names = sorted(set(names))
    if not names:
        raise ValueError("a sweep needs at least one analyzer")
    return [c for k in range(1, len(names) + 1) for c in itertools.combinations(names, k)]


def detected_dead(g0: CallGraph, results: Mapping[str, CallGraph], combination: Iterable[str]):
    gw = merge(g0, [(n, results[n]) for n in combination])
    return classify(gw).dead


def sweep_results(
    app: str,
    g0: CallGraph,
    results: Mapping[str, CallGraph],
    failures: Mapping[str, str],
    truth: GroundTruth,
    names: Iterable[str],
    combos: Iterable[tuple[str, ...]] | None = None,
) -> list[EvalReport]:
    """Score every non-empty analyzer subset (or just ``combos``) from graphs computed once."""
    reports = []
    for combo in combinations(names) if combos is None else combos:
        broken = [n for n in combo if n in failures or n not in results]
        if broken:
            why = "; ".join(failures.get(n, f"analyzer {n!r} produced no graph") for n in broken)
            reports.append(failed_report(app, combo, why))
            continue
        reports.append(score(detected_dead(g0, results, combo), truth, combo))
    reports.sort(key=lambda r: (r.error is not None,) + rank_key(r))
    return reports


# -- corpus ---------------------------------------------------------------------------


@dataclass
class CorpusApp:
    name: str
    root: Path

    @property
    def app_root(self) -> Path:
        return self.root / APP_DIR

    @property
    def truth_path(self) -> Path:
        return self.root / TRUTH_FILE

    @property
    def trace_path(self) -> Path | None:
        p = self.root / TRACE_FILE
        return p if p.is_file() else None

    @property
    def mirror(self) -> Path | None:
        p = self.root / MIRROR_DIR
        return p if p.is_dir() else None


def discover_corpus(corpus: Path | str) -> list[CorpusApp]:
    corpus = Path(corpus)
    apps = [CorpusApp(p.name, p) for p in sorted(corpus.iterdir())
            if p.is_dir() and (p / APP_DIR).is_dir() and (p / TRUTH_FILE).is_file()]
    if not apps:
        raise TruthError(f"{corpus} contains no apps (expected <app>/{APP_DIR}/ and <app>/{TRUTH_FILE})")
    return apps


@dataclass
class AppAnalysis:
    app: CorpusApp
    inventory: ScriptInventory
    g0: CallGraph
    results: dict[str, CallGraph]
    failures: dict[str, str]
    truth: GroundTruth


def _specs_for(app: CorpusApp, specs: list[AnalyzerSpec]) -> list[AnalyzerSpec]:
    out = []
    for s in specs:
        if s.kind == "dynamic-trace" and not s.config.get("trace") and not s.config.get("runner"):
            cfg = dict(s.config, trace=str(app.trace_path) if app.trace_path else None)
            s = AnalyzerSpec(s.name, s.kind, cfg)
        out.append(s)
    return out


def analyze_corpus_app(app: CorpusApp, specs: list[AnalyzerSpec], work_dir: Path, timeout: float) -> AppAnalysis:
    """Parse a working copy of one corpus app and run every analyzer once."""
    fetch = mirror_fetcher(app.mirror) if app.mirror else None
    work = copy_app(app.app_root, Path(work_dir) / app.name)
    inventory = parse_app(work, fetch=fetch)
    g0 = initialize_cg(inventory)
    truth = load_truth(app.truth_path, inventory.function_ids())
    runnable, failures = [], {}
    for s in _specs_for(app, specs):
        if s.kind == "dynamic-trace" and not s.config.get("trace") and not s.config.get("runner"):
            failures[s.name] = f"analyzer {s.name!r}: no trace file for {app.name}"
        else:
            runnable.append(s)
    results, more = run_analyzers(inventory, g0, runnable, timeout=timeout) if runnable else ([], {})
    failures.update(more)
    return AppAnalysis(app, inventory, g0, dict(results), failures, truth)


def aggregate(reports: Iterable[EvalReport], combination: Iterable[str] | None = None) -> EvalReport:
    """Unweighted mean of per-app metrics; an undefined F-score counts as 0."""
    reports = [r for r in reports if r.error is None]
    if not reports:
        raise ValueError("nothing to aggregate")
    combo = tuple(sorted(combination)) if combination is not None else reports[0].combination
    return EvalReport(
        "(mean)", combo,
        sum(r.tp for r in reports), sum(r.fp for r in reports),
        sum(r.fn for r in reports), sum(r.tn for r in reports),
        fmean(r.precision for r in reports), fmean(r.recall for r in reports),
        fmean(r.f_score or 0.0 for r in reports),
        any(r.undefined_precision for r in reports),
    )


def format_table(reports: Iterable[EvalReport]) -> str:
    header = ("app", "analyzers", "tp", "fp", "fn", "tn", "precision", "recall", "f-score")
    rows = [header]
    for r in reports:
        f = "error" if r.error else ("n/a" if r.f_score is None else f"{r.f_score:.3f}")
        p = f"{r.precision:.3f}" + ("*" if r.undefined_precision else "")
        rows.append((r.app, r.name, str(r.tp), str(r.fp), str(r.fn), str(r.tn), p, f"{r.recall:.3f}", f))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)


@dataclass
class CorpusEval:
    per_app: list[EvalReport] = field(default_factory=list)
    aggregates: list[EvalReport] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_app": [r.to_dict() for r in self.per_app],
            "aggregate": [r.to_dict() for r in self.aggregates],
            "errors": dict(self.errors),
        }


def evaluate_corpus(
    corpus: Path | str,
    specs: list[AnalyzerSpec],
    *,
    sweep: bool = False,
    work_dir: Path | str,
    timeout: float = 120.0,
) -> CorpusEval:
    """Score the full ensemble (or, with ``sweep``, every subset of it) on each corpus app."""
    names = [s.name for s in specs]
    combos = combinations(names) if sweep else [tuple(sorted(names))]
    out = CorpusEval()
    for app in discover_corpus(corpus):
        try:
            a = analyze_corpus_app(app, specs, Path(work_dir), timeout)
        except Exception as exc:
            log.error("%s: %s", app.name, exc)
            out.errors[app.name] = str(exc)
            continue
        out.per_app.extend(sweep_results(app.name, a.g0, a.results, a.failures, a.truth, names, combos))
    for combo in combos:
        rows = [r for r in out.per_app if r.combination == combo and r.error is None]
        if rows:
            out.aggregates.append(aggregate(rows, combo))
    out.aggregates.sort(key=rank_key)
    return out
