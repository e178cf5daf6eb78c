"""Maintain the bundled micro-corpus.

  record  write <app>/trace.txt from a load-only run of the instrumented app
  truth   derive <app>/truth.json from a run that fires every event handler,
          printing each function's status for review
  check   compare truth.json against a fresh exercised run without writing
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from lacuna.analyzers.dynamic import record_trace
from lacuna.evaluation import TRACE_FILE, TRUTH_FILE, discover_corpus, load_truth, truth_to_dict, GroundTruth
from lacuna.inventory import copy_app, parse_app
from lacuna.pipeline import mirror_fetcher

RUNNER = [sys.executable, "-m", "lacuna.runner"]


def _inventory(app, tmp):
    fetch = mirror_fetcher(app.mirror) if app.mirror else None
    return parse_app(copy_app(app.app_root, Path(tmp) / app.name), fetch=fetch)


def executed(app, tmp):
    inv = _inventory(app, tmp)
    records = record_trace(inv, RUNNER + ["--exercise"], timeout=60)
    return inv, {callee for _, callee in records}


def cmd_record(app, tmp):
    inv = _inventory(app, tmp)
    records = record_trace(inv, RUNNER, timeout=60)
    lines = sorted({f"CALL {a} {b}" for a, b in records})
    (app.root / TRACE_FILE).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    print(f"{app.name}: {len(lines)} trace records")
    return 0


def _show(inv, dead):
    for node in sorted(inv.functions, key=lambda n: n.id):
        print(f"  {'DEAD ' if node.id in dead else 'alive'} {node.id} {node.name or '<anonymous>'}")


def cmd_truth(app, tmp):
    inv, ran = executed(app, tmp)
    ids = inv.function_ids()
    truth = GroundTruth(app.name, frozenset(ids - ran), frozenset(ids & ran))
    (app.root / TRUTH_FILE).write_text(json.dumps(truth_to_dict(truth), indent=2) + "\n", encoding="utf-8")
    print(f"{app.name}: {len(ids)} functions, {len(truth.dead)} dead")
    _show(inv, truth.dead)
    return 0


def cmd_check(app, tmp):
    inv, ran = executed(app, tmp)
    truth = load_truth(app.truth_path, inv.function_ids())
    wrong = sorted((truth.alive - ran) | (truth.dead & ran))
    for fid in wrong:
        print(f"{app.name}: {fid} disagrees with the exercised run")
    return 1 if wrong else 0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["record", "truth", "check"])
    ap.add_argument("corpus", type=Path)
    ap.add_argument("apps", nargs="*", help="restrict to these apps")
    args = ap.parse_args(argv)
    handler = {"record": cmd_record, "truth": cmd_truth, "check": cmd_check}[args.command]
    status = 0
    with tempfile.TemporaryDirectory() as tmp:
        for app in discover_corpus(args.corpus) if not args.apps else [
                a for a in discover_corpus(args.corpus) if a.name in args.apps]:
            status |= handler(app, tmp)
    return status


if __name__ == "__main__":
    sys.exit(main())
