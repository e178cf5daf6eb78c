"""Default runner hook: executes a web app's scripts under node.

Invoked as ``python -m lacuna.runner <app-root> <trace-output-path>``, which is the
runner-hook contract the dynamic analyzer expects.  By default only load-time
behaviour runs; ``--exercise`` additionally fires every registered event handler.
"""

from __future__ import annotations

import argparse
import json
import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .inventory import HTML_SUFFIXES, is_external, resolve_local, scan_script_tags

NODE = "node"


class RunnerError(Exception):
    pass


@dataclass
class RunResult:
    returncode: int
    stdout: str
    stderr: str

    @property
    def lines(self) -> list[str]:
        return self.stdout.splitlines()


def page_scripts(app_root: Path, html: str | None = None) -> list[dict]:
    """Scripts of the entry page in document order as ``{name, code}`` records."""
    app_root = Path(app_root)
    entry = _entry_page(app_root, html)
    if entry is None:
        return [
            {"name": p.relative_to(app_root).as_posix(), "code": p.read_text("utf-8", "surrogateescape")}
            for p in sorted(app_root.rglob("*.js"))
        ]
    rel = entry.relative_to(app_root).as_posix()
    data = entry.read_bytes()
    scripts = []
    k = 0
    for tag, _, _, c0, c1 in scan_script_tags(data):
        if not tag.is_javascript:
            if tag.src is None:
                k += 1
            continue
        if tag.src is not None:
            src = tag.src.strip()
            if is_external(src):
                continue
            local = resolve_local(src, rel)
            if local is None or not (app_root / local).is_file():
                continue
            scripts.append({"name": local, "code": (app_root / local).read_text("utf-8", "surrogateescape")})
        else:
            scripts.append({"name": f"{rel}#inline-{k}", "code": data[c0:c1].decode("utf-8", "surrogateescape")})
            k += 1
    return scripts


def _entry_page(app_root: Path, html: str | None) -> Path | None:
    if html:
        return app_root / html
    index = app_root / "index.html"
    if index.is_file():
        return index
    pages = sorted(p for p in app_root.rglob("*") if p.suffix.lower() in HTML_SUFFIXES)
    return pages[0] if pages else None


def node_available() -> bool:
    return shutil.which(NODE) is not None


def run_app(
    app_root: Path | str,
    trace_out: Path | str | None = None,
    *,
    timeout: float = 10.0,
    after: str | None = None,
    html: str | None = None,
    exercise: bool = False,
) -> RunResult:
    """Load the app's entry page under node and let its event loop drain (or time out).

    With ``exercise`` every registered event listener and ``on*`` handler is fired
    shortly after load, approximating a user who touches every control.
    """
    if not node_available():
        raise RunnerError("node is not installed")
    script = resources.files(__package__).joinpath("runner.js")
    manifest = {
        "scripts": page_scripts(Path(app_root), html),
        "trace": str(trace_out) if trace_out is not None else None,
        "timeout_ms": int(timeout * 1000),
        "after": after,
        "exercise": exercise,
    }
    with tempfile.TemporaryDirectory(prefix="lacuna-run-") as tmp:
        mpath = Path(tmp) / "manifest.json"
        mpath.write_text(json.dumps(manifest), encoding="utf-8")
        with resources.as_file(script) as js:
            proc = subprocess.run([NODE, str(js), str(mpath)], capture_output=True, text=True,
                                  timeout=timeout + 30)
    return RunResult(proc.returncode, proc.stdout, proc.stderr)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="lacuna-run", description=__doc__.splitlines()[0])
    ap.add_argument("app_root")
    ap.add_argument("trace_out")
    ap.add_argument("--timeout", type=float, default=10.0, help="seconds before the page is abandoned")
    ap.add_argument("--after", help="JavaScript evaluated after the load event")
    ap.add_argument("--html", help="entry page relative to the app root (default index.html)")
    ap.add_argument("--exercise", action="store_true", help="fire every registered event handler after load")
    args = ap.parse_args(argv)
    try:
        res = run_app(args.app_root, args.trace_out, timeout=args.timeout, after=args.after, html=args.html,
                      exercise=args.exercise)
    except RunnerError as exc:
        print(f"lacuna-run: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(res.stdout)
    sys.stderr.write(res.stderr)
    return res.returncode


if __name__ == "__main__":
    sys.exit(main())
