"""Discovery, download and parsing of the JavaScript that makes up a web app."""

from __future__ import annotations

import hashlib
import logging
import os
import posixpath
import re
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable

from tree_sitter import Tree

from . import jsast
from .graph import CallGraph, FunctionId, FunctionNode

log = logging.getLogger(__name__)

ORIGINS = ("inline-html", "script-tag-file", "orphan-file", "downloaded-external")
HTML_SUFFIXES = (".html", ".htm")
JS_SUFFIXES = (".js", ".mjs")
EXTERNAL_DIR = "_external"
BODY_STORE_DIR = "_lacuna_bodies"
# directories the tool itself writes into an app tree
TOOL_DIRS = frozenset({BODY_STORE_DIR, ".lacuna"})

_JS_TYPES = {
    "", "module", "text/javascript", "application/javascript", "application/x-javascript",
    "text/ecmascript", "application/ecmascript", "text/jscript", "text/livescript",
}

Fetcher = Callable[[str], bytes]


class FetchError(Exception):
    pass


@dataclass(frozen=True)
class HtmlAnchor:
    html_path: str
    start: int  # byte span of the script element (or its content, for inline scripts)
    end: int


@dataclass(frozen=True)
class ScriptSource:
    origin: str
    app_path: str
    data: bytes
    html_anchor: HtmlAnchor | None = None
    url: str | None = None

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown script origin {self.origin!r}")
        if self.origin == "downloaded-external" and not self.url:
            raise ValueError("downloaded scripts must record their URL")

    @property
    def is_inline(self) -> bool:
        return self.origin == "inline-html"


@dataclass
class ScriptInventory:
    app_root: Path
    sources: list[ScriptSource] = field(default_factory=list)
    functions: list[FunctionNode] = field(default_factory=list)
    parse_failures: list[tuple[str, str]] = field(default_factory=list)
    fetch_errors: list[tuple[str, str]] = field(default_factory=list)
    downloads: dict[str, str] = field(default_factory=dict)  # local app path -> URL
    _trees: dict[str, Tree] = field(default_factory=dict, compare=False, repr=False)

    def source(self, app_path: str) -> ScriptSource:
        for src in self.sources:
            if src.app_path == app_path:
                return src
        raise KeyError(app_path)

    def tree(self, app_path: str) -> Tree:
        tree = self._trees.get(app_path)
        if tree is None:
            tree = jsast.parse(self.source(app_path).data)
            self._trees[app_path] = tree
        return tree

    def function_ids(self) -> set[FunctionId]:
        return {f.id for f in self.functions}


# -- HTML scanning ------------------------------------------------------------------


@dataclass
class ScriptTag:
    attrs: dict[str, str | None]
    tag_start: int  # char offsets into the decoded document
    tag_end: int
    content_start: int
    content_end: int
    starttag_text: str

    @property
    def src(self) -> str | None:
        return self.attrs.get("src")

    @property
    def is_javascript(self) -> bool:
        kind = (self.attrs.get("type") or "").strip().lower()
        return kind in _JS_TYPES


class _ScriptScanner(HTMLParser):
    def __init__(self, doc: str):
        super().__init__(convert_charrefs=False)
        self.doc = doc
        self.line_starts = [0]
        for m in re.finditer("\n", doc):
            self.line_starts.append(m.end())
        self.tags: list[ScriptTag] = []
        self._open: ScriptTag | None = None

    def _offset(self) -> int:
        line, col = self.getpos()
        return self.line_starts[line - 1] + col

    def handle_starttag(self, tag, attrs):
        if tag != "script":
            return
        start = self._offset()
        raw = self.get_starttag_text() or ""
        self._open = ScriptTag(
            {k.lower(): v for k, v in attrs}, start, -1, start + len(raw), -1, raw
        )

    def handle_startendtag(self, tag, attrs):
        if tag == "script":  # <script src="x"/> is not self-closing in HTML, but be lenient
            start = self._offset()
            raw = self.get_starttag_text() or ""
            end = start + len(raw)
            self.tags.append(ScriptTag({k.lower(): v for k, v in attrs}, start, end, end, end, raw))

    def handle_endtag(self, tag):
        if tag != "script" or self._open is None:
            return
        pos = self._offset()
        close = self.doc.find(">", pos)
        tag_ = self._open
        tag_.content_end = pos
        tag_.tag_end = close + 1 if close >= 0 else len(self.doc)
        self.tags.append(tag_)
        self._open = None


def _decode(data: bytes) -> str:
    return data.decode("utf-8", "surrogateescape")


def _encode(doc: str) -> bytes:
    return doc.encode("utf-8", "surrogateescape")


def scan_script_tags(html: bytes) -> list[tuple[ScriptTag, int, int, int, int]]:
    """Script elements of ``html`` with byte spans ``(tag_start, tag_end, body_start, body_end)``."""
    doc = _decode(html)
    scanner = _ScriptScanner(doc)
    scanner.feed(doc)
    scanner.close()
    out = []
    for tag in scanner.tags:
        if tag.content_end < 0:
            continue
        b = lambda i: len(_encode(doc[:i]))  # noqa: E731
        out.append((tag, b(tag.tag_start), b(tag.tag_end), b(tag.content_start), b(tag.content_end)))
    return out


_SRC_ATTR = re.compile(r"""(?<![\w-])src\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s"'>]+))""", re.I)


def replace_src(starttag: str, new_src: str) -> str:
    m = _SRC_ATTR.search(starttag)
    if not m:
        return starttag
    for g in (1, 2, 3):
        if m.group(g) is not None:
            return starttag[: m.start(g)] + new_src + starttag[m.end(g):]
    return starttag


# -- discovery ------------------------------------------------------------------------


def _rel(path: Path, root: Path) -> str:
    return path.relative_to(root).as_posix()


def _iter_files(root: Path, suffixes: tuple[str, ...], exclude: set[str]) -> list[Path]:
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        rel_dir = Path(dirpath).relative_to(root).as_posix()
        dirnames[:] = sorted(
            d for d in dirnames
            if d not in TOOL_DIRS and posixpath.normpath(posixpath.join(rel_dir, d)) not in exclude
        )
        for name in sorted(filenames):
            if name.lower().endswith(suffixes):
                found.append(Path(dirpath) / name)
    return found


def is_external(src: str) -> bool:
    return src.startswith(("http://", "https://", "//"))


def resolve_local(src: str, html_rel: str) -> str | None:
    """App-relative path for a local ``<script src>``; None when it escapes the app."""
    path = urllib.parse.urlsplit(src).path
    path = urllib.parse.unquote(path)
    if path.startswith("/"):
        rel = path.lstrip("/")
    else:
        rel = posixpath.join(posixpath.dirname(html_rel), path)
    rel = posixpath.normpath(rel)
    if rel.startswith("..") or rel == ".":
        return None
    return rel


def external_local_path(url: str) -> str:
    """Deterministic app-relative location for a downloaded script."""
    parts = urllib.parse.urlsplit(url if not url.startswith("//") else "https:" + url)
    host = (parts.hostname or "unknown-host") + (f"_{parts.port}" if parts.port else "")
    segs = [s for s in parts.path.split("/") if s not in ("", ".", "..")]
    if not segs or parts.path.endswith("/"):
        segs.append("index.js")
    segs = [re.sub(r"[^A-Za-z0-9._-]", "_", urllib.parse.unquote(s)) for s in segs]
    if parts.query:
        digest = hashlib.sha1(parts.query.encode()).hexdigest()[:10]
        stem, dot, ext = segs[-1].rpartition(".")
        segs[-1] = f"{stem}.{digest}.{ext}" if dot and stem else f"{segs[-1]}.{digest}"
    return posixpath.join(EXTERNAL_DIR, re.sub(r"[^A-Za-z0-9._-]", "_", host), *segs)


def urllib_fetch(url: str, timeout: float = 15.0, proxy: str | None = None) -> bytes:
    if url.startswith("//"):
        url = "https:" + url
    handlers = []
    if proxy:
        handlers.append(urllib.request.ProxyHandler({"http": proxy, "https": proxy}))
    opener = urllib.request.build_opener(*handlers)
    try:
        with opener.open(url, timeout=timeout) as resp:
            status = getattr(resp, "status", 200)
            if not 200 <= status < 300:
                raise FetchError(f"{url}: HTTP {status}")
            return resp.read()
    except urllib.error.HTTPError as exc:
        raise FetchError(f"{url}: HTTP {exc.code}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(f"{url}: {exc}") from exc


def download_external(url: str, app_root: Path | str, fetch: Fetcher | None = None) -> ScriptSource:
    """Fetch ``url`` and store the body byte-exactly under ``_external/`` in ``app_root``."""
    fetch = fetch or urllib_fetch
    data = fetch(url)
    rel = external_local_path(url)
    dest = Path(app_root) / rel
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_bytes(data)
    return ScriptSource("downloaded-external", rel, data, url=url)


def _relative_ref(from_html: str, target: str) -> str:
    return posixpath.relpath(target, posixpath.dirname(from_html) or ".")


def discover_scripts(
    app_root: Path | str,
    *,
    fetch: Fetcher | None = None,
    download: bool = True,
    exclude: tuple[str, ...] = (),
) -> ScriptInventory:
    """Find inline, tag-referenced, orphan and externally hosted scripts under ``app_root``.

    With ``download`` set, external scripts are stored inside ``app_root`` and the
    referencing tags rewritten, so call this on a working copy of the app.
    """
    root = Path(app_root)
    if not root.is_dir():
        raise FileNotFoundError(f"app root {root} is not a directory")
    excluded = {posixpath.normpath(e) for e in exclude}
    inv = ScriptInventory(root)
    html_files = _iter_files(root, HTML_SUFFIXES, excluded)

    if download:
        _download_pass(root, html_files, inv, fetch)

    referenced: set[str] = set()
    seen_paths: set[str] = set()
    for html_path in html_files:
        html_rel = _rel(html_path, root)
        html = html_path.read_bytes()
        inline_k = 0
        for tag, t0, t1, c0, c1 in scan_script_tags(html):
            if tag.src is not None:
                src = tag.src.strip()
                if is_external(src):
                    continue
                rel = resolve_local(src, html_rel)
                if rel is None:
                    continue
                referenced.add(rel)
                if not tag.is_javascript or rel in seen_paths:
                    continue
                file = root / rel
                if not file.is_file():
                    log.warning("%s references missing script %s", html_rel, src)
                    continue
                seen_paths.add(rel)
                origin = "downloaded-external" if rel.startswith(EXTERNAL_DIR + "/") else "script-tag-file"
                url = inv.downloads.get(rel) if origin == "downloaded-external" else None
                if url is None:
                    origin = "script-tag-file"
                inv.sources.append(
                    ScriptSource(origin, rel, file.read_bytes(), HtmlAnchor(html_rel, t0, t1), url)
                )
                continue
            k = inline_k
            inline_k += 1
            if not tag.is_javascript or c1 <= c0:
                continue
            inv.sources.append(
                ScriptSource("inline-html", f"{html_rel}#inline-{k}", html[c0:c1], HtmlAnchor(html_rel, c0, c1))
            )

    for js in _iter_files(root, JS_SUFFIXES, excluded):
        rel = _rel(js, root)
        if rel in referenced:
            continue
        inv.sources.append(ScriptSource("orphan-file", rel, js.read_bytes()))
    return inv


def _download_pass(root: Path, html_files: list[Path], inv: ScriptInventory, fetch: Fetcher | None):
    cache: dict[str, str | None] = {}  # url -> local rel path (None on failure)
    for html_path in html_files:
        html_rel = _rel(html_path, root)
        html = html_path.read_bytes()
        edits = []
        for tag, t0, t1, _, _ in scan_script_tags(html):
            src = (tag.src or "").strip()
            if not src or not is_external(src) or not tag.is_javascript:
                continue
            if src not in cache:
                try:
                    source = download_external(src, root, fetch)
                except FetchError as exc:
                    log.warning("could not download %s: %s", src, exc)
                    inv.fetch_errors.append((src, str(exc)))
                    cache[src] = None
                else:
                    cache[src] = source.app_path
                    inv.downloads[source.app_path] = src
            local = cache[src]
            if local is None:
                continue
            doc_tag = tag.starttag_text
            new_tag = replace_src(doc_tag, _relative_ref(html_rel, local))
            tag_bytes = _encode(doc_tag)
            if html[t0:t0 + len(tag_bytes)] != tag_bytes:
                log.warning("%s: cannot locate script tag for %s; left untouched", html_rel, src)
                continue
            edits.append((t0, t0 + len(tag_bytes), _encode(new_tag)))
        if edits:
            for a, b, new in sorted(edits, reverse=True):
                html = html[:a] + new + html[b:]
            html_path.write_bytes(html)


# -- parsing --------------------------------------------------------------------------


def index_functions(inventory: ScriptInventory) -> ScriptInventory:
    """Parse every source and record one node per function construct."""
    out = replace(inventory, sources=[], functions=[], parse_failures=list(inventory.parse_failures),
                  _trees={})
    for src in inventory.sources:
        try:
            tree = jsast.parse(src.data)
        except jsast.JSSyntaxError as exc:
            log.warning("cannot parse %s: %s", src.app_path, exc)
            out.parse_failures.append((src.app_path, str(exc)))
            continue
        out.sources.append(src)
        out._trees[src.app_path] = tree
        for site in jsast.collect_functions(tree):
            out.functions.append(
                FunctionNode(FunctionId(src.app_path, site.start, site.end), site.kind, site.name)
            )
    return out


def initialize_cg(inventory: ScriptInventory) -> CallGraph:
    return CallGraph(inventory.functions)


def parse_app(app_root: Path | str, **kwargs) -> ScriptInventory:
    return index_functions(discover_scripts(app_root, **kwargs))


# -- writing edited sources back into an app tree --------------------------------------


def copy_app(src_root: Path | str, dest_root: Path | str) -> Path:
    """Copy an app tree, refusing to copy a directory into itself."""
    import shutil

    src_root, dest_root = Path(src_root).resolve(), Path(dest_root).resolve()
    if src_root == dest_root:
        raise ValueError("output directory must differ from the app root")
    ignore = None
    if dest_root.is_relative_to(src_root):
        rel_top = dest_root.relative_to(src_root).parts[0]

        def ignore(dirpath, names):
            return [rel_top] if Path(dirpath).resolve() == src_root else []

    shutil.copytree(src_root, dest_root, dirs_exist_ok=True, ignore=ignore)
    return dest_root


def write_sources(inventory: ScriptInventory, dest_root: Path | str, new_data: dict[str, bytes]):
    """Write replacement bytes for sources into ``dest_root`` (an existing copy of the app).

    Inline scripts are spliced back into their HTML file by byte span.
    """
    dest_root = Path(dest_root)
    inline: dict[str, list[tuple[int, int, bytes]]] = {}
    for src in inventory.sources:
        if src.app_path not in new_data:
            continue
        data = new_data[src.app_path]
        if src.is_inline:
            a = src.html_anchor
            inline.setdefault(a.html_path, []).append((a.start, a.end, data))
        else:
            out = dest_root / src.app_path
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_bytes(data)
    for html_rel, edits in inline.items():
        path = dest_root / html_rel
        html = (inventory.app_root / html_rel).read_bytes()
        for a, b, data in sorted(edits, reverse=True):
            html = html[:a] + data + html[b:]
        path.write_bytes(html)
