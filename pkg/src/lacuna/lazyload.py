"""HTTP service that hands out the original bodies of lazily loaded functions."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .eliminate import BODY_SUFFIX, DEFAULT_LAZY_PORT, id_from_body_filename

log = logging.getLogger(__name__)


class StoreError(Exception):
    pass


class ServerStartError(Exception):
    pass


@dataclass(frozen=True)
class BodyStore:
    entries: Mapping[str, bytes]

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def get(self, fid: str) -> bytes | None:
        return self.entries.get(fid)

    def __len__(self) -> int:
        return len(self.entries)


def load_store(directory: Path | str) -> BodyStore:
    directory = Path(directory)
    if not directory.is_dir():
        raise StoreError(f"body store {directory} is not a directory")
    entries = {}
    for path in sorted(directory.iterdir()):
        if not path.name.endswith(BODY_SUFFIX):
            continue
        try:
            entries[id_from_body_filename(path.name)] = path.read_bytes()
        except (OSError, ValueError) as exc:
            raise StoreError(f"cannot read body-store entry {path}: {exc}") from exc
    return BodyStore(entries)


def _handler(store: BodyStore):
    class Handler(BaseHTTPRequestHandler):
        server_version = "lacuna-lazyload"

        def _cors(self):
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_POST(self):
            length = int(self.headers.get("Content-Length") or 0)
            fid = self.rfile.read(length).decode("utf-8", "replace").strip()
            body = store.get(fid)
            status = 200 if body is not None else 404
            body = body if body is not None else b""
            self.send_response(status)
            self._cors()
            self.send_header("Content-Type", "text/plain; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, fmt, *args):
            log.debug("%s " + fmt, self.address_string(), *args)

    return Handler


class LazyLoadServer:
    """A running server; stop it with ``close()`` or use it as a context manager."""

    def __init__(self, store: BodyStore, host: str, port: int):
        try:
            self._httpd = ThreadingHTTPServer((host, port), _handler(store))
        except OSError as exc:
            raise ServerStartError(f"cannot bind {host}:{port}: {exc}") from exc
        self._httpd.daemon_threads = True
        self.store = store
        self._thread = threading.Thread(target=self._httpd.serve_forever, name="lazyload", daemon=True)
        self._thread.start()

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._httpd.server_address[:2]
        return host, port

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def wait(self):
        self._thread.join()

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "LazyLoadServer":
        return self

    def __exit__(self, *exc):
        self.close()


def serve(store: BodyStore, host: str = "127.0.0.1", port: int = DEFAULT_LAZY_PORT) -> LazyLoadServer:
    return LazyLoadServer(store, host, port)
