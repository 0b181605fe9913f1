"""Development HTTP server.

Serves fragment files under a sandboxed root with content-hash ETags and
`Cache-Control: no-cache`, plus two toolchain endpoints:

    GET /__zjsc/flatten?entry=<rel-path>         flattened page
    GET /__zjsc/graph?entry=<rel-path>&format=dot|edges

Requests that resolve outside the root (dot segments, encoded dots,
backslashes, absolute paths) get 403. With watching enabled, changed
files are invalidated in the shared resolver cache so the next flatten
re-reads them.
"""

from __future__ import annotations

import hashlib
import os
import posixpath
import threading
import urllib.parse
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .composer import FlattenOptions, flatten
from .errors import CycleError, DepthExceeded, FetchError, LocatorError
from .parser import serialize_fragment
from .resolver import Resolver, canonicalize

CONTENT_TYPES = {
    ".zjsc": "text/html; charset=utf-8",
    ".html": "text/html; charset=utf-8",
    ".htm": "text/html; charset=utf-8",
    ".js": "text/javascript",
    ".mjs": "text/javascript",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".txt": "text/plain; charset=utf-8",
}
DEFAULT_CONTENT_TYPE = "application/octet-stream"

WATCH_INTERVAL_S = 0.5


def content_type_for(path: str) -> str:
    _, ext = posixpath.splitext(path.lower())
    return CONTENT_TYPES.get(ext, DEFAULT_CONTENT_TYPE)


def etag_for(payload: bytes) -> str:
    return '"' + hashlib.sha256(payload).hexdigest() + '"'


def safe_resolve(root: str, request_path: str) -> str | None:
    """Map a URL path to a file under root; None means forbidden."""
    decoded = urllib.parse.unquote(request_path).replace("\\", "/")
    candidate = posixpath.normpath(posixpath.join("/", decoded.lstrip("/")))
    full = os.path.realpath(os.path.join(root, candidate.lstrip("/")))
    root_real = os.path.realpath(root)
    if full != root_real and not full.startswith(root_real + os.sep):
        return None
    return full


class _Watcher(threading.Thread):
    """Polls mtimes under root and invalidates changed files."""

    def __init__(self, root: str, resolver: Resolver):
        super().__init__(daemon=True)
        self.root = os.path.realpath(root)
        self.resolver = resolver
        self._stop = threading.Event()
        self._mtimes: dict[str, float] = {}
        self._scan(initial=True)

    def _scan(self, initial: bool = False) -> None:
        seen = set()
        for dirpath, _dirnames, filenames in os.walk(self.root):
            for name in filenames:
                full = os.path.join(dirpath, name)
                try:
                    mtime = os.stat(full).st_mtime
                except OSError:
                    continue
                seen.add(full)
                previous = self._mtimes.get(full)
                self._mtimes[full] = mtime
                if not initial and previous != mtime:
                    self.resolver.invalidate(full.replace(os.sep, "/"))
        for gone in set(self._mtimes) - seen:
            del self._mtimes[gone]
            if not initial:
                self.resolver.invalidate(gone.replace(os.sep, "/"))

    def run(self) -> None:
        while not self._stop.wait(WATCH_INTERVAL_S):
            self._scan()

    def stop(self) -> None:
        self._stop.set()


class ZjscServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, root: str, port: int, watch: bool = False,
                 host: str = "127.0.0.1"):
        self.root = os.path.realpath(root)
        self.resolver = Resolver()
        self.watcher = _Watcher(self.root, self.resolver) if watch else None
        super().__init__((host, port), ZjscRequestHandler)
        if self.watcher is not None:
            self.watcher.start()

    def server_close(self) -> None:
        if self.watcher is not None:
            self.watcher.stop()
        super().server_close()


class ZjscRequestHandler(BaseHTTPRequestHandler):
    server: ZjscServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, body: bytes, content_type: str,
              extra: dict[str, str] | None = None, head_only: bool = False) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-cache")
        for name, value in (extra or {}).items():
            self.send_header(name, value)
        self.end_headers()
        if not head_only:
            self.wfile.write(body)

    def _send_text(self, status: int, text: str, head_only: bool = False) -> None:
        self._send(status, text.encode("utf-8"), "text/plain; charset=utf-8",
                   head_only=head_only)

    def do_GET(self) -> None:
        self._handle(head_only=False)

    def do_HEAD(self) -> None:
        self._handle(head_only=True)

    def _handle(self, head_only: bool) -> None:
        parsed = urllib.parse.urlsplit(self.path)
        if parsed.path.startswith("/__zjsc/"):
            self._toolchain(parsed, head_only)
            return
        self._static(parsed.path, head_only)

    def _static(self, url_path: str, head_only: bool) -> None:
        full = safe_resolve(self.server.root, url_path)
        if full is None:
            self._send_text(HTTPStatus.FORBIDDEN, "403 forbidden\n", head_only)
            return
        if os.path.isdir(full):
            index = os.path.join(full, "index.html")
            if os.path.isfile(index):
                full = index
            else:
                self._send_text(HTTPStatus.NOT_FOUND, "404 not found\n", head_only)
                return
        if not os.path.isfile(full):
            self._send_text(HTTPStatus.NOT_FOUND, "404 not found\n", head_only)
            return
        try:
            with open(full, "rb") as fh:
                payload = fh.read()
        except OSError:
            self._send_text(HTTPStatus.NOT_FOUND, "404 not found\n", head_only)
            return
        etag = etag_for(payload)
        if self._etag_matches(etag):
            self._send(HTTPStatus.NOT_MODIFIED, b"", content_type_for(full),
                       extra={"ETag": etag}, head_only=True)
            return
        self._send(HTTPStatus.OK, payload, content_type_for(full),
                   extra={"ETag": etag}, head_only=head_only)

    def _etag_matches(self, etag: str) -> bool:
        header = self.headers.get("If-None-Match", "")
        if not header:
            return False
        candidates = [v.strip() for v in header.split(",")]
        return etag in candidates or "*" in candidates

    def _entry_from_query(self, parsed) -> str | None:
        query = urllib.parse.parse_qs(parsed.query)
        values = query.get("entry")
        if not values:
            return None
        return values[0]

    def _toolchain(self, parsed, head_only: bool) -> None:
        entry = self._entry_from_query(parsed)
        if entry is None:
            self._send_text(HTTPStatus.BAD_REQUEST,
                            "400 missing entry parameter\n", head_only)
            return
        root = self.server.root.replace(os.sep, "/")
        try:
            locator = canonicalize(root + "/.", entry, root=root)
        except LocatorError as exc:
            self._send_text(HTTPStatus.FORBIDDEN, f"403 {exc}\n", head_only)
            return
        if parsed.path == "/__zjsc/flatten":
            self._flatten_endpoint(locator, head_only)
        elif parsed.path == "/__zjsc/graph":
            self._graph_endpoint(parsed, locator, head_only)
        else:
            self._send_text(HTTPStatus.NOT_FOUND, "404 not found\n", head_only)

    def _flatten_endpoint(self, locator: str, head_only: bool) -> None:
        try:
            doc = flatten(locator, self.server.resolver, FlattenOptions())
        except CycleError as exc:
            self._send_text(HTTPStatus.INTERNAL_SERVER_ERROR,
                            "cycle: " + " -> ".join(exc.chain) + "\n", head_only)
            return
        except DepthExceeded as exc:
            self._send_text(HTTPStatus.INTERNAL_SERVER_ERROR,
                            str(exc) + "\n", head_only)
            return
        except FetchError as exc:
            if exc.kind == FetchError.NOT_FOUND and exc.chain == [locator]:
                self._send_text(HTTPStatus.NOT_FOUND, f"404 {exc}\n", head_only)
                return
            chain = " -> ".join(exc.chain) if exc.chain else locator
            self._send_text(HTTPStatus.INTERNAL_SERVER_ERROR,
                            f"fetch failed: {exc}\n  {chain}\n", head_only)
            return
        body = serialize_fragment(doc).encode("utf-8")
        self._send(HTTPStatus.OK, body, "text/html; charset=utf-8",
                   head_only=head_only)

    def _graph_endpoint(self, parsed, locator: str, head_only: bool) -> None:
        from .cli import render_graph  # local import avoids a cycle

        query = urllib.parse.parse_qs(parsed.query)
        fmt = query.get("format", ["edges"])[0]
        if fmt not in ("edges", "dot"):
            self._send_text(HTTPStatus.BAD_REQUEST,
                            "400 format must be dot or edges\n", head_only)
            return
        try:
            text = render_graph(locator, fmt, self.server.resolver)
        except (FetchError, LocatorError) as exc:
            self._send_text(HTTPStatus.INTERNAL_SERVER_ERROR,
                            f"graph failed: {exc}\n", head_only)
            return
        self._send_text(HTTPStatus.OK, text, head_only)


def serve(root: str, port: int, watch: bool = False,
          host: str = "127.0.0.1") -> None:
    """Run the dev server until interrupted."""
    server = ZjscServer(root, port, watch=watch, host=host)
    try:
        server.serve_forever()
    finally:
        server.server_close()
