"""Locator canonicalization and fragment resolution.

The resolver loads fragment text from filesystem paths or HTTP(S) URLs
with an in-process cache and single-flight deduplication: any number of
concurrent resolves of one locator share a single underlying load. This is
the promise-holding mitigation for duplicated fetching, realized with
threads instead of promises.

Failed loads are never cached; the next resolve retries.
"""

from __future__ import annotations

import os
import posixpath
import re
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field, replace

from .errors import FetchError, LocatorError

ORIGIN_FILE = "file"
ORIGIN_HTTP = "http"
ORIGIN_CACHE = "cache"

DEFAULT_TIMEOUT_MS = 10_000
TIMEOUT_ENV_VAR = "ZJSC_TIMEOUT_MS"
MAX_REDIRECTS = 5

_SCHEME_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*:")


@dataclass(frozen=True)
class FragmentSource:
    """Resolved fragment text plus provenance."""

    locator: str
    text: str
    fetched_at: float
    origin: str


@dataclass
class ResolverStats:
    """Counters satisfying requests == loads + cache_hits + coalesced."""

    requests: int = 0
    loads: int = 0
    cache_hits: int = 0
    coalesced: int = 0


def _is_http(locator: str) -> bool:
    return locator.startswith(("http://", "https://"))


def _canonical_url(url: str) -> str:
    parts = urllib.parse.urlsplit(url)
    path = parts.path or "/"
    norm = posixpath.normpath(path)
    if path.endswith("/") and norm != "/":
        norm += "/"
    return urllib.parse.urlunsplit(
        (parts.scheme.lower(), parts.netloc.lower(), norm, parts.query, ""))


def canonicalize(base: str, ref: str, root: str | None = None) -> str:
    """Resolve `ref` against the document locator `base` to canonical form.

    File paths come out absolute with separators unified and dot segments
    collapsed; http(s) URLs follow standard relative-reference resolution
    with the fragment part dropped. When `root` is given (sandboxed mode),
    a file result outside that directory raises LocatorError.
    """
    if not ref:
        raise LocatorError("empty locator reference")
    base = base.replace("\\", "/")
    ref = ref.replace("\\", "/")

    scheme_match = _SCHEME_RE.match(ref)
    if scheme_match:
        scheme = scheme_match.group(0)[:-1].lower()
        if scheme in ("http", "https"):
            return _canonical_url(ref)
        raise LocatorError(f"unsupported locator scheme: {scheme}:")

    if _is_http(base):
        return _canonical_url(urllib.parse.urljoin(base, ref))

    if ref.startswith("/"):
        path = ref
    else:
        path = posixpath.join(posixpath.dirname(base), ref)
    path = posixpath.normpath(path)
    if not path.startswith("/"):
        raise LocatorError(
            f"cannot canonicalize {ref!r}: base {base!r} is not absolute")
    if root is not None:
        root_norm = posixpath.normpath(root.replace("\\", "/"))
        if path != root_norm and not path.startswith(root_norm.rstrip("/") + "/"):
            raise LocatorError(f"{ref!r} escapes the configured root {root!r}")
    return path


def http_timeout_seconds() -> float:
    raw = os.environ.get(TIMEOUT_ENV_VAR, "")
    try:
        ms = int(raw)
        if ms <= 0:
            raise ValueError
    except ValueError:
        ms = DEFAULT_TIMEOUT_MS
    return ms / 1000.0


class _RedirectLimit(urllib.request.HTTPRedirectHandler):
    max_redirections = MAX_REDIRECTS


def _load_file(locator: str) -> str:
    try:
        with open(locator, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError as exc:
        raise FetchError(FetchError.NOT_FOUND, locator, "no such file") from exc
    except OSError as exc:
        raise FetchError(FetchError.IO, locator, str(exc)) from exc
    if raw.startswith(b"\xef\xbb\xbf"):
        raw = raw[3:]
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FetchError(FetchError.IO, locator, f"not valid UTF-8: {exc}") from exc


def _load_http(locator: str) -> str:
    opener = urllib.request.build_opener(_RedirectLimit())
    timeout = http_timeout_seconds()
    try:
        with opener.open(locator, timeout=timeout) as resp:
            status = getattr(resp, "status", resp.getcode())
            if status != 200:
                raise FetchError(FetchError.HTTP_STATUS, locator,
                                 "unexpected status", status=status)
            raw = resp.read()
    except FetchError:
        raise
    except urllib.error.HTTPError as exc:
        if "redirect" in str(exc.reason or "").lower():
            raise FetchError(FetchError.IO, locator,
                             f"too many redirects: {exc}") from exc
        raise FetchError(FetchError.HTTP_STATUS, locator, str(exc.reason),
                         status=exc.code) from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (TimeoutError, OSError)) and "timed out" in str(exc.reason):
            raise FetchError(FetchError.TIMEOUT, locator, "timed out") from exc
        raise FetchError(FetchError.IO, locator, str(exc.reason)) from exc
    except TimeoutError as exc:
        raise FetchError(FetchError.TIMEOUT, locator, "timed out") from exc
    if raw.startswith(b"\xef\xbb\xbf"):
        raw = raw[3:]
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FetchError(FetchError.IO, locator, f"not valid UTF-8: {exc}") from exc


def default_loader(locator: str) -> tuple[str, str]:
    """Load locator text, returning (text, origin)."""
    if _is_http(locator):
        return _load_http(locator), ORIGIN_HTTP
    return _load_file(locator), ORIGIN_FILE


class _Flight:
    __slots__ = ("done", "result", "error")

    def __init__(self):
        self.done = threading.Event()
        self.result: FragmentSource | None = None
        self.error: FetchError | None = None


@dataclass
class Resolver:
    """Shared, thread-safe fragment resolver (the spec's ResolverState).

    A locator is in at most one of `cache` / in-flight at any instant; the
    single-flight guarantee holds under arbitrary interleaving. `loader`
    is injectable for tests and must return (text, origin).
    """

    loader: object = None
    cache: dict[str, FragmentSource] = field(default_factory=dict)
    stats: ResolverStats = field(default_factory=ResolverStats)

    def __post_init__(self):
        if self.loader is None:
            self.loader = default_loader
        self._lock = threading.Lock()
        self._in_flight: dict[str, _Flight] = {}

    @property
    def in_flight_count(self) -> int:
        with self._lock:
            return len(self._in_flight)

    def resolve(self, locator: str) -> FragmentSource:
        """Return the fragment at `locator`, loading it at most once.

        Cache hit: cached text with origin "cache". In-flight hit: blocks
        until the shared load settles; no additional load happens. Miss:
        this caller performs the load. Raises FetchError (delivered to
        every coalesced waiter; nothing is cached on failure).
        """
        leader = False
        with self._lock:
            self.stats.requests += 1
            cached = self.cache.get(locator)
            if cached is not None:
                self.stats.cache_hits += 1
                return replace(cached, origin=ORIGIN_CACHE)
            flight = self._in_flight.get(locator)
            if flight is not None:
                self.stats.coalesced += 1
            else:
                flight = _Flight()
                self._in_flight[locator] = flight
                self.stats.loads += 1
                leader = True
        if not leader:
            flight.done.wait()
            if flight.error is not None:
                raise flight.error
            assert flight.result is not None
            return flight.result

        try:
            text, origin = self.loader(locator)
        except FetchError as exc:
            with self._lock:
                self._in_flight.pop(locator, None)
                flight.error = exc
                flight.done.set()
            raise
        source = FragmentSource(locator=locator, text=text,
                                fetched_at=time.monotonic(), origin=origin)
        with self._lock:
            self._in_flight.pop(locator, None)
            self.cache[locator] = source
            flight.result = source
            flight.done.set()
        return source

    def invalidate(self, locator: str) -> bool:
        """Drop the cache entry for `locator`; in-flight loads are untouched."""
        with self._lock:
            return self.cache.pop(locator, None) is not None
