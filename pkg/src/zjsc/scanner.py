"""Shallow lexical scan of embedded script text.

Extracts the method table a fragment's scripts would export: every
top-level function declaration becomes an instance method (the convention
the runtime realizes by evaluating all scripts in one shared closure with
the element as receiver). "Top-level" means brace-nesting depth 0 after
skipping string literals, template literals (including nested `${...}`
code), comments, and regular-expression literals.

The scan is heuristic by design and fails safe: an unrecognized construct
can at worst hide a method, never invent one from string or comment text.
Scripts are never executed here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ScanError, ValidationWarning
from .parser import ELEMENT, RAW_TEXT, FragmentDocument

ON_CONNECTED = "onConnected"
ON_DISCONNECTED = "onDisconnected"

# A '/' directly after one of these characters starts a regex literal,
# not division. 'return' (tracked as a word) gets the same treatment.
_REGEX_PRECEDERS = frozenset("(,=:[!&|?{};")

# Last-seen words after which `function` is part of an expression, and a
# '/' would likewise start a regex.
_EXPRESSION_KEYWORDS = frozenset({
    "return", "typeof", "void", "new", "delete", "in", "of", "instanceof",
    "case", "await", "yield", "throw",
})

_EXPRESSION_CHARS = frozenset("=(,:[!&|?+-*/%<>^~.")

_WORD_RE = re.compile(r"[A-Za-z_$][\w$]*", re.UNICODE)


@dataclass(frozen=True)
class ScriptProfile:
    """Scan result: ordered method names, lifecycle flags, body byte span.

    `errors` and `warnings` carry the non-fatal findings produced while
    scanning (the profile itself is always best-effort).
    """

    methods: tuple[str, ...]
    has_on_connected: bool
    has_on_disconnected: bool
    span: tuple[int, int]
    errors: tuple[ScanError, ...] = ()
    warnings: tuple[ValidationWarning, ...] = ()


def _profile(methods: list[str], span: tuple[int, int],
             errors: list[ScanError],
             warnings: list[ValidationWarning]) -> ScriptProfile:
    return ScriptProfile(
        methods=tuple(methods),
        has_on_connected=ON_CONNECTED in methods,
        has_on_disconnected=ON_DISCONNECTED in methods,
        span=span,
        errors=tuple(errors),
        warnings=tuple(warnings),
    )


class _Scan:
    def __init__(self, body: str, span_base: int):
        self.body = body
        self.n = len(body)
        self.span_base = span_base
        self.methods: list[str] = []
        self.seen: set[str] = set()
        self.errors: list[ScanError] = []
        self.warnings: list[ValidationWarning] = []
        self.depth = 0
        self.prev_char: str | None = None   # last significant character
        self.last_word = ""                 # last identifier-like token
        # context snapshot taken just before the last word was read,
        # needed so `async function` looks at what preceded `async`
        self.word_ctx: tuple[str | None, str] = (None, "")

    def _byte(self, i: int) -> int:
        return self.span_base + len(self.body[:i].encode("utf-8"))

    def run(self) -> None:
        body, n = self.body, self.n
        i = 0
        while i < n:
            ch = body[i]
            if ch.isspace():
                i += 1
                continue
            if ch == "/" and body.startswith("//", i):
                nl = body.find("\n", i)
                i = n if nl == -1 else nl + 1
                continue
            if ch == "/" and body.startswith("/*", i):
                close = body.find("*/", i + 2)
                if close == -1:
                    self.errors.append(ScanError("unterminated-comment", self._byte(i)))
                    i = n
                else:
                    i = close + 2
                continue
            if ch in "\"'":
                i = self._string(i, ch)
                continue
            if ch == "`":
                i = self._template(i)
                continue
            if ch == "/":
                if self._regex_context():
                    i = self._regex(i)
                else:
                    self.prev_char = "/"
                    self.last_word = ""
                    i += 1
                continue
            if ch == "{":
                self.depth += 1
                self.prev_char = "{"
                self.last_word = ""
                i += 1
                continue
            if ch == "}":
                self.depth = max(0, self.depth - 1)
                self.prev_char = "}"
                self.last_word = ""
                i += 1
                continue
            m = _WORD_RE.match(body, i)
            if m:
                i = self._word(m)
                continue
            self.prev_char = ch
            self.last_word = ""
            i += 1

    def _regex_context(self) -> bool:
        if self.last_word in _EXPRESSION_KEYWORDS:
            return True
        return self.prev_char is None or self.prev_char in _REGEX_PRECEDERS

    def _string(self, i: int, quote: str) -> int:
        body, n = self.body, self.n
        start = i
        i += 1
        while i < n:
            ch = body[i]
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                self.prev_char = quote
                self.last_word = ""
                return i + 1
            if ch == "\n":
                self.errors.append(ScanError("unterminated-string", self._byte(start)))
                self.prev_char = quote
                self.last_word = ""
                return i + 1
            i += 1
        self.errors.append(ScanError("unterminated-string", self._byte(start)))
        return n

    def _template(self, i: int) -> int:
        body, n = self.body, self.n
        start = i
        i += 1
        while i < n:
            ch = body[i]
            if ch == "\\":
                i += 2
                continue
            if ch == "`":
                self.prev_char = "`"
                self.last_word = ""
                return i + 1
            if ch == "$" and body.startswith("${", i):
                i = self._template_code(i + 2)
                continue
            i += 1
        self.errors.append(ScanError("unterminated-string", self._byte(start)))
        return n

    def _template_code(self, i: int) -> int:
        """Skip a `${...}` section; its contents are never top-level."""
        body, n = self.body, self.n
        level = 1
        while i < n:
            ch = body[i]
            if ch in "\"'":
                i = self._skip_plain_string(i, ch)
                continue
            if ch == "`":
                i = self._template(i)
                continue
            if body.startswith("//", i):
                nl = body.find("\n", i)
                i = n if nl == -1 else nl + 1
                continue
            if body.startswith("/*", i):
                close = body.find("*/", i + 2)
                if close == -1:
                    self.errors.append(ScanError("unterminated-comment", self._byte(i)))
                    return n
                i = close + 2
                continue
            if ch == "{":
                level += 1
            elif ch == "}":
                level -= 1
                if level == 0:
                    return i + 1
            i += 1
        return n

    def _skip_plain_string(self, i: int, quote: str) -> int:
        body, n = self.body, self.n
        start = i
        i += 1
        while i < n:
            if body[i] == "\\":
                i += 2
                continue
            if body[i] == quote:
                return i + 1
            if body[i] == "\n":
                self.errors.append(ScanError("unterminated-string", self._byte(start)))
                return i + 1
            i += 1
        self.errors.append(ScanError("unterminated-string", self._byte(start)))
        return n

    def _regex(self, i: int) -> int:
        body, n = self.body, self.n
        i += 1
        in_class = False
        while i < n:
            ch = body[i]
            if ch == "\\":
                i += 2
                continue
            if ch == "\n":
                break  # regex literals cannot span lines; recover
            if in_class:
                if ch == "]":
                    in_class = False
            elif ch == "[":
                in_class = True
            elif ch == "/":
                i += 1
                while i < n and body[i].isalpha():
                    i += 1  # flags
                break
            i += 1
        self.prev_char = "/"
        self.last_word = ""
        return min(i, n)

    def _word(self, m: re.Match) -> int:
        word = m.group(0)
        ctx = (self.prev_char, self.last_word)
        if word == "function" and self.depth == 0:
            decl_ctx = self.word_ctx if self.last_word == "async" else ctx
            if not self._expression_context(decl_ctx):
                return self._declaration(m.end())
        self.word_ctx = ctx
        self.last_word = word
        self.prev_char = word[-1]
        return m.end()

    @staticmethod
    def _expression_context(ctx: tuple[str | None, str]) -> bool:
        prev_char, last_word = ctx
        if last_word in _EXPRESSION_KEYWORDS:
            return True
        return prev_char is not None and prev_char in _EXPRESSION_CHARS

    def _declaration(self, i: int) -> int:
        """Consume `[*] name` after a declaration-position `function`."""
        body, n = self.body, self.n
        while i < n and body[i].isspace():
            i += 1
        if i < n and body[i] == "*":
            i += 1
            while i < n and body[i].isspace():
                i += 1
        m = _WORD_RE.match(body, i)
        self.last_word = "function"
        self.prev_char = "n"
        if m is None:
            return i  # anonymous: expression-like, nothing to record
        name = m.group(0)
        if name in self.seen:
            self.warnings.append(ValidationWarning(
                code="duplicate-method",
                message=f"method {name!r} declared more than once; first wins",
                offset=self._byte(i),
            ))
        else:
            self.seen.add(name)
            self.methods.append(name)
        self.last_word = name
        self.prev_char = name[-1]
        return m.end()


def scan_script(body: str, span_base: int = 0) -> ScriptProfile:
    """Scan one script body; never executes it, always returns a profile.

    `span_base` offsets the reported span and error positions, for bodies
    embedded in a larger fragment.
    """
    scan = _Scan(body, span_base)
    scan.run()
    span = (span_base, span_base + len(body.encode("utf-8")))
    return _profile(scan.methods, span, scan.errors, scan.warnings)


def method_table(doc: FragmentDocument) -> ScriptProfile:
    """Merge the profiles of every script element, in document order.

    Cross-script name collisions keep the first declaration and emit a
    duplicate-method warning. The merged span is the covering hull of the
    individual script bodies ((0, 0) when the fragment has no scripts).
    """
    methods: list[str] = []
    seen: set[str] = set()
    errors: list[ScanError] = []
    warnings: list[ValidationWarning] = []
    span_lo: int | None = None
    span_hi = 0
    for node in doc.walk():
        if node.kind != ELEMENT or node.tag != "script":
            continue
        raw = node.children[0] if node.children else None
        if raw is not None and raw.kind == RAW_TEXT:
            profile = scan_script(raw.content, span_base=raw.pos)
            lo, hi = profile.span
        else:
            profile = scan_script("", span_base=node.end)
            lo, hi = profile.span
        span_lo = lo if span_lo is None else min(span_lo, lo)
        span_hi = max(span_hi, hi)
        errors.extend(profile.errors)
        warnings.extend(profile.warnings)
        for name in profile.methods:
            if name in seen:
                warnings.append(ValidationWarning(
                    code="duplicate-method",
                    message=f"method {name!r} declared in more than one script; first wins",
                    offset=lo,
                ))
            else:
                seen.add(name)
                methods.append(name)
    span = (span_lo or 0, span_hi) if span_lo is not None else (0, 0)
    return _profile(methods, span, errors, warnings)
