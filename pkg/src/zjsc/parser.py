"""Fragment-oriented HTML parsing and serialization.

Parses `.zjsc` / `.html` fragment files into a document tree and serializes
trees back to text. The scope is a deliberate subset of HTML tokenization:

- no implied <html>/<head>/<body> scaffolding, no foster-parenting;
- entity table limited to &amp; &lt; &gt; &quot; and numeric &#...; / &#x...;
- <script> and <style> content is captured as a single RawText child,
  byte-exact, terminated only by the matching end tag;
- malformed markup is recovered, never rejected: unclosed elements are
  auto-closed at end of input, stray end tags are dropped, `<` that does
  not open a tag is literal text;
- tag and attribute names are ASCII-lowercased; duplicate attributes keep
  the first occurrence;
- the self-closing slash is ignored on non-void elements (browser behavior).

All functions here are pure; trees are plain mutable dataclasses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EncodingError, ValidationWarning

ELEMENT = "element"
TEXT = "text"
COMMENT = "comment"
RAW_TEXT = "rawtext"

VOID_ELEMENTS = frozenset({
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "source", "track", "wbr",
})

RAW_TEXT_ELEMENTS = frozenset({"script", "style"})

COMPONENT_TAG = "zjs-component"


@dataclass
class Node:
    """One tree node; `kind` is ELEMENT, TEXT, COMMENT or RAW_TEXT.

    `pos`/`end` are byte offsets into the source (for RAW_TEXT they bound
    the raw body itself, which is what script scanning needs).
    """

    kind: str
    tag: str = ""
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["Node"] = field(default_factory=list)
    content: str = ""
    pos: int = 0
    end: int = 0

    def walk(self):
        """Yield this node and all descendants preorder (document order)."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class FragmentDocument:
    """Parsed fragment: top-level nodes in source order plus provenance."""

    nodes: list[Node]
    source: str = ""
    byte_length: int = 0

    def walk(self):
        for node in self.nodes:
            yield from node.walk()


@dataclass(frozen=True)
class ComponentSpec:
    """One `<zjs-component>` occurrence that carries a remote-src.

    `attributes` holds every forwarded attribute (everything but
    `remote-src` and `display`); `element_ref` is the byte offset of the
    originating element in its fragment.
    """

    remote_src: str
    attributes: dict[str, str]
    display: str | None
    element_ref: int


_ENTITY_RE = re.compile(r"&(amp|lt|gt|quot|#[xX][0-9a-fA-F]+|#[0-9]+);")
_NAMED = {"amp": "&", "lt": "<", "gt": ">", "quot": '"'}
_TAG_NAME_RE = re.compile(r"[a-zA-Z][^\s/>]*")
_RAW_END_RE = {
    tag: re.compile(r"</" + tag + r"(?=[\s/>]|\Z)", re.IGNORECASE)
    for tag in RAW_TEXT_ELEMENTS
}


def decode_entities(text: str) -> str:
    """Decode the supported entity subset; anything else stays literal."""

    def repl(m: re.Match) -> str:
        body = m.group(1)
        if body in _NAMED:
            return _NAMED[body]
        try:
            cp = int(body[2:], 16) if body[1] in "xX" else int(body[1:])
        except ValueError:
            return m.group(0)
        if cp > 0x10FFFF or 0xD800 <= cp <= 0xDFFF:
            return m.group(0)
        return chr(cp)

    return _ENTITY_RE.sub(repl, text)


def _utf8_length(ch: str) -> int:
    cp = ord(ch)
    if cp < 0x80:
        return 1
    if cp < 0x800:
        return 2
    if cp < 0x10000:
        return 3
    return 4


def _byte_offsets(text: str) -> list[int]:
    """offsets[i] == byte offset of character i in the UTF-8 encoding."""
    offsets = [0] * (len(text) + 1)
    total = 0
    for i, ch in enumerate(text):
        offsets[i] = total
        total += _utf8_length(ch)
    offsets[len(text)] = total
    return offsets


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.n = len(text)
        self.offsets = _byte_offsets(text)
        self.roots: list[Node] = []
        self.stack: list[Node] = []
        self._text_parts: list[str] = []
        self._text_start = 0

    def _byte(self, i: int) -> int:
        return self.offsets[i]

    def _append(self, node: Node) -> None:
        if self.stack:
            self.stack[-1].children.append(node)
        else:
            self.roots.append(node)

    def _push_text(self, raw: str, start: int, *, literal: bool = False) -> None:
        if not raw:
            return
        if not self._text_parts:
            self._text_start = start
        self._text_parts.append(raw if literal else decode_entities(raw))

    def _flush_text(self, upto: int) -> None:
        if not self._text_parts:
            return
        content = "".join(self._text_parts)
        self._text_parts = []
        self._append(Node(TEXT, content=content,
                          pos=self._byte(self._text_start), end=self._byte(upto)))

    def parse(self) -> list[Node]:
        text, n = self.text, self.n
        i = 0
        while i < n:
            lt = text.find("<", i)
            if lt == -1:
                self._push_text(text[i:], i)
                i = n
                break
            if lt > i:
                self._push_text(text[i:lt], i)
            i = self._token(lt)
        self._flush_text(n)
        return self.roots

    def _token(self, lt: int) -> int:
        """Handle the construct starting at '<'; return the next index."""
        text, n = self.text, self.n
        nxt = text[lt + 1] if lt + 1 < n else ""
        if nxt.isascii() and nxt.isalpha():
            return self._start_tag(lt)
        if nxt == "/":
            after = text[lt + 2] if lt + 2 < n else ""
            if after.isascii() and after.isalpha():
                return self._end_tag(lt)
            if after == ">":
                return lt + 3
            return self._bogus_comment(lt, lt + 2)
        if nxt == "!":
            if text.startswith("<!--", lt):
                return self._comment(lt)
            return self._bogus_comment(lt, lt + 2)
        if nxt == "?":
            return self._bogus_comment(lt, lt + 1)
        # literal '<' (including a lone '<' at end of input)
        self._push_text("<", lt, literal=True)
        return lt + 1

    def _comment(self, lt: int) -> int:
        text, n = self.text, self.n
        start = lt + 4
        # abrupt closings: <!--> and <!--->
        if text.startswith(">", start):
            content, i = "", start + 1
        elif text.startswith("->", start):
            content, i = "", start + 2
        else:
            close = text.find("-->", start)
            if close == -1:
                content, i = text[start:], n
            else:
                content, i = text[start:close], close + 3
        self._flush_text(lt)
        self._append(Node(COMMENT, content=content,
                          pos=self._byte(lt), end=self._byte(i)))
        return i

    def _bogus_comment(self, lt: int, content_start: int) -> int:
        text, n = self.text, self.n
        gt = text.find(">", content_start)
        if gt == -1:
            content, i = text[content_start:], n
        else:
            content, i = text[content_start:gt], gt + 1
        self._flush_text(lt)
        self._append(Node(COMMENT, content=content,
                          pos=self._byte(lt), end=self._byte(i)))
        return i

    def _end_tag(self, lt: int) -> int:
        text, n = self.text, self.n
        m = _TAG_NAME_RE.match(text, lt + 2)
        name = m.group(0).lower()
        gt = text.find(">", m.end())
        i = n if gt == -1 else gt + 1
        self._flush_text(lt)
        if gt == -1:
            return i  # truncated end tag at EOF: dropped
        for depth in range(len(self.stack) - 1, -1, -1):
            if self.stack[depth].tag == name:
                del self.stack[depth:]
                break
        # no matching open element: end tag ignored
        return i

    def _start_tag(self, lt: int) -> int:
        text, n = self.text, self.n
        m = _TAG_NAME_RE.match(text, lt + 1)
        tag = m.group(0).lower()
        attrs: dict[str, str] = {}
        i = m.end()
        closed = False
        while True:
            while i < n and text[i].isspace():
                i += 1
            if i >= n:
                return n  # EOF inside tag: token dropped
            ch = text[i]
            if ch == ">":
                i += 1
                closed = True
                break
            if ch == "/":
                if text.startswith("/>", i):
                    i += 2
                    closed = True
                    break
                i += 1  # stray slash between attributes
                continue
            j = i
            while j < n and not text[j].isspace() and text[j] not in "=/>":
                j += 1
            name = text[i:j].lower()
            i = j
            if not name:
                i += 1  # unparseable character, skip to guarantee progress
                continue
            while i < n and text[i].isspace():
                i += 1
            value = ""
            if i < n and text[i] == "=":
                i += 1
                while i < n and text[i].isspace():
                    i += 1
                if i < n and text[i] in "\"'":
                    quote = text[i]
                    closeq = text.find(quote, i + 1)
                    if closeq == -1:
                        return n  # EOF inside attribute value: token dropped
                    value = decode_entities(text[i + 1:closeq])
                    i = closeq + 1
                else:
                    j = i
                    while j < n and not text[j].isspace() and text[j] != ">":
                        j += 1
                    value = decode_entities(text[i:j])
                    i = j
            if name not in attrs:
                attrs[name] = value
        if not closed:
            return n
        self._flush_text(lt)
        node = Node(ELEMENT, tag=tag, attrs=attrs,
                    pos=self._byte(lt), end=self._byte(i))
        self._append(node)
        if tag in RAW_TEXT_ELEMENTS:
            return self._raw_text(node, tag, i)
        if tag not in VOID_ELEMENTS:
            self.stack.append(node)
        return i

    def _raw_text(self, node: Node, tag: str, body_start: int) -> int:
        text, n = self.text, self.n
        m = _RAW_END_RE[tag].search(text, body_start)
        if m is None:
            body_end, i = n, n
        else:
            body_end = m.start()
            gt = text.find(">", m.end())
            i = n if gt == -1 else gt + 1
        body = text[body_start:body_end]
        if body:
            node.children.append(Node(
                RAW_TEXT, content=body,
                pos=self._byte(body_start), end=self._byte(body_end)))
        node.end = self._byte(i)
        return i


def parse_fragment(text: str | bytes, source: str = "") -> FragmentDocument:
    """Parse fragment markup into a document tree.

    Accepts str or UTF-8 bytes (BOM stripped either way). Malformed markup
    is always recovered; the only error is EncodingError for invalid UTF-8
    byte input.
    """
    byte_length = None
    if isinstance(text, (bytes, bytearray, memoryview)):
        raw = bytes(text)
        byte_length = len(raw)
        if raw.startswith(b"\xef\xbb\xbf"):
            raw = raw[3:]
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"{source or '<input>'}: {exc}") from exc
    if text.startswith("﻿"):
        text = text[1:]
    if byte_length is None:
        byte_length = len(text.encode("utf-8"))
    nodes = _Parser(text).parse()
    return FragmentDocument(nodes=nodes, source=source, byte_length=byte_length)


def _escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;")


def _escape_attr(value: str) -> str:
    return value.replace("&", "&amp;").replace('"', "&quot;")


def _serialize_node(node: Node, out: list[str]) -> None:
    if node.kind == TEXT:
        out.append(_escape_text(node.content))
    elif node.kind == RAW_TEXT:
        out.append(node.content)
    elif node.kind == COMMENT:
        out.append(f"<!--{node.content}-->")
    else:
        out.append(f"<{node.tag}")
        for name, value in node.attrs.items():
            out.append(f' {name}="{_escape_attr(value)}"')
        out.append(">")
        if node.tag in VOID_ELEMENTS:
            return
        for child in node.children:
            _serialize_node(child, out)
        out.append(f"</{node.tag}>")


def serialize_fragment(doc: FragmentDocument) -> str:
    """Serialize a document tree back to fragment text.

    Lowercase tag names, attributes in stored order, double-quoted values
    with `"` and `&` escaped, text with `<` and `&` escaped, raw script and
    style bodies verbatim.
    """
    out: list[str] = []
    for node in doc.nodes:
        _serialize_node(node, out)
    return "".join(out)


def component_spec_of(element: Node) -> ComponentSpec | None:
    """Build the ComponentSpec for one `zjs-component` element.

    Returns None when the element has no non-empty `remote-src`.
    """
    remote_src = element.attrs.get("remote-src", "")
    if not remote_src:
        return None
    forwarded = {name: value for name, value in element.attrs.items()
                 if name not in ("remote-src", "display")}
    return ComponentSpec(
        remote_src=remote_src,
        attributes=forwarded,
        display=element.attrs.get("display"),
        element_ref=element.pos,
    )


def extract_component_specs(
    doc: FragmentDocument,
    warnings: list[ValidationWarning] | None = None,
) -> list[ComponentSpec]:
    """Collect one ComponentSpec per `zjs-component` element with remote-src.

    Document order. Elements missing `remote-src` are skipped; pass a list
    as `warnings` to receive a MissingRemoteSrc report for each.
    """
    specs: list[ComponentSpec] = []
    for node in doc.walk():
        if node.kind != ELEMENT or node.tag != COMPONENT_TAG:
            continue
        spec = component_spec_of(node)
        if spec is None:
            if warnings is not None:
                warnings.append(ValidationWarning(
                    code="missing-remote-src",
                    message="zjs-component without remote-src attribute",
                    offset=node.pos,
                ))
            continue
        specs.append(spec)
    return specs
