"""CSS selector subset: tag, #id, .class, [attr], [attr=value], descendant.

Matches over any node shape exposing `kind`, `tag`, `attrs`, `children`
and `parent`. Resolution order is document order (preorder).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import SelectorError
from .parser import ELEMENT

_IDENT = r"[A-Za-z_][-\w]*|\*"
_SIMPLE_RE = re.compile(
    r"(?P<tag>" + _IDENT + r")"
    r"|#(?P<id>[-\w]+)"
    r"|\.(?P<cls>[-\w]+)"
    r"|\[(?P<attr>[^\]=\s]+)(?:=(?P<val>\"[^\"]*\"|'[^']*'|[^\]]*))?\]"
)


@dataclass(frozen=True)
class Compound:
    tag: str | None
    id: str | None
    classes: tuple[str, ...]
    attrs: tuple[tuple[str, str | None], ...]


def _split_compounds(selector: str) -> list[str]:
    """Split on whitespace outside [...] (quoted values may hold spaces)."""
    parts: list[str] = []
    current: list[str] = []
    in_brackets = False
    for ch in selector:
        if ch == "[":
            in_brackets = True
        elif ch == "]":
            in_brackets = False
        if ch.isspace() and not in_brackets:
            if current:
                parts.append("".join(current))
                current = []
            continue
        current.append(ch)
    if current:
        parts.append("".join(current))
    return parts


def parse_selector(selector: str) -> list[Compound]:
    """Parse into compounds separated by the descendant combinator."""
    parts = _split_compounds(selector)
    if not parts:
        raise SelectorError(f"empty selector: {selector!r}")
    compounds = []
    for part in parts:
        pos = 0
        tag = None
        id_ = None
        classes: list[str] = []
        attrs: list[tuple[str, str | None]] = []
        first = True
        while pos < len(part):
            m = _SIMPLE_RE.match(part, pos)
            if m is None:
                raise SelectorError(f"cannot parse selector {selector!r} at {part[pos:]!r}")
            if m.group("tag") is not None:
                if not first:
                    raise SelectorError(f"tag must come first in {part!r}")
                tag = m.group("tag").lower()
                if tag == "*":
                    tag = None
            elif m.group("id") is not None:
                id_ = m.group("id")
            elif m.group("cls") is not None:
                classes.append(m.group("cls"))
            else:
                value = m.group("val")
                if value is not None and len(value) >= 2 and value[0] in "\"'" and value[-1] == value[0]:
                    value = value[1:-1]
                attrs.append((m.group("attr").lower(), value))
            first = False
            pos = m.end()
        compounds.append(Compound(tag, id_, tuple(classes), tuple(attrs)))
    return compounds


def matches_compound(node, compound: Compound) -> bool:
    if getattr(node, "kind", None) != ELEMENT:
        return False
    if compound.tag is not None and node.tag != compound.tag:
        return False
    if compound.id is not None and node.attrs.get("id") != compound.id:
        return False
    for cls in compound.classes:
        if cls not in node.attrs.get("class", "").split():
            return False
    for name, value in compound.attrs:
        if name not in node.attrs:
            return False
        if value is not None and node.attrs[name] != value:
            return False
    return True


def matches(node, compounds: list[Compound]) -> bool:
    """Node matches the full selector (rightmost compound on the node,
    earlier compounds on successively higher ancestors)."""
    if not matches_compound(node, compounds[-1]):
        return False
    idx = len(compounds) - 2
    cur = getattr(node, "parent", None)
    while idx >= 0 and cur is not None:
        if matches_compound(cur, compounds[idx]):
            idx -= 1
        cur = getattr(cur, "parent", None)
    return idx < 0


def _preorder(root):
    for child in root.children:
        yield child
        yield from _preorder(child)


def query_all(root, selector: str):
    compounds = parse_selector(selector)
    return [node for node in _preorder(root) if matches(node, compounds)]


def query_first(root, selector: str):
    compounds = parse_selector(selector)
    for node in _preorder(root):
        if matches(node, compounds):
            return node
    return None
