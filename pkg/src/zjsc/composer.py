"""Recursive flattening of component include trees and dependency graphs.

`flatten` is the build-time realization of the client-side include: every
`zjs-component` element with a `remote-src` gets its fragment fetched,
recursively flattened, and appended inside the wrapper element. The
wrapper stays in the output so a flattened page has the same DOM shape
(and selector behavior) as the live runtime would construct.

Wrappers gain a `data-zjs-from` marker carrying the canonical source
locator; a wrapper already marked is never re-expanded, which makes
flatten idempotent. Include cycles are a hard error, never a truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CycleError, DepthExceeded, FetchError
from .parser import (
    COMPONENT_TAG,
    ELEMENT,
    FragmentDocument,
    Node,
    parse_fragment,
)
from .resolver import Resolver, canonicalize

MARKER_ATTR = "data-zjs-from"


@dataclass
class FlattenOptions:
    """Composer knobs.

    `keep_tags=True` retains the `zjs-component` wrapper elements
    (runtime-equivalent DOM shape); False unwraps each wrapper into its
    children for purely static output.
    """

    max_depth: int = 32
    keep_scripts: bool = True
    keep_marker_attrs: bool = True
    keep_tags: bool = True

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass
class DependencyGraph:
    """Fragment locators as nodes, include relations as directed edges.

    `annotations` maps unloadable locators to their fetch-error text;
    graph construction records them instead of aborting.
    """

    nodes: set[str] = field(default_factory=set)
    edges: set[tuple[str, str]] = field(default_factory=set)
    roots: tuple[str, ...] = ()
    annotations: dict[str, str] = field(default_factory=dict)


def _merge_display(attrs: dict[str, str]) -> None:
    display = attrs.get("display")
    if not display:
        return
    style = attrs.get("style", "")
    if style and not style.rstrip().endswith(";"):
        style += ";"
    attrs["style"] = style + f"display:{display}"


def _expandable(node: Node) -> bool:
    return (node.kind == ELEMENT and node.tag == COMPONENT_TAG
            and bool(node.attrs.get("remote-src"))
            and MARKER_ATTR not in node.attrs)


class _Composer:
    def __init__(self, resolver: Resolver, opts: FlattenOptions):
        self.resolver = resolver
        self.opts = opts

    def fetch(self, locator: str, chain: list[str]) -> FragmentDocument:
        try:
            source = self.resolver.resolve(locator)
        except FetchError as exc:
            raise exc.with_chain(chain)
        return parse_fragment(source.text, source=locator)

    def expand(self, nodes: list[Node], base: str, chain: list[str]) -> None:
        for node in nodes:
            if node.kind != ELEMENT:
                continue
            original_children = list(node.children)
            if _expandable(node):
                self._expand_wrapper(node, base, chain)
            self.expand(original_children, base, chain)

    def _expand_wrapper(self, node: Node, base: str, chain: list[str]) -> None:
        target = canonicalize(base, node.attrs["remote-src"])
        if target in chain:
            raise CycleError(chain[chain.index(target):] + [target])
        if len(chain) > self.opts.max_depth:
            raise DepthExceeded(self.opts.max_depth, chain + [target])
        doc = self.fetch(target, chain + [target])
        self.expand(doc.nodes, target, chain + [target])
        node.children.extend(doc.nodes)
        if self.opts.keep_marker_attrs:
            node.attrs[MARKER_ATTR] = target
        _merge_display(node.attrs)


def _strip_scripts(nodes: list[Node]) -> list[Node]:
    kept = []
    for node in nodes:
        if node.kind == ELEMENT and node.tag == "script":
            continue
        node.children = _strip_scripts(node.children)
        kept.append(node)
    return kept


def _unwrap_components(nodes: list[Node]) -> list[Node]:
    out: list[Node] = []
    for node in nodes:
        node.children = _unwrap_components(node.children)
        if node.kind == ELEMENT and node.tag == COMPONENT_TAG:
            out.extend(node.children)
        else:
            out.append(node)
    return out


def flatten(entry: str, resolver: Resolver,
            opts: FlattenOptions | None = None) -> FragmentDocument:
    """Flatten the include tree rooted at `entry` into one document.

    Raises CycleError (with the inclusion chain), DepthExceeded, or
    FetchError (chain attached) — a failed include is never silently
    truncated.
    """
    opts = opts or FlattenOptions()
    composer = _Composer(resolver, opts)
    doc = composer.fetch(entry, [entry])
    composer.expand(doc.nodes, entry, [entry])
    if not opts.keep_scripts:
        doc.nodes = _strip_scripts(doc.nodes)
    if not opts.keep_tags:
        doc.nodes = _unwrap_components(doc.nodes)
    return doc


def _include_targets(doc: FragmentDocument, base: str) -> list[str]:
    targets = []
    for node in doc.walk():
        if (node.kind == ELEMENT and node.tag == COMPONENT_TAG
                and node.attrs.get("remote-src")):
            targets.append(canonicalize(base, node.attrs["remote-src"]))
    return targets


def build_graph(entry: str, resolver: Resolver,
                opts: FlattenOptions | None = None) -> DependencyGraph:
    """Build the dependency graph of all fragments reachable from `entry`.

    Cycles are recorded, not errors; each fragment is visited once.
    Unloadable fragments stay in the graph with a fetch-error annotation.
    Edges count every `remote-src` occurrence, marker attributes included.
    """
    graph = DependencyGraph(roots=(entry,))
    queue = [entry]
    while queue:
        locator = queue.pop(0)
        if locator in graph.nodes:
            continue
        graph.nodes.add(locator)
        try:
            source = resolver.resolve(locator)
        except FetchError as exc:
            graph.annotations[locator] = str(exc)
            continue
        doc = parse_fragment(source.text, source=locator)
        for target in _include_targets(doc, locator):
            graph.edges.add((locator, target))
            if target not in graph.nodes:
                queue.append(target)
    return graph


def _reachable(graph: DependencyGraph) -> set[str]:
    seen: set[str] = set()
    stack = list(graph.roots)
    adj: dict[str, list[str]] = {}
    for a, b in graph.edges:
        adj.setdefault(a, []).append(b)
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adj.get(node, ()))
    return seen


def _johnson_circuits(vertices: list[str],
                      adj: dict[str, set[str]]) -> list[list[str]]:
    """Johnson's elementary-circuit enumeration over the given subgraph."""
    circuits: list[list[str]] = []
    order = {v: i for i, v in enumerate(sorted(vertices))}

    def strongly_connected(component_vertices: set[str]) -> list[set[str]]:
        # Tarjan over the induced subgraph
        index: dict[str, int] = {}
        low: dict[str, int] = {}
        on_stack: set[str] = set()
        stack: list[str] = []
        sccs: list[set[str]] = []
        counter = [0]

        def visit(v: str) -> None:
            index[v] = low[v] = counter[0]
            counter[0] += 1
            stack.append(v)
            on_stack.add(v)
            for w in adj.get(v, ()):
                if w not in component_vertices:
                    continue
                if w not in index:
                    visit(w)
                    low[v] = min(low[v], low[w])
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
            if low[v] == index[v]:
                scc = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.add(w)
                    if w == v:
                        break
                sccs.append(scc)

        for v in sorted(component_vertices, key=order.__getitem__):
            if v not in index:
                visit(v)
        return sccs

    def circuit(v: str, start: str, scc: set[str],
                blocked: set[str], blocked_map: dict[str, set[str]],
                path: list[str]) -> bool:
        found = False
        path.append(v)
        blocked.add(v)
        for w in sorted(adj.get(v, ()) & scc, key=order.__getitem__):
            if w == start:
                circuits.append(list(path))
                found = True
            elif w not in blocked:
                if circuit(w, start, scc, blocked, blocked_map, path):
                    found = True
        if found:
            unblock(v, blocked, blocked_map)
        else:
            for w in adj.get(v, ()) & scc:
                blocked_map.setdefault(w, set()).add(v)
        path.pop()
        return found

    def unblock(v: str, blocked: set[str],
                blocked_map: dict[str, set[str]]) -> None:
        blocked.discard(v)
        for w in blocked_map.pop(v, set()):
            if w in blocked:
                unblock(w, blocked, blocked_map)

    remaining = set(vertices)
    while remaining:
        start = min(remaining, key=order.__getitem__)
        scc = next((c for c in strongly_connected(remaining) if start in c), {start})
        if len(scc) > 1 or start in adj.get(start, ()):
            circuit(start, start, scc, set(), {}, [])
        remaining.discard(start)
    return circuits


def detect_cycles(graph: DependencyGraph) -> list[list[str]]:
    """Every elementary cycle reachable from the roots.

    Each cycle is rotated so its lexicographically smallest locator comes
    first; the list is sorted lexicographically. Empty iff the reachable
    subgraph is acyclic.
    """
    reachable = _reachable(graph)
    adj: dict[str, set[str]] = {}
    for a, b in graph.edges:
        if a in reachable and b in reachable:
            adj.setdefault(a, set()).add(b)
    raw = _johnson_circuits(sorted(reachable), adj)
    normalized = []
    for cycle in raw:
        pivot = cycle.index(min(cycle))
        normalized.append(cycle[pivot:] + cycle[:pivot])
    normalized.sort()
    return normalized
