from __future__ import annotations

import random

import pytest

from zjsc.composer import (
    MARKER_ATTR,
    DependencyGraph,
    FlattenOptions,
    build_graph,
    detect_cycles,
    flatten,
)
from zjsc.errors import CycleError, DepthExceeded, FetchError
from zjsc.parser import ELEMENT, parse_fragment, serialize_fragment
from zjsc.resolver import Resolver


def brute_force_cycles(graph: DependencyGraph) -> list[list[str]]:
    """Independent oracle: enumerate every simple path from every node and
    record the ones that close; dedupe by canonical rotation."""
    adj: dict[str, set[str]] = {}
    for a, b in graph.edges:
        adj.setdefault(a, set()).add(b)
    reachable = set()
    stack = list(graph.roots)
    while stack:
        node = stack.pop()
        if node in reachable:
            continue
        reachable.add(node)
        stack.extend(adj.get(node, ()))

    found: set[tuple[str, ...]] = set()

    def canon(path: list[str]) -> tuple[str, ...]:
        pivot = path.index(min(path))
        return tuple(path[pivot:] + path[:pivot])

    def dfs(start: str, current: str, path: list[str], visited: set[str]) -> None:
        for nxt in adj.get(current, ()):
            if nxt not in reachable:
                continue
            if nxt == start:
                found.add(canon(path))
            elif nxt not in visited:
                dfs(start, nxt, path + [nxt], visited | {nxt})

    for node in reachable:
        dfs(node, node, [node], {node})
    return sorted(list(c) for c in found)


def random_graph(rng: random.Random, max_nodes: int = 12,
                 edge_probability: float = 0.25) -> DependencyGraph:
    count = rng.randint(1, max_nodes)
    nodes = [f"/n{i}.zjsc" for i in range(count)]
    edges = {(a, b) for a in nodes for b in nodes
             if rng.random() < edge_probability}
    roots = tuple(rng.sample(nodes, rng.randint(1, min(2, count))))
    return DependencyGraph(nodes=set(nodes), edges=edges, roots=roots)


class TestDetectCycles:
    def test_acyclic_chain(self):
        graph = DependencyGraph(nodes={"a", "b", "c"},
                                edges={("a", "b"), ("b", "c")}, roots=("a",))
        assert detect_cycles(graph) == []

    def test_two_cycle(self):
        graph = DependencyGraph(nodes={"a", "b"},
                                edges={("a", "b"), ("b", "a")}, roots=("a",))
        assert detect_cycles(graph) == [["a", "b"]]

    def test_self_loop(self):
        graph = DependencyGraph(nodes={"a"}, edges={("a", "a")}, roots=("a",))
        assert detect_cycles(graph) == [["a"]]

    def test_unreachable_cycle_excluded(self):
        graph = DependencyGraph(
            nodes={"a", "x", "y"},
            edges={("x", "y"), ("y", "x")},
            roots=("a",))
        assert detect_cycles(graph) == []

    def test_rotation_and_sorting(self):
        graph = DependencyGraph(
            nodes={"c", "b", "a", "d"},
            edges={("c", "b"), ("b", "c"), ("a", "d"), ("d", "a"),
                   ("a", "c")},
            roots=("a",))
        assert detect_cycles(graph) == [["a", "d"], ["b", "c"]]

    def test_overlapping_cycles(self):
        # a->b->a and a->b->c->a share the edge a->b
        graph = DependencyGraph(
            nodes={"a", "b", "c"},
            edges={("a", "b"), ("b", "a"), ("b", "c"), ("c", "a")},
            roots=("a",))
        assert detect_cycles(graph) == [["a", "b"], ["a", "b", "c"]]

    def test_oracle_equivalence_random_graphs(self):
        rng = random.Random(2024)
        for _ in range(150):
            graph = random_graph(rng)
            assert detect_cycles(graph) == brute_force_cycles(graph)


def build_site(write, files: dict[str, str]):
    paths = {}
    for rel, text in files.items():
        paths[rel] = write(rel, text)
    return paths


class TestFlatten:
    def test_paper_include_example(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<zjs-component remote-src="content.html"></zjs-component>',
            "content.html": "<h1>Welcome</h1>",
        })
        doc = flatten(paths["index.html"], Resolver())
        wrapper = doc.nodes[0]
        assert wrapper.tag == "zjs-component"
        assert wrapper.attrs[MARKER_ATTR] == paths["content.html"]
        assert [c.tag for c in wrapper.children] == ["h1"]
        assert "<h1>Welcome</h1>" in serialize_fragment(doc)

    def test_no_components_is_noop(self, site):
        root, write = site
        text = "<div><p>static &amp; plain</p></div>"
        paths = build_site(write, {"page.html": text})
        doc = flatten(paths["page.html"], Resolver())
        assert serialize_fragment(doc) == text

    def test_cycle_error_chain(self, site):
        root, write = site
        paths = build_site(write, {
            "a.zjsc": '<zjs-component remote-src="b.zjsc"></zjs-component>',
            "b.zjsc": '<zjs-component remote-src="a.zjsc"></zjs-component>',
        })
        with pytest.raises(CycleError) as exc_info:
            flatten(paths["a.zjsc"], Resolver())
        assert exc_info.value.chain == [paths["a.zjsc"], paths["b.zjsc"], paths["a.zjsc"]]

    def test_self_include_cycle(self, site):
        root, write = site
        paths = build_site(write, {
            "a.zjsc": '<zjs-component remote-src="a.zjsc"></zjs-component>',
        })
        with pytest.raises(CycleError) as exc_info:
            flatten(paths["a.zjsc"], Resolver())
        assert exc_info.value.chain == [paths["a.zjsc"], paths["a.zjsc"]]

    def test_display_becomes_inline_style(self, site):
        root, write = site
        paths = build_site(write, {
            "page.html": '<zjs-component display="inline" remote-src="c.html">'
                         "</zjs-component>",
            "c.html": "<b>x</b>",
        })
        doc = flatten(paths["page.html"], Resolver())
        wrapper = doc.nodes[0]
        assert wrapper.attrs["style"] == "display:inline"
        assert 'style="display:inline"' in serialize_fragment(doc)

    def test_display_appends_to_author_style(self, site):
        root, write = site
        paths = build_site(write, {
            "page.html": '<zjs-component style="color:red" display="block" '
                         'remote-src="c.html"></zjs-component>',
            "c.html": "<b>x</b>",
        })
        doc = flatten(paths["page.html"], Resolver())
        assert doc.nodes[0].attrs["style"] == "color:red;display:block"

    def test_forwarded_attributes_untouched_no_templating(self, site):
        root, write = site
        paths = build_site(write, {
            "page.html": '<zjs-component remote-src="hello.zjsc" greeting="Hi" '
                         'name="{{name}}"></zjs-component>',
            "hello.zjsc": "<span>placeholder</span>",
        })
        doc = flatten(paths["page.html"], Resolver())
        wrapper = doc.nodes[0]
        assert wrapper.attrs["greeting"] == "Hi"
        assert wrapper.attrs["name"] == "{{name}}"
        assert "placeholder" in serialize_fragment(doc)

    def test_nested_includes_recursive(self, site):
        root, write = site
        paths = build_site(write, {
            "a.html": '<zjs-component remote-src="b.html"></zjs-component>',
            "b.html": '<p>b</p><zjs-component remote-src="c.html"></zjs-component>',
            "c.html": "<em>c</em>",
        })
        doc = flatten(paths["a.html"], Resolver())
        outer = doc.nodes[0]
        inner = [c for c in outer.children if c.kind == ELEMENT and c.tag == "zjs-component"]
        assert len(inner) == 1
        assert [c.tag for c in inner[0].children] == ["em"]

    def test_relative_resolution_against_including_fragment(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<zjs-component remote-src="component/outer.zjsc"></zjs-component>',
            "component/outer.zjsc": '<zjs-component remote-src="inner.zjsc"></zjs-component>',
            "component/inner.zjsc": "<i>deep</i>",
        })
        doc = flatten(paths["index.html"], Resolver())
        text = serialize_fragment(doc)
        assert "<i>deep</i>" in text
        assert paths["component/inner.zjsc"] in text

    def test_depth_exceeded_on_deep_chain(self, site):
        root, write = site
        files = {}
        for i in range(5):
            files[f"f{i}.html"] = f'<zjs-component remote-src="f{i+1}.html"></zjs-component>'
        files["f5.html"] = "<p>bottom</p>"
        paths = build_site(write, files)
        assert flatten(paths["f0.html"], Resolver(), FlattenOptions(max_depth=6))
        with pytest.raises(DepthExceeded):
            flatten(paths["f0.html"], Resolver(), FlattenOptions(max_depth=3))

    def test_fetch_error_carries_chain(self, site):
        root, write = site
        paths = build_site(write, {
            "a.html": '<zjs-component remote-src="missing.html"></zjs-component>',
        })
        with pytest.raises(FetchError) as exc_info:
            flatten(paths["a.html"], Resolver())
        assert exc_info.value.chain == [paths["a.html"],
                                        str(root / "missing.html")]

    def test_idempotence_with_markers(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<zjs-component remote-src="content.html" display="inline">'
                          "</zjs-component><p>tail</p>",
            "content.html": '<h2>inc</h2><zjs-component remote-src="leaf.html"></zjs-component>',
            "leaf.html": "<b>leaf</b>",
        })
        first = serialize_fragment(flatten(paths["index.html"], Resolver()))
        second_entry = write("flattened.html", first)
        second = serialize_fragment(flatten(second_entry, Resolver()))
        assert second == first

    def test_completeness(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<div><zjs-component remote-src="a.html"></zjs-component></div>'
                          "<zjs-component></zjs-component>",
            "a.html": '<zjs-component remote-src="b.html"></zjs-component>',
            "b.html": "<p>done</p>",
        })
        doc = flatten(paths["index.html"], Resolver())
        for node in doc.walk():
            if node.kind == ELEMENT and node.tag == "zjs-component":
                assert not node.attrs.get("remote-src") or MARKER_ATTR in node.attrs

    def test_premarked_wrapper_not_reexpanded(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<zjs-component remote-src="c.html" data-zjs-from="/elsewhere">'
                          "<p>already expanded</p></zjs-component>",
            "c.html": "<b>fresh</b>",
        })
        doc = flatten(paths["index.html"], Resolver())
        text = serialize_fragment(doc)
        assert "already expanded" in text
        assert "fresh" not in text

    def test_no_markers_option(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<zjs-component remote-src="c.html"></zjs-component>',
            "c.html": "<b>x</b>",
        })
        doc = flatten(paths["index.html"], Resolver(),
                      FlattenOptions(keep_marker_attrs=False))
        assert MARKER_ATTR not in doc.nodes[0].attrs

    def test_strip_scripts_option(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": "<script>function top(){}</script>"
                          '<zjs-component remote-src="c.html"></zjs-component>',
            "c.html": "<script>function inner(){}</script><p>kept</p>",
        })
        doc = flatten(paths["index.html"], Resolver(),
                      FlattenOptions(keep_scripts=False))
        assert all(n.tag != "script" for n in doc.walk() if n.kind == ELEMENT)
        assert "kept" in serialize_fragment(doc)

    def test_unwrap_option(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<div><zjs-component remote-src="c.html"></zjs-component></div>',
            "c.html": "<b>x</b>",
        })
        doc = flatten(paths["index.html"], Resolver(),
                      FlattenOptions(keep_tags=False))
        assert serialize_fragment(doc) == "<div><b>x</b></div>"

    def test_max_depth_validation(self):
        with pytest.raises(ValueError):
            FlattenOptions(max_depth=0)


def reference_include_walk(entry: str, resolver: Resolver) -> set[tuple[str, str]]:
    """Oracle: recursive walk collecting (includer, included) pairs."""
    from zjsc.parser import COMPONENT_TAG
    from zjsc.resolver import canonicalize

    pairs: set[tuple[str, str]] = set()
    visited: set[str] = set()

    def visit(locator: str) -> None:
        if locator in visited:
            return
        visited.add(locator)
        try:
            text = resolver.resolve(locator).text
        except FetchError:
            return
        doc = parse_fragment(text, source=locator)
        for node in doc.walk():
            if (node.kind == ELEMENT and node.tag == COMPONENT_TAG
                    and node.attrs.get("remote-src")):
                target = canonicalize(locator, node.attrs["remote-src"])
                pairs.add((locator, target))
                visit(target)

    visit(entry)
    return pairs


class TestBuildGraph:
    def test_single_include(self, site):
        root, write = site
        paths = build_site(write, {
            "index.html": '<zjs-component remote-src="content.html"></zjs-component>',
            "content.html": "<h1>Welcome</h1>",
        })
        graph = build_graph(paths["index.html"], Resolver())
        assert graph.nodes == {paths["index.html"], paths["content.html"]}
        assert graph.edges == {(paths["index.html"], paths["content.html"])}
        assert graph.roots == (paths["index.html"],)

    def test_self_include(self, site):
        root, write = site
        paths = build_site(write, {
            "a.zjsc": '<zjs-component remote-src="a.zjsc"></zjs-component>',
        })
        graph = build_graph(paths["a.zjsc"], Resolver())
        assert graph.nodes == {paths["a.zjsc"]}
        assert graph.edges == {(paths["a.zjsc"], paths["a.zjsc"])}
        assert detect_cycles(graph) == [[paths["a.zjsc"]]]

    def test_cycles_do_not_abort_construction(self, site):
        root, write = site
        paths = build_site(write, {
            "a.zjsc": '<zjs-component remote-src="b.zjsc"></zjs-component>',
            "b.zjsc": '<zjs-component remote-src="a.zjsc"></zjs-component>',
        })
        graph = build_graph(paths["a.zjsc"], Resolver())
        assert len(graph.edges) == 2
        assert detect_cycles(graph) == [sorted([paths["a.zjsc"], paths["b.zjsc"]])]

    def test_unresolvable_node_annotated(self, site):
        root, write = site
        paths = build_site(write, {
            "a.html": '<zjs-component remote-src="gone.html"></zjs-component>',
        })
        graph = build_graph(paths["a.html"], Resolver())
        missing = str(root / "gone.html")
        assert missing in graph.nodes
        assert missing in graph.annotations
        assert "no such file" in graph.annotations[missing]

    def test_soundness_against_reference_walk(self, site):
        root, write = site
        rng = random.Random(5)
        count = 10
        files = {}
        for i in range(count):
            includes = "".join(
                f'<zjs-component remote-src="g{j}.html"></zjs-component>'
                for j in range(count) if rng.random() < 0.3)
            files[f"g{i}.html"] = f"<p>node {i}</p>" + includes
        paths = build_site(write, files)
        resolver = Resolver()
        graph = build_graph(paths["g0.html"], resolver)
        assert graph.edges == reference_include_walk(paths["g0.html"], Resolver())
