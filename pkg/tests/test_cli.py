from __future__ import annotations

import os
import subprocess
import sys

import pytest

PKG_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCENARIOS = os.path.join(PKG_ROOT, "conformance", "scenarios")


def zjsc(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "zjsc", *args],
                          capture_output=True, text=True, cwd=cwd or PKG_ROOT,
                          timeout=60)


def parse_dot(text: str) -> tuple[set[str], set[tuple[str, str]]]:
    """Strict re-parser for the emitted DOT subset (quoted IDs with
    backslash escapes, node and edge statements, // comments)."""
    import re

    quoted = r'"((?:[^"\\]|\\.)*)"'
    node_re = re.compile(rf"^\s*{quoted}(?:\s*\[[^\]]*\])?;$")
    edge_re = re.compile(rf"^\s*{quoted}\s*->\s*{quoted};$")

    def unescape(value: str) -> str:
        return value.replace('\\"', '"').replace("\\\\", "\\")

    lines = text.splitlines()
    assert lines[0] == "digraph fragments {"
    assert lines[-1] == "}"
    nodes: set[str] = set()
    edges: set[tuple[str, str]] = set()
    for line in lines[1:-1]:
        if not line.strip() or line.strip().startswith("//"):
            continue
        edge = edge_re.match(line)
        if edge:
            edges.add((unescape(edge.group(1)), unescape(edge.group(2))))
            continue
        node = node_re.match(line)
        assert node, f"unparseable DOT statement: {line!r}"
        nodes.add(unescape(node.group(1)))
    return nodes, edges


class TestValidate:
    def test_valid_component_lists_methods(self):
        proc = zjsc("validate", "conformance/fixtures/component/hello.zjsc")
        assert proc.returncode == 0
        assert "methods: updateName, onConnected" in proc.stdout

    def test_empty_file_is_valid(self, tmp_path):
        empty = tmp_path / "empty.zjsc"
        empty.write_text("")
        proc = zjsc("validate", str(empty))
        assert proc.returncode == 0
        assert "ok" in proc.stdout

    def test_missing_remote_src_warns_and_strict_fails(self, tmp_path):
        frag = tmp_path / "frag.zjsc"
        frag.write_text("<zjs-component></zjs-component>")
        proc = zjsc("validate", str(frag))
        assert proc.returncode == 0
        assert "missing-remote-src" in proc.stdout
        strict = zjsc("validate", "--strict", str(frag))
        assert strict.returncode == 1

    def test_nonexistent_file_is_env_error(self):
        proc = zjsc("validate", "/no/such/file.zjsc")
        assert proc.returncode == 2

    def test_deterministic_output(self, tmp_path):
        frag = tmp_path / "frag.zjsc"
        frag.write_text("<script>function a(){}</script><zjs-component></zjs-component>")
        first = zjsc("validate", str(frag))
        second = zjsc("validate", str(frag))
        assert first.stdout == second.stdout


class TestFlatten:
    def test_header_include(self, tmp_path):
        (tmp_path / "index.html").write_text(
            '<zjs-component remote-src="content.html"></zjs-component>')
        (tmp_path / "content.html").write_text("<h1>Welcome</h1>")
        out = tmp_path / "out.html"
        proc = zjsc("flatten", "index.html", "-o", str(out), cwd=str(tmp_path))
        assert proc.returncode == 0
        text = out.read_text()
        assert "<h1>Welcome</h1>" in text
        assert text.index("<zjs-component") < text.index("<h1>")

    def test_cycle_exits_1_with_chain(self):
        proc = zjsc("flatten", "conformance/fixtures/cycle-a.zjsc")
        assert proc.returncode == 1
        assert "cycle-a.zjsc -> " in proc.stderr
        assert "cycle-b.zjsc" in proc.stderr

    def test_no_scripts_strips_all_scripts(self, tmp_path):
        (tmp_path / "index.html").write_text(
            '<script>function x(){}</script>'
            '<zjs-component remote-src="c.html"></zjs-component>')
        (tmp_path / "c.html").write_text("<script>function y(){}</script><p>kept</p>")
        proc = zjsc("flatten", "index.html", "--no-scripts", cwd=str(tmp_path))
        assert proc.returncode == 0
        assert "<script" not in proc.stdout
        assert "kept" in proc.stdout

    def test_stdout_deterministic(self, tmp_path):
        (tmp_path / "index.html").write_text(
            '<zjs-component remote-src="c.html"></zjs-component>')
        (tmp_path / "c.html").write_text("<p>body</p>")
        runs = [zjsc("flatten", "index.html", cwd=str(tmp_path)).stdout
                for _ in range(2)]
        assert runs[0] == runs[1]

    def test_missing_entry_exits_1(self, tmp_path):
        proc = zjsc("flatten", "absent.html", cwd=str(tmp_path))
        assert proc.returncode == 1


class TestGraph:
    def test_single_include_edges(self, tmp_path):
        (tmp_path / "index.html").write_text(
            '<zjs-component remote-src="c.html"></zjs-component>')
        (tmp_path / "c.html").write_text("<p>x</p>")
        proc = zjsc("graph", "index.html", cwd=str(tmp_path))
        assert proc.returncode == 0
        lines = [l for l in proc.stdout.splitlines() if l.strip()]
        assert len(lines) == 1
        assert lines[0].endswith("c.html")
        assert " -> " in lines[0]

    def test_cycle_annotated(self):
        proc = zjsc("graph", "conformance/fixtures/cycle-a.zjsc")
        assert proc.returncode == 0
        cycle_lines = [l for l in proc.stdout.splitlines() if l.startswith("# cycle:")]
        assert len(cycle_lines) == 1
        assert "cycle-a.zjsc" in cycle_lines[0]

    def test_dot_output_parses(self, tmp_path):
        (tmp_path / "a.html").write_text(
            '<zjs-component remote-src="b.html"></zjs-component>'
            '<zjs-component remote-src="c.html"></zjs-component>')
        (tmp_path / "b.html").write_text(
            '<zjs-component remote-src="c.html"></zjs-component>')
        (tmp_path / "c.html").write_text("<p>leaf</p>")
        proc = zjsc("graph", "a.html", "--format", "dot", cwd=str(tmp_path))
        assert proc.returncode == 0
        pydot = pytest.importorskip("pydot")
        (graph,) = pydot.graph_from_dot_data(proc.stdout)
        edges = {(e.get_source().strip('"'), e.get_destination().strip('"'))
                 for e in graph.get_edges()}
        assert edges == {
            (str(tmp_path / "a.html"), str(tmp_path / "b.html")),
            (str(tmp_path / "a.html"), str(tmp_path / "c.html")),
            (str(tmp_path / "b.html"), str(tmp_path / "c.html")),
        }

    def test_dot_roundtrip_through_parser(self, tmp_path):
        (tmp_path / "a.html").write_text(
            '<zjs-component remote-src="b.html"></zjs-component>'
            '<zjs-component remote-src="c.html"></zjs-component>')
        (tmp_path / "b.html").write_text(
            '<zjs-component remote-src="c.html"></zjs-component>'
            '<zjs-component remote-src="a.html"></zjs-component>')
        (tmp_path / "c.html").write_text("<p>leaf</p>")
        proc = zjsc("graph", "a.html", "--format", "dot", cwd=str(tmp_path))
        nodes, edges = parse_dot(proc.stdout)
        expected = {str(tmp_path / n) for n in ("a.html", "b.html", "c.html")}
        assert nodes == expected
        assert edges == {
            (str(tmp_path / "a.html"), str(tmp_path / "b.html")),
            (str(tmp_path / "a.html"), str(tmp_path / "c.html")),
            (str(tmp_path / "b.html"), str(tmp_path / "c.html")),
            (str(tmp_path / "b.html"), str(tmp_path / "a.html")),
        }


class TestSimulate:
    def test_pass_exit_0(self):
        proc = zjsc("simulate", os.path.join(SCENARIOS, "static-include.json"))
        assert proc.returncode == 0
        assert proc.stdout.startswith("PASS")

    def test_fail_exit_1_with_diff(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("""{
  "fixtures_root": ".",
  "steps": [{"op": "insert", "label": "x", "remote_src": "f.html"}],
  "expect": [{"kind": "Connected"}, {"kind": "ScriptsEvaluated"}]
}""")
        (tmp_path / "f.html").write_text("<p>f</p>")
        proc = zjsc("simulate", str(bad))
        assert proc.returncode == 1
        assert proc.stdout.startswith("FAIL")
        assert "--- expected" in proc.stdout
        assert "+++ actual" in proc.stdout

    def test_malformed_scenario_exit_1(self, tmp_path):
        bad = tmp_path / "malformed.json"
        bad.write_text('{"steps": [{"op": "zap"}], "expect": []}')
        proc = zjsc("simulate", str(bad))
        assert proc.returncode == 1
