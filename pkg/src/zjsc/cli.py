"""Command-line front end: validate, flatten, graph, simulate, serve.

Exit codes: 0 ok, 1 domain error (validation failure, cycle, failed
scenario), 2 environment error (I/O, bad encoding, busy port).
"""

from __future__ import annotations

import argparse
import difflib
import os
import sys

from .composer import FlattenOptions, build_graph, detect_cycles, flatten
from .errors import (
    CycleError,
    DepthExceeded,
    EncodingError,
    FetchError,
    LocatorError,
    ScenarioError,
    ZjscError,
)
from .parser import parse_fragment, serialize_fragment, extract_component_specs
from .resolver import Resolver, canonicalize
from .scanner import method_table
from .scenario import format_event, format_pattern, run_scenario

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_ENV = 2


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zjsc",
        description="Toolchain for zjs-component HTML fragments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="parse and scan fragment files")
    p_validate.add_argument("paths", nargs="+")
    p_validate.add_argument("--strict", action="store_true",
                            help="treat warnings as errors")

    p_flatten = sub.add_parser("flatten", help="flatten an include tree")
    p_flatten.add_argument("entry")
    p_flatten.add_argument("-o", "--output", default=None,
                           help="output file (default: stdout)")
    p_flatten.add_argument("--max-depth", type=int, default=32)
    p_flatten.add_argument("--no-scripts", action="store_true",
                           help="strip script elements from the output")
    p_flatten.add_argument("--no-markers", action="store_true",
                           help="omit data-zjs-from marker attributes")

    p_graph = sub.add_parser("graph", help="print the fragment dependency graph")
    p_graph.add_argument("entry")
    p_graph.add_argument("--format", choices=("edges", "dot"), default="edges")

    p_sim = sub.add_parser("simulate", help="run a conformance scenario")
    p_sim.add_argument("scenario")

    p_serve = sub.add_parser("serve", help="run the development server")
    p_serve.add_argument("root")
    p_serve.add_argument("--port", type=int, default=8337)
    p_serve.add_argument("--watch", action="store_true",
                         help="invalidate the cache when files change")
    return parser


def _entry_locator(entry: str) -> str:
    if entry.startswith(("http://", "https://")):
        return canonicalize(entry, entry)
    base = os.path.abspath(os.curdir).replace(os.sep, "/") + "/."
    return canonicalize(base, entry)


def cmd_validate(paths: list[str], strict: bool, out=sys.stdout) -> int:
    had_warning = False
    for path in paths:
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            print(f"{path}: error: {exc}", file=sys.stderr)
            return EXIT_ENV
        try:
            doc = parse_fragment(raw, source=path)
        except EncodingError as exc:
            print(f"{path}: error: {exc}", file=sys.stderr)
            return EXIT_ENV
        warnings = []
        extract_component_specs(doc, warnings=warnings)
        profile = method_table(doc)
        print(f"{path}: ok", file=out)
        if profile.methods:
            print("  methods: " + ", ".join(profile.methods), file=out)
        for warning in warnings:
            had_warning = True
            print(f"  warning: {warning.code} at byte {warning.offset}: "
                  f"{warning.message}", file=out)
        for warning in profile.warnings:
            had_warning = True
            print(f"  warning: {warning.code} at byte {warning.offset}: "
                  f"{warning.message}", file=out)
        for error in profile.errors:
            had_warning = True
            print(f"  warning: {error.code} at byte {error.offset}", file=out)
    if strict and had_warning:
        return EXIT_DOMAIN
    return EXIT_OK


def _print_chain_error(exc: ZjscError) -> None:
    chain = getattr(exc, "chain", None)
    print(f"error: {exc}", file=sys.stderr)
    if chain:
        print("  " + " -> ".join(chain), file=sys.stderr)


def cmd_flatten(entry: str, output: str | None, max_depth: int,
                no_scripts: bool, no_markers: bool) -> int:
    resolver = Resolver()
    opts = FlattenOptions(max_depth=max_depth,
                          keep_scripts=not no_scripts,
                          keep_marker_attrs=not no_markers)
    try:
        doc = flatten(_entry_locator(entry), resolver, opts)
    except (CycleError, DepthExceeded, FetchError, LocatorError) as exc:
        _print_chain_error(exc)
        return EXIT_DOMAIN
    text = serialize_fragment(doc)
    if output is None:
        sys.stdout.write(text)
    else:
        try:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ENV
    return EXIT_OK


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_graph(entry: str, fmt: str, resolver: Resolver | None = None) -> str:
    graph = build_graph(_entry_locator(entry), resolver or Resolver())
    cycles = detect_cycles(graph)
    lines = []
    if fmt == "dot":
        lines.append("digraph fragments {")
        for node in sorted(graph.nodes):
            label = f"  {_dot_quote(node)}"
            if node in graph.annotations:
                label += f" [color=red, tooltip={_dot_quote(graph.annotations[node])}]"
            lines.append(label + ";")
        for a, b in sorted(graph.edges):
            lines.append(f"  {_dot_quote(a)} -> {_dot_quote(b)};")
        for cycle in cycles:
            lines.append("  // cycle: " + " -> ".join(cycle + [cycle[0]]))
        lines.append("}")
    else:
        for a, b in sorted(graph.edges):
            lines.append(f"{a} -> {b}")
        for node in sorted(graph.nodes):
            if node in graph.annotations:
                lines.append(f"# unreachable: {node}: {graph.annotations[node]}")
        for cycle in cycles:
            lines.append("# cycle: " + " -> ".join(cycle + [cycle[0]]))
    return "\n".join(lines) + "\n"


def cmd_graph(entry: str, fmt: str) -> int:
    try:
        sys.stdout.write(render_graph(entry, fmt))
    except (FetchError, LocatorError) as exc:
        _print_chain_error(exc)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_simulate(scenario_path: str) -> int:
    try:
        result = run_scenario(scenario_path)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    if result.passed:
        print(f"PASS {scenario_path}")
        return EXIT_OK
    print(f"FAIL {scenario_path}: {result.failure}")
    expected = [format_pattern(p) for p in result.expected]
    actual = [format_event(e, result.labels) for e in result.trace]
    diff = difflib.unified_diff(expected, actual, fromfile="expected",
                                tofile="actual", lineterm="")
    for line in diff:
        print(line)
    return EXIT_DOMAIN


def cmd_serve(root: str, port: int, watch: bool) -> int:
    from .server import serve  # deferred: touches sockets

    if not os.path.isdir(root):
        print(f"error: {root} is not a directory", file=sys.stderr)
        return EXIT_ENV
    try:
        serve(root, port, watch=watch)
    except OSError as exc:
        print(f"error: cannot bind port {port}: {exc}", file=sys.stderr)
        return EXIT_ENV
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_arg_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.paths, args.strict)
    if args.command == "flatten":
        return cmd_flatten(args.entry, args.output, args.max_depth,
                           args.no_scripts, args.no_markers)
    if args.command == "graph":
        return cmd_graph(args.entry, args.format)
    if args.command == "simulate":
        return cmd_simulate(args.scenario)
    if args.command == "serve":
        return cmd_serve(args.root, args.port, args.watch)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
