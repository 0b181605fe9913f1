"""Scenario files: the declarative conformance contract.

A scenario is a JSON document executed against a fresh SimDocument (and,
for the browser runtime, against a live DOM by the frontend harness — the
schema is shared verbatim):

    {
      "fixtures_root": "fixtures",        // resolved against the scenario file
      "strict": false,
      "steps": [
        {"op": "insert", "label": "hello", "remote_src": "hello.zjsc",
         "attrs": {"greeting": "Hello"}, "display": "inline",
         "parent": "<label of an earlier insert, optional>"},
        {"op": "remove", "label": "hello"},
        {"op": "send", "target": {"selector": "#hello"} |
                                 {"label": "hello"} |
                                 {"element": "#some-node"},
         "method": "updateName", "args": ["Alice"]},
        {"op": "set-attribute", "label": "hello", "name": "name", "value": "Z"}
      ],
      "expect": [
        {"kind": "Connected", "instance": "hello", "detail": "hook:onConnected"},
        {"kind": "Dispatch", "method": "updateName"}
      ]
    }

Verdict is PASS iff the expected events appear in the trace in order
(subsequence match); with "strict": true every trace event must be matched
one-for-one. Steps that raise domain errors (failed fetch, unresolvable
target, missing method) record a DispatchError event and execution
continues, so scenarios can assert error behavior.
"""

from __future__ import annotations

import json
import os
import posixpath
from dataclasses import dataclass

from .errors import FetchError, ScenarioError, TargetError, ZjscError
from .parser import ComponentSpec
from .resolver import Resolver
from .selectors import query_first
from .simulator import (
    DISPATCH_ERROR,
    DispatchTarget,
    SimDocument,
    TraceEvent,
    insert_component,
    remove_component,
    send,
    set_attribute,
)

PASS = "PASS"
FAIL = "FAIL"

_OPS = ("insert", "remove", "send", "set-attribute")


@dataclass
class Scenario:
    fixtures_root: str
    strict: bool
    steps: list[dict]
    expect: list[dict]
    path: str = ""


@dataclass
class ScenarioResult:
    verdict: str
    trace: list[TraceEvent]
    expected: list[dict]
    labels: dict[str, int]
    failure: str = ""
    strict: bool = False

    @property
    def passed(self) -> bool:
        return self.verdict == PASS


def load_scenario(path: str) -> Scenario:
    with open(path, "rb") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(-1, f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(-1, "scenario must be a JSON object")
    steps = data.get("steps", [])
    expect = data.get("expect", [])
    if not isinstance(steps, list) or not isinstance(expect, list):
        raise ScenarioError(-1, "steps and expect must be lists")
    fixtures_root = data.get("fixtures_root", ".")
    base_dir = posixpath.dirname(os.path.abspath(path).replace("\\", "/"))
    root = posixpath.normpath(posixpath.join(base_dir, fixtures_root))
    return Scenario(
        fixtures_root=root,
        strict=bool(data.get("strict", False)),
        steps=steps,
        expect=expect,
        path=path,
    )


def _step_error(index: int, message: str) -> ScenarioError:
    return ScenarioError(index, message)


def _require(step: dict, key: str, index: int):
    if key not in step:
        raise _step_error(index, f"missing field {key!r}")
    return step[key]


class _Runner:
    def __init__(self, scenario: Scenario, resolver: Resolver):
        self.scenario = scenario
        self.resolver = resolver
        self.doc = SimDocument(base=scenario.fixtures_root.rstrip("/") + "/.")
        self.labels: dict[str, int] = {}

    def run(self) -> ScenarioResult:
        for index, step in enumerate(self.scenario.steps):
            self._run_step(index, step)
        return self._match()

    def _instance_for(self, label: str, index: int):
        if label not in self.labels:
            raise _step_error(index, f"unknown instance label {label!r}")
        return self.labels[label]

    def _run_step(self, index: int, step: dict) -> None:
        if not isinstance(step, dict):
            raise _step_error(index, "step must be an object")
        op = _require(step, "op", index)
        if op not in _OPS:
            raise _step_error(index, f"unknown op {op!r}")
        try:
            getattr(self, "_op_" + op.replace("-", "_"))(index, step)
        except (FetchError, TargetError) as exc:
            # already traced for fetch failures; trace target errors here so
            # scenarios can assert on them
            if isinstance(exc, TargetError):
                self.doc.emit(DISPATCH_ERROR, None,
                              reason=type(exc).__name__,
                              detail=str(exc))
        except ScenarioError:
            raise
        except ZjscError as exc:
            self.doc.emit(DISPATCH_ERROR, None,
                          reason=type(exc).__name__, detail=str(exc))

    def _op_insert(self, index: int, step: dict) -> None:
        remote_src = _require(step, "remote_src", index)
        attrs = step.get("attrs", {})
        if not isinstance(attrs, dict):
            raise _step_error(index, "attrs must be an object")
        parent = self.doc.root
        if step.get("parent"):
            parent_id = self._instance_for(step["parent"], index)
            parent = self.doc.instances[parent_id].node
        spec = ComponentSpec(
            remote_src=str(remote_src),
            attributes={str(k): str(v) for k, v in attrs.items()},
            display=step.get("display"),
            element_ref=0,
        )
        label = step.get("label")
        instance = insert_component(self.doc, parent, spec, self.resolver)
        if label:
            self.labels[str(label)] = instance.id

    def _op_remove(self, index: int, step: dict) -> None:
        label = _require(step, "label", index)
        remove_component(self.doc, self._instance_for(label, index))

    def _op_set_attribute(self, index: int, step: dict) -> None:
        label = _require(step, "label", index)
        name = _require(step, "name", index)
        value = _require(step, "value", index)
        set_attribute(self.doc, self._instance_for(label, index),
                      str(name), str(value), self.resolver)

    def _op_send(self, index: int, step: dict) -> None:
        raw = _require(step, "target", index)
        if not isinstance(raw, dict) or len(raw) != 1:
            raise _step_error(index, "target must have exactly one form")
        method = _require(step, "method", index)
        args = step.get("args", [])
        if not isinstance(args, list):
            raise _step_error(index, "args must be a list")
        if "selector" in raw:
            target = DispatchTarget.by_selector(str(raw["selector"]))
        elif "label" in raw:
            target = DispatchTarget.by_instance(
                self._instance_for(raw["label"], index))
        elif "element" in raw:
            node = query_first(self.doc.root, str(raw["element"]))
            if node is None:
                raise _step_error(
                    index, f"element selector {raw['element']!r} matched nothing")
            target = DispatchTarget.by_element(node)
        else:
            raise _step_error(index, f"unknown target form {list(raw)!r}")
        send(self.doc, target, str(method), [str(a) for a in args])

    def _pattern_matches(self, pattern: dict, event: TraceEvent) -> bool:
        if pattern.get("kind") != event.kind:
            return False
        if "instance" in pattern:
            expected = self.labels.get(str(pattern["instance"]))
            if expected is None or event.instance != expected:
                return False
        if "method" in pattern and event.method != pattern["method"]:
            return False
        if "detail" in pattern and event.detail != pattern["detail"]:
            return False
        return True

    def _match(self) -> ScenarioResult:
        trace = self.doc.trace
        expect = self.scenario.expect
        result = ScenarioResult(verdict=PASS, trace=trace, expected=expect,
                                labels=dict(self.labels),
                                strict=self.scenario.strict)
        if self.scenario.strict:
            if len(expect) != len(trace):
                result.verdict = FAIL
                result.failure = (f"strict: expected {len(expect)} events, "
                                  f"trace has {len(trace)}")
                return result
            for i, (pattern, event) in enumerate(zip(expect, trace)):
                if not self._pattern_matches(pattern, event):
                    result.verdict = FAIL
                    result.failure = f"strict: event {i} does not match"
                    return result
            return result
        pos = 0
        for pattern in expect:
            while pos < len(trace) and not self._pattern_matches(pattern, trace[pos]):
                pos += 1
            if pos == len(trace):
                result.verdict = FAIL
                result.failure = f"expected event not found in order: {pattern}"
                return result
            pos += 1
        return result


def run_scenario(scenario: Scenario | str, resolver: Resolver | None = None) -> ScenarioResult:
    """Execute a scenario (object or file path) and match its trace."""
    if isinstance(scenario, str):
        scenario = load_scenario(scenario)
    return _Runner(scenario, resolver or Resolver()).run()


def format_event(event: TraceEvent, labels: dict[str, int]) -> str:
    by_id = {v: k for k, v in labels.items()}
    who = by_id.get(event.instance, event.instance)
    parts = [f"{event.kind}", f"instance={who}"]
    if event.method is not None:
        parts.append(f"method={event.method}")
    if event.args:
        parts.append("args=" + ",".join(event.args))
    if event.detail:
        parts.append(f"detail={event.detail}")
    if event.reason:
        parts.append(f"reason={event.reason}")
    return " ".join(str(p) for p in parts)


def format_pattern(pattern: dict) -> str:
    parts = [str(pattern.get("kind"))]
    for key in ("instance", "method", "detail"):
        if key in pattern:
            parts.append(f"{key}={pattern[key]}")
    return " ".join(parts)
