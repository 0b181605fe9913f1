"""Headless, script-free model of component lifecycle and dispatch.

A SimDocument hosts a minimal mutable tree. Inserting a component fetches
and parses its fragment, records that scripts would be evaluated (the
method table comes from the lexical scanner; nothing is executed), then
connects it. Nested components inside a fetched fragment are instantiated
depth-first in document order, so children connect before their parent;
removal disconnects the removed subtree's instances in reversed document
order (descendants before ancestors). Every observable step lands in an
append-only trace ordered by a monotone sequence number.

send() resolves its target three ways, mirroring the runtime contract:
a selector string (first document-order match, which must be a component),
a live instance id (identity), or any tree node (nearest ancestor-or-self
component).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    CycleError,
    FetchError,
    InvalidState,
    NoAncestorComponent,
    NotAComponent,
    TargetNotFound,
    UnknownInstance,
)
from .parser import (
    COMPONENT_TAG,
    ELEMENT,
    ComponentSpec,
    FragmentDocument,
    Node,
    component_spec_of,
    parse_fragment,
)
from .resolver import Resolver, canonicalize
from .scanner import ScriptProfile, method_table
from .selectors import parse_selector, matches

# trace event kinds
FRAGMENT_FETCHED = "FragmentFetched"
SCRIPTS_EVALUATED = "ScriptsEvaluated"
CONNECTED = "Connected"
DISCONNECTED = "Disconnected"
DISPATCH = "Dispatch"
DISPATCH_ERROR = "DispatchError"

# instance states
CREATED = "created"
LOADED = "loaded"
STATE_CONNECTED = "connected"
STATE_DISCONNECTED = "disconnected"


@dataclass(eq=False)
class SimNode:
    """Mutable document node with a parent pointer."""

    kind: str
    tag: str = ""
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["SimNode"] = field(default_factory=list)
    content: str = ""
    parent: "SimNode | None" = field(default=None, repr=False)
    instance_id: int | None = None

    def append(self, child: "SimNode") -> "SimNode":
        child.parent = self
        self.children.append(child)
        return child

    def detach(self) -> None:
        if self.parent is not None:
            self.parent.children.remove(self)
            self.parent = None

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


def from_parsed(node: Node) -> SimNode:
    sim = SimNode(kind=node.kind, tag=node.tag, attrs=dict(node.attrs),
                  content=node.content)
    for child in node.children:
        sim.append(from_parsed(child))
    return sim


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    instance: int | None
    detail: str = ""
    method: str | None = None
    args: tuple[str, ...] = ()
    reason: str | None = None


@dataclass
class ComponentInstance:
    id: int
    spec: ComponentSpec
    node: SimNode
    profile: ScriptProfile | None = None
    state: str = CREATED

    @property
    def attributes(self) -> dict[str, str]:
        """Live attribute map (the component node's attributes)."""
        return self.node.attrs

    @property
    def methods(self) -> tuple[str, ...]:
        return self.profile.methods if self.profile else ()


@dataclass
class DispatchTarget:
    """Exactly one of selector / instance / element is populated."""

    selector: str | None = None
    instance: int | None = None
    element: SimNode | None = None

    def __post_init__(self):
        populated = sum(x is not None for x in
                        (self.selector, self.instance, self.element))
        if populated != 1:
            raise ValueError("exactly one target form must be populated")

    @classmethod
    def by_selector(cls, selector: str) -> "DispatchTarget":
        return cls(selector=selector)

    @classmethod
    def by_instance(cls, instance_id: int) -> "DispatchTarget":
        return cls(instance=instance_id)

    @classmethod
    def by_element(cls, element: SimNode) -> "DispatchTarget":
        return cls(element=element)


class SimDocument:
    """Host tree + live-instance registry + append-only trace."""

    def __init__(self, base: str = "/"):
        self.root = SimNode(kind=ELEMENT, tag="#document")
        self.base = base
        self.instances: dict[int, ComponentInstance] = {}
        self.trace: list[TraceEvent] = []
        self._seq = itertools.count()
        self._ids = itertools.count(1)

    def emit(self, kind: str, instance: int | None, detail: str = "",
             method: str | None = None, args: tuple[str, ...] = (),
             reason: str | None = None) -> TraceEvent:
        event = TraceEvent(seq=next(self._seq), kind=kind, instance=instance,
                           detail=detail, method=method, args=tuple(args),
                           reason=reason)
        self.trace.append(event)
        return event


def _component_nodes(node: SimNode) -> list[SimNode]:
    return [n for n in node.walk()
            if n.kind == ELEMENT and n.instance_id is not None]


def insert_component(doc: SimDocument, parent: SimNode, spec: ComponentSpec,
                     resolver: Resolver) -> ComponentInstance:
    """Create, load, and connect a component under `parent`.

    Emits FragmentFetched, ScriptsEvaluated, then Connected; nested
    components in the fetched fragment connect first (depth-first,
    document order). On fetch failure the node stays attached in state
    Created, a DispatchError trace entry records it, and the FetchError
    propagates. Include cycles raise CycleError rather than recursing
    forever.
    """
    node = SimNode(kind=ELEMENT, tag=COMPONENT_TAG)
    node.attrs["remote-src"] = spec.remote_src
    node.attrs.update(spec.attributes)
    if spec.display is not None:
        node.attrs["display"] = spec.display
    parent.append(node)
    return _activate(doc, node, resolver, chain=())


def _merge_display_style(node: SimNode) -> None:
    display = node.attrs.get("display")
    if not display:
        return
    style = node.attrs.get("style", "")
    if f"display:{display}" in style:
        return
    if style and not style.rstrip().endswith(";"):
        style += ";"
    node.attrs["style"] = style + f"display:{display}"


def _activate(doc: SimDocument, node: SimNode, resolver: Resolver,
              chain: tuple[str, ...],
              instance: ComponentInstance | None = None) -> ComponentInstance:
    spec = ComponentSpec(
        remote_src=node.attrs.get("remote-src", ""),
        attributes={k: v for k, v in node.attrs.items()
                    if k not in ("remote-src", "display")},
        display=node.attrs.get("display"),
        element_ref=0,
    )
    if instance is None:
        instance = ComponentInstance(id=next(doc._ids), spec=spec, node=node)
        node.instance_id = instance.id
        doc.instances[instance.id] = instance
    else:
        instance.spec = spec
        instance.profile = None
        instance.state = CREATED

    locator = canonicalize(doc.base, spec.remote_src)
    if locator in chain:
        raise CycleError(list(chain[chain.index(locator):]) + [locator])
    try:
        source = resolver.resolve(locator)
    except FetchError as exc:
        doc.emit(DISPATCH_ERROR, instance.id,
                 detail=spec.remote_src, reason=f"fetch-failed: {exc}")
        raise
    doc.emit(FRAGMENT_FETCHED, instance.id, detail=spec.remote_src)

    fragment = parse_fragment(source.text, source=locator)
    for parsed in fragment.nodes:
        node.append(from_parsed(parsed))
    _merge_display_style(node)

    instance.profile = method_table(fragment)
    instance.state = LOADED
    doc.emit(SCRIPTS_EVALUATED, instance.id,
             detail=",".join(instance.profile.methods))

    for child in list(node.walk()):
        if (child is not node and child.kind == ELEMENT
                and child.tag == COMPONENT_TAG and child.instance_id is None
                and child.attrs.get("remote-src")):
            _activate(doc, child, resolver, chain + (locator,))

    instance.state = STATE_CONNECTED
    detail = "hook:onConnected" if instance.profile.has_on_connected else ""
    doc.emit(CONNECTED, instance.id, detail=detail)
    return instance


def _disconnect_instance(doc: SimDocument, instance: ComponentInstance) -> None:
    detail = ""
    if instance.profile is not None and instance.profile.has_on_disconnected:
        detail = "hook:onDisconnected"
    instance.state = STATE_DISCONNECTED
    doc.emit(DISCONNECTED, instance.id, detail=detail)
    del doc.instances[instance.id]
    instance.node.instance_id = None


def _teardown_subtree(doc: SimDocument, node: SimNode) -> None:
    """Disconnect every live instance under (and including) `node`,
    descendants before ancestors (reversed document order)."""
    for comp in reversed(_component_nodes(node)):
        instance = doc.instances.get(comp.instance_id)
        if instance is not None and instance.state == STATE_CONNECTED:
            _disconnect_instance(doc, instance)


def remove_component(doc: SimDocument, instance_id: int) -> None:
    """Detach a Connected instance; nested instances disconnect first."""
    instance = doc.instances.get(instance_id)
    if instance is None:
        raise UnknownInstance(f"instance {instance_id} is not live")
    if instance.state != STATE_CONNECTED:
        raise InvalidState(
            f"instance {instance_id} is {instance.state}, not connected")
    node = instance.node
    _teardown_subtree(doc, node)
    node.detach()


def resolve_target(doc: SimDocument, target: DispatchTarget) -> ComponentInstance:
    """Resolve a dispatch target to a live component instance.

    Selector form: first document-order match, which must itself be a
    component node. Instance form: identity. Element form: nearest
    ancestor-or-self component node.
    """
    if target.selector is not None:
        compounds = parse_selector(target.selector)
        for node in doc.root.walk():
            if node is doc.root or not matches(node, compounds):
                continue
            if node.instance_id is None:
                raise NotAComponent(
                    f"selector {target.selector!r} matched <{node.tag}>, "
                    "which is not a component")
            return doc.instances[node.instance_id]
        raise TargetNotFound(f"selector {target.selector!r} matched nothing")
    if target.instance is not None:
        instance = doc.instances.get(target.instance)
        if instance is None:
            raise TargetNotFound(f"instance {target.instance} is not live")
        return instance
    node = target.element
    while node is not None:
        if node.instance_id is not None:
            return doc.instances[node.instance_id]
        node = node.parent
    raise NoAncestorComponent("element has no component ancestor")


def send(doc: SimDocument, target: DispatchTarget, method: str,
         args: list[str] | tuple[str, ...] = ()) -> TraceEvent:
    """Record a method dispatch; the tree is never mutated.

    Returns the Dispatch event, or the DispatchError event when the
    resolved instance does not declare `method`. Target-resolution
    failures raise as in resolve_target.
    """
    instance = resolve_target(doc, target)
    if method in instance.methods:
        return doc.emit(DISPATCH, instance.id, method=method,
                        args=tuple(args),
                        detail=f"dispatch:{method}")
    return doc.emit(DISPATCH_ERROR, instance.id, method=method,
                    args=tuple(args),
                    reason=f"method-not-found: {method}",
                    detail=f"method-not-found:{method}")


def set_attribute(doc: SimDocument, instance_id: int, name: str,
                  value: str, resolver: Resolver) -> None:
    """Mutate a live attribute. Changing `remote-src` closes the current
    episode (Disconnected) and runs a fresh load/connect episode; other
    attributes mutate in place with no re-fetch."""
    instance = doc.instances.get(instance_id)
    if instance is None:
        raise UnknownInstance(f"instance {instance_id} is not live")
    old = instance.node.attrs.get(name)
    instance.node.attrs[name] = value
    if name != "remote-src" or old == value:
        return
    node = instance.node
    if instance.state != STATE_CONNECTED:
        return
    for child in list(node.children):
        _teardown_subtree(doc, child)
    # close this episode but keep the instance (and its id) registered
    detail = ""
    if instance.profile is not None and instance.profile.has_on_disconnected:
        detail = "hook:onDisconnected"
    instance.state = STATE_DISCONNECTED
    doc.emit(DISCONNECTED, instance.id, detail=detail)
    for child in list(node.children):
        child.detach()
    _activate(doc, node, resolver, chain=(), instance=instance)
