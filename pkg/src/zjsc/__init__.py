"""Toolchain and conformance engine for zjs-component HTML fragments."""

from .composer import (
    MARKER_ATTR,
    DependencyGraph,
    FlattenOptions,
    build_graph,
    detect_cycles,
    flatten,
)
from .errors import (
    CycleError,
    DepthExceeded,
    EncodingError,
    FetchError,
    LocatorError,
    NoAncestorComponent,
    NotAComponent,
    ScanError,
    ScenarioError,
    SelectorError,
    TargetError,
    TargetNotFound,
    UnknownInstance,
    ValidationWarning,
    ZjscError,
)
from .parser import (
    COMPONENT_TAG,
    ComponentSpec,
    FragmentDocument,
    Node,
    extract_component_specs,
    parse_fragment,
    serialize_fragment,
)
from .resolver import FragmentSource, Resolver, ResolverStats, canonicalize
from .scanner import ScriptProfile, method_table, scan_script
from .scenario import Scenario, ScenarioResult, load_scenario, run_scenario
from .simulator import (
    ComponentInstance,
    DispatchTarget,
    SimDocument,
    SimNode,
    TraceEvent,
    insert_component,
    remove_component,
    resolve_target,
    send,
    set_attribute,
)

__version__ = "0.1.0"
