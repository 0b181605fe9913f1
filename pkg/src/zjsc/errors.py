"""Exception types and diagnostic records shared across the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


class ZjscError(Exception):
    """Base class for every toolchain error."""


class EncodingError(ZjscError):
    """Input bytes are not valid UTF-8."""


class LocatorError(ZjscError):
    """A locator reference could not be canonicalized.

    Raised for unsupported schemes, empty references, non-absolute bases,
    and sandbox escapes when a root is enforced.
    """


class FetchError(ZjscError):
    """A fragment could not be loaded.

    `kind` is one of the NOT_FOUND / IO / HTTP_STATUS / TIMEOUT constants.
    `chain` carries the inclusion chain when the failure happened during
    composition (empty for direct resolves). Failed loads are never cached.
    """

    NOT_FOUND = "not-found"
    IO = "io"
    HTTP_STATUS = "http-status"
    TIMEOUT = "timeout"

    def __init__(self, kind: str, locator: str, message: str = "",
                 status: int | None = None, chain: list[str] | None = None):
        self.kind = kind
        self.locator = locator
        self.status = status
        self.chain = list(chain or [])
        detail = message or kind
        if status is not None:
            detail = f"{detail} (status {status})"
        super().__init__(f"{locator}: {detail}")

    def with_chain(self, chain: list[str]) -> "FetchError":
        self.chain = list(chain)
        return self


class CycleError(ZjscError):
    """An include chain visits a fragment that is already being included.

    `chain` lists the locators in inclusion order, first and last equal,
    e.g. [a, b, a] for a -> b -> a.
    """

    def __init__(self, chain: list[str]):
        self.chain = list(chain)
        super().__init__("include cycle: " + " -> ".join(self.chain))


class DepthExceeded(ZjscError):
    """Include nesting went past FlattenOptions.max_depth."""

    def __init__(self, max_depth: int, chain: list[str]):
        self.max_depth = max_depth
        self.chain = list(chain)
        super().__init__(
            f"include depth exceeded {max_depth}: " + " -> ".join(self.chain))


class TargetError(ZjscError):
    """Base class for dispatch-target resolution failures."""


class TargetNotFound(TargetError):
    """Selector matched nothing, or the instance id is not live."""


class NotAComponent(TargetError):
    """Selector's first document-order match is not a component node."""


class NoAncestorComponent(TargetError):
    """Element form used on a node with no component ancestor-or-self."""


class UnknownInstance(ZjscError):
    """Operation referenced an instance id that is not live."""


class InvalidState(ZjscError):
    """Operation ran against an instance outside its required state."""


class SelectorError(ZjscError):
    """Selector string does not parse under the supported subset."""


class ScenarioError(ZjscError):
    """A scenario file step is malformed. Carries the offending step index."""

    def __init__(self, step_index: int, message: str):
        self.step_index = step_index
        super().__init__(f"step {step_index}: {message}")


@dataclass(frozen=True)
class ValidationWarning:
    """Non-fatal finding reported by validation passes.

    Codes: "missing-remote-src", "duplicate-method".
    `offset` is a byte offset into the source fragment.
    """

    code: str
    message: str
    offset: int


@dataclass(frozen=True)
class ScanError:
    """Non-fatal script-scan failure record (not an exception).

    Codes: "unterminated-string", "unterminated-comment".
    `offset` is the byte offset of the offending token opener.
    """

    code: str
    offset: int
