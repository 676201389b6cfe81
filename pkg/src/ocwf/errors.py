"""Exception types shared across the package."""

from __future__ import annotations


class OcwfError(Exception):
    """Base class for all errors raised by this package."""


class NetDefinitionError(OcwfError):
    """A net value could not be constructed (bad ids, weights or references)."""


class DomainError(OcwfError):
    """An operation was applied outside its domain (e.g. multiset difference)."""


class NotFoundError(OcwfError):
    """A referenced node or object type does not exist in the net."""


class NotEnabledError(OcwfError):
    """A firing was requested for a transition that is not enabled."""

    def __init__(self, transition: str, mode=None, step: int | None = None, reason: str = ""):
        self.transition = transition
        self.mode = mode
        self.step = step
        detail = f"transition {transition!r} is not enabled"
        if mode is not None and getattr(mode, "amounts", ()):
            detail += f" with mode {mode}"
        if step is not None:
            detail += f" (script step {step})"
        if reason:
            detail += f": {reason}"
        super().__init__(detail)


class NotWorkflowError(OcwfError):
    """The net does not satisfy the workflow-net shape conditions."""

    def __init__(self, reason: str, node: str | None = None):
        self.reason = reason
        self.node = node
        super().__init__(reason if node is None else f"{reason}: {node!r}")


class PreconditionError(OcwfError):
    """A documented precondition of an operation was violated."""


class ConflictError(OcwfError):
    """A name or type clash prevents the requested construction."""


class AmbiguousLabelError(OcwfError):
    """A visible activity label occurs on more than one transition."""

    def __init__(self, label: str, net_side: str = ""):
        self.label = label
        where = f" in {net_side}" if net_side else ""
        super().__init__(f"visible label {label!r} occurs on more than one transition{where}")


class SearchLimitError(OcwfError):
    """An exact analysis exceeded its internal safety cap."""
