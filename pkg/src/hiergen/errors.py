"""Exception hierarchy shared across the toolkit.

Every error raised by hiergen derives from HierGenError so callers (and the
CLI exit-code mapping) can distinguish our failures from genuine bugs.
"""

from __future__ import annotations


class HierGenError(Exception):
    """Base class for all hiergen errors."""


# --- graph ------------------------------------------------------------------


class DuplicateIdConflict(HierGenError):
    """A node id already exists with a different payload."""


class UnknownNode(HierGenError):
    """An operation referenced a node id that is not in the graph."""


class CycleRejected(HierGenError):
    """Adding an edge (or applying a delta/correction) would create a cycle."""

    def __init__(self, parent: str, child: str, message: str | None = None):
        self.parent = parent
        self.child = child
        super().__init__(message or f"edge {parent!r} -> {child!r} would create a cycle")


# --- provider ---------------------------------------------------------------


class ProviderError(HierGenError):
    """Base class for completion-provider failures."""


class ContextOverflow(ProviderError):
    """The rendered request does not fit the provider's context budget."""

    def __init__(self, estimated: int, budget: int):
        self.estimated = estimated
        self.budget = budget
        super().__init__(f"estimated {estimated} tokens exceeds usable budget of {budget}")


class ProviderUnavailable(ProviderError):
    """The provider failed after exhausting all retries."""


class TruncatedOutput(ProviderError):
    """The provider stopped before completing its output."""


class UnparseableOutput(ProviderError):
    """No dictionary-shaped span could be extracted from the model output."""

    def __init__(self, message: str, raw_text: str = ""):
        self.raw_text = raw_text
        super().__init__(message)


class IllegalCategory(ProviderError):
    """A parsed value referenced a category outside the allowed set."""

    def __init__(self, label: str, category: str | None):
        self.label = label
        self.category = category
        if category is None:
            msg = f"empty category set for label {label!r}"
        else:
            msg = f"label {label!r} assigned to unknown category {category!r}"
        super().__init__(msg)


# --- ingest -----------------------------------------------------------------


class StaleDelta(HierGenError):
    """The graph changed since the delta was generated against it."""


class UnsupportedVersion(HierGenError):
    """A snapshot declares a format_version this build cannot read."""


class CorruptSnapshot(HierGenError):
    """Snapshot bytes failed checksum or structural verification."""


# --- stats ------------------------------------------------------------------


class ClassMismatch(HierGenError):
    """Before/after graphs do not share the node population for the class."""


class NoOutcomes(HierGenError):
    """A relevance summary was requested with no recorded outcomes."""


# --- cli --------------------------------------------------------------------


class ConfigError(HierGenError):
    """The pipeline configuration file or flags are invalid."""
