"""Exception hierarchy for the engine.

Every error raised by the library derives from VcaError so callers (CLI,
server) can map engine failures to exit codes / HTTP statuses in one place.
"""

from __future__ import annotations


class VcaError(Exception):
    """Base class for all engine errors."""


# data layer ---------------------------------------------------------------

class MalformedCsv(VcaError):
    pass


class AmbiguousMeasure(VcaError):
    pass


class UnknownTable(VcaError):
    pass


class UnknownAttribute(VcaError):
    pass


class NullValue(VcaError):
    """Null dimension or null measure in base data."""


# hierarchy ----------------------------------------------------------------

class CycleDetected(VcaError):
    pass


class NoPath(VcaError):
    pass


class FdViolated(VcaError):
    def __init__(self, fine_value, coarse_values, fine: str = "", coarse: str = ""):
        self.fine_value = fine_value
        self.coarse_values = sorted(map(repr, coarse_values))
        super().__init__(
            f"functional dependency {fine or '?'} -> {coarse or '?'} violated: "
            f"{fine_value!r} maps to {', '.join(self.coarse_values)}"
        )


# query layer ---------------------------------------------------------------

class SchemaMismatch(VcaError):
    pass


class QueryTypeError(VcaError):
    """Expression or predicate over incompatible datatypes."""


class NonCanonical(VcaError):
    """Query is not a group-by aggregation over an aggregation-free input."""


class UnknownAggregate(VcaError):
    pass


class UnsupportedConstruct(VcaError):
    pass


# composition ---------------------------------------------------------------

class UnsafeComposition(VcaError):
    def __init__(self, verdict, message: str = ""):
        self.verdict = verdict
        super().__init__(message or "; ".join(verdict.reasons) or "unsafe composition")


class UnknownOp(VcaError):
    pass


class NoFreeVisualAttr(VcaError):
    pass


class MemberError(VcaError):
    """A pairwise composition inside a viewset operation failed."""

    def __init__(self, index, error):
        self.index = index
        self.error = error
        super().__init__(f"viewset member {index}: {error}")


class NonCanonicalView(VcaError):
    """View's query cannot be decomposed for pre-aggregation composition."""


class PredicateTypeError(VcaError):
    pass


class NotAGroupingAttr(VcaError):
    pass


# model views ----------------------------------------------------------------

class NonQuantitativeFeature(VcaError):
    pass


class InsufficientRows(VcaError):
    def __init__(self, group):
        self.group = group
        super().__init__(f"too few rows to fit a model for group {group!r}")


class EmptyDomain(VcaError):
    pass


class NoFittedGroups(VcaError):
    pass


# DSL ------------------------------------------------------------------------

class VcaSyntaxError(VcaError):
    def __init__(self, message: str, line: int, col: int, expected: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at line {line}, column {col}{detail}")


class UnboundView(VcaError):
    pass
