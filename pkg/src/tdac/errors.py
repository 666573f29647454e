"""Exception hierarchy shared by every stage of the pipeline.

Naming note: the document/reference/structure split mirrors the three ways a
model file can be bad (unparseable bytes, dangling cross-reference, violated
shape invariant). Python's builtin SyntaxError/ReferenceError are deliberately
not reused.
"""

from __future__ import annotations


class TdacError(Exception):
    """Base class for all errors raised by this package."""


class ModelSyntaxError(TdacError):
    """The document bytes could not be parsed into the expected shape."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ModelReferenceError(TdacError):
    """A cross-reference (concept, attribute, element, state) does not resolve."""


class ModelStructureError(TdacError):
    """A structural invariant is violated; carries the offending element id."""

    def __init__(self, element_id: str, message: str):
        self.element_id = element_id
        super().__init__(f"{element_id}: {message}")


class InvalidModelError(TdacError):
    """Operation requires a valid model but validation reported violations."""

    def __init__(self, report) -> None:
        self.report = report
        super().__init__(f"model is invalid: {report.summary()}")


class DuplicateRuleError(TdacError):
    """A rule with the same id is already registered."""


class UnknownRuleError(TdacError):
    """A trace entry names a rule id that is not in the registry."""


class UnknownCriterionError(TdacError):
    """A rule annotation references a criterion code outside the catalog."""


class RuleConflictError(TdacError):
    """Two rules rewrote the same element with contradictory widgets."""

    def __init__(self, element_id: str, first_rule: str, second_rule: str):
        self.element_id = element_id
        self.first_rule = first_rule
        self.second_rule = second_rule
        super().__init__(
            f"rules {first_rule} and {second_rule} both rewrite element "
            f"{element_id} with contradictory widgets"
        )


class UnmappableTaskError(TdacError):
    """Interactor selection was asked for a task it cannot map."""


class NoInteractiveTasksError(TdacError):
    """The task model contains no interactive leaves; the UI would be empty."""


class UnknownWindowError(TdacError):
    """Rendering was asked for a window id that is not in the CUI model."""


class BadExtensionError(TdacError):
    """An extension patch targets a missing state/element or is malformed."""


class InvalidDataError(TdacError):
    """Instance data does not conform to the declared domain concepts."""


class AtFinalStateError(TdacError):
    """step() was called on a runtime that already reached a final state."""


class NotInCurrentWindowError(TdacError):
    """visible_items() was asked about an element outside the current window."""
