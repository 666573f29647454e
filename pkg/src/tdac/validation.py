"""Violation records and the report type returned by every validator."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Violation:
    """One violated invariant.

    code is a stable machine-readable id (e.g. TASK_OP_MISSING), element is
    the id of the offending model element, message explains the problem.
    """

    code: str
    element: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.element}: {self.message}"


@dataclass(frozen=True, slots=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def by_code(self, code: str) -> list[Violation]:
        return [v for v in self.violations if v.code == code]

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)
