"""Ergonomic criteria catalog and the usability report for a compilation.

Every transformation rule is annotated with the criteria it helps or hurts.
The report is a raw tally of those annotations over the compilation trace:
one application of a rule counts once for each of its annotations. No
weighting or scoring is applied on top of the counts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownRuleError
from .jsonio import canonical_dumps


@dataclass(frozen=True, slots=True)
class CriterionRef:
    code: str  # dotted numeric, e.g. "2.1"
    name: str


# The closed eight-criterion taxonomy, with the sub-criteria the built-in
# rules annotate. Codes outside this catalog are rejected at registration.
CRITERIA: tuple[CriterionRef, ...] = (
    CriterionRef("1", "Guidance"),
    CriterionRef("2", "Workload"),
    CriterionRef("2.1", "Brevity"),
    CriterionRef("3", "Explicit control"),
    CriterionRef("4", "Adaptability"),
    CriterionRef("5", "Error management"),
    CriterionRef("5.1", "Error protection"),
    CriterionRef("5.3", "Error correction"),
    CriterionRef("6", "Consistency"),
    CriterionRef("7", "Significance of codes"),
    CriterionRef("8", "Compatibility"),
)

_BY_CODE = {c.code: c for c in CRITERIA}


def criteria_catalog() -> tuple[CriterionRef, ...]:
    return CRITERIA


def criterion(code: str) -> CriterionRef | None:
    return _BY_CODE.get(code)


def _code_sort_key(code: str) -> tuple[int, ...]:
    return tuple(int(part) for part in code.split("."))


@dataclass(frozen=True, slots=True)
class CriterionTally:
    code: str
    name: str
    positive: int = 0
    negative: int = 0
    rules: tuple[str, ...] = ()
    elements: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class UsabilityReport:
    tallies: tuple[CriterionTally, ...] = ()

    def tally(self, code: str) -> CriterionTally | None:
        for t in self.tallies:
            if t.code == code:
                return t
        return None


def tally_report(trace, registry) -> UsabilityReport:
    """Join the compilation trace with the registry's criteria annotations.

    Each trace entry for rule r adds +1 to every positive criterion of r and
    +1 to the negative count of every negative criterion of r.
    """
    positive: dict[str, int] = {}
    negative: dict[str, int] = {}
    rules_hit: dict[str, list[str]] = {}
    elements_hit: dict[str, list[str]] = {}

    def record(code: str, rule_id: str, target: str) -> None:
        rules = rules_hit.setdefault(code, [])
        if rule_id not in rules:
            rules.append(rule_id)
        elements = elements_hit.setdefault(code, [])
        if target not in elements:
            elements.append(target)

    for entry in trace.entries:
        rule = registry.rule(entry.rule)
        if rule is None:
            raise UnknownRuleError(f"trace names unregistered rule {entry.rule!r}")
        for ref in rule.positive_criteria:
            positive[ref.code] = positive.get(ref.code, 0) + 1
            record(ref.code, rule.id, entry.target)
        for ref in rule.negative_criteria:
            negative[ref.code] = negative.get(ref.code, 0) + 1
            record(ref.code, rule.id, entry.target)

    tallies = tuple(
        CriterionTally(
            code=ref.code,
            name=ref.name,
            positive=positive.get(ref.code, 0),
            negative=negative.get(ref.code, 0),
            rules=tuple(rules_hit.get(ref.code, ())),
            elements=tuple(elements_hit.get(ref.code, ())),
        )
        for ref in sorted(CRITERIA, key=lambda c: _code_sort_key(c.code))
    )
    return UsabilityReport(tallies)


def render_report(report: UsabilityReport) -> tuple[str, bytes]:
    """Human-readable table plus the machine document (.usability.json)."""
    width = max(len(f"{t.code} {t.name}") for t in report.tallies)
    lines = [f"{'criterion'.ljust(width)}  +  -"]
    for t in report.tallies:
        label = f"{t.code} {t.name}".ljust(width)
        lines.append(f"{label}  {t.positive}  {t.negative}")
    text = "\n".join(lines) + "\n"

    payload = {
        "criteria": {
            t.code: {
                "name": t.name,
                "positive": t.positive,
                "negative": t.negative,
                "rules": list(t.rules),
                "elements": list(t.elements),
            }
            for t in report.tallies
        }
    }
    return text, canonical_dumps(payload)
