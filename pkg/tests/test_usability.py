from __future__ import annotations

import json
import random

import pytest

from tdac.compiler import CompilationTrace, TraceEntry, compile_model
from tdac.errors import UnknownRuleError
from tdac.rules import RuleRegistry, Stage, TransformationRule, default_registry, register_rule, registry_from_manifest
from tdac.usability import CriterionRef, criteria_catalog, criterion, render_report, tally_report


def entry(rule_id, target="e.x"):
    return TraceEntry(rule=rule_id, target=target, stage=Stage.POST)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def test_catalog_lookup():
    assert criterion("6").name == "Consistency"
    assert criterion("5.3").name == "Error correction"
    assert criterion("9") is None


def test_catalog_is_closed_and_sorted_by_render():
    codes = [c.code for c in criteria_catalog()]
    assert codes == ["1", "2", "2.1", "3", "4", "5", "5.1", "5.3", "6", "7", "8"]


# ---------------------------------------------------------------------------
# tally_report
# ---------------------------------------------------------------------------

def test_single_filter_application_tally():
    registry = default_registry()
    report = tally_report(CompilationTrace((entry("R1"),)), registry)
    assert report.tally("6").positive == 1  # Consistency
    assert report.tally("2.1").negative == 1  # Brevity
    assert report.tally("2.1").positive == 0


def test_empty_trace_all_zero():
    report = tally_report(CompilationTrace(()), default_registry())
    assert all(t.positive == 0 and t.negative == 0 for t in report.tallies)


def test_two_applications_count_twice():
    registry = default_registry()
    report = tally_report(CompilationTrace((entry("R1", "e.a"), entry("R1", "e.b"))), registry)
    assert report.tally("6").positive == 2
    assert set(report.tally("6").elements) == {"e.a", "e.b"}


def test_password_rule_annotations():
    report = tally_report(CompilationTrace((entry("R2"),)), default_registry())
    assert report.tally("6").positive == 1
    assert report.tally("8").positive == 1
    for code in ("5", "5.1", "5.3"):
        assert report.tally(code).negative == 1


def test_unknown_rule_rejected():
    with pytest.raises(UnknownRuleError):
        tally_report(CompilationTrace((entry("nope"),)), default_registry())


def test_conservation_over_random_registries():
    rng = random.Random(5)
    codes = [c.code for c in criteria_catalog()]
    for round_no in range(30):
        registry = RuleRegistry()
        arity = {}
        for index in range(rng.randint(1, 6)):
            rule_id = f"RR{index}"
            pos = tuple(CriterionRef(c, "") for c in rng.sample(codes, rng.randint(0, 3)))
            neg = tuple(CriterionRef(c, "") for c in rng.sample(codes, rng.randint(0, 3)))
            register_rule(
                registry,
                TransformationRule(
                    id=rule_id, name=rule_id, description="", stage=Stage.POST,
                    positive_criteria=pos, negative_criteria=neg,
                ),
            )
            arity[rule_id] = (len(pos), len(neg))
        applications = [
            entry(rng.choice(list(arity)), f"e.{n}") for n in range(rng.randint(0, 20))
        ]
        report = tally_report(CompilationTrace(tuple(applications)), registry)
        counts = {}
        for e in applications:
            counts[e.rule] = counts.get(e.rule, 0) + 1
        expected_pos = sum(counts.get(r, 0) * arity[r][0] for r in arity)
        expected_neg = sum(counts.get(r, 0) * arity[r][1] for r in arity)
        assert sum(t.positive for t in report.tallies) == expected_pos
        assert sum(t.negative for t in report.tallies) == expected_neg


# ---------------------------------------------------------------------------
# render_report
# ---------------------------------------------------------------------------

def test_render_zero_report():
    text, blob = render_report(tally_report(CompilationTrace(()), default_registry()))
    for line in text.splitlines()[1:]:
        assert line.endswith("0  0")
    payload = json.loads(blob)
    assert set(payload["criteria"]) == {c.code for c in criteria_catalog()}


def test_render_fixture_touches_only_enabled_rule_criteria(login_tda):
    result = compile_model(login_tda)
    registry = default_registry()
    report = tally_report(result.trace, registry)
    _, blob = render_report(report)
    payload = json.loads(blob)
    touched = {
        code for code, row in payload["criteria"].items()
        if row["positive"] or row["negative"]
    }
    enabled_criteria = set()
    for rule in registry.rules:
        if rule.stage != Stage.POST or registry.enabled(rule.id):
            enabled_criteria.update(c.code for c in rule.positive_criteria)
            enabled_criteria.update(c.code for c in rule.negative_criteria)
    assert touched <= enabled_criteria


def test_disabled_breadcrumb_leaves_guidance_untouched(login_tda):
    registry = registry_from_manifest(b'{"rules": [{"id": "R3", "enabled": false}]}')
    result = compile_model(login_tda, registry)
    report = tally_report(result.trace, registry)
    assert report.tally("1").positive == 0 and report.tally("1").negative == 0


def test_render_deterministic(login_tda):
    result = compile_model(login_tda)
    first = render_report(tally_report(result.trace, default_registry()))
    second = render_report(tally_report(result.trace, default_registry()))
    assert first == second
