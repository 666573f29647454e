"""Acceptance suite: one test per release criterion, exact tolerances.

Run with `pytest tests/test_acceptance.py -s` to see one PASS line per
criterion; any failure shows up as a normal pytest failure.
"""

from __future__ import annotations

import itertools
import random
import time

from modelgen import random_instance_data, random_script, random_tda
from oracles import expected_state_ids
from test_render import scan  # rendered-document scanner
from tdac.compiler import compile_model
from tdac.ir import (
    Widget,
    parse_cui,
    parse_sc,
    reachable_states,
    serialize_cui,
    serialize_sc,
)
from tdac.render import render_window
from tdac.rules import RuleRegistry, Stage, TransformationRule, default_registry, register_rule
from tdac.runtime import UserEventKind as K
from tdac.runtime import init_runtime, run_script, write_trace
from tdac.tda import parse_tda, serialize_tda
from tdac.usability import CriterionRef, criteria_catalog, tally_report


def ok(name: str) -> None:
    print(f"PASS  {name}")


def test_filter_rule_boundary(construction_tda):
    started = time.perf_counter()
    six = compile_model(construction_tda, options_counts={"Project": 6, "Report": 5})
    five = compile_model(construction_tda, options_counts={"Project": 5, "Report": 5})
    assert six.cui.element("e.pick_project").widget is Widget.FILTERED_LIST_VIEW
    assert five.cui.element("e.pick_project").widget is Widget.LIST_VIEW
    assert six.cui.element("e.list_reports").widget is Widget.LIST_VIEW  # 5 records
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    ok(f"filter-rule boundary: 6 -> FILTERED_LIST_VIEW, 5 -> LIST_VIEW ({elapsed * 1000:.0f} ms)")


def test_password_rule(login_tda):
    result = compile_model(login_tda)
    secret_elements = [
        e for e in result.cui.elements()
        if e.binding is not None and e.binding.attribute == "password"
    ]
    assert secret_elements and all(
        e.widget is Widget.PASSWORD_FIELD for e in secret_elements
    )
    rt = init_runtime(
        result.cui, result.sc, {"Account": []},
        concepts=login_tda.concepts, clock=lambda: 0.0,
    )
    from tdac.runtime import UserEvent

    rt.step(UserEvent(K.INPUT, "e.password", "swordfish"))
    blob = write_trace(rt).decode()
    assert "swordfish" not in blob and '"***"' in blob
    ok("password rule: SECRET input -> PASSWORD_FIELD, payload masked as ***")


def test_usability_tally_conservation():
    rounds = 100
    for seed in range(rounds):
        rng = random.Random(seed)
        model = random_tda(rng)
        registry = default_registry()
        codes = [c.code for c in criteria_catalog()]
        arity = {}
        for index in range(rng.randint(0, 4)):
            rule_id = f"X{index}"
            pos = tuple(CriterionRef(c, "") for c in rng.sample(codes, rng.randint(0, 3)))
            neg = tuple(CriterionRef(c, "") for c in rng.sample(codes, rng.randint(0, 3)))
            salt = rng.randint(0, 5)
            register_rule(
                registry,
                TransformationRule(
                    id=rule_id, name=rule_id, description="", stage=Stage.POST,
                    positive_criteria=pos, negative_criteria=neg,
                    applicability=lambda ctx, el, salt=salt: (len(el.id) + salt) % 3 == 0,
                    action=lambda ctx, el: el,
                ),
            )
            arity[rule_id] = (len(pos), len(neg))
        counts = {c.name: rng.randint(0, 9) for c in model.concepts}
        result = compile_model(model, registry, options_counts=counts)
        report = tally_report(result.trace, registry)

        applications: dict[str, int] = {}
        for entry in result.trace.entries:
            applications[entry.rule] = applications.get(entry.rule, 0) + 1
        expected_pos = sum(
            n * len(registry.rule(rule).positive_criteria) for rule, n in applications.items()
        )
        expected_neg = sum(
            n * len(registry.rule(rule).negative_criteria) for rule, n in applications.items()
        )
        assert sum(t.positive for t in report.tallies) == expected_pos
        assert sum(t.negative for t in report.tallies) == expected_neg
    ok(f"usability tally conservation over {rounds} random registries/models")


def test_statechart_oracle_agreement():
    rounds = 200
    started = time.perf_counter()
    for seed in range(rounds):
        rng = random.Random(1_000_000 + seed)
        model = random_tda(rng, max_interactive=8)
        result = compile_model(model)
        produced = reachable_states(result.sc)
        expected = expected_state_ids(model)
        assert produced == expected, (
            f"seed {seed}: chart {sorted(produced)} != oracle {sorted(expected)}"
        )
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    ok(f"state-chart oracle: {rounds}/{rounds} random trees agree ({elapsed:.1f} s)")


def test_runtime_loop_conformance(
    construction_compiled, construction_tda, construction_data, construction_script
):
    rt = init_runtime(
        construction_compiled.cui, construction_compiled.sc, construction_data,
        concepts=construction_tda.concepts, clock=lambda: 0.0,
    )
    rt, trace = run_script(rt, construction_script)
    assert rt.current_state == "final"
    assert sum(1 for e in trace if e.outcome.result == "REJECTED") == 0

    skipped = [e for e in construction_script if e.element != "e.pick_project"]
    rt2 = init_runtime(
        construction_compiled.cui, construction_compiled.sc, construction_data,
        concepts=construction_tda.concepts, clock=lambda: 0.0,
    )
    rt2, trace2 = run_script(rt2, skipped)
    guard_rejections = [
        e for e in trace2
        if e.outcome.result == "REJECTED" and e.outcome.reason == "guard has(Project) false"
    ]
    assert len(guard_rejections) == 1
    ok("runtime loop: happy path clean to FINAL; missing selection -> one has(Project) rejection")


def test_replay_determinism():
    rounds = 100
    for seed in range(rounds):
        rng = random.Random(2_000_000 + seed)
        model = random_tda(rng)
        data = random_instance_data(rng, model)
        result = compile_model(model, options_counts={k: len(v) for k, v in data.items()})
        script = random_script(rng, result.cui, rng.randint(0, 30))

        def run_once():
            counter = itertools.count()
            rt = init_runtime(
                result.cui, result.sc, data, concepts=model.concepts,
                clock=lambda: float(next(counter)),
            )
            rt, _ = run_script(rt, script)
            return write_trace(rt)

        assert run_once() == run_once(), f"seed {seed} trace bytes differ"
    ok(f"replay determinism over {rounds} random scripts (≤30 events)")


def test_round_trips():
    rounds = 100
    for seed in range(rounds):
        rng = random.Random(3_000_000 + seed)
        model = random_tda(rng)
        blob = serialize_tda(model)
        assert parse_tda(blob) == model, f"seed {seed}: TDA round trip"

        result = compile_model(model)
        cui_blob, sc_blob = serialize_cui(result.cui), serialize_sc(result.sc)
        assert parse_cui(cui_blob) == result.cui, f"seed {seed}: CUI round trip"
        assert parse_sc(sc_blob) == result.sc, f"seed {seed}: chart round trip"
    ok(f"serialize/parse identity over {rounds} random models for TDA, CUI and chart")


def test_renderer_bijection(construction_compiled, login_compiled):
    checked = 0
    compiled = [construction_compiled, login_compiled]
    for seed in range(20):
        rng = random.Random(4_000_000 + seed)
        compiled.append(compile_model(random_tda(rng)))
    for result in compiled:
        for window in result.cui.windows:
            document = scan(render_window(result.cui, window.id))
            assert document.balanced
            assert sorted(document.cui_ids) == sorted(e.id for e in window.elements())
            checked += 1
    ok(f"renderer bijection holds for {checked} rendered windows")
