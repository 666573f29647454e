"""Regenerate the frontend conformance fixtures from the bundled models.

Run from the repo root:  python3 frontend/scripts/gen_fixtures.py
tests/test_frontend_fixtures.py fails when the committed copies drift.
"""

from __future__ import annotations

import itertools
import pathlib
from importlib import resources

from tdac.compiler import compile_model
from tdac.ir import serialize_cui, serialize_sc
from tdac.jsonio import canonical_dumps
from tdac.runtime import init_runtime, parse_instance_data, parse_script, run_script, write_trace
from tdac.tda import parse_tda

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def generate() -> dict[str, bytes]:
    fixtures = resources.files("tdac") / "fixtures"
    tda = parse_tda((fixtures / "construction.tda.json").read_bytes())
    data = parse_instance_data((fixtures / "construction.data.json").read_bytes())
    script_bytes = (fixtures / "construction.script.json").read_bytes()
    events = parse_script(script_bytes)
    result = compile_model(tda, options_counts={k: len(v) for k, v in data.items()})

    counter = itertools.count()
    runtime = init_runtime(
        result.cui, result.sc, data, concepts=tda.concepts,
        clock=lambda: float(next(counter)),
    )
    runtime, _ = run_script(runtime, events)

    # the unhappy variant: same script without the selection event
    skipped = [e for e in events if e.element != "e.pick_project"]
    counter = itertools.count()
    runtime2 = init_runtime(
        result.cui, result.sc, data, concepts=tda.concepts,
        clock=lambda: float(next(counter)),
    )
    runtime2, _ = run_script(runtime2, skipped)

    ext = (fixtures / "construction.ext.json").read_bytes()
    return {
        "cui.json": serialize_cui(result.cui),
        "sc.json": serialize_sc(result.sc),
        "data.json": canonical_dumps(data),
        "extensions.json": ext,
        "script.json": script_bytes,
        "expected.trace.ndjson": write_trace(runtime),
        "expected_noselect.trace.ndjson": write_trace(runtime2),
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, blob in generate().items():
        (OUT / name).write_bytes(blob)
        print(f"wrote {OUT / name}")


if __name__ == "__main__":
    main()
