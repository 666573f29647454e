"""The committed frontend conformance fixtures must match fresh pipeline output."""

from __future__ import annotations

import pathlib
import sys

FRONTEND = pathlib.Path(__file__).resolve().parent.parent / "frontend"


def test_frontend_fixtures_in_sync():
    sys.path.insert(0, str(FRONTEND / "scripts"))
    try:
        from gen_fixtures import OUT, generate
    finally:
        sys.path.pop(0)
    for name, blob in generate().items():
        committed = (OUT / name).read_bytes()
        assert committed == blob, f"frontend/tests/fixtures/{name} is stale; rerun gen_fixtures.py"
