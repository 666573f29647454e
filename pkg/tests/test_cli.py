from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from importlib import resources

import pytest

from conftest import fixture_bytes
from tdac.cli import main
from tdac.server import AppServer

FIXDIR = resources.files("tdac") / "fixtures"


@pytest.fixture()
def workdir(tmp_path):
    for name in (
        "construction.tda.json", "construction.data.json",
        "construction.script.json", "construction.ext.json",
        "login.tda.json", "default.rules.json",
    ):
        (tmp_path / name).write_bytes(fixture_bytes(name))
    return tmp_path


def run(*argv) -> int:
    return main([str(a) for a in argv])


def test_validate_ok(workdir, capsys):
    assert run("validate", workdir / "construction.tda.json") == 0
    assert "ok" in capsys.readouterr().out


def test_validate_violations_exit_1(workdir, capsys):
    doc = json.loads((workdir / "construction.tda.json").read_text())
    del doc["root_task"]["children"][0]["children"][0]["aui_type"]
    bad = workdir / "bad.tda.json"
    bad.write_text(json.dumps(doc))
    assert run("validate", bad) == 1
    assert "LEAF_AUI_MISSING" in capsys.readouterr().err


def test_unreadable_input_exit_2(workdir, capsys):
    assert run("validate", workdir / "missing.tda.json") == 2
    garbled = workdir / "garbled.tda.json"
    garbled.write_text("{nope")
    assert run("validate", garbled) == 2


def test_compile_fixture_writes_three_files(workdir):
    out = workdir / "build"
    assert run(
        "compile", workdir / "construction.tda.json",
        "--data", workdir / "construction.data.json", "--out", out,
    ) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "construction_reports.cui.json",
        "construction_reports.sc.json",
        "construction_reports.trace.json",
    ]


def test_compile_invalid_model_exit_1(workdir, capsys):
    doc = json.loads((workdir / "construction.tda.json").read_text())
    doc["root_task"]["children"][0]["children"][0]["id"] = "open_project"
    bad = workdir / "dup.tda.json"
    bad.write_text(json.dumps(doc))
    assert run("compile", bad, "--out", workdir / "build") == 1
    assert "ID_DUP" in capsys.readouterr().err


def test_compile_idempotent(workdir):
    out = workdir / "build"
    args = (
        "compile", workdir / "construction.tda.json",
        "--data", workdir / "construction.data.json", "--out", out,
    )
    assert run(*args) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert run(*args) == 0
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second


def test_render_and_simulate_pipeline(workdir, capsys):
    build, app = workdir / "build", workdir / "app"
    run("compile", workdir / "construction.tda.json",
        "--data", workdir / "construction.data.json", "--out", build)
    assert run(
        "render", build, "--ext", workdir / "construction.ext.json",
        "--data", workdir / "construction.data.json", "--out", app,
    ) == 0
    assert (app / "index.html").exists()
    assert (app / "windows/w.select_project.html").exists()
    assert (app / "models/sc.json").exists()

    trace_path = workdir / "run.trace.ndjson"
    assert run(
        "simulate", build,
        "--data", workdir / "construction.data.json",
        "--script", workdir / "construction.script.json",
        "--tda", workdir / "construction.tda.json",
        "--out", trace_path,
    ) == 0
    lines = trace_path.read_text().splitlines()
    assert len(lines) == 5
    last = json.loads(lines[-1])
    assert last["outcome"] == {"result": "TRANSITIONED", "target": "final"}


def test_report_command(workdir, capsys):
    build = workdir / "build"
    run("compile", workdir / "construction.tda.json",
        "--data", workdir / "construction.data.json", "--out", build)
    usability = workdir / "construction.usability.json"
    assert run(
        "report", build / "construction_reports.trace.json", "--out", usability
    ) == 0
    out = capsys.readouterr().out
    assert "6 Consistency" in out
    payload = json.loads(usability.read_text())
    assert payload["criteria"]["6"]["positive"] >= 1  # the filter rule fired
    assert payload["criteria"]["2.1"]["negative"] >= 1


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

@pytest.fixture()
def served_app(workdir):
    build, app = workdir / "build", workdir / "app"
    run("compile", workdir / "construction.tda.json",
        "--data", workdir / "construction.data.json", "--out", build)
    run("render", build, "--data", workdir / "construction.data.json", "--out", app)
    server = AppServer(app, port=0, verbose=False)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()


def post(url, body: bytes, content_type="application/json"):
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": content_type}, method="POST"
    )
    try:
        with urllib.request.urlopen(request) as response:
            return response.status
    except urllib.error.HTTPError as err:
        return err.code


def test_serve_static_and_models(served_app):
    server, base = served_app
    with urllib.request.urlopen(base + "/") as response:
        assert response.status == 200
        assert b"Static window previews" in response.read()
    with urllib.request.urlopen(base + "/models/cui.json") as response:
        payload = json.loads(response.read())
        assert [w["id"] for w in payload["windows"]] == ["w.select_project", "w.project_details"]


def test_log_endpoint_appends_valid_entry(served_app):
    server, base = served_app
    entry = {
        "seq": 1, "ts": 0.0, "state": "s.select_project",
        "event": {"kind": "SELECT", "element": "e.pick_project", "payload": 0},
        "outcome": {"result": "RECORDED"}, "path": ["s.select_project"], "stack": [],
    }
    assert post(base + "/log", json.dumps(entry).encode()) == 204
    lines = server.log_path.read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["seq"] == 1


def test_log_endpoint_rejects_malformed(served_app):
    server, base = served_app
    assert post(base + "/log", b"{broken") == 400
    assert post(base + "/log", json.dumps({"seq": "one"}).encode()) == 400
    assert not server.log_path.exists()


def test_log_appends_never_interleave(served_app):
    server, base = served_app

    def spam(tag: int):
        for n in range(20):
            entry = {
                "seq": n, "ts": float(tag), "state": f"s.from{tag}",
                "event": None, "outcome": {"result": "RECORDED"},
            }
            assert post(base + "/log", json.dumps(entry).encode()) == 204

    threads = [threading.Thread(target=spam, args=(t,)) for t in range(5)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    lines = server.log_path.read_text().splitlines()
    assert len(lines) == 100
    for line in lines:
        json.loads(line)  # every line is complete and parseable
