from __future__ import annotations

import html.parser
import json
import random
from pathlib import Path

import pytest

from modelgen import random_tda
from tdac.compiler import compile_model
from tdac.errors import BadExtensionError, UnknownWindowError
from tdac.ir import CuiElement, CuiModel, Widget, Window
from tdac.render import ExtensionManifest, parse_extensions, render_app, render_window
from conftest import fixture_bytes


class DocScan(html.parser.HTMLParser):
    """Collects rendered carrier ids and a tag balance check."""

    def __init__(self) -> None:
        super().__init__()
        self.cui_ids: list[str] = []
        self.stack: list[str] = []
        self.balanced = True
        self.tags: list[tuple[str, dict]] = []

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        self.tags.append((tag, attrs))
        if "data-cui-id" in attrs:
            self.cui_ids.append(attrs["data-cui-id"])
        if tag not in ("br", "hr", "img", "input", "link", "meta"):
            self.stack.append(tag)

    def handle_endtag(self, tag):
        if not self.stack or self.stack.pop() != tag:
            self.balanced = False


def scan(blob: bytes) -> DocScan:
    parser = DocScan()
    parser.feed(blob.decode("utf-8"))
    parser.close()
    return parser


def single_button_cui() -> CuiModel:
    return CuiModel(
        windows=(
            Window(
                id="w.a", title="A",
                children=(CuiElement(id="e.go", widget=Widget.BUTTON, label="Go & <run>", origin_task="a"),),
            ),
        )
    )


def test_single_button_window():
    blob = render_window(single_button_cui(), "w.a")
    doc = scan(blob)
    assert doc.balanced
    buttons = [(t, a) for t, a in doc.tags if t == "button"]
    assert len(buttons) == 1
    assert buttons[0][1]["data-cui-id"] == "e.go"
    assert buttons[0][1]["data-origin-task"] == "a"
    assert "Go &amp; &lt;run&gt;" in blob.decode()


def test_unknown_window_rejected():
    with pytest.raises(UnknownWindowError):
        render_window(single_button_cui(), "w.ghost")


def test_filtered_list_has_adjacent_filter_input(construction_compiled):
    blob = render_window(construction_compiled.cui, "w.select_project")
    doc = scan(blob)
    filters = [(t, a) for t, a in doc.tags if a.get("data-filter-for") == "e.pick_project"]
    assert len(filters) == 1
    assert filters[0][0] == "input" and filters[0][1]["type"] == "search"
    # the filter input is auxiliary markup, not a carrier
    assert doc.cui_ids.count("e.pick_project") == 1


def test_password_field_renders_masked(login_compiled):
    blob = render_window(login_compiled.cui, "w.sign_in")
    doc = scan(blob)
    password_inputs = [a for t, a in doc.tags if t == "input" and a.get("type") == "password"]
    assert len(password_inputs) == 1


def test_extension_add_class_applies(construction_compiled):
    manifest = parse_extensions(fixture_bytes("construction.ext.json"))
    blob = render_window(
        construction_compiled.cui, "w.project_details", manifest, construction_compiled.sc
    )
    doc = scan(blob)
    summary = next(a for t, a in doc.tags if a.get("data-cui-id") == "e.project_summary")
    assert "highlight" in summary["class"].split()
    save = next(a for t, a in doc.tags if a.get("data-cui-id") == "e.save_report")
    assert save["data-accent"] == "primary"


def test_extension_insert_static(construction_compiled):
    manifest = parse_extensions(fixture_bytes("construction.ext.json"))
    blob = render_window(
        construction_compiled.cui, "w.select_project", manifest, construction_compiled.sc
    )
    assert b'<footer class="hint">' in blob
    assert scan(blob).balanced


def test_extension_locality(construction_compiled, tmp_path):
    manifest = parse_extensions(fixture_bytes("construction.ext.json"))
    with_ext = tmp_path / "with_ext"
    without = tmp_path / "without"
    render_app(construction_compiled.cui, construction_compiled.sc, manifest, with_ext)
    render_app(construction_compiled.cui, construction_compiled.sc, None, without)
    # patches target only s.project_details and s.select_project windows
    a = (with_ext / "windows/w.project_details.html").read_bytes()
    b = (without / "windows/w.project_details.html").read_bytes()
    assert a != b
    assert (with_ext / "index.html").read_bytes() == (without / "index.html").read_bytes()


def test_dangling_extension_rejected(construction_compiled, tmp_path):
    manifest = ExtensionManifest(
        patches={"s.ghost": (parse_extensions(fixture_bytes("construction.ext.json")).patches["s.project_details"])}
    )
    with pytest.raises(BadExtensionError):
        render_app(construction_compiled.cui, construction_compiled.sc, manifest, tmp_path / "x")


def test_render_app_file_set(construction_compiled, construction_data, tmp_path):
    out = tmp_path / "made" / "deeper"  # missing directories get created
    written = render_app(
        construction_compiled.cui, construction_compiled.sc, None, out,
        data=construction_data,
    )
    window_files = [w for w in written if w.startswith("windows/")]
    model_files = [w for w in written if w.startswith("models/")]
    assert len(window_files) == 2
    assert len(model_files) == 4
    assert (out / "index.html").exists()
    assert json.loads((out / "models/data.json").read_text())["Project"]


def test_render_app_deterministic(construction_compiled, tmp_path):
    first = tmp_path / "one"
    second = tmp_path / "two"
    render_app(construction_compiled.cui, construction_compiled.sc, None, first)
    render_app(construction_compiled.cui, construction_compiled.sc, None, second)
    for path in sorted(first.rglob("*")):
        if path.is_file():
            twin = second / path.relative_to(first)
            assert path.read_bytes() == twin.read_bytes()


def test_bijection_rendered_ids_equal_element_ids():
    rng = random.Random(11)
    for _ in range(12):
        model = random_tda(rng)
        result = compile_model(model)
        for window in result.cui.windows:
            blob = render_window(result.cui, window.id)
            doc = scan(blob)
            assert doc.balanced
            assert sorted(doc.cui_ids) == sorted(e.id for e in window.elements())
