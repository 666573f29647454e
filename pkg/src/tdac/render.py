"""Render CUI windows to static HTML and assemble the runnable app directory.

Each widget has a fixed markup template. Every element renders exactly one
carrier tag with data-cui-id/data-origin-task/data-widget attributes, so the
document can be parsed back into the element set it came from. Per-state
manual extensions (declarative patches) are applied after templating.
"""

from __future__ import annotations

import html
import html.parser
from dataclasses import dataclass, field

from .errors import BadExtensionError, InvalidModelError, ModelSyntaxError, UnknownWindowError
from .ir import CuiElement, CuiModel, StateChart, StateKind, Widget, validate_ir
from .jsonio import atomic_write, canonical_dumps, loads_document

# ---------------------------------------------------------------------------
# Minimal HTML tree (keeps patches structural, not string surgery)
# ---------------------------------------------------------------------------

VOID_TAGS = frozenset({"br", "hr", "img", "input", "link", "meta"})


@dataclass(slots=True)
class HtmlNode:
    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list = field(default_factory=list)  # HtmlNode | str | RawHtml

    def append(self, child) -> HtmlNode:
        self.children.append(child)
        return self

    def find(self, attr: str, value: str) -> HtmlNode | None:
        if self.attrs.get(attr) == value:
            return self
        for child in self.children:
            if isinstance(child, HtmlNode):
                found = child.find(attr, value)
                if found is not None:
                    return found
        return None

    def render(self) -> str:
        parts = [f"<{self.tag}"]
        for name, value in self.attrs.items():
            parts.append(f' {name}="{html.escape(str(value), quote=True)}"')
        if self.tag in VOID_TAGS:
            parts.append(">")
            return "".join(parts)
        parts.append(">")
        for child in self.children:
            if isinstance(child, HtmlNode):
                parts.append(child.render())
            elif isinstance(child, RawHtml):
                parts.append(child.markup)
            else:
                parts.append(html.escape(str(child)))
        parts.append(f"</{self.tag}>")
        return "".join(parts)


@dataclass(frozen=True, slots=True)
class RawHtml:
    markup: str


class _FragmentChecker(html.parser.HTMLParser):
    """Tag-balance check for extension markup fragments."""

    def __init__(self) -> None:
        super().__init__()
        self.stack: list[str] = []
        self.balanced = True

    def handle_starttag(self, tag, attrs):
        if tag not in VOID_TAGS:
            self.stack.append(tag)

    def handle_endtag(self, tag):
        if not self.stack or self.stack.pop() != tag:
            self.balanced = False


def fragment_is_balanced(markup: str) -> bool:
    checker = _FragmentChecker()
    checker.feed(markup)
    checker.close()
    return checker.balanced and not checker.stack


# ---------------------------------------------------------------------------
# Extension manifest (.ext.json)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Patch:
    op: str  # SET_ATTRIBUTE | ADD_CLASS | INSERT_STATIC
    element: str | None = None
    name: str | None = None
    value: str | None = None
    css_class: str | None = None
    position: str | None = None  # TOP | BOTTOM
    markup: str | None = None


@dataclass(frozen=True, slots=True)
class ExtensionManifest:
    patches: dict[str, tuple[Patch, ...]]  # state id -> patches

    @staticmethod
    def empty() -> ExtensionManifest:
        return ExtensionManifest(patches={})


def parse_extensions(document: bytes | str) -> ExtensionManifest:
    payload = loads_document(document)
    if not isinstance(payload, dict) or not isinstance(payload.get("states", {}), dict):
        raise ModelSyntaxError("extension manifest must be {'states': {state id: [patches]}}")
    out: dict[str, tuple[Patch, ...]] = {}
    for state_id, raw_patches in payload.get("states", {}).items():
        patches = []
        for raw in raw_patches:
            op = raw.get("op")
            if op == "SET_ATTRIBUTE":
                patch = Patch(op=op, element=raw.get("element"), name=raw.get("name"), value=raw.get("value"))
                if not patch.element or not patch.name:
                    raise ModelSyntaxError("SET_ATTRIBUTE needs 'element' and 'name'")
            elif op == "ADD_CLASS":
                patch = Patch(op=op, element=raw.get("element"), css_class=raw.get("class"))
                if not patch.element or not patch.css_class:
                    raise ModelSyntaxError("ADD_CLASS needs 'element' and 'class'")
            elif op == "INSERT_STATIC":
                patch = Patch(op=op, position=raw.get("position", "BOTTOM"), markup=raw.get("markup", ""))
                if patch.position not in ("TOP", "BOTTOM"):
                    raise ModelSyntaxError("INSERT_STATIC position must be TOP or BOTTOM")
                if not fragment_is_balanced(patch.markup):
                    raise ModelSyntaxError("INSERT_STATIC markup is not balanced")
            else:
                raise ModelSyntaxError(f"unknown patch op {op!r}")
            patches.append(patch)
        out[state_id] = tuple(patches)
    return ExtensionManifest(patches=out)


def serialize_extensions(manifest: ExtensionManifest) -> bytes:
    states: dict = {}
    for state_id, patches in manifest.patches.items():
        rows = []
        for p in patches:
            if p.op == "SET_ATTRIBUTE":
                rows.append({"op": p.op, "element": p.element, "name": p.name, "value": p.value})
            elif p.op == "ADD_CLASS":
                rows.append({"op": p.op, "element": p.element, "class": p.css_class})
            else:
                rows.append({"op": p.op, "position": p.position, "markup": p.markup})
        states[state_id] = rows
    return canonical_dumps({"states": states})


def validate_extensions(
    manifest: ExtensionManifest, cui: CuiModel, sc: StateChart
) -> list[str]:
    """Dangling targets, as messages; empty means the manifest applies cleanly."""
    problems = []
    state_ids = {s.id for s in sc.states}
    element_ids = {e.id for e in cui.elements()}
    for state_id, patches in manifest.patches.items():
        if state_id not in state_ids:
            problems.append(f"extension targets unknown state {state_id!r}")
        for patch in patches:
            if patch.element is not None and patch.element not in element_ids:
                problems.append(f"extension targets unknown element {patch.element!r}")
    return problems


# ---------------------------------------------------------------------------
# Widget templates
# ---------------------------------------------------------------------------

def _carrier(element: CuiElement, tag: str, css: str) -> HtmlNode:
    node = HtmlNode(tag)
    if css:
        node.attrs["class"] = css
    node.attrs["data-cui-id"] = element.id
    node.attrs["data-origin-task"] = element.origin_task
    node.attrs["data-widget"] = element.widget.value
    return node


def _labelled_input(element: CuiElement, input_type: str) -> HtmlNode:
    node = _carrier(element, "div", "field")
    input_id = f"in.{element.id}"
    node.append(HtmlNode("label", {"for": input_id}, [element.label]))
    node.append(HtmlNode("input", {"type": input_type, "id": input_id}))
    return node


def render_element(element: CuiElement) -> HtmlNode:
    widget = element.widget
    if widget is Widget.TEXT_FIELD:
        return _labelled_input(element, "text")
    if widget is Widget.PASSWORD_FIELD:
        return _labelled_input(element, "password")
    if widget is Widget.CHECKBOX:
        return _labelled_input(element, "checkbox")
    if widget is Widget.DATE_PICKER:
        return _labelled_input(element, "date")
    if widget is Widget.TEXT_OUTPUT:
        node = _carrier(element, "div", "field output")
        node.append(HtmlNode("span", {"class": "label"}, [element.label]))
        node.append(HtmlNode("output"))
        return node
    if widget is Widget.BUTTON:
        node = _carrier(element, "button", "")
        node.attrs["type"] = "button"
        node.append(element.label)
        return node
    if widget is Widget.RADIO_GROUP:
        node = _carrier(element, "fieldset", "radio-group")
        node.append(HtmlNode("legend", {}, [element.label]))
        return node
    if widget is Widget.COMBO_BOX:
        node = _carrier(element, "div", "field")
        select_id = f"in.{element.id}"
        node.append(HtmlNode("label", {"for": select_id}, [element.label]))
        node.append(HtmlNode("select", {"id": select_id}))
        return node
    if widget in (Widget.LIST_VIEW, Widget.FILTERED_LIST_VIEW):
        node = _carrier(element, "section", "list")
        node.append(HtmlNode("h2", {"class": "label"}, [element.label]))
        if widget is Widget.FILTERED_LIST_VIEW:
            node.append(
                HtmlNode(
                    "input",
                    {"type": "search", "class": "list-filter", "placeholder": "Filter",
                     "data-filter-for": element.id},
                )
            )
        node.append(HtmlNode("ul", {"class": "items"}))
        return node
    if widget is Widget.GROUP:
        node = _carrier(element, "fieldset", "group")
        node.append(HtmlNode("legend", {}, [element.label]))
        for child in element.children:
            node.append(render_element(child))
        return node
    # BREADCRUMB: trail is runtime content
    node = _carrier(element, "nav", "breadcrumb")
    node.attrs["aria-label"] = element.label
    node.append(HtmlNode("ol"))
    return node


def _apply_patches(main: HtmlNode, patches: tuple[Patch, ...], window_id: str) -> None:
    for patch in patches:
        if patch.op == "INSERT_STATIC":
            raw = RawHtml(patch.markup or "")
            if patch.position == "TOP":
                main.children.insert(0, raw)
            else:
                main.children.append(raw)
            continue
        target = main.find("data-cui-id", patch.element)
        if target is None:
            raise BadExtensionError(
                f"patch targets element {patch.element!r} outside window {window_id!r}"
            )
        if patch.op == "SET_ATTRIBUTE":
            target.attrs[patch.name] = patch.value if patch.value is not None else ""
        else:  # ADD_CLASS
            existing = target.attrs.get("class", "")
            classes = existing.split()
            if patch.css_class not in classes:
                classes.append(patch.css_class)
            target.attrs["class"] = " ".join(classes)


def render_window(
    cui: CuiModel,
    window_id: str,
    extensions: ExtensionManifest | None = None,
    sc: StateChart | None = None,
) -> bytes:
    """One standalone HTML document for the window, patches applied.

    Extensions are keyed by state id; sc maps states to windows, so it is
    required whenever a non-empty manifest is given.
    """
    window = cui.window(window_id)
    if window is None:
        raise UnknownWindowError(f"no window {window_id!r} in the CUI model")

    main = HtmlNode("main", {"data-window-id": window.id})
    main.append(HtmlNode("h1", {}, [window.title]))
    for element in window.children:
        main.append(render_element(element))

    if extensions is not None and extensions.patches:
        if sc is None:
            raise BadExtensionError("state-keyed extensions need the state chart")
        for state in sc.states:
            if state.kind is StateKind.WINDOW and state.window_ref == window_id:
                patches = extensions.patches.get(state.id)
                if patches:
                    _apply_patches(main, patches, window_id)

    doc = HtmlNode("html", {"lang": "en"})
    head = HtmlNode("head")
    head.append(HtmlNode("meta", {"charset": "utf-8"}))
    head.append(HtmlNode("title", {}, [window.title]))
    doc.append(head)
    doc.append(HtmlNode("body").append(main))
    return ("<!DOCTYPE html>\n" + doc.render() + "\n").encode("utf-8")


def render_index(cui: CuiModel) -> bytes:
    doc = HtmlNode("html", {"lang": "en"})
    head = HtmlNode("head")
    head.append(HtmlNode("meta", {"charset": "utf-8"}))
    head.append(HtmlNode("title", {}, ["Generated application"]))
    head.append(HtmlNode("script", {"type": "module", "src": "./app/main.js"}))
    doc.append(head)
    body = HtmlNode("body")
    body.append(HtmlNode("div", {"id": "app"}, ["Loading models…"]))
    body.append(HtmlNode("div", {"id": "error-panel", "hidden": "hidden"}))
    nav = HtmlNode("nav", {"id": "static-windows"})
    nav.append(HtmlNode("h2", {}, ["Static window previews"]))
    links = HtmlNode("ul")
    for window in cui.windows:
        links.append(
            HtmlNode("li").append(HtmlNode("a", {"href": f"./windows/{window.id}.html"}, [window.title]))
        )
    nav.append(links)
    body.append(nav)
    doc.append(body)
    return ("<!DOCTYPE html>\n" + doc.render() + "\n").encode("utf-8")


def render_app(
    cui: CuiModel,
    sc: StateChart,
    extensions: ExtensionManifest | None,
    out_dir,
    data: dict | None = None,
) -> list[str]:
    """Write the full app layout; returns the relative paths written.

    Layout: index.html, windows/<id>.html, models/{cui,sc,data,extensions}.json.
    All writes are atomic and byte-deterministic.
    """
    from pathlib import Path

    from .ir import serialize_cui, serialize_sc

    report = validate_ir(cui, sc)
    if not report.ok:
        raise InvalidModelError(report)
    manifest = extensions or ExtensionManifest.empty()
    problems = validate_extensions(manifest, cui, sc)
    if problems:
        raise BadExtensionError("; ".join(problems))

    out = Path(out_dir)
    written: list[str] = []

    def emit(rel: str, blob: bytes) -> None:
        atomic_write(out / rel, blob)
        written.append(rel)

    emit("index.html", render_index(cui))
    for window in cui.windows:
        emit(f"windows/{window.id}.html", render_window(cui, window.id, manifest, sc))
    emit("models/cui.json", serialize_cui(cui))
    emit("models/sc.json", serialize_sc(sc))
    emit("models/data.json", canonical_dumps(data or {}))
    emit("models/extensions.json", serialize_extensions(manifest))
    return written
