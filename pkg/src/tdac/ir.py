"""Executable intermediate models: the concrete UI and the navigation state chart.

The two models are coupled by reference: WINDOW states point at CUI windows,
transition triggers point at CUI elements, and both sides carry origin_task
ids back into the source task model. Files: .cui.json and .sc.json; ids are
derived deterministically from task ids so recompiles of an unchanged input
are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidModelError, ModelSyntaxError
from .jsonio import canonical_dumps, loads_document
from .tda import ConceptLink, Datatype, LinkRole, TdaModel
from .validation import ValidationReport, Violation


class Widget(Enum):
    TEXT_FIELD = "TEXT_FIELD"
    PASSWORD_FIELD = "PASSWORD_FIELD"
    TEXT_OUTPUT = "TEXT_OUTPUT"
    BUTTON = "BUTTON"
    RADIO_GROUP = "RADIO_GROUP"
    COMBO_BOX = "COMBO_BOX"
    LIST_VIEW = "LIST_VIEW"
    FILTERED_LIST_VIEW = "FILTERED_LIST_VIEW"
    CHECKBOX = "CHECKBOX"
    DATE_PICKER = "DATE_PICKER"
    GROUP = "GROUP"
    BREADCRUMB = "BREADCRUMB"


SELECTION_WIDGETS = frozenset(
    {Widget.RADIO_GROUP, Widget.COMBO_BOX, Widget.LIST_VIEW, Widget.FILTERED_LIST_VIEW}
)
INPUT_WIDGETS = frozenset(
    {Widget.TEXT_FIELD, Widget.PASSWORD_FIELD, Widget.CHECKBOX, Widget.DATE_PICKER}
)


class StateKind(Enum):
    WINDOW = "WINDOW"
    SYSTEM = "SYSTEM"
    USER = "USER"
    FINAL = "FINAL"


class EventKind(Enum):
    """Event kinds a transition trigger can match."""

    ACTIVATE = "ACTIVATE"
    SELECT = "SELECT"
    SUBMIT = "SUBMIT"


class GuardOp(Enum):
    HAS = "HAS"
    EQUALS = "EQUALS"


@dataclass(frozen=True, slots=True)
class Binding:
    concept: str
    role: LinkRole
    attribute: str | None = None


@dataclass(frozen=True, slots=True)
class CuiElement:
    id: str
    widget: Widget
    label: str
    origin_task: str
    binding: Binding | None = None
    applied_rules: tuple[str, ...] = ()
    children: tuple[CuiElement, ...] = ()


@dataclass(frozen=True, slots=True)
class Window:
    id: str
    title: str
    children: tuple[CuiElement, ...] = ()

    def elements(self) -> list[CuiElement]:
        """All elements of this window, GROUP contents included, in order."""
        out: list[CuiElement] = []

        def walk(element: CuiElement) -> None:
            out.append(element)
            for child in element.children:
                walk(child)

        for child in self.children:
            walk(child)
        return out


@dataclass(frozen=True, slots=True)
class CuiModel:
    windows: tuple[Window, ...] = ()

    def window(self, window_id: str) -> Window | None:
        for window in self.windows:
            if window.id == window_id:
                return window
        return None

    def elements(self) -> list[CuiElement]:
        return [e for w in self.windows for e in w.elements()]

    def element(self, element_id: str) -> CuiElement | None:
        for element in self.elements():
            if element.id == element_id:
                return element
        return None


@dataclass(frozen=True, slots=True)
class GuardAtom:
    """has(concept) or equals(concept.attribute, literal)."""

    op: GuardOp
    concept: str
    attribute: str | None = None
    value: object = None


@dataclass(frozen=True, slots=True)
class Trigger:
    element: str
    event: EventKind


@dataclass(frozen=True, slots=True)
class Transition:
    source: str
    target: str
    trigger: Trigger | None = None
    guard: tuple[GuardAtom, ...] = ()
    pushes: tuple[ConceptLink, ...] = ()
    back: bool = False  # return path: taking it pops the abandoned window's frames


@dataclass(frozen=True, slots=True)
class State:
    id: str
    kind: StateKind
    origin_task: str
    window_ref: str | None = None


@dataclass(frozen=True, slots=True)
class StateChart:
    states: tuple[State, ...]
    transitions: tuple[Transition, ...]
    initial: str
    finals: frozenset[str] = field(default_factory=frozenset)

    def state(self, state_id: str) -> State | None:
        for state in self.states:
            if state.id == state_id:
                return state
        return None

    def outgoing(self, state_id: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == state_id]

    def incoming(self, state_id: str) -> list[Transition]:
        return [t for t in self.transitions if t.target == state_id]


def reachable_states(sc: StateChart) -> frozenset[str]:
    """Forward-reachable state ids from the initial state, ignoring guards.

    Guards may prune paths at runtime but never add any, so this is the upper
    bound of what any execution can visit.
    """
    adjacency: dict[str, list[str]] = {}
    for transition in sc.transitions:
        adjacency.setdefault(transition.source, []).append(transition.target)
    seen: set[str] = set()
    stack = [sc.initial]
    while stack:
        state_id = stack.pop()
        if state_id in seen:
            continue
        seen.add(state_id)
        stack.extend(adjacency.get(state_id, ()))
    return frozenset(seen)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _validate_cui(cui: CuiModel, out: list[Violation], tda: TdaModel | None) -> None:
    window_ids: set[str] = set()
    element_ids: set[str] = set()
    for window in cui.windows:
        if window.id in window_ids:
            out.append(Violation("WINDOW_ID_DUP", window.id, "duplicate window id"))
        window_ids.add(window.id)
        for element in window.elements():
            if element.id in element_ids:
                out.append(Violation("ELEMENT_ID_DUP", element.id, "duplicate element id"))
            element_ids.add(element.id)
            if element.children and element.widget is not Widget.GROUP:
                out.append(
                    Violation("NON_GROUP_CHILDREN", element.id, "only GROUP elements may nest children")
                )
            binding = element.binding
            if element.widget in SELECTION_WIDGETS:
                if binding is None or binding.role not in (LinkRole.SELECTS, LinkRole.READS):
                    out.append(
                        Violation(
                            "BINDING_ROLE",
                            element.id,
                            f"{element.widget.value} requires a SELECTS or READS binding",
                        )
                    )
            if element.widget is Widget.PASSWORD_FIELD and tda is not None:
                ok = False
                if binding is not None and binding.attribute is not None:
                    concept = tda.concept(binding.concept)
                    attr = concept.attribute(binding.attribute) if concept else None
                    ok = attr is not None and attr.datatype is Datatype.SECRET
                if not ok:
                    out.append(
                        Violation(
                            "PASSWORD_BINDING",
                            element.id,
                            "PASSWORD_FIELD must bind a SECRET attribute",
                        )
                    )
            if tda is not None and tda.task(element.origin_task) is None:
                out.append(
                    Violation("UNKNOWN_ORIGIN_TASK", element.id, f"origin task {element.origin_task!r} not in task model")
                )


def _validate_sc(
    sc: StateChart, out: list[Violation], cui: CuiModel | None, tda: TdaModel | None
) -> None:
    state_ids: set[str] = set()
    for state in sc.states:
        if state.id in state_ids:
            out.append(Violation("STATE_ID_DUP", state.id, "duplicate state id"))
        state_ids.add(state.id)
        if state.kind is StateKind.WINDOW:
            if state.window_ref is None:
                out.append(Violation("WINDOW_REF_MISSING", state.id, "WINDOW state has no window_ref"))
            elif cui is not None and cui.window(state.window_ref) is None:
                out.append(
                    Violation("DANGLING_WINDOW_REF", state.id, f"window {state.window_ref!r} not in CUI model")
                )
        elif state.window_ref is not None:
            out.append(
                Violation("WINDOW_REF_FORBIDDEN", state.id, "only WINDOW states carry a window_ref")
            )
        if tda is not None and tda.task(state.origin_task) is None:
            out.append(
                Violation("UNKNOWN_ORIGIN_TASK", state.id, f"origin task {state.origin_task!r} not in task model")
            )

    if sc.initial not in state_ids:
        out.append(Violation("BAD_INITIAL", sc.initial, "initial state is not declared"))
    finals_by_kind = {s.id for s in sc.states if s.kind is StateKind.FINAL}
    if not finals_by_kind:
        out.append(Violation("NO_FINAL", "<chart>", "chart declares no FINAL state"))
    if finals_by_kind != set(sc.finals):
        out.append(
            Violation("FINALS_MISMATCH", "<chart>", "finals set does not match FINAL-kind states")
        )

    element_ids = {e.id for e in cui.elements()} if cui is not None else None
    states_by_id = {s.id: s for s in sc.states}
    for transition in sc.transitions:
        where = f"{transition.source}->{transition.target}"
        for endpoint in (transition.source, transition.target):
            if endpoint not in state_ids:
                out.append(Violation("UNKNOWN_STATE", where, f"undeclared state {endpoint!r}"))
        source = states_by_id.get(transition.source)
        if source is not None:
            if source.kind is StateKind.WINDOW and transition.trigger is None:
                out.append(
                    Violation("TRIGGER_REQUIRED", where, "transitions out of WINDOW states need a trigger")
                )
            if source.kind in (StateKind.SYSTEM, StateKind.USER) and transition.trigger is not None:
                out.append(
                    Violation("TRIGGER_FORBIDDEN", where, f"{source.kind.value} states auto-advance")
                )
            if source.kind is StateKind.FINAL:
                out.append(Violation("TRANSITION_FROM_FINAL", where, "FINAL states have no outgoing transitions"))
        if transition.trigger is not None and element_ids is not None:
            if transition.trigger.element not in element_ids:
                out.append(
                    Violation(
                        "UNKNOWN_TRIGGER_ELEMENT", where, f"trigger element {transition.trigger.element!r} not in CUI model"
                    )
                )
        if tda is not None:
            for atom in transition.guard:
                concept = tda.concept(atom.concept)
                if concept is None:
                    out.append(
                        Violation("GUARD_UNKNOWN_CONCEPT", where, f"guard references unknown concept {atom.concept!r}")
                    )
                elif atom.attribute is not None and concept.attribute(atom.attribute) is None:
                    out.append(
                        Violation(
                            "GUARD_UNKNOWN_ATTRIBUTE",
                            where,
                            f"guard references unknown attribute {atom.concept}.{atom.attribute}",
                        )
                    )

    if sc.initial in state_ids:
        reachable = reachable_states(sc)
        for state in sc.states:
            if state.id not in reachable:
                out.append(Violation("UNREACHABLE_STATE", state.id, "not reachable from the initial state"))
        # reverse reachability: from every non-final state some final must be reachable
        reverse: dict[str, list[str]] = {}
        for transition in sc.transitions:
            reverse.setdefault(transition.target, []).append(transition.source)
        can_finish: set[str] = set()
        stack = list(finals_by_kind)
        while stack:
            state_id = stack.pop()
            if state_id in can_finish:
                continue
            can_finish.add(state_id)
            stack.extend(reverse.get(state_id, ()))
        for state in sc.states:
            if state.kind is not StateKind.FINAL and state.id not in can_finish:
                out.append(Violation("FINAL_UNREACHABLE", state.id, "no FINAL state reachable from here"))


def validate_ir(
    cui: CuiModel, sc: StateChart | None = None, tda: TdaModel | None = None
) -> ValidationReport:
    """Validate the CUI model, the chart, and their cross-references.

    tda enables the checks that need domain knowledge (origin tasks, guard
    vocabulary, SECRET bindings); without it those are skipped.
    """
    out: list[Violation] = []
    _validate_cui(cui, out, tda)
    if sc is not None:
        _validate_sc(sc, out, cui, tda)
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _binding_to_dict(binding: Binding) -> dict:
    out: dict = {"concept": binding.concept}
    if binding.attribute is not None:
        out["attribute"] = binding.attribute
    out["role"] = binding.role.value
    return out


def _element_to_dict(element: CuiElement) -> dict:
    out: dict = {"id": element.id, "widget": element.widget.value, "label": element.label}
    if element.binding is not None:
        out["binding"] = _binding_to_dict(element.binding)
    out["origin_task"] = element.origin_task
    if element.applied_rules:
        out["applied_rules"] = list(element.applied_rules)
    if element.children:
        out["children"] = [_element_to_dict(c) for c in element.children]
    return out


def _link_to_dict(link: ConceptLink) -> dict:
    out: dict = {"concept": link.concept}
    if link.attribute is not None:
        out["attribute"] = link.attribute
    out["role"] = link.role.value
    return out


def _atom_to_dict(atom: GuardAtom) -> dict:
    out: dict = {"op": atom.op.value, "concept": atom.concept}
    if atom.attribute is not None:
        out["attribute"] = atom.attribute
    if atom.op is GuardOp.EQUALS:
        out["value"] = atom.value
    return out


def _transition_to_dict(transition: Transition) -> dict:
    out: dict = {"source": transition.source, "target": transition.target}
    if transition.trigger is not None:
        out["trigger"] = {"element": transition.trigger.element, "event": transition.trigger.event.value}
    if transition.guard:
        out["guard"] = [_atom_to_dict(a) for a in transition.guard]
    if transition.pushes:
        out["pushes"] = [_link_to_dict(l) for l in transition.pushes]
    if transition.back:
        out["back"] = True
    return out


def serialize_cui(cui: CuiModel) -> bytes:
    payload = {
        "windows": [
            {"id": w.id, "title": w.title, "children": [_element_to_dict(e) for e in w.children]}
            for w in cui.windows
        ]
    }
    return canonical_dumps(payload)


def serialize_sc(sc: StateChart) -> bytes:
    payload = {
        "initial": sc.initial,
        "finals": sorted(sc.finals),
        "states": [
            {
                "id": s.id,
                "kind": s.kind.value,
                **({"window_ref": s.window_ref} if s.window_ref is not None else {}),
                "origin_task": s.origin_task,
            }
            for s in sc.states
        ],
        "transitions": [_transition_to_dict(t) for t in sc.transitions],
    }
    return canonical_dumps(payload)


def serialize_ir(cui: CuiModel, sc: StateChart) -> tuple[bytes, bytes]:
    """Canonical bytes for the pair; validates their joint invariants first."""
    report = validate_ir(cui, sc)
    if not report.ok:
        raise InvalidModelError(report)
    return serialize_cui(cui), serialize_sc(sc)


def _enum(cls, raw, where: str):
    if not isinstance(raw, str):
        raise ModelSyntaxError(f"{where}: expected enum string, got {type(raw).__name__}")
    try:
        return cls(raw)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ModelSyntaxError(f"{where}: {raw!r} is not one of {allowed}") from None


def _req(payload: dict, key: str, types, where: str):
    if not isinstance(payload, dict) or key not in payload:
        raise ModelSyntaxError(f"{where}: missing required key {key!r}")
    value = payload[key]
    if not isinstance(value, types):
        raise ModelSyntaxError(f"{where}: key {key!r} has unexpected type {type(value).__name__}")
    return value


def _parse_element(payload, where: str) -> CuiElement:
    element_id = _req(payload, "id", str, where)
    where = f"element {element_id!r}"
    binding = None
    if "binding" in payload and payload["binding"] is not None:
        braw = payload["binding"]
        binding = Binding(
            concept=_req(braw, "concept", str, where),
            role=_enum(LinkRole, _req(braw, "role", str, where), where),
            attribute=braw.get("attribute"),
        )
    return CuiElement(
        id=element_id,
        widget=_enum(Widget, _req(payload, "widget", str, where), where),
        label=_req(payload, "label", str, where),
        origin_task=_req(payload, "origin_task", str, where),
        binding=binding,
        applied_rules=tuple(payload.get("applied_rules", ())),
        children=tuple(_parse_element(c, where) for c in payload.get("children", ())),
    )


def parse_cui(document: bytes | str) -> CuiModel:
    payload = loads_document(document)
    if not isinstance(payload, dict):
        raise ModelSyntaxError("top level must be an object")
    windows = []
    for wraw in _req(payload, "windows", list, "document"):
        window_id = _req(wraw, "id", str, "window")
        windows.append(
            Window(
                id=window_id,
                title=_req(wraw, "title", str, f"window {window_id!r}"),
                children=tuple(
                    _parse_element(e, f"window {window_id!r}") for e in wraw.get("children", ())
                ),
            )
        )
    return CuiModel(windows=tuple(windows))


def _parse_transition(payload, where: str) -> Transition:
    trigger = None
    if payload.get("trigger") is not None:
        traw = payload["trigger"]
        trigger = Trigger(
            element=_req(traw, "element", str, where),
            event=_enum(EventKind, _req(traw, "event", str, where), where),
        )
    guard = []
    for araw in payload.get("guard", ()):
        guard.append(
            GuardAtom(
                op=_enum(GuardOp, _req(araw, "op", str, where), where),
                concept=_req(araw, "concept", str, where),
                attribute=araw.get("attribute"),
                value=araw.get("value"),
            )
        )
    pushes = []
    for lraw in payload.get("pushes", ()):
        pushes.append(
            ConceptLink(
                concept=_req(lraw, "concept", str, where),
                role=_enum(LinkRole, _req(lraw, "role", str, where), where),
                attribute=lraw.get("attribute"),
            )
        )
    return Transition(
        source=_req(payload, "source", str, where),
        target=_req(payload, "target", str, where),
        trigger=trigger,
        guard=tuple(guard),
        pushes=tuple(pushes),
        back=bool(payload.get("back", False)),
    )


def parse_sc(document: bytes | str) -> StateChart:
    payload = loads_document(document)
    if not isinstance(payload, dict):
        raise ModelSyntaxError("top level must be an object")
    states = []
    for sraw in _req(payload, "states", list, "document"):
        state_id = _req(sraw, "id", str, "state")
        states.append(
            State(
                id=state_id,
                kind=_enum(StateKind, _req(sraw, "kind", str, f"state {state_id!r}"), f"state {state_id!r}"),
                origin_task=_req(sraw, "origin_task", str, f"state {state_id!r}"),
                window_ref=sraw.get("window_ref"),
            )
        )
    transitions = [
        _parse_transition(traw, "transition") for traw in _req(payload, "transitions", list, "document")
    ]
    return StateChart(
        states=tuple(states),
        transitions=tuple(transitions),
        initial=_req(payload, "initial", str, "document"),
        finals=frozenset(_req(payload, "finals", list, "document")),
    )


def parse_ir(cui_document: bytes | str, sc_document: bytes | str) -> tuple[CuiModel, StateChart]:
    return parse_cui(cui_document), parse_sc(sc_document)
