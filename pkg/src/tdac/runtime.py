"""Headless interpreter for a compiled (CUI, state chart, instance data) triple.

The runtime executes the navigation loop: present the current window, take a
user event, match it against the outgoing transitions, push the selected or
entered data onto the context stack, then auto-advance through SYSTEM/USER
states until the next window or a final state. Every event lands in an
append-only action trace; entries for password inputs mask the payload.

A step either commits completely (lands on a window or final state) or
rejects with no side effects. Timestamps come from an injected clock so a
given (models, data, script, clock) always produces identical trace bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import Callable, Iterable

from .errors import (
    AtFinalStateError,
    InvalidDataError,
    ModelSyntaxError,
    NotInCurrentWindowError,
)
from .ir import (
    INPUT_WIDGETS,
    SELECTION_WIDGETS,
    CuiElement,
    CuiModel,
    StateChart,
    StateKind,
    Transition,
    Widget,
)
from .jsonio import loads_document
from .tda import Datatype, DomainConcept, LinkRole, Multiplicity

MASK = "***"


class UserEventKind(Enum):
    ACTIVATE = "ACTIVATE"
    SELECT = "SELECT"
    INPUT = "INPUT"
    SUBMIT = "SUBMIT"


@dataclass(frozen=True, slots=True)
class UserEvent:
    kind: UserEventKind
    element: str
    payload: object = None  # item index for SELECT, value for INPUT


class FrameKind(Enum):
    SELECTED = "SELECTED"
    ENTERED = "ENTERED"


@dataclass(frozen=True, slots=True)
class Frame:
    """One context-stack entry: a chosen instance or the values typed so far."""

    concept: str
    kind: FrameKind
    values: dict
    masked: frozenset[str] = frozenset()  # attribute names never echoed in traces


@dataclass(frozen=True, slots=True)
class Outcome:
    result: str  # TRANSITIONED | REJECTED | RECORDED
    target: str | None = None
    reason: str | None = None

    @staticmethod
    def transitioned(target: str) -> Outcome:
        return Outcome("TRANSITIONED", target=target)

    @staticmethod
    def rejected(reason: str) -> Outcome:
        return Outcome("REJECTED", reason=reason)

    @staticmethod
    def recorded() -> Outcome:
        return Outcome("RECORDED")


@dataclass(frozen=True, slots=True)
class TraceEntry:
    seq: int
    ts: float
    state: str  # state at which the event was evaluated
    event: UserEvent | None
    outcome: Outcome
    path: tuple[str, ...] = ()  # every state occupied this step, start to landing
    stack: tuple[dict, ...] = ()  # masked snapshot after the step
    note: str | None = None


# ---------------------------------------------------------------------------
# Instance data
# ---------------------------------------------------------------------------

def parse_instance_data(document: bytes | str) -> dict[str, list[dict]]:
    payload = loads_document(document)
    if not isinstance(payload, dict):
        raise ModelSyntaxError("instance data must be an object keyed by concept name")
    for name, records in payload.items():
        if not isinstance(records, list) or not all(isinstance(r, dict) for r in records):
            raise ModelSyntaxError(f"concept {name!r} must map to a list of records")
    return payload


def _value_matches(value, datatype: Datatype, values: tuple[str, ...]) -> bool:
    if datatype in (Datatype.TEXT, Datatype.SECRET):
        return isinstance(value, str)
    if datatype is Datatype.INTEGER:
        return isinstance(value, int) and not isinstance(value, bool)
    if datatype is Datatype.BOOLEAN:
        return isinstance(value, bool)
    if datatype is Datatype.DATE:
        if not isinstance(value, str):
            return False
        try:
            date.fromisoformat(value)
        except ValueError:
            return False
        return True
    return isinstance(value, str) and value in values  # ENUM


def validate_instance_data(
    data: dict[str, list[dict]], concepts: Iterable[DomainConcept]
) -> None:
    """Strict conformance of records to the declared concepts; raises InvalidDataError."""
    by_name = {c.name: c for c in concepts}
    for name, records in data.items():
        concept = by_name.get(name)
        if concept is None:
            raise InvalidDataError(f"data declares unknown concept {name!r}")
        for index, record in enumerate(records):
            where = f"{name}[{index}]"
            for attr_name, value in record.items():
                attr = concept.attribute(attr_name)
                if attr is None:
                    raise InvalidDataError(f"{where}: unknown attribute {attr_name!r}")
                if attr.multiplicity is Multiplicity.MANY:
                    if not isinstance(value, list) or not all(
                        _value_matches(v, attr.datatype, attr.values) for v in value
                    ):
                        raise InvalidDataError(
                            f"{where}.{attr_name}: expected a list of {attr.datatype.value}"
                        )
                elif not _value_matches(value, attr.datatype, attr.values):
                    raise InvalidDataError(
                        f"{where}.{attr_name}: value {value!r} is not a {attr.datatype.value}"
                    )


# ---------------------------------------------------------------------------
# Runtime
# ---------------------------------------------------------------------------

def _default_clock() -> Callable[[], float]:
    import time

    return time.time


@dataclass(slots=True)
class _WindowEntry:
    state_id: str
    frames_pushed: int


class Runtime:
    """Single-threaded interpreter; models and data are shared read-only."""

    def __init__(
        self,
        cui: CuiModel,
        sc: StateChart,
        data: dict[str, list[dict]],
        extensions=None,
        concepts: Iterable[DomainConcept] = (),
        clock: Callable[[], float] | None = None,
    ):
        self.cui = cui
        self.sc = sc
        self.data = data
        self.extensions = extensions
        self.concepts = tuple(concepts)
        self.clock = clock or _default_clock()
        self.current_state: str = sc.initial
        self.stack: list[Frame] = []
        self.trace: list[TraceEntry] = []
        self._entries: list[_WindowEntry] = []
        self._pending_selections: dict[str, Frame] = {}
        self._pending_inputs: dict[str, Frame] = {}
        self._element_index: dict[str, tuple[str, CuiElement]] = {}
        for window in cui.windows:
            for element in window.elements():
                self._element_index[element.id] = (window.id, element)

    # -- introspection -------------------------------------------------------

    def state_kind(self, state_id: str) -> StateKind:
        state = self.sc.state(state_id)
        if state is None:
            raise KeyError(f"undeclared state {state_id!r}")
        return state.kind

    @property
    def at_final(self) -> bool:
        return self.state_kind(self.current_state) is StateKind.FINAL

    def current_window_id(self) -> str | None:
        state = self.sc.state(self.current_state)
        if state is not None and state.kind is StateKind.WINDOW:
            return state.window_ref
        return None

    def _element_in_current_window(self, element_id: str) -> CuiElement | None:
        window_id = self.current_window_id()
        if window_id is None:
            return None
        owner = self._element_index.get(element_id)
        if owner is None or owner[0] != window_id:
            return None
        return owner[1]

    # -- data visibility -----------------------------------------------------

    def visible_items(self, element_id: str) -> list[dict]:
        """Records offered by a selection widget in the current window.

        Records are narrowed by the context stack: a record with an attribute
        named like an already-selected concept (lowercased) must match that
        selection's identity (its first attribute value).
        """
        element = self._element_in_current_window(element_id)
        if element is None or element.widget not in SELECTION_WIDGETS:
            raise NotInCurrentWindowError(
                f"element {element_id!r} is not a selection widget in the current window"
            )
        binding = element.binding
        if binding is None:
            return []
        if binding.attribute is not None:
            for concept in self.concepts:
                if concept.name == binding.concept:
                    attr = concept.attribute(binding.attribute)
                    if attr is not None and attr.datatype is Datatype.ENUM:
                        return [{binding.attribute: literal} for literal in attr.values]
        records = self.data.get(binding.concept, [])
        return [r for r in records if self._matches_context(r)]

    def _matches_context(self, record: dict) -> bool:
        for frame in reversed(self.stack):
            if frame.kind is not FrameKind.SELECTED or not frame.values:
                continue
            foreign_key = frame.concept.lower()
            if foreign_key in record:
                identity = next(iter(frame.values.values()), None)
                if record[foreign_key] != identity:
                    return False
        return True

    # -- guards ---------------------------------------------------------------

    def eval_precondition(self, guard) -> bool:
        return _eval_guard(self.stack, guard)

    # -- stepping --------------------------------------------------------------

    def settle(self) -> list[str]:
        """Advance through SYSTEM/USER states until a window or final state.

        Returns the states traversed, start and landing inclusive; empty when
        nothing moved (already presentable, or blocked by guards).
        """
        via, landing, frames = self._advance_from(self.current_state, list(self.stack))
        if landing is None or landing == self.current_state:
            return []
        self.current_state = landing
        self.stack = frames
        if self.state_kind(landing) is StateKind.WINDOW:
            self._enter_window(landing, 0)
        return via + [landing]

    def _advance_from(
        self, state_id: str, stack: list[Frame]
    ) -> tuple[list[str], str | None, list[Frame]]:
        """Follow auto transitions from state_id; None landing means blocked."""
        via: list[str] = []
        visited: set[str] = set()
        current = state_id
        while self.state_kind(current) in (StateKind.SYSTEM, StateKind.USER):
            if current in visited:
                return via, None, stack
            visited.add(current)
            via.append(current)
            chosen = None
            for transition in self.sc.outgoing(current):
                if transition.trigger is not None:
                    continue
                if _eval_guard(stack, transition.guard):
                    chosen = transition
                    break
            if chosen is None:
                return via, None, stack
            current = chosen.target
        return via, current, stack

    def step(self, event: UserEvent) -> Outcome:
        """Process one event; appends exactly one trace entry."""
        if self.at_final:
            raise AtFinalStateError("runtime already reached a final state")

        pre_path: list[str] = [self.current_state]
        if self.state_kind(self.current_state) in (StateKind.SYSTEM, StateKind.USER):
            moved = self.settle()
            if moved:
                pre_path = moved
            if self.state_kind(self.current_state) in (StateKind.SYSTEM, StateKind.USER):
                outcome = Outcome.rejected(f"blocked at state {self.current_state!r}")
                self._append(event, outcome, state=self.current_state, path=pre_path)
                return outcome
            if self.at_final:
                outcome = Outcome.rejected("final state reached; event ignored")
                self._append(event, outcome, state=self.current_state, path=pre_path)
                return outcome

        evaluated_at = self.current_state
        outcome, hops, note = self._handle_at_window(event)
        self._append(event, outcome, state=evaluated_at, path=pre_path + hops, note=note)
        return outcome

    def _handle_at_window(self, event: UserEvent) -> tuple[Outcome, list[str], str | None]:
        matches = [
            t
            for t in self.sc.outgoing(self.current_state)
            if t.trigger is not None
            and t.trigger.element == event.element
            and t.trigger.event.value == event.kind.value
        ]
        if matches:
            return self._attempt_transition(event, matches)

        element = self._element_in_current_window(event.element)
        if element is None:
            return (
                Outcome.rejected(f"element {event.element!r} is not in the current window"),
                [],
                None,
            )
        if event.kind is UserEventKind.SELECT and element.widget in SELECTION_WIDGETS:
            return self._record_selection(element, event)
        if event.kind is UserEventKind.INPUT and element.widget in INPUT_WIDGETS:
            return self._record_input(element, event)
        return (
            Outcome.rejected(
                f"no transition matches {event.kind.value} on {event.element!r}"
            ),
            [],
            None,
        )

    def _record_selection(self, element: CuiElement, event: UserEvent) -> tuple:
        items = self.visible_items(element.id)
        index = event.payload
        if isinstance(index, bool) or not isinstance(index, int) or not 0 <= index < len(items):
            return Outcome.rejected(f"selection index {index!r} out of range"), [], None
        binding = element.binding
        self._pending_selections[binding.concept] = Frame(
            concept=binding.concept, kind=FrameKind.SELECTED, values=dict(items[index])
        )
        return Outcome.recorded(), [], None

    def _record_input(self, element: CuiElement, event: UserEvent) -> tuple:
        binding = element.binding
        if binding is None or binding.role is not LinkRole.WRITES or binding.attribute is None:
            return Outcome.recorded(), [], None  # unbound input: logged, kept nowhere
        frame = self._pending_inputs.get(binding.concept)
        values = dict(frame.values) if frame else {}
        masked = set(frame.masked) if frame else set()
        values[binding.attribute] = event.payload
        if element.widget is Widget.PASSWORD_FIELD:
            masked.add(binding.attribute)
        self._pending_inputs[binding.concept] = Frame(
            concept=binding.concept,
            kind=FrameKind.ENTERED,
            values=values,
            masked=frozenset(masked),
        )
        return Outcome.recorded(), [], None

    def _attempt_transition(
        self, event: UserEvent, matches: list[Transition]
    ) -> tuple[Outcome, list[str], str | None]:
        note = None
        viable: list[tuple[Transition, list[Frame], list[Frame]]] = []
        failed_guards: list[str] = []
        for transition in matches:
            staged = self._resolve_pushes(transition)
            trial_stack = self._stack_after(transition, staged)
            if _eval_guard(trial_stack, transition.guard):
                viable.append((transition, staged, trial_stack))
            else:
                failed_guards.append(_describe_guard(transition.guard))
        if not viable:
            return Outcome.rejected(f"guard {failed_guards[0]} false"), [], None
        if len(viable) > 1:
            note = "multiple transitions matched; first in serialized order taken"
        transition, staged, trial_stack = viable[0]

        via, landing, final_stack = self._advance_from(transition.target, trial_stack)
        if landing is None:
            blocked = via[-1] if via else transition.target
            return Outcome.rejected(f"blocked at state {blocked!r}"), [], note

        # commit
        self.stack = final_stack
        self.current_state = landing
        if transition.back:
            self._pop_window_entries(transition.source)
        elif self.state_kind(landing) is StateKind.WINDOW:
            self._enter_window(landing, len(staged))
        self._pending_selections = {}
        self._pending_inputs = {}
        return Outcome.transitioned(landing), via + [landing], note

    def _resolve_pushes(self, transition: Transition) -> list[Frame]:
        staged: list[Frame] = []
        if transition.back:
            return staged
        for link in transition.pushes:
            if link.role is LinkRole.SELECTS:
                frame = self._pending_selections.get(link.concept)
                if frame is not None:
                    staged.append(frame)
            elif link.role is LinkRole.WRITES:
                frame = self._pending_inputs.get(link.concept)
                if frame is not None:
                    staged.append(frame)
        return staged

    def _stack_after(self, transition: Transition, staged: list[Frame]) -> list[Frame]:
        if not transition.back:
            return list(self.stack) + staged
        # returning pops every frame pushed since entering the current window
        to_pop = 0
        for entry in reversed(self._entries):
            if entry.state_id != self.current_state:
                break
            to_pop += entry.frames_pushed
        kept = len(self.stack) - min(to_pop, len(self.stack))
        return list(self.stack[:kept])

    def _enter_window(self, state_id: str, frames_pushed: int) -> None:
        if self._entries and self._entries[-1].state_id == state_id:
            self._entries[-1].frames_pushed += frames_pushed
        else:
            self._entries.append(_WindowEntry(state_id, frames_pushed))

    def _pop_window_entries(self, state_id: str) -> None:
        while self._entries and self._entries[-1].state_id == state_id:
            self._entries.pop()

    # -- tracing ---------------------------------------------------------------

    def _append(
        self,
        event: UserEvent | None,
        outcome: Outcome,
        state: str | None = None,
        path: list[str] | None = None,
        note: str | None = None,
    ) -> None:
        self.trace.append(
            TraceEntry(
                seq=len(self.trace) + 1,
                ts=self.clock(),
                state=state if state is not None else self.current_state,
                event=event,
                outcome=outcome,
                path=tuple(path if path is not None else [self.current_state]),
                stack=tuple(_snapshot_frame(f) for f in self.stack),
                note=note,
            )
        )


def _eval_guard(stack: list[Frame], guard) -> bool:
    for atom in guard or ():
        top = None
        for frame in reversed(stack):
            if frame.concept == atom.concept:
                top = frame
                break
        if atom.op.value == "HAS":
            if top is None:
                return False
        else:  # EQUALS
            if top is None or top.values.get(atom.attribute) != atom.value:
                return False
    return True


def _describe_guard(guard) -> str:
    if not guard:
        return "<none>"
    parts = []
    for atom in guard:
        if atom.op.value == "HAS":
            parts.append(f"has({atom.concept})")
        else:
            parts.append(f"equals({atom.concept}.{atom.attribute}, {atom.value!r})")
    return " and ".join(parts)


def _snapshot_frame(frame: Frame) -> dict:
    values = {
        key: (MASK if key in frame.masked else value) for key, value in frame.values.items()
    }
    return {"concept": frame.concept, "entry": frame.kind.value, "values": values}


def _mask_payload(runtime: Runtime, event: UserEvent):
    if event.kind is not UserEventKind.INPUT:
        return event.payload
    owner = runtime._element_index.get(event.element)
    if owner is not None and owner[1].widget is Widget.PASSWORD_FIELD:
        return MASK
    return event.payload


def init_runtime(
    cui: CuiModel,
    sc: StateChart,
    data: dict[str, list[dict]],
    extensions=None,
    concepts: Iterable[DomainConcept] = (),
    clock: Callable[[], float] | None = None,
) -> Runtime:
    """Fresh runtime at the chart's initial state with an empty stack/trace.

    Data is validated strictly when concepts are supplied, structurally
    otherwise.
    """
    concepts = tuple(concepts)
    if concepts:
        validate_instance_data(data, concepts)
    else:
        for name, records in data.items():
            if not isinstance(records, list) or not all(isinstance(r, dict) for r in records):
                raise InvalidDataError(f"concept {name!r} must map to a list of records")
    return Runtime(cui, sc, data, extensions=extensions, concepts=concepts, clock=clock)


def run_script(runtime: Runtime, events: Iterable[UserEvent]) -> tuple[Runtime, list[TraceEntry]]:
    """Fold step over the events; events after a final state are rejected in-trace."""
    for event in events:
        if runtime.at_final:
            runtime._append(event, Outcome.rejected("final state reached; event ignored"))
            continue
        runtime.step(event)
    return runtime, list(runtime.trace)


# ---------------------------------------------------------------------------
# Trace serialization
# ---------------------------------------------------------------------------

def entry_to_dict(runtime: Runtime, entry: TraceEntry) -> dict:
    event = entry.event
    payload: dict = {
        "seq": entry.seq,
        "ts": entry.ts,
        "state": entry.state,
        "event": None
        if event is None
        else {
            "kind": event.kind.value,
            "element": event.element,
            **(
                {"payload": _mask_payload(runtime, event)}
                if event.payload is not None
                else {}
            ),
        },
        "outcome": _outcome_to_dict(entry.outcome),
        "path": list(entry.path),
        "stack": list(entry.stack),
    }
    if entry.note:
        payload["note"] = entry.note
    return payload


def _outcome_to_dict(outcome: Outcome) -> dict:
    out = {"result": outcome.result}
    if outcome.target is not None:
        out["target"] = outcome.target
    if outcome.reason is not None:
        out["reason"] = outcome.reason
    return out


def write_trace(runtime: Runtime, sink=None) -> bytes:
    """Newline-delimited JSON, one entry per line; replayable."""
    lines = [
        json.dumps(entry_to_dict(runtime, entry), ensure_ascii=False) for entry in runtime.trace
    ]
    blob = ("\n".join(lines) + "\n" if lines else "").encode("utf-8")
    if sink is not None:
        from .jsonio import atomic_write

        atomic_write(sink, blob)
    return blob


def read_trace_events(document: bytes | str) -> list[UserEvent]:
    """Events of a serialized trace, for replay through a fresh runtime."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    events: list[UserEvent] = []
    for line in document.splitlines():
        if not line.strip():
            continue
        entry = json.loads(line)
        raw = entry.get("event")
        if raw is None:
            continue
        events.append(
            UserEvent(
                kind=UserEventKind(raw["kind"]),
                element=raw["element"],
                payload=raw.get("payload"),
            )
        )
    return events


def parse_script(document: bytes | str) -> list[UserEvent]:
    payload = loads_document(document)
    if not isinstance(payload, list):
        raise ModelSyntaxError("script must be an array of events")
    events = []
    for raw in payload:
        if not isinstance(raw, dict) or "kind" not in raw or "element" not in raw:
            raise ModelSyntaxError("script events need 'kind' and 'element'")
        try:
            kind = UserEventKind(raw["kind"])
        except ValueError:
            raise ModelSyntaxError(f"unknown event kind {raw['kind']!r}") from None
        events.append(UserEvent(kind=kind, element=raw["element"], payload=raw.get("payload")))
    return events
