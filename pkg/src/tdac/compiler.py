"""Compile a task/domain model into a concrete UI and a navigation state chart.

The pipeline runs four stages:

  GROUPING    partition interactive leaves into windows along the operators
  INTERACTOR  map each interactive leaf to a widget
  NAVIGATION  synthesize states, transitions, guards and navigation controls
  POST        apply the registered usability rewrites

Window grouping rule: every maximal subtree whose composite nodes all carry
CHOICE or ORDER_INDEPENDENT operators becomes one window holding its
interactive leaves; SEQUENCE operators split sibling subtrees into successive
windows. A CHOICE that cannot be grouped (some alternative splits further)
becomes a branch point: a small chooser window with one button per
alternative, honoring one-trigger-per-alternative navigation.

Everything here is a pure function of (model, registry, options_counts);
equal inputs produce byte-identical serialized outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import (
    InvalidModelError,
    NoInteractiveTasksError,
    RuleConflictError,
    UnmappableTaskError,
)
from .ir import (
    Binding,
    CuiElement,
    CuiModel,
    EventKind,
    GuardAtom,
    GuardOp,
    State,
    StateChart,
    StateKind,
    Transition,
    Trigger,
    Widget,
    Window,
    validate_ir,
)
from .jsonio import canonical_dumps, loads_document
from .rules import RuleContext, RuleRegistry, Stage, default_registry
from .tda import (
    AuiType,
    ConceptLink,
    Datatype,
    DomainConcept,
    LinkRole,
    Operator,
    Task,
    TaskKind,
    TdaModel,
    validate_tda,
)

INIT_STATE = "init"
FINAL_STATE = "final"


def window_id_for(task_id: str) -> str:
    return f"w.{task_id}"


def state_id_for(task_id: str) -> str:
    return f"s.{task_id}"


def element_id_for(task_id: str) -> str:
    return f"e.{task_id}"


# ---------------------------------------------------------------------------
# Compilation trace
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class TraceEntry:
    rule: str
    target: str  # element or state id the application touched
    stage: str


@dataclass(frozen=True, slots=True)
class CompilationTrace:
    entries: tuple[TraceEntry, ...] = ()

    def for_rule(self, rule_id: str) -> list[TraceEntry]:
        return [e for e in self.entries if e.rule == rule_id]


def serialize_trace(trace: CompilationTrace) -> bytes:
    payload = {
        "entries": [{"rule": e.rule, "target": e.target, "stage": e.stage} for e in trace.entries]
    }
    return canonical_dumps(payload)


def parse_trace(document: bytes | str) -> CompilationTrace:
    payload = loads_document(document)
    entries = tuple(
        TraceEntry(rule=e["rule"], target=e["target"], stage=e["stage"])
        for e in payload.get("entries", ())
    )
    return CompilationTrace(entries)


# ---------------------------------------------------------------------------
# GROUPING: windows from operators
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class _Group:
    """One window: the qualifying subtree root plus its leaves in tree order."""

    root: Task
    interactive: list[Task] = field(default_factory=list)
    system: list[Task] = field(default_factory=list)  # SYSTEM and USER leaves


def _qualifies(task: Task) -> bool:
    """True when every composite node of the subtree groups (CHOICE/ORDER_INDEPENDENT)."""
    if task.is_leaf:
        return True
    if task.operator not in (Operator.CHOICE, Operator.ORDER_INDEPENDENT):
        return False
    return all(_qualifies(child) for child in task.children)


def _collect_leaves(task: Task, group: _Group) -> None:
    if task.is_leaf:
        if task.kind is TaskKind.INTERACTIVE:
            group.interactive.append(task)
        elif task.kind in (TaskKind.SYSTEM, TaskKind.USER):
            group.system.append(task)
        return
    for child in task.children:
        _collect_leaves(child, group)


@dataclass(slots=True)
class _WindowUnit:
    group: _Group


@dataclass(slots=True)
class _TaskStateUnit:
    task: Task  # SYSTEM or USER leaf


@dataclass(slots=True)
class _BranchUnit:
    task: Task  # the CHOICE composite
    alternatives: list[list]  # lists of units


def _units_for(task: Task) -> list:
    if _qualifies(task):
        group = _Group(root=task)
        _collect_leaves(task, group)
        units: list = []
        if group.interactive:
            units.append(_WindowUnit(group))
        units.extend(_TaskStateUnit(leaf) for leaf in group.system)
        return units
    # composite below here; SEQUENCE chains children, a non-groupable CHOICE
    # branches, a non-groupable ORDER_INDEPENDENT falls back to tree order
    if task.operator is Operator.CHOICE:
        return [_BranchUnit(task, [_units_for(child) for child in task.children])]
    units = []
    for child in task.children:
        units.extend(_units_for(child))
    return units


def _window_groups(tda: TdaModel) -> list[_Group]:
    groups: list[_Group] = []

    def scan(units: list) -> None:
        for unit in units:
            if isinstance(unit, _WindowUnit):
                groups.append(unit.group)
            elif isinstance(unit, _BranchUnit):
                for alternative in unit.alternatives:
                    scan(alternative)

    scan(_units_for(tda.root_task))
    return groups


def identify_windows(tda: TdaModel) -> list[tuple[str, frozenset[str]]]:
    """Partition the interactive leaves into windows, in tree order."""
    groups = _window_groups(tda)
    if not groups:
        raise NoInteractiveTasksError(
            f"model {tda.model_name!r} has no interactive leaf tasks; the UI would be empty"
        )
    return [
        (window_id_for(g.root.id), frozenset(leaf.id for leaf in g.interactive)) for g in groups
    ]


# ---------------------------------------------------------------------------
# INTERACTOR: widgets from interaction types
# ---------------------------------------------------------------------------

_INPUT_WIDGETS_BY_TYPE = {
    Datatype.TEXT: Widget.TEXT_FIELD,
    Datatype.INTEGER: Widget.TEXT_FIELD,
    Datatype.SECRET: Widget.PASSWORD_FIELD,
    Datatype.BOOLEAN: Widget.CHECKBOX,
    Datatype.DATE: Widget.DATE_PICKER,
    # free entry of a literal; selection widgets would need a SELECTS binding
    Datatype.ENUM: Widget.TEXT_FIELD,
}


def _bound_attribute(task: Task, concepts):
    for link in task.links:
        if link.attribute is None:
            continue
        for concept in concepts:
            if concept.name == link.concept:
                attr = concept.attribute(link.attribute)
                if attr is not None:
                    return attr
    return None


def select_interactor(task: Task, concepts, options_count: int | None = None) -> Widget:
    """Total widget choice for an interactive leaf.

    options_count is the statically declared number of choices (ENUM arity);
    selections over runtime record collections pass None and get a list,
    which the filter rule may later upgrade.
    """
    if not task.is_leaf or task.kind is not TaskKind.INTERACTIVE or task.aui_type is None:
        raise UnmappableTaskError(f"task {task.id!r} is not an interactive leaf with an aui_type")
    aui = task.aui_type
    if aui is AuiType.COMMAND:
        return Widget.BUTTON
    if aui is AuiType.OUTPUT:
        return Widget.TEXT_OUTPUT
    if aui is AuiType.CONTAINER:
        return Widget.GROUP
    if aui is AuiType.SELECTION:
        if options_count is None or options_count > 5:
            return Widget.LIST_VIEW
        if options_count <= 3:
            return Widget.RADIO_GROUP
        return Widget.COMBO_BOX
    # INPUT: keyed on the datatype of the bound attribute, text by default
    attr = _bound_attribute(task, concepts)
    if attr is None:
        return Widget.TEXT_FIELD
    return _INPUT_WIDGETS_BY_TYPE[attr.datatype]


def _enum_arity(task: Task, concepts) -> int | None:
    attr = _bound_attribute(task, concepts)
    if attr is not None and attr.datatype is Datatype.ENUM:
        return len(attr.values)
    return None


def _element_for_leaf(leaf: Task, concepts, trace: list[TraceEntry]) -> CuiElement:
    widget = select_interactor(leaf, concepts, _enum_arity(leaf, concepts))
    link = leaf.links[0] if leaf.links else None
    binding = Binding(concept=link.concept, role=link.role, attribute=link.attribute) if link else None
    element = CuiElement(
        id=element_id_for(leaf.id),
        widget=widget,
        label=leaf.name,
        origin_task=leaf.id,
        binding=binding,
        applied_rules=("select_interactors",),
    )
    trace.append(TraceEntry("select_interactors", element.id, Stage.INTERACTOR))
    return element


def _window_content(task: Task, concepts, trace: list[TraceEntry]) -> list[CuiElement]:
    """Elements for a window subtree; CONTAINER composites become GROUPs."""
    if task.is_leaf:
        if task.kind is TaskKind.INTERACTIVE:
            return [_element_for_leaf(task, concepts, trace)]
        return []
    nested: list[CuiElement] = []
    for child in task.children:
        nested.extend(_window_content(child, concepts, trace))
    if task.kind is TaskKind.INTERACTIVE and task.aui_type is AuiType.CONTAINER:
        group_el = CuiElement(
            id=element_id_for(task.id),
            widget=Widget.GROUP,
            label=task.name,
            origin_task=task.id,
            applied_rules=("select_interactors",),
            children=tuple(nested),
        )
        trace.append(TraceEntry("select_interactors", group_el.id, Stage.INTERACTOR))
        return [group_el]
    return nested


# ---------------------------------------------------------------------------
# NAVIGATION: state chart plus navigation controls
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class _Connector:
    """A dangling outgoing edge waiting for its target state."""

    source: str
    trigger: Trigger | None = None
    pushes: tuple[ConceptLink, ...] = ()


@dataclass(slots=True)
class _ChartBuilder:
    tda: TdaModel
    windows: dict[str, list[CuiElement]]  # window id -> mutable children
    titles: dict[str, str]
    states: list[State] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    trace: list[TraceEntry] = field(default_factory=list)
    group_by_state: dict[str, _Group] = field(default_factory=dict)

    def add_state(self, state: State) -> None:
        self.states.append(state)
        self.trace.append(TraceEntry("build_navigation", state.id, Stage.NAVIGATION))

    def add_nav_element(self, window_id: str, element: CuiElement) -> None:
        self.windows[window_id].append(element)
        self.trace.append(TraceEntry("build_navigation", element.id, Stage.NAVIGATION))

    def connect(self, connectors: list[_Connector], target: str) -> None:
        for connector in connectors:
            self.transitions.append(
                Transition(
                    source=connector.source,
                    target=target,
                    trigger=connector.trigger,
                    pushes=connector.pushes,
                )
            )

    # -- unit realization ---------------------------------------------------

    def realize_chain(self, units: list, incoming: list[_Connector]) -> list[_Connector]:
        for unit in units:
            if isinstance(unit, _WindowUnit):
                incoming = self._realize_window(unit.group, incoming)
            elif isinstance(unit, _TaskStateUnit):
                incoming = self._realize_task_state(unit.task, incoming)
            else:
                incoming = self._realize_branch(unit, incoming)
        return incoming

    def _realize_window(self, group: _Group, incoming: list[_Connector]) -> list[_Connector]:
        window_id = window_id_for(group.root.id)
        state_id = state_id_for(group.root.id)
        state = State(
            id=state_id, kind=StateKind.WINDOW, origin_task=group.root.id, window_ref=window_id
        )
        self.add_state(state)
        self.group_by_state[state_id] = group
        self.connect(incoming, state_id)

        pushes = self._window_pushes(group)
        iterative_cmd = next(
            (l for l in group.interactive if l.iterative and l.aui_type is AuiType.COMMAND), None
        )
        advance_cmds = [
            l
            for l in group.interactive
            if l.aui_type is AuiType.COMMAND and l is not iterative_cmd
        ]
        if advance_cmds:
            out = [
                _Connector(state_id, Trigger(element_id_for(l.id), EventKind.ACTIVATE), pushes)
                for l in advance_cmds
            ]
        else:
            next_id = f"{window_id}.next"
            self.add_nav_element(
                window_id,
                CuiElement(
                    id=next_id,
                    widget=Widget.BUTTON,
                    label="Continue",
                    origin_task=group.root.id,
                    applied_rules=("build_navigation",),
                ),
            )
            out = [_Connector(state_id, Trigger(next_id, EventKind.ACTIVATE), pushes)]

        if group.root.iterative or any(l.iterative for l in group.interactive):
            if iterative_cmd is not None:
                repeat_trigger = Trigger(element_id_for(iterative_cmd.id), EventKind.ACTIVATE)
            else:
                again_id = f"{window_id}.again"
                self.add_nav_element(
                    window_id,
                    CuiElement(
                        id=again_id,
                        widget=Widget.BUTTON,
                        label="Repeat",
                        origin_task=group.root.id,
                        applied_rules=("build_navigation",),
                    ),
                )
                repeat_trigger = Trigger(again_id, EventKind.ACTIVATE)
            self.transitions.append(
                Transition(source=state_id, target=state_id, trigger=repeat_trigger)
            )
        return out

    def _realize_task_state(self, task: Task, incoming: list[_Connector]) -> list[_Connector]:
        state_id = state_id_for(task.id)
        kind = StateKind.SYSTEM if task.kind is TaskKind.SYSTEM else StateKind.USER
        self.add_state(State(id=state_id, kind=kind, origin_task=task.id))
        self.connect(incoming, state_id)
        return [_Connector(state_id)]

    def _realize_branch(self, unit: _BranchUnit, incoming: list[_Connector]) -> list[_Connector]:
        window_id = f"{window_id_for(unit.task.id)}.menu"
        state_id = f"{state_id_for(unit.task.id)}.menu"
        self.windows[window_id] = []
        self.titles[window_id] = unit.task.name
        self.add_state(
            State(id=state_id, kind=StateKind.WINDOW, origin_task=unit.task.id, window_ref=window_id)
        )
        self.connect(incoming, state_id)

        exits: list[_Connector] = []
        for child, alternative in zip(unit.task.children, unit.alternatives):
            button_id = f"{window_id}.go.{child.id}"
            self.add_nav_element(
                window_id,
                CuiElement(
                    id=button_id,
                    widget=Widget.BUTTON,
                    label=child.name,
                    origin_task=child.id,
                    applied_rules=("build_navigation",),
                ),
            )
            connector = _Connector(state_id, Trigger(button_id, EventKind.ACTIVATE))
            exits.extend(self.realize_chain(alternative, [connector]))
        return exits

    @staticmethod
    def _window_pushes(group: _Group) -> tuple[ConceptLink, ...]:
        """One stack push per (concept, role) the window selects or fills in."""
        pushes: list[ConceptLink] = []
        seen: set[tuple] = set()
        for leaf in group.interactive:
            for link in leaf.links:
                if link.role not in (LinkRole.SELECTS, LinkRole.WRITES):
                    continue
                key = (link.concept, link.role)
                if key in seen:
                    continue
                seen.add(key)
                if link.role is LinkRole.WRITES:
                    # entered values are pushed as one frame per concept
                    pushes.append(ConceptLink(concept=link.concept, role=LinkRole.WRITES))
                else:
                    pushes.append(link)
        return tuple(pushes)

    # -- second passes ------------------------------------------------------

    def add_back_transitions(self) -> None:
        """Return path: each window points back at its nearest window predecessor."""
        order = {state.id: index for index, state in enumerate(self.states)}
        for state in list(self.states):
            if state.kind is not StateKind.WINDOW:
                continue
            predecessors = self._window_predecessors(state.id)
            if not predecessors:
                continue
            target = min(predecessors, key=lambda sid: order[sid])
            back_id = f"{state.window_ref}.back"
            self.add_nav_element(
                state.window_ref,
                CuiElement(
                    id=back_id,
                    widget=Widget.BUTTON,
                    label="Back",
                    origin_task=state.origin_task,
                    applied_rules=("build_navigation",),
                ),
            )
            self.transitions.append(
                Transition(
                    source=state.id,
                    target=target,
                    trigger=Trigger(back_id, EventKind.ACTIVATE),
                    back=True,
                )
            )

    def _window_predecessors(self, state_id: str) -> set[str]:
        kinds = {s.id: s.kind for s in self.states}
        found: set[str] = set()
        seen: set[str] = set()
        frontier = [state_id]
        while frontier:
            current = frontier.pop()
            for transition in self.transitions:
                if transition.back or transition.target != current:
                    continue
                source = transition.source
                if source == state_id or source in seen:
                    continue
                seen.add(source)
                if kinds.get(source) is StateKind.WINDOW:
                    found.add(source)
                elif source != INIT_STATE:
                    frontier.append(source)
        return found

    def add_selection_guards(self) -> None:
        """has(concept) on every incoming transition of states downstream of a
        selection that read the selected concept."""
        forward: dict[str, list[str]] = {}
        for transition in self.transitions:
            if not transition.back:
                forward.setdefault(transition.source, []).append(transition.target)

        reads: dict[str, set[str]] = {}
        for state in self.states:
            concepts: set[str] = set()
            group = self.group_by_state.get(state.id)
            if group is not None:
                for leaf in group.interactive:
                    concepts.update(l.concept for l in leaf.links if l.role is LinkRole.READS)
            else:
                task = self.tda.task(state.origin_task)
                if task is not None and task.is_leaf:
                    concepts.update(l.concept for l in task.links if l.role is LinkRole.READS)
            reads[state.id] = concepts

        guarded: dict[int, list[str]] = {}  # transition index -> concepts
        for state in self.states:
            selected = {
                link.concept
                for transition in self.transitions
                if transition.source == state.id and not transition.back
                for link in transition.pushes
                if link.role is LinkRole.SELECTS
            }
            if not selected:
                continue
            downstream: set[str] = set()
            frontier = list(forward.get(state.id, ()))
            while frontier:
                current = frontier.pop()
                if current in downstream:
                    continue
                downstream.add(current)
                frontier.extend(forward.get(current, ()))
            downstream.discard(state.id)
            for target in downstream:
                needed = sorted(selected & reads.get(target, set()))
                if not needed:
                    continue
                for index, transition in enumerate(self.transitions):
                    if transition.target == target:
                        bucket = guarded.setdefault(index, [])
                        bucket.extend(c for c in needed if c not in bucket)

        for index, concepts in guarded.items():
            transition = self.transitions[index]
            atoms = list(transition.guard)
            for concept in concepts:
                atom = GuardAtom(op=GuardOp.HAS, concept=concept)
                if atom not in atoms:
                    atoms.append(atom)
            self.transitions[index] = replace(transition, guard=tuple(atoms))


def _build_navigation(
    tda: TdaModel,
    units: list,
    windows: dict[str, list[CuiElement]],
    titles: dict[str, str],
) -> tuple[StateChart, list[TraceEntry]]:
    builder = _ChartBuilder(tda=tda, windows=windows, titles=titles)
    root_id = tda.root_task.id
    builder.add_state(State(id=INIT_STATE, kind=StateKind.SYSTEM, origin_task=root_id))
    exits = builder.realize_chain(units, [_Connector(INIT_STATE)])
    builder.add_state(State(id=FINAL_STATE, kind=StateKind.FINAL, origin_task=root_id))
    builder.connect(exits, FINAL_STATE)
    builder.add_back_transitions()
    builder.add_selection_guards()
    chart = StateChart(
        states=tuple(builder.states),
        transitions=tuple(builder.transitions),
        initial=INIT_STATE,
        finals=frozenset({FINAL_STATE}),
    )
    return chart, builder.trace


def synthesize_statechart(tda: TdaModel, windows: list[tuple[str, frozenset[str]]]) -> StateChart:
    """Navigation chart for the given window partition.

    windows must be the identify_windows output for the same model; the
    chart's trigger element ids are the deterministic ones the full compile
    would produce.
    """
    computed = identify_windows(tda)
    if list(windows) != computed:
        raise ValueError("windows do not match the model's window partition")
    units = _units_for(tda.root_task)
    window_children: dict[str, list[CuiElement]] = {}
    titles: dict[str, str] = {}
    trace: list[TraceEntry] = []
    for group in _window_groups(tda):
        wid = window_id_for(group.root.id)
        window_children[wid] = _window_content(group.root, tda.concepts, trace)
        titles[wid] = group.root.name
    chart, _ = _build_navigation(tda, units, window_children, titles)
    return chart


# ---------------------------------------------------------------------------
# POST: usability rewrites
# ---------------------------------------------------------------------------

def apply_usability_rules(
    cui: CuiModel,
    sc: StateChart,
    registry: RuleRegistry,
    options_counts: dict[str, int] | None = None,
    concepts: tuple[DomainConcept, ...] = (),
) -> tuple[CuiModel, StateChart, CompilationTrace]:
    """Run every enabled POST rule in registration order.

    Conflicting widget rewrites of one element abort with RuleConflictError
    naming both rules; agreement (same widget) is allowed.
    """
    entries: list[TraceEntry] = []
    rewritten: dict[str, tuple[str, Widget]] = {}  # element id -> (rule, widget)
    state_by_window = {
        s.window_ref: s.id for s in sc.states if s.kind is StateKind.WINDOW and s.window_ref
    }

    for rule in registry.post_rules():
        ctx = RuleContext(
            cui=cui,
            sc=sc,
            options_counts=dict(options_counts or {}),
            params=registry.params,
            concepts=tuple(concepts),
        )
        new_windows: list[Window] = []
        if rule.target == "window":
            for window in cui.windows:
                if rule.applicability is not None and not rule.applicability(ctx, window):
                    new_windows.append(window)
                    continue
                new_windows.append(rule.action(ctx, window))
                entries.append(
                    TraceEntry(rule.id, state_by_window.get(window.id, window.id), Stage.POST)
                )
        else:
            for window in cui.windows:
                def rewrite(element: CuiElement) -> CuiElement:
                    children = tuple(rewrite(c) for c in element.children)
                    if children != element.children:
                        element = replace(element, children=children)
                    if rule.applicability is None or not rule.applicability(ctx, element):
                        return element
                    new_element = rule.action(ctx, element)
                    if new_element.widget is not element.widget:
                        previous = rewritten.get(element.id)
                        if previous is not None and previous[1] is not new_element.widget:
                            raise RuleConflictError(element.id, previous[0], rule.id)
                        rewritten[element.id] = (rule.id, new_element.widget)
                    if rule.id not in new_element.applied_rules:
                        new_element = replace(
                            new_element, applied_rules=new_element.applied_rules + (rule.id,)
                        )
                    entries.append(TraceEntry(rule.id, element.id, Stage.POST))
                    return new_element

                new_windows.append(replace(window, children=tuple(rewrite(c) for c in window.children)))
        cui = CuiModel(windows=tuple(new_windows))

    return cui, sc, CompilationTrace(tuple(entries))


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class CompileResult:
    cui: CuiModel
    sc: StateChart
    trace: CompilationTrace


def _annotate_stage(exc: Exception, stage: str) -> Exception:
    exc.stage = stage
    if exc.args and isinstance(exc.args[0], str) and not str(exc.args[0]).startswith(f"[{stage}]"):
        exc.args = (f"[{stage}] {exc.args[0]}",) + exc.args[1:]
    return exc


def compile_model(
    tda: TdaModel,
    registry: RuleRegistry | None = None,
    options_counts: dict[str, int] | None = None,
) -> CompileResult:
    """Run the full pipeline; deterministic for equal inputs."""
    registry = registry if registry is not None else default_registry()
    report = validate_tda(tda)
    if not report.ok:
        raise InvalidModelError(report)

    try:
        units = _units_for(tda.root_task)
        groups = _window_groups(tda)
        if not groups:
            raise NoInteractiveTasksError(
                f"model {tda.model_name!r} has no interactive leaf tasks; the UI would be empty"
            )
    except Exception as exc:
        raise _annotate_stage(exc, Stage.GROUPING)

    entries: list[TraceEntry] = []
    window_children: dict[str, list[CuiElement]] = {}
    titles: dict[str, str] = {}
    try:
        for group in groups:
            wid = window_id_for(group.root.id)
            entries.append(TraceEntry("group_windows", wid, Stage.GROUPING))
            window_children[wid] = _window_content(group.root, tda.concepts, entries)
            titles[wid] = group.root.name
    except Exception as exc:
        raise _annotate_stage(exc, Stage.INTERACTOR)

    try:
        sc, nav_entries = _build_navigation(tda, units, window_children, titles)
        entries.extend(nav_entries)
    except Exception as exc:
        raise _annotate_stage(exc, Stage.NAVIGATION)

    window_order: list[str] = []
    for state in sc.states:
        if state.kind is StateKind.WINDOW:
            window_order.append(state.window_ref)
    cui = CuiModel(
        windows=tuple(
            Window(id=wid, title=titles[wid], children=tuple(window_children[wid]))
            for wid in window_order
        )
    )

    try:
        cui, sc, post_trace = apply_usability_rules(
            cui, sc, registry, options_counts, concepts=tda.concepts
        )
        entries.extend(post_trace.entries)
    except Exception as exc:
        raise _annotate_stage(exc, Stage.POST)

    ir_report = validate_ir(cui, sc, tda)
    if not ir_report.ok:
        raise InvalidModelError(ir_report)
    return CompileResult(cui=cui, sc=sc, trace=CompilationTrace(tuple(entries)))
