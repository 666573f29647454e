"""First-class transformation rules and the registry the compiler runs them from.

Rules are data: id, stage, criteria annotations, an applicability predicate
and a rewrite action. The core pipeline stages (window grouping, interactor
selection, navigation synthesis) are themselves registered as always-on
rules so that every model change is attributable to a named rule in the
compilation trace. The POST stage holds the usability rewrites, which a
manifest (.rules.json) can enable, disable, or parameterize.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .errors import DuplicateRuleError, ModelSyntaxError, UnknownCriterionError
from .ir import Binding, CuiElement, CuiModel, StateChart, StateKind, Widget, Window
from .jsonio import canonical_dumps, loads_document
from .tda import Datatype, DomainConcept
from .usability import CriterionRef, criterion


class Stage:
    GROUPING = "GROUPING"
    INTERACTOR = "INTERACTOR"
    NAVIGATION = "NAVIGATION"
    POST = "POST"


@dataclass(frozen=True, slots=True)
class RuleContext:
    """Everything a POST rule may inspect when deciding and rewriting."""

    cui: CuiModel
    sc: StateChart
    options_counts: dict[str, int]
    params: RuleParams
    concepts: tuple[DomainConcept, ...] = ()

    def concept(self, name: str) -> DomainConcept | None:
        for c in self.concepts:
            if c.name == name:
                return c
        return None

    def declared_count(self, binding: Binding | None) -> int | None:
        """How many options the bound collection declares, if knowable.

        ENUM attributes declare their arity in the model; record-backed
        collections declare instance counts through options_counts.
        """
        if binding is None:
            return None
        if binding.attribute is not None:
            concept = self.concept(binding.concept)
            attr = concept.attribute(binding.attribute) if concept else None
            if attr is not None and attr.datatype is Datatype.ENUM:
                return len(attr.values)
        return self.options_counts.get(binding.concept)

    def window_count(self) -> int:
        return sum(1 for s in self.sc.states if s.kind is StateKind.WINDOW)


@dataclass(frozen=True, slots=True)
class RuleParams:
    filter_threshold: int = 5  # lists longer than this get a filter
    breadcrumb_min_windows: int = 3  # charts this wide get breadcrumbs


@dataclass(frozen=True, slots=True)
class TransformationRule:
    id: str
    name: str
    description: str
    stage: str
    positive_criteria: tuple[CriterionRef, ...] = ()
    negative_criteria: tuple[CriterionRef, ...] = ()
    note: str = ""  # free-text contribution outside the catalog, never tallied
    # POST rules rewrite one element or one window at a time; core-stage
    # rules are applied structurally by the compiler and carry no callables.
    target: str = "element"  # "element" | "window" | "model"
    applicability: Callable[[RuleContext, object], bool] | None = None
    action: Callable[[RuleContext, object], object] | None = None


class RuleRegistry:
    """Ordered rule collection; application order is registration order."""

    def __init__(self, params: RuleParams | None = None):
        self.params = params or RuleParams()
        self._rules: list[TransformationRule] = []
        self._by_id: dict[str, TransformationRule] = {}
        self._disabled: set[str] = set()

    def __len__(self) -> int:
        return len(self._rules)

    @property
    def rules(self) -> tuple[TransformationRule, ...]:
        return tuple(self._rules)

    def rule(self, rule_id: str) -> TransformationRule | None:
        return self._by_id.get(rule_id)

    def enabled(self, rule_id: str) -> bool:
        return rule_id in self._by_id and rule_id not in self._disabled

    def set_enabled(self, rule_id: str, enabled: bool) -> None:
        if enabled:
            self._disabled.discard(rule_id)
        else:
            self._disabled.add(rule_id)

    def post_rules(self) -> list[TransformationRule]:
        return [r for r in self._rules if r.stage == Stage.POST and self.enabled(r.id)]


def register_rule(registry: RuleRegistry, rule: TransformationRule) -> RuleRegistry:
    """Add a rule; rejects duplicate ids and criteria outside the catalog."""
    if registry.rule(rule.id) is not None:
        raise DuplicateRuleError(f"rule {rule.id!r} is already registered")
    for ref in rule.positive_criteria + rule.negative_criteria:
        known = criterion(ref.code)
        if known is None:
            raise UnknownCriterionError(f"rule {rule.id!r} cites unknown criterion {ref.code!r}")
    registry._rules.append(rule)
    registry._by_id[rule.id] = rule
    return registry


# ---------------------------------------------------------------------------
# Built-in rules
# ---------------------------------------------------------------------------

def _wants_filter(ctx: RuleContext, element: CuiElement) -> bool:
    if element.widget is not Widget.LIST_VIEW:
        return False
    count = ctx.declared_count(element.binding)
    return count is not None and count > ctx.params.filter_threshold


def _add_filter(ctx: RuleContext, element: CuiElement) -> CuiElement:
    return replace(element, widget=Widget.FILTERED_LIST_VIEW)


def _is_unmasked_secret(ctx: RuleContext, element: CuiElement) -> bool:
    if element.widget is not Widget.TEXT_FIELD:
        return False
    binding = element.binding
    if binding is None or binding.attribute is None:
        return False
    concept = ctx.concept(binding.concept)
    attr = concept.attribute(binding.attribute) if concept else None
    return attr is not None and attr.datatype is Datatype.SECRET


def _mask_secret(ctx: RuleContext, element: CuiElement) -> CuiElement:
    return replace(element, widget=Widget.PASSWORD_FIELD)


def _wants_breadcrumb(ctx: RuleContext, window: Window) -> bool:
    if ctx.window_count() < ctx.params.breadcrumb_min_windows:
        return False
    return not any(e.widget is Widget.BREADCRUMB for e in window.children)


def _insert_breadcrumb(ctx: RuleContext, window: Window) -> Window:
    crumb = CuiElement(
        id=f"{window.id}.crumb",
        widget=Widget.BREADCRUMB,
        label="You are here",
        origin_task=_window_origin(ctx, window),
        applied_rules=("R3",),
    )
    return replace(window, children=(crumb,) + window.children)


def _window_origin(ctx: RuleContext, window: Window) -> str:
    for state in ctx.sc.states:
        if state.kind is StateKind.WINDOW and state.window_ref == window.id:
            return state.origin_task
    return window.children[0].origin_task if window.children else window.id


def builtin_rules() -> list[TransformationRule]:
    def ref(code: str) -> CriterionRef:
        known = criterion(code)
        assert known is not None
        return known

    return [
        TransformationRule(
            id="group_windows",
            name="Group tasks into windows",
            description="Partition interactive leaves into windows along the task operators.",
            stage=Stage.GROUPING,
            target="model",
        ),
        TransformationRule(
            id="select_interactors",
            name="Select interactors",
            description="Map each interactive leaf to a concrete widget.",
            stage=Stage.INTERACTOR,
            target="model",
            positive_criteria=(ref("8"),),
        ),
        TransformationRule(
            id="build_navigation",
            name="Build navigation",
            description="Synthesize the state chart and the navigation controls.",
            stage=Stage.NAVIGATION,
            target="model",
            positive_criteria=(ref("3"),),
        ),
        TransformationRule(
            id="R1",
            name="Add filter on list",
            description="Add a filter to lists with more than the threshold of declared items.",
            stage=Stage.POST,
            positive_criteria=(ref("6"),),
            negative_criteria=(ref("2.1"),),
            applicability=_wants_filter,
            action=_add_filter,
        ),
        TransformationRule(
            id="R2",
            name="Hide password fields",
            description="Force masked entry for inputs bound to SECRET attributes.",
            stage=Stage.POST,
            positive_criteria=(ref("6"), ref("8")),
            negative_criteria=(ref("5"), ref("5.1"), ref("5.3")),
            note="Safety",
            applicability=_is_unmasked_secret,
            action=_mask_secret,
        ),
        TransformationRule(
            id="R3",
            name="Insert breadcrumb",
            description="Prepend a breadcrumb to every window of wide navigation charts.",
            stage=Stage.POST,
            positive_criteria=(ref("1"),),
            target="window",
            applicability=_wants_breadcrumb,
            action=_insert_breadcrumb,
        ),
    ]


def default_registry(params: RuleParams | None = None) -> RuleRegistry:
    registry = RuleRegistry(params)
    for rule in builtin_rules():
        register_rule(registry, rule)
    return registry


# ---------------------------------------------------------------------------
# Manifest (.rules.json)
# ---------------------------------------------------------------------------

def registry_from_manifest(document: bytes | str) -> RuleRegistry:
    """Build the default registry with POST rules toggled/parameterized.

    Core-stage rules cannot be disabled; the compile pipeline needs them.
    """
    payload = loads_document(document)
    if not isinstance(payload, dict):
        raise ModelSyntaxError("rules manifest must be an object")
    raw_params = payload.get("parameters", {})
    if not isinstance(raw_params, dict):
        raise ModelSyntaxError("manifest key 'parameters' must be an object")
    params = RuleParams(
        filter_threshold=int(raw_params.get("filter_threshold", 5)),
        breadcrumb_min_windows=int(raw_params.get("breadcrumb_min_windows", 3)),
    )
    registry = default_registry(params)
    for entry in payload.get("rules", ()):
        if not isinstance(entry, dict) or "id" not in entry:
            raise ModelSyntaxError("manifest rule entries need an 'id'")
        rule = registry.rule(entry["id"])
        if rule is None:
            raise ModelSyntaxError(f"manifest references unknown rule {entry['id']!r}")
        if rule.stage != Stage.POST and not entry.get("enabled", True):
            raise ModelSyntaxError(f"core rule {rule.id!r} cannot be disabled")
        registry.set_enabled(rule.id, bool(entry.get("enabled", True)))
    return registry


def manifest_bytes(registry: RuleRegistry) -> bytes:
    payload = {
        "rules": [
            {"id": rule.id, "enabled": registry.enabled(rule.id)}
            for rule in registry.rules
            if rule.stage == Stage.POST
        ],
        "parameters": {
            "filter_threshold": registry.params.filter_threshold,
            "breadcrumb_min_windows": registry.params.breadcrumb_min_windows,
        },
    }
    return canonical_dumps(payload)
