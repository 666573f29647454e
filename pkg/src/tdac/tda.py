"""The TDA input model: a task tree, domain concepts, and per-task interaction types.

A TDA document is the single compiler input. It is JSON with top-level keys
"model_name", "concepts" and "root_task"; tasks nest through "children" and
all enum values are UPPER_SNAKE strings. Canonical file extension: .tda.json.

Types here are frozen; parsing and validation are pure functions, so models
can be shared freely across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidModelError, ModelReferenceError, ModelStructureError, ModelSyntaxError
from .jsonio import canonical_dumps, loads_document
from .validation import ValidationReport, Violation

IDENT_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")


class TaskKind(Enum):
    INTERACTIVE = "INTERACTIVE"
    SYSTEM = "SYSTEM"
    USER = "USER"
    ABSTRACT = "ABSTRACT"


class AuiType(Enum):
    """Interaction nature of a task; drives interactor selection."""

    INPUT = "INPUT"
    OUTPUT = "OUTPUT"
    SELECTION = "SELECTION"
    COMMAND = "COMMAND"
    CONTAINER = "CONTAINER"


class Operator(Enum):
    """Composition operator governing a composite task's children."""

    SEQUENCE = "SEQUENCE"
    CHOICE = "CHOICE"
    ORDER_INDEPENDENT = "ORDER_INDEPENDENT"


class Datatype(Enum):
    TEXT = "TEXT"
    INTEGER = "INTEGER"
    BOOLEAN = "BOOLEAN"
    DATE = "DATE"
    SECRET = "SECRET"
    ENUM = "ENUM"


class Multiplicity(Enum):
    ONE = "ONE"
    MANY = "MANY"


class LinkRole(Enum):
    READS = "READS"
    SELECTS = "SELECTS"
    WRITES = "WRITES"


@dataclass(frozen=True, slots=True)
class Attribute:
    name: str
    datatype: Datatype
    multiplicity: Multiplicity = Multiplicity.ONE
    values: tuple[str, ...] = ()  # ENUM literals, empty otherwise


@dataclass(frozen=True, slots=True)
class DomainConcept:
    name: str
    attributes: tuple[Attribute, ...] = ()

    def attribute(self, name: str) -> Attribute | None:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None


@dataclass(frozen=True, slots=True)
class ConceptLink:
    """A task's handle on domain data: read it, select from it, or write it."""

    concept: str
    role: LinkRole
    attribute: str | None = None


@dataclass(frozen=True, slots=True)
class Task:
    id: str
    name: str
    kind: TaskKind
    aui_type: AuiType | None = None
    operator: Operator | None = None
    optional: bool = False
    iterative: bool = False
    links: tuple[ConceptLink, ...] = ()
    children: tuple[Task, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True, slots=True)
class TdaModel:
    model_name: str
    concepts: tuple[DomainConcept, ...]
    root_task: Task

    def concept(self, name: str) -> DomainConcept | None:
        for concept in self.concepts:
            if concept.name == name:
                return concept
        return None

    def tasks(self) -> list[Task]:
        """All tasks in document (pre-)order."""
        out: list[Task] = []
        stack = [self.root_task]
        seen: set[int] = set()
        while stack:
            task = stack.pop()
            if id(task) in seen:  # aliased subtree; validator reports it
                continue
            seen.add(id(task))
            out.append(task)
            stack.extend(reversed(task.children))
        return out

    def task(self, task_id: str) -> Task | None:
        for task in self.tasks():
            if task.id == task_id:
                return task
        return None

    def leaves(self) -> list[Task]:
        return [t for t in self.tasks() if t.is_leaf]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_tda(model: TdaModel) -> ValidationReport:
    """Check every structural invariant; violations are data, not failures."""
    out: list[Violation] = []

    def bad_id(name: str, what: str) -> None:
        out.append(Violation("BAD_ID", name or "<empty>", f"{what} is not a valid identifier"))

    if not IDENT_RE.match(model.model_name):
        bad_id(model.model_name, "model_name")

    concept_names: set[str] = set()
    for concept in model.concepts:
        if not IDENT_RE.match(concept.name):
            bad_id(concept.name, "concept name")
        if concept.name in concept_names:
            out.append(Violation("CONCEPT_DUP", concept.name, "duplicate concept name"))
        concept_names.add(concept.name)
        attr_names: set[str] = set()
        for attr in concept.attributes:
            where = f"{concept.name}.{attr.name}"
            if not IDENT_RE.match(attr.name):
                bad_id(where, "attribute name")
            if attr.name in attr_names:
                out.append(Violation("ATTR_DUP", where, "duplicate attribute name"))
            attr_names.add(attr.name)
            if attr.datatype is Datatype.ENUM and not attr.values:
                out.append(Violation("ENUM_EMPTY", where, "ENUM attribute declares no values"))
            if attr.datatype is not Datatype.ENUM and attr.values:
                out.append(Violation("ENUM_VALUES", where, "non-ENUM attribute declares values"))

    task_ids: set[str] = set()
    seen_objects: set[int] = set()

    def walk(task: Task) -> None:
        if id(task) in seen_objects:
            out.append(Violation("TREE_SHARED", task.id, "task appears under more than one parent"))
            return
        seen_objects.add(id(task))

        if not IDENT_RE.match(task.id):
            bad_id(task.id, "task id")
        if task.id in task_ids:
            out.append(Violation("ID_DUP", task.id, "duplicate task id"))
        task_ids.add(task.id)

        if task.is_leaf:
            if task.operator is not None:
                out.append(Violation("TASK_OP_ON_LEAF", task.id, "leaf task carries an operator"))
            if task.kind is TaskKind.ABSTRACT:
                out.append(Violation("ABSTRACT_LEAF", task.id, "ABSTRACT task has no children"))
            if task.kind is TaskKind.INTERACTIVE and task.aui_type is None:
                out.append(
                    Violation("LEAF_AUI_MISSING", task.id, "interactive leaf has no aui_type")
                )
            if (
                task.kind is TaskKind.INTERACTIVE
                and task.aui_type in (AuiType.SELECTION, AuiType.OUTPUT)
                and not task.links
            ):
                out.append(
                    Violation(
                        "LINK_REQUIRED",
                        task.id,
                        f"{task.aui_type.value} leaf needs at least one concept link",
                    )
                )
        else:
            if task.operator is None:
                out.append(Violation("TASK_OP_MISSING", task.id, "composite task has no operator"))

        for link in task.links:
            concept = model.concept(link.concept)
            if concept is None:
                out.append(
                    Violation(
                        "LINK_UNKNOWN_CONCEPT", task.id, f"link references unknown concept {link.concept!r}"
                    )
                )
            elif link.attribute is not None and concept.attribute(link.attribute) is None:
                out.append(
                    Violation(
                        "LINK_UNKNOWN_ATTRIBUTE",
                        task.id,
                        f"link references unknown attribute {link.concept}.{link.attribute}",
                    )
                )

        for child in task.children:
            walk(child)

    walk(model.root_task)
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_REFERENCE_CODES = {"LINK_UNKNOWN_CONCEPT", "LINK_UNKNOWN_ATTRIBUTE"}


def _get(payload: dict, key: str, types, where: str, required: bool = True, default=None):
    if key not in payload:
        if required:
            raise ModelSyntaxError(f"{where}: missing required key {key!r}")
        return default
    value = payload[key]
    if not isinstance(value, types):
        raise ModelSyntaxError(f"{where}: key {key!r} has unexpected type {type(value).__name__}")
    return value


def _enum(cls, raw: str, where: str):
    try:
        return cls(raw)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ModelSyntaxError(f"{where}: {raw!r} is not one of {allowed}") from None


def _parse_link(payload, where: str) -> ConceptLink:
    if not isinstance(payload, dict):
        raise ModelSyntaxError(f"{where}: link must be an object")
    return ConceptLink(
        concept=_get(payload, "concept", str, where),
        role=_enum(LinkRole, _get(payload, "role", str, where), where),
        attribute=_get(payload, "attribute", str, where, required=False),
    )


def _parse_task(payload, where: str) -> Task:
    if not isinstance(payload, dict):
        raise ModelSyntaxError(f"{where}: task must be an object")
    task_id = _get(payload, "id", str, where)
    where = f"task {task_id!r}"
    aui_raw = _get(payload, "aui_type", str, where, required=False)
    op_raw = _get(payload, "operator", str, where, required=False)
    links_raw = _get(payload, "links", list, where, required=False, default=[])
    children_raw = _get(payload, "children", list, where, required=False, default=[])
    return Task(
        id=task_id,
        name=_get(payload, "name", str, where),
        kind=_enum(TaskKind, _get(payload, "kind", str, where), where),
        aui_type=_enum(AuiType, aui_raw, where) if aui_raw is not None else None,
        operator=_enum(Operator, op_raw, where) if op_raw is not None else None,
        optional=bool(_get(payload, "optional", bool, where, required=False, default=False)),
        iterative=bool(_get(payload, "iterative", bool, where, required=False, default=False)),
        links=tuple(_parse_link(l, where) for l in links_raw),
        children=tuple(_parse_task(c, where) for c in children_raw),
    )


def _parse_attribute(payload, where: str) -> Attribute:
    if not isinstance(payload, dict):
        raise ModelSyntaxError(f"{where}: attribute must be an object")
    name = _get(payload, "name", str, where)
    where = f"{where}.{name}"
    values = _get(payload, "values", list, where, required=False, default=[])
    for value in values:
        if not isinstance(value, str):
            raise ModelSyntaxError(f"{where}: ENUM values must be strings")
    mult_raw = _get(payload, "multiplicity", str, where, required=False)
    return Attribute(
        name=name,
        datatype=_enum(Datatype, _get(payload, "datatype", str, where), where),
        multiplicity=_enum(Multiplicity, mult_raw, where) if mult_raw else Multiplicity.ONE,
        values=tuple(values),
    )


def _parse_concept(payload, where: str) -> DomainConcept:
    if not isinstance(payload, dict):
        raise ModelSyntaxError(f"{where}: concept must be an object")
    name = _get(payload, "name", str, where)
    attrs_raw = _get(payload, "attributes", list, f"concept {name!r}", required=False, default=[])
    return DomainConcept(
        name=name,
        attributes=tuple(_parse_attribute(a, f"concept {name!r}") for a in attrs_raw),
    )


def parse_tda(document: bytes | str, check: bool = True) -> TdaModel:
    """Parse and fully validate a TDA document.

    Raises ModelSyntaxError for malformed bytes/shape, ModelReferenceError for
    links to unknown concepts/attributes, ModelStructureError for the first
    violated task invariant (naming the offending task). check=False skips the
    invariant pass so callers can collect a full report via validate_tda.
    """
    payload = loads_document(document)
    if not isinstance(payload, dict):
        raise ModelSyntaxError("top level must be an object")
    concepts_raw = _get(payload, "concepts", list, "document", required=False, default=[])
    model = TdaModel(
        model_name=_get(payload, "model_name", str, "document"),
        concepts=tuple(_parse_concept(c, "document") for c in concepts_raw),
        root_task=_parse_task(_get(payload, "root_task", dict, "document"), "document"),
    )
    if not check:
        return model
    report = validate_tda(model)
    for violation in report.violations:
        if violation.code in _REFERENCE_CODES:
            raise ModelReferenceError(str(violation))
        raise ModelStructureError(violation.element, f"{violation.code}: {violation.message}")
    return model


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _link_to_dict(link: ConceptLink) -> dict:
    out: dict = {"concept": link.concept}
    if link.attribute is not None:
        out["attribute"] = link.attribute
    out["role"] = link.role.value
    return out


def _task_to_dict(task: Task) -> dict:
    out: dict = {"id": task.id, "name": task.name, "kind": task.kind.value}
    if task.aui_type is not None:
        out["aui_type"] = task.aui_type.value
    if task.operator is not None:
        out["operator"] = task.operator.value
    if task.optional:
        out["optional"] = True
    if task.iterative:
        out["iterative"] = True
    if task.links:
        out["links"] = [_link_to_dict(l) for l in task.links]
    if task.children:
        out["children"] = [_task_to_dict(c) for c in task.children]
    return out


def _attribute_to_dict(attr: Attribute) -> dict:
    out: dict = {"name": attr.name, "datatype": attr.datatype.value}
    if attr.values:
        out["values"] = list(attr.values)
    if attr.multiplicity is not Multiplicity.ONE:
        out["multiplicity"] = attr.multiplicity.value
    return out


def serialize_tda(model: TdaModel) -> bytes:
    """Emit the canonical document; equal models yield identical bytes."""
    report = validate_tda(model)
    if not report.ok:
        raise InvalidModelError(report)
    payload = {
        "model_name": model.model_name,
        "concepts": [
            {"name": c.name, "attributes": [_attribute_to_dict(a) for a in c.attributes]}
            for c in model.concepts
        ],
        "root_task": _task_to_dict(model.root_task),
    }
    return canonical_dumps(payload)
