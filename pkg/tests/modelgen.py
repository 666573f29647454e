"""Seeded random model/script generators for property and acceptance tests.

Generated models always satisfy every structural invariant (asserted at the
end of random_tda), so tests exercise the pipeline, not the generator.
"""

from __future__ import annotations

import random

from tdac.ir import CuiModel
from tdac.runtime import UserEvent, UserEventKind
from tdac.tda import (
    Attribute,
    AuiType,
    ConceptLink,
    Datatype,
    DomainConcept,
    LinkRole,
    Multiplicity,
    Operator,
    Task,
    TaskKind,
    TdaModel,
    validate_tda,
)

_DATATYPES = [
    Datatype.TEXT,
    Datatype.TEXT,
    Datatype.INTEGER,
    Datatype.BOOLEAN,
    Datatype.DATE,
    Datatype.SECRET,
    Datatype.ENUM,
]

_WORDS = [
    "alpha", "bravo", "core", "delta", "echo", "field", "gate", "hub",
    "item", "junction", "kilo", "line", "meta", "node", "office", "pier",
]


class _Ids:
    def __init__(self) -> None:
        self.counter = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"


def _random_concepts(rng: random.Random, ids: _Ids) -> tuple[DomainConcept, ...]:
    concepts = []
    for _ in range(rng.randint(1, 3)):
        attrs = []
        for index in range(rng.randint(1, 4)):
            datatype = rng.choice(_DATATYPES)
            values = ()
            if datatype is Datatype.ENUM:
                arity = rng.randint(2, 7)
                values = tuple(f"v{n}" for n in range(arity))
            attrs.append(
                Attribute(
                    name=f"a{index}",
                    datatype=datatype,
                    multiplicity=Multiplicity.MANY if rng.random() < 0.1 else Multiplicity.ONE,
                    values=values,
                )
            )
        concepts.append(DomainConcept(name=ids.fresh("C"), attributes=tuple(attrs)))
    return tuple(concepts)


def _random_links(rng: random.Random, concepts, aui: AuiType | None, kind: TaskKind) -> tuple:
    def pick_concept():
        return rng.choice(concepts)

    links = []
    if aui is AuiType.SELECTION:
        concept = pick_concept()
        enum_attrs = [a for a in concept.attributes if a.datatype is Datatype.ENUM]
        if enum_attrs and rng.random() < 0.3:
            links.append(ConceptLink(concept.name, LinkRole.SELECTS, enum_attrs[0].name))
        else:
            links.append(ConceptLink(concept.name, LinkRole.SELECTS))
    elif aui is AuiType.OUTPUT:
        concept = pick_concept()
        attr = rng.choice(concept.attributes)
        links.append(ConceptLink(concept.name, LinkRole.READS, attr.name))
    elif aui is AuiType.INPUT:
        if rng.random() < 0.9:
            concept = pick_concept()
            attr = rng.choice(concept.attributes)
            links.append(ConceptLink(concept.name, LinkRole.WRITES, attr.name))
    elif aui is AuiType.COMMAND and rng.random() < 0.2:
        links.append(ConceptLink(pick_concept().name, LinkRole.READS))
    elif kind in (TaskKind.SYSTEM, TaskKind.USER) and rng.random() < 0.3:
        links.append(ConceptLink(pick_concept().name, LinkRole.READS))
    return tuple(links)


def _leaf(rng: random.Random, ids: _Ids, concepts, interactive_budget: list[int]) -> Task:
    if interactive_budget[0] > 0 and rng.random() < 0.75:
        interactive_budget[0] -= 1
        aui = rng.choice(
            [AuiType.INPUT, AuiType.OUTPUT, AuiType.SELECTION, AuiType.COMMAND, AuiType.COMMAND]
        )
        return Task(
            id=ids.fresh("t"),
            name=rng.choice(_WORDS),
            kind=TaskKind.INTERACTIVE,
            aui_type=aui,
            iterative=rng.random() < 0.05,
            optional=rng.random() < 0.1,
            links=_random_links(rng, concepts, aui, TaskKind.INTERACTIVE),
        )
    kind = rng.choice([TaskKind.SYSTEM, TaskKind.SYSTEM, TaskKind.USER])
    return Task(
        id=ids.fresh("t"),
        name=rng.choice(_WORDS),
        kind=kind,
        links=_random_links(rng, concepts, None, kind),
    )


def _subtree(rng: random.Random, ids: _Ids, concepts, depth: int, interactive_budget) -> Task:
    if depth <= 0 or interactive_budget[0] <= 0 or rng.random() < 0.35:
        return _leaf(rng, ids, concepts, interactive_budget)
    operator = rng.choice([Operator.SEQUENCE, Operator.CHOICE, Operator.ORDER_INDEPENDENT])
    children = tuple(
        _subtree(rng, ids, concepts, depth - 1, interactive_budget)
        for _ in range(rng.randint(2, 4))
    )
    if rng.random() < 0.15:
        return Task(
            id=ids.fresh("t"),
            name=rng.choice(_WORDS),
            kind=TaskKind.INTERACTIVE,
            aui_type=AuiType.CONTAINER,
            operator=operator,
            children=children,
        )
    return Task(
        id=ids.fresh("t"),
        name=rng.choice(_WORDS),
        kind=TaskKind.ABSTRACT,
        operator=operator,
        iterative=rng.random() < 0.05,
        children=children,
    )


def _ensure_interactive(task: Task, ids: _Ids) -> Task:
    """Replace the first leaf with a COMMAND leaf when no interactive leaf exists."""

    def has_interactive(node: Task) -> bool:
        if node.is_leaf:
            return node.kind is TaskKind.INTERACTIVE
        return any(has_interactive(c) for c in node.children)

    if has_interactive(task):
        return task
    if task.is_leaf:
        return Task(
            id=task.id, name=task.name, kind=TaskKind.INTERACTIVE, aui_type=AuiType.COMMAND
        )
    fixed_first = _ensure_interactive(task.children[0], ids)
    return Task(
        id=task.id,
        name=task.name,
        kind=task.kind,
        aui_type=task.aui_type,
        operator=task.operator,
        optional=task.optional,
        iterative=task.iterative,
        links=task.links,
        children=(fixed_first,) + task.children[1:],
    )


def random_tda(rng: random.Random, max_depth: int = 4, max_interactive: int = 8) -> TdaModel:
    ids = _Ids()
    concepts = _random_concepts(rng, ids)
    budget = [rng.randint(1, max_interactive)]
    root = _subtree(rng, ids, concepts, max_depth, budget)
    root = _ensure_interactive(root, ids)
    model = TdaModel(model_name=f"m{rng.randint(0, 10**6)}", concepts=concepts, root_task=root)
    report = validate_tda(model)
    assert report.ok, f"generator produced an invalid model: {report.summary()}"
    return model


# ---------------------------------------------------------------------------
# Instance data and scripts
# ---------------------------------------------------------------------------

def random_instance_data(rng: random.Random, model: TdaModel) -> dict[str, list[dict]]:
    data: dict[str, list[dict]] = {}
    for concept in model.concepts:
        records = []
        for _ in range(rng.randint(0, 7)):
            record = {}
            for attr in concept.attributes:
                if attr.datatype is Datatype.TEXT or attr.datatype is Datatype.SECRET:
                    value = rng.choice(_WORDS)
                elif attr.datatype is Datatype.INTEGER:
                    value = rng.randint(0, 99)
                elif attr.datatype is Datatype.BOOLEAN:
                    value = rng.random() < 0.5
                elif attr.datatype is Datatype.DATE:
                    value = f"2024-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}"
                else:
                    value = rng.choice(attr.values)
                if attr.multiplicity is Multiplicity.MANY:
                    value = [value]
                record[attr.name] = value
            records.append(record)
        data[concept.name] = records
    return data


def random_script(rng: random.Random, cui: CuiModel, length: int) -> list[UserEvent]:
    element_ids = [e.id for e in cui.elements()] or ["nothing"]
    events = []
    for _ in range(length):
        kind = rng.choice(list(UserEventKind))
        element = rng.choice(element_ids)
        payload = None
        if kind is UserEventKind.SELECT:
            payload = rng.randint(0, 4)
        elif kind is UserEventKind.INPUT:
            payload = rng.choice(_WORDS)
        events.append(UserEvent(kind=kind, element=element, payload=payload))
    return events
