"""tdac: compile task/domain models into an executable web UI.

The pipeline: a .tda.json model (task tree + domain concepts + interaction
types) compiles through usability-annotated transformation rules into a
concrete UI model plus a navigation state chart, renders to HTML, and runs
either headlessly against a scripted event sequence or interactively in the
browser runtime, logging every user action.
"""

from .compiler import (
    CompilationTrace,
    CompileResult,
    compile_model,
    identify_windows,
    select_interactor,
    synthesize_statechart,
    apply_usability_rules,
)
from .errors import TdacError
from .ir import (
    CuiElement,
    CuiModel,
    StateChart,
    parse_cui,
    parse_ir,
    parse_sc,
    reachable_states,
    serialize_cui,
    serialize_ir,
    serialize_sc,
    validate_ir,
)
from .render import parse_extensions, render_app, render_window
from .rules import default_registry, register_rule, registry_from_manifest
from .runtime import (
    Runtime,
    UserEvent,
    UserEventKind,
    init_runtime,
    parse_instance_data,
    parse_script,
    run_script,
    write_trace,
)
from .tda import TdaModel, parse_tda, serialize_tda, validate_tda
from .usability import criteria_catalog, render_report, tally_report

__version__ = "0.1.0"

__all__ = [
    "CompilationTrace",
    "CompileResult",
    "CuiElement",
    "CuiModel",
    "Runtime",
    "StateChart",
    "TdacError",
    "TdaModel",
    "UserEvent",
    "UserEventKind",
    "apply_usability_rules",
    "compile_model",
    "criteria_catalog",
    "default_registry",
    "identify_windows",
    "init_runtime",
    "parse_cui",
    "parse_extensions",
    "parse_instance_data",
    "parse_ir",
    "parse_sc",
    "parse_script",
    "parse_tda",
    "reachable_states",
    "register_rule",
    "registry_from_manifest",
    "render_app",
    "render_report",
    "render_window",
    "run_script",
    "select_interactor",
    "serialize_cui",
    "serialize_ir",
    "serialize_sc",
    "serialize_tda",
    "synthesize_statechart",
    "tally_report",
    "validate_ir",
    "validate_tda",
    "write_trace",
]
