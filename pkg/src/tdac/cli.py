"""Command-line surface: validate, compile, render, simulate, report, serve.

Exit codes: 0 success, 1 validation violations, 2 errors (unreadable input,
failed pipeline stage, bad arguments). All file outputs are written
atomically, so reruns on unchanged inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .compiler import compile_model, parse_trace, serialize_trace
from .errors import TdacError
from .ir import parse_cui, parse_sc, serialize_cui, serialize_sc, validate_ir
from .jsonio import atomic_write
from .render import ExtensionManifest, parse_extensions, render_app
from .rules import default_registry, registry_from_manifest
from .runtime import init_runtime, parse_instance_data, parse_script, run_script, write_trace
from .tda import parse_tda, validate_tda
from .usability import render_report, tally_report

OK, VIOLATIONS, ERROR = 0, 1, 2


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def _load_registry(args):
    if getattr(args, "rules", None):
        return registry_from_manifest(_read(args.rules))
    return default_registry()


def _load_data(args) -> dict:
    if getattr(args, "data", None):
        return parse_instance_data(_read(args.data))
    return {}


def _find_ir(ir_arg: str) -> tuple[bytes, bytes]:
    """Accept a compile output directory or a path prefix for the .cui/.sc pair."""
    path = Path(ir_arg)
    if path.is_dir():
        cui_files = sorted(path.glob("*.cui.json"))
        sc_files = sorted(path.glob("*.sc.json"))
        if len(cui_files) != 1 or len(sc_files) != 1:
            raise TdacError(f"{ir_arg}: expected exactly one .cui.json and one .sc.json")
        return cui_files[0].read_bytes(), sc_files[0].read_bytes()
    cui_path = Path(str(path) + ".cui.json")
    sc_path = Path(str(path) + ".sc.json")
    if not cui_path.exists() or not sc_path.exists():
        raise TdacError(f"{ir_arg}: no such directory or .cui.json/.sc.json prefix")
    return cui_path.read_bytes(), sc_path.read_bytes()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    model = parse_tda(_read(args.model), check=False)
    report = validate_tda(model)
    if report.ok:
        print(f"{args.model}: ok")
        return OK
    for violation in report.violations:
        print(str(violation), file=sys.stderr)
    return VIOLATIONS


def cmd_compile(args) -> int:
    model = parse_tda(_read(args.model), check=False)
    report = validate_tda(model)
    if not report.ok:
        for violation in report.violations:
            print(str(violation), file=sys.stderr)
        return VIOLATIONS
    registry = _load_registry(args)
    data = _load_data(args)
    counts = {name: len(records) for name, records in data.items()}
    result = compile_model(model, registry, options_counts=counts)
    out = Path(args.out)
    cui_bytes, sc_bytes = serialize_cui(result.cui), serialize_sc(result.sc)
    atomic_write(out / f"{model.model_name}.cui.json", cui_bytes)
    atomic_write(out / f"{model.model_name}.sc.json", sc_bytes)
    atomic_write(out / f"{model.model_name}.trace.json", serialize_trace(result.trace))
    print(f"compiled {model.model_name}: {len(result.cui.windows)} windows, "
          f"{len(result.sc.states)} states -> {out}")
    return OK


def cmd_render(args) -> int:
    cui_bytes, sc_bytes = _find_ir(args.ir)
    cui, sc = parse_cui(cui_bytes), parse_sc(sc_bytes)
    report = validate_ir(cui, sc)
    if not report.ok:
        for violation in report.violations:
            print(str(violation), file=sys.stderr)
        return VIOLATIONS
    extensions = parse_extensions(_read(args.ext)) if args.ext else ExtensionManifest.empty()
    data = _load_data(args)
    written = render_app(cui, sc, extensions, args.out, data=data)
    print(f"rendered {len(written)} files -> {args.out}")
    return OK


def cmd_simulate(args) -> int:
    cui_bytes, sc_bytes = _find_ir(args.ir)
    cui, sc = parse_cui(cui_bytes), parse_sc(sc_bytes)
    concepts = ()
    if args.tda:
        concepts = parse_tda(_read(args.tda)).concepts
    data = _load_data(args)
    events = parse_script(_read(args.script))
    runtime = init_runtime(cui, sc, data, concepts=concepts, clock=time.time)
    runtime, trace = run_script(runtime, events)
    blob = write_trace(runtime, sink=args.out)
    if not args.out:
        sys.stdout.write(blob.decode("utf-8"))
    rejected = sum(1 for entry in trace if entry.outcome.result == "REJECTED")
    print(
        f"simulated {len(trace)} events: state={runtime.current_state} rejected={rejected}",
        file=sys.stderr,
    )
    return OK


def cmd_report(args) -> int:
    trace = parse_trace(_read(args.trace))
    registry = _load_registry(args)
    report = tally_report(trace, registry)
    text, blob = render_report(report)
    sys.stdout.write(text)
    if args.out:
        atomic_write(args.out, blob)
    return OK


def cmd_serve(args) -> int:
    from .server import serve_app

    try:
        server = serve_app(args.dir, port=args.port)
    except OSError as exc:
        print(f"cannot bind port {args.port}: {exc}", file=sys.stderr)
        return ERROR
    host, port = server.server_address
    print(
        f"serving {args.dir} at http://{host}:{port}/ (POST /log to record actions)",
        flush=True,
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdac",
        description="Compile task/domain models into an executable UI and run it.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a .tda.json model against all invariants")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile a model to .cui.json/.sc.json/.trace.json")
    p.add_argument("model")
    p.add_argument("--rules", help="rule manifest (.rules.json); defaults to built-ins")
    p.add_argument("--data", help="instance data (.data.json) for declared option counts")
    p.add_argument("--out", default="build", help="output directory (default: build)")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("render", help="render a compiled pair into a runnable app directory")
    p.add_argument("ir", help="compile output directory or path prefix of the .cui/.sc pair")
    p.add_argument("--ext", help="extension manifest (.ext.json)")
    p.add_argument("--data", help="instance data copied into the app")
    p.add_argument("--out", default="app", help="output directory (default: app)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate", help="run a scripted session headlessly")
    p.add_argument("ir", help="compile output directory or path prefix of the .cui/.sc pair")
    p.add_argument("--data", help="instance data (.data.json)")
    p.add_argument("--script", required=True, help="event script (.script.json)")
    p.add_argument("--tda", help="source model for strict data validation")
    p.add_argument("--out", help="trace output (.trace.ndjson); stdout when omitted")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="usability tally for a compilation trace")
    p.add_argument("trace", help="compilation trace (.trace.json)")
    p.add_argument("--rules", help="rule manifest used for the compile")
    p.add_argument("--out", help="write the .usability.json document here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="serve a rendered app directory and log actions")
    p.add_argument("dir")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    except TdacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
