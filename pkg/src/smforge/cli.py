"""Command-line entry point.

    smforge check   <model.rcm>
    smforge compile <model.rcm> --machine NAME -o out.smir.json
    smforge codegen <model.rcm> --machine NAME -o gendir/
    smforge run     <ir.smir.json> --script events.ndjson --max-cycles N -o trace.ndjson
    smforge sim     <scenario.json> [--seed N]

Exit codes: 0 success, 1 model/config error, 2 I/O error, 3 runtime fault.
Output files are written atomically (temp file + rename); a failing command
never leaves partial output. SMFORGE_LOG=error|warn|info|debug controls
logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .analyzer import ResolvedModel, analyze, check_operation_contracts
from .ast import ModelUnit
from .codegen import emit_interface, emit_machine
from .compiler import CompileError, compile_machine
from .diagnostics import Diagnostic, diagnostics_to_text, has_errors
from .ir import IrError, load_ir, serialize_ir
from .parser import parse
from .runtime import (
    NullPlatform,
    RuntimeConfig,
    create_context,
    load_event_script,
    run_script,
    trace_to_ndjson,
)
from .sim.scenario import (
    ConfigError,
    ScenarioConfig,
    SimulationFault,
    atomic_write_bytes,
    atomic_write_text,
    run_scenario,
)

EXIT_OK = 0
EXIT_MODEL = 1
EXIT_IO = 2
EXIT_FAULT = 3

log = logging.getLogger("smforge")


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text("utf-8")
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _load_checked(path: str) -> ResolvedModel:
    unit = parse(_read_text(path), path)
    if isinstance(unit, list):
        raise _CliError(EXIT_MODEL, diagnostics_to_text(unit))
    model = analyze(unit)
    if isinstance(model, list):
        raise _CliError(EXIT_MODEL, diagnostics_to_text(model))
    contract_diags = check_operation_contracts(model)
    if has_errors(contract_diags):
        raise _CliError(EXIT_MODEL, diagnostics_to_text(contract_diags))
    return model


def cmd_check(args: argparse.Namespace) -> int:
    unit = parse(_read_text(args.model), args.model)
    if isinstance(unit, list):
        print(diagnostics_to_text(unit))
        return EXIT_MODEL
    result = analyze(unit)
    if isinstance(result, list):
        print(diagnostics_to_text(result))
        return EXIT_MODEL
    diags: list[Diagnostic] = list(result.warnings)
    diags.extend(check_operation_contracts(result))
    if diags:
        print(diagnostics_to_text(diags))
    if has_errors(diags):
        return EXIT_MODEL
    print(f"{args.model}: ok")
    return EXIT_OK


def cmd_compile(args: argparse.Namespace) -> int:
    model = _load_checked(args.model)
    try:
        cm = compile_machine(model, args.machine)
    except CompileError as exc:
        raise _CliError(EXIT_MODEL, str(exc)) from exc
    data = serialize_ir(cm)
    try:
        atomic_write_bytes(args.output, data)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write {args.output}: {exc}") from exc
    log.info("wrote %s (%d bytes)", args.output, len(data))
    return EXIT_OK


def cmd_codegen(args: argparse.Namespace) -> int:
    model = _load_checked(args.model)
    unit: ModelUnit = model.unit
    if not unit.machines and not unit.interfaces:
        raise _CliError(EXIT_MODEL, "nothing to generate: no machines or interfaces")
    try:
        cm = compile_machine(model, args.machine)
    except CompileError as exc:
        raise _CliError(EXIT_MODEL, str(exc)) from exc
    machine_decl = unit.machine(args.machine)
    iface_names = [name for name, _ in machine_decl.requires]
    out_dir = Path(args.output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in iface_names:
            text = emit_interface(unit.interface(name))
            atomic_write_text(out_dir / f"{name}.gen.txt", text)
        atomic_write_text(out_dir / f"{cm.name}.gen.txt", emit_machine(cm, iface_names))
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write to {args.output}: {exc}") from exc
    log.info("wrote %d unit(s) to %s", len(iface_names) + 1, out_dir)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cm = load_ir(_read_bytes(args.ir))
    except IrError as exc:
        raise _CliError(EXIT_MODEL, str(exc)) from exc
    try:
        script = load_event_script(_read_text(args.script))
    except ValueError as exc:
        raise _CliError(EXIT_MODEL, str(exc)) from exc
    ctx = create_context(cm, NullPlatform(cm), RuntimeConfig())
    try:
        records = run_script(ctx, script, args.max_cycles)
    except ValueError as exc:
        raise _CliError(EXIT_MODEL, str(exc)) from exc
    try:
        atomic_write_text(args.output, trace_to_ndjson(records))
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write {args.output}: {exc}") from exc
    if ctx.status == "faulted":
        print(f"context faulted: {ctx.fault_reason}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_sim(args: argparse.Namespace) -> int:
    try:
        cfg = ScenarioConfig.from_file(args.scenario)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read {args.scenario}: {exc}") from exc
    except ConfigError as exc:
        raise _CliError(EXIT_MODEL, str(exc)) from exc
    try:
        result = run_scenario(cfg, seed_override=args.seed)
    except ConfigError as exc:
        raise _CliError(EXIT_MODEL, str(exc)) from exc
    except SimulationFault as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAULT
    print(result.final_row)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="smforge",
        description="state-machine controller toolchain and swarm simulator",
    )
    ap.add_argument("--version", action="version", version=f"smforge {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("check", help="parse and analyze a model")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compile", help="compile a machine to IR")
    p.add_argument("model")
    p.add_argument("--machine", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("codegen", help="emit source text units")
    p.add_argument("model")
    p.add_argument("--machine", required=True)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_codegen)

    p = sub.add_parser("run", help="interpret an IR file against an event script")
    p.add_argument("ir")
    p.add_argument("--script", required=True)
    p.add_argument("--max-cycles", type=int, default=10_000)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sim", help="run a swarm scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_sim)

    return ap


def _setup_logging() -> None:
    level = {
        "error": logging.ERROR,
        "warn": logging.WARNING,
        "info": logging.INFO,
        "debug": logging.DEBUG,
    }.get(os.environ.get("SMFORGE_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(name)s %(levelname)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
