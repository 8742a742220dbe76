"""smforge: a state-machine controller DSL toolchain.

Parse textual controller models, check them, compile them to a serializable
transition-table IR, interpret them deterministically, and run them inside
a built-in 2D differential-drive swarm simulator.
"""

from importlib import resources

from .analyzer import ResolvedModel, analyze, check_operation_contracts
from .ast import ModelUnit, TypeRef, ast_equal
from .compiler import CompiledMachine, CompileError, compile_machine
from .codegen import emit_interface, emit_machine, emit_source
from .diagnostics import Diagnostic, Span
from .ir import IrChecksumError, IrError, IrFormatError, IrVersionError, load_ir, serialize_ir
from .parser import parse
from .render import render
from .runtime import (
    ExecutionContext,
    NullPlatform,
    PlatformBinding,
    RuntimeConfig,
    TraceRecord,
    UnboundOperationError,
    create_context,
    load_event_script,
    run_script,
    step,
    trace_to_ndjson,
)

__version__ = "0.1.0"


def corpus_model_text(name: str) -> str:
    """Source text of a bundled model file ('aggregation' or 'taxis')."""
    return (
        resources.files("smforge").joinpath(f"models/{name}.rcm").read_text("utf-8")
    )


__all__ = [
    "ModelUnit", "TypeRef", "ast_equal", "parse", "render",
    "ResolvedModel", "analyze", "check_operation_contracts",
    "CompiledMachine", "CompileError", "compile_machine",
    "emit_interface", "emit_machine", "emit_source",
    "Diagnostic", "Span",
    "IrError", "IrVersionError", "IrChecksumError", "IrFormatError",
    "serialize_ir", "load_ir",
    "ExecutionContext", "NullPlatform", "PlatformBinding", "RuntimeConfig",
    "TraceRecord", "UnboundOperationError", "create_context", "step",
    "run_script", "load_event_script", "trace_to_ndjson",
    "corpus_model_text", "__version__",
]
