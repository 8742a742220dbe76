"""Stable on-disk form of compiled machines (`.smir.json`).

The document is canonical JSON: sorted keys, no insignificant whitespace,
reals as shortest round-trip decimals. The `crc32` key holds the CRC-32 of
the canonical body (document minus that key), so identical models always
produce byte-identical files and any corruption is caught on load.
"""

from __future__ import annotations

import json
import zlib

from . import ast
from .compiler import (
    CompiledBody,
    CompiledMachine,
    CompiledState,
    CompiledTransition,
    DefinedOp,
    ExternalOp,
    Instr,
    OpParam,
    Program,
    VarSlot,
    validate_compiled,
)

IR_VERSION = 1


class IrError(Exception):
    pass


class IrVersionError(IrError):
    pass


class IrChecksumError(IrError):
    pass


class IrFormatError(IrError):
    pass


def _value_out(v: ast.Value):
    if isinstance(v, tuple):
        return [float(v[0]), float(v[1])]
    return v


def _value_in(v) -> ast.Value:
    if isinstance(v, list):
        if len(v) != 2:
            raise IrFormatError(f"bad vector literal {v!r}")
        return (float(v[0]), float(v[1]))
    return v


def _program_out(prog: Program | None):
    if prog is None:
        return None
    return [
        [ins.op, _value_out(ins.arg) if ins.op == "push" else ins.arg]
        for ins in prog
    ]


def _program_in(data) -> Program | None:
    if data is None:
        return None
    try:
        return tuple(
            Instr(op, _value_in(arg) if op == "push" else arg) for op, arg in data
        )
    except (TypeError, ValueError) as exc:
        raise IrFormatError(f"malformed program: {exc}") from exc


def _state_out(s: CompiledState) -> dict:
    return {
        "name": s.name,
        "entry": _program_out(s.entry),
        "during": _program_out(s.during),
        "exit": _program_out(s.exit),
        "final": s.final,
    }


def _state_in(d) -> CompiledState:
    return CompiledState(
        d["name"],
        _program_in(d["entry"]),
        _program_in(d["during"]),
        _program_in(d["exit"]),
        bool(d["final"]),
    )


def _transition_out(t: CompiledTransition) -> dict:
    return {
        "src": t.src,
        "tgt": t.tgt,
        "event": t.event,
        "guard": _program_out(t.guard),
        "action": _program_out(t.action),
    }


def _transition_in(d) -> CompiledTransition:
    return CompiledTransition(
        int(d["src"]),
        int(d["tgt"]),
        d["event"],
        _program_in(d["guard"]),
        _program_in(d["action"]),
    )


def _params_out(params: tuple[OpParam, ...]) -> list:
    return [{"name": p.name, "type": p.type.value} for p in params]


def _params_in(data) -> tuple[OpParam, ...]:
    return tuple(OpParam(p["name"], ast.TypeRef(p["type"])) for p in data)


def machine_to_dict(cm: CompiledMachine) -> dict:
    return {
        "name": cm.name,
        "states": [_state_out(s) for s in cm.states],
        "initial": cm.initial,
        "transitions": [_transition_out(t) for t in cm.transitions],
        "events": list(cm.events),
        "vars": [
            {"name": v.name, "type": v.type.value, "init": _value_out(v.init)}
            for v in cm.vars
        ],
        "clocks": list(cm.clocks),
        "externalOps": [
            {
                "name": op.name,
                "params": _params_out(op.params),
                "pre": _program_out(op.pre),
                "post": _program_out(op.post),
            }
            for op in cm.external_ops
        ],
        "definedOps": [
            {
                "name": op.name,
                "params": _params_out(op.params),
                "pre": _program_out(op.pre),
                "post": _program_out(op.post),
                "body": {
                    "states": [_state_out(s) for s in op.body.states],
                    "initial": op.body.initial,
                    "transitions": [_transition_out(t) for t in op.body.transitions],
                },
            }
            for op in cm.defined_ops
        ],
    }


def machine_from_dict(d: dict) -> CompiledMachine:
    try:
        cm = CompiledMachine(
            name=d["name"],
            states=tuple(_state_in(s) for s in d["states"]),
            initial=int(d["initial"]),
            transitions=tuple(_transition_in(t) for t in d["transitions"]),
            events=tuple(d["events"]),
            vars=tuple(
                VarSlot(v["name"], ast.TypeRef(v["type"]), _value_in(v["init"]))
                for v in d["vars"]
            ),
            clocks=tuple(d["clocks"]),
            external_ops=tuple(
                ExternalOp(
                    op["name"],
                    _params_in(op["params"]),
                    _program_in(op["pre"]),
                    _program_in(op["post"]),
                )
                for op in d["externalOps"]
            ),
            defined_ops=tuple(
                DefinedOp(
                    op["name"],
                    _params_in(op["params"]),
                    _program_in(op["pre"]),
                    _program_in(op["post"]),
                    CompiledBody(
                        tuple(_state_in(s) for s in op["body"]["states"]),
                        int(op["body"]["initial"]),
                        tuple(_transition_in(t) for t in op["body"]["transitions"]),
                    ),
                )
                for op in d["definedOps"]
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IrFormatError(f"malformed IR document: {exc!r}") from exc
    return cm


def _canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def serialize_ir(cm: CompiledMachine) -> bytes:
    """Deterministic bytes for one compiled machine."""
    body = {"version": IR_VERSION, "machines": [machine_to_dict(cm)]}
    crc = zlib.crc32(_canonical(body).encode("utf-8"))
    doc = dict(body)
    doc["crc32"] = f"{crc:08x}"
    return _canonical(doc).encode("utf-8")


def load_ir(data: bytes) -> CompiledMachine:
    """Parse, checksum-verify, and re-validate an IR document."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IrFormatError(f"not a valid IR document: {exc}") from exc
    if not isinstance(doc, dict):
        raise IrFormatError("IR document must be a JSON object")
    version = doc.get("version")
    if version != IR_VERSION:
        raise IrVersionError(
            f"unsupported IR version {version!r}, this tool reads version {IR_VERSION}"
        )
    stored_crc = doc.pop("crc32", None)
    if stored_crc is None:
        raise IrFormatError("IR document has no crc32")
    actual = f"{zlib.crc32(_canonical(doc).encode('utf-8')):08x}"
    if stored_crc != actual:
        raise IrChecksumError(
            f"checksum mismatch: document says {stored_crc}, body is {actual}"
        )
    machines = doc.get("machines")
    if not isinstance(machines, list) or len(machines) != 1:
        raise IrFormatError("IR document must hold exactly one machine")
    cm = machine_from_dict(machines[0])
    try:
        validate_compiled(cm)
    except Exception as exc:
        raise IrFormatError(f"IR violates machine invariants: {exc}") from exc
    return cm
