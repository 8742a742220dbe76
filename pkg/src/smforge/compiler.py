"""Flattening of a resolved machine into an executable CompiledMachine.

All names become indices here; runtime never sees a string lookup. Programs
are postfix instruction tuples over a small op-set:

    push v      push a literal (bool / int / real / 2-vector)
    ldv k       load machine variable slot k        stv k   store
    ldp k       load parameter slot k (op frame)    stp k   store
    ldc k       push since() of clock k             rsc k   reset clock k
    not neg and or eq ne lt le gt ge add sub mul div sel
    callx k     invoke external operation k (pops its arity)
    calld k     invoke defined operation k

`and`/`or`/`sel` evaluate all operands (the op-set has no jumps); division
is the only instruction that can fault. Every program is statically verified
stack-balanced: net depth 1 for expressions, 0 for action sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ast
from .analyzer import MachineScope, OpInfo, ResolvedModel

UNARY_OPS = {"not", "neg"}
BINARY_OPS = {
    "and", "or", "eq", "ne", "lt", "le", "gt", "ge", "add", "sub", "mul", "div",
}
_BINOP_CODE = {
    "and": "and", "or": "or", "==": "eq", "!=": "ne", "<": "lt", "<=": "le",
    ">": "gt", ">=": "ge", "+": "add", "-": "sub", "*": "mul", "/": "div",
}


class CompileError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class Instr:
    op: str
    arg: object = None


Program = tuple[Instr, ...]


@dataclass(frozen=True, slots=True)
class VarSlot:
    name: str
    type: ast.TypeRef
    init: ast.Value


@dataclass(frozen=True, slots=True)
class OpParam:
    name: str
    type: ast.TypeRef


@dataclass(frozen=True, slots=True)
class CompiledState:
    name: str
    entry: Program | None
    during: Program | None
    exit: Program | None
    final: bool


@dataclass(frozen=True, slots=True)
class CompiledTransition:
    src: int
    tgt: int
    event: int | None
    guard: Program | None
    action: Program | None


@dataclass(frozen=True, slots=True)
class CompiledBody:
    states: tuple[CompiledState, ...]
    initial: int
    transitions: tuple[CompiledTransition, ...]


@dataclass(frozen=True, slots=True)
class ExternalOp:
    name: str
    params: tuple[OpParam, ...]
    pre: Program | None
    post: Program | None


@dataclass(frozen=True, slots=True)
class DefinedOp:
    name: str
    params: tuple[OpParam, ...]
    pre: Program | None
    post: Program | None
    body: CompiledBody


@dataclass(frozen=True, slots=True)
class CompiledMachine:
    name: str
    states: tuple[CompiledState, ...]
    initial: int
    transitions: tuple[CompiledTransition, ...]
    events: tuple[str, ...]
    vars: tuple[VarSlot, ...]
    clocks: tuple[str, ...]
    external_ops: tuple[ExternalOp, ...]
    defined_ops: tuple[DefinedOp, ...]

    def outgoing(self, state_idx: int) -> list[tuple[int, CompiledTransition]]:
        """Transitions leaving a state, in table (= textual) order."""
        return [
            (i, t) for i, t in enumerate(self.transitions) if t.src == state_idx
        ]


_TYPE_DEFAULT: dict[ast.TypeRef, ast.Value] = {
    ast.TypeRef.BOOLEAN: False,
    ast.TypeRef.INT: 0,
    ast.TypeRef.REAL: 0.0,
    ast.TypeRef.VECTOR2D: (0.0, 0.0),
}


def coerce_value(ty: ast.TypeRef, value: ast.Value) -> ast.Value:
    """Promote an int to float for real slots; identity otherwise."""
    if ty is ast.TypeRef.REAL and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if ty is ast.TypeRef.VECTOR2D:
        return (float(value[0]), float(value[1]))
    return value


class _ProgramBuilder:
    def __init__(
        self,
        scope: MachineScope,
        param_slot: dict[str, int] | None,
        op_kind: dict[str, tuple[str, int]],
    ):
        self.scope = scope
        self.param_slot = param_slot or {}
        self.op_kind = op_kind  # name -> ("callx"|"calld", index)
        self.code: list[Instr] = []

    def emit(self, op: str, arg: object = None) -> None:
        self.code.append(Instr(op, arg))

    def expr(self, e: ast.Expr) -> None:
        if isinstance(e, ast.Literal):
            self.emit("push", e.value)
        elif isinstance(e, ast.VarRef):
            if e.name in self.param_slot:
                self.emit("ldp", self.param_slot[e.name])
            else:
                self.emit("ldv", self.scope.var_slot[e.name])
        elif isinstance(e, ast.SinceExpr):
            self.emit("ldc", self.scope.clock_index[e.clock])
        elif isinstance(e, ast.Unary):
            self.expr(e.operand)
            self.emit("not" if e.op == "not" else "neg")
        elif isinstance(e, ast.Binary):
            self.expr(e.left)
            self.expr(e.right)
            self.emit(_BINOP_CODE[e.op])
        elif isinstance(e, ast.Conditional):
            self.expr(e.cond)
            self.expr(e.then)
            self.expr(e.other)
            self.emit("sel")
        else:
            raise CompileError(f"cannot compile expression {e!r}")

    def action(self, a: ast.Action) -> None:
        if isinstance(a, ast.ClockReset):
            self.emit("rsc", self.scope.clock_index[a.clock])
        elif isinstance(a, ast.Assign):
            self.expr(a.value)
            if a.target in self.param_slot:
                self.emit("stp", self.param_slot[a.target])
            else:
                self.emit("stv", self.scope.var_slot[a.target])
        elif isinstance(a, ast.OpCall):
            for arg in a.args:
                self.expr(arg)
            kind, idx = self.op_kind[a.name]
            self.emit(kind, idx)
        else:
            raise CompileError(f"cannot compile action {a!r}")

    def build(self) -> Program:
        return tuple(self.code)


def _compile_expr(e, scope, param_slot, op_kind) -> Program:
    b = _ProgramBuilder(scope, param_slot, op_kind)
    b.expr(e)
    return b.build()


def _compile_actions(seq, scope, param_slot, op_kind) -> Program:
    b = _ProgramBuilder(scope, param_slot, op_kind)
    for a in seq:
        b.action(a)
    return b.build()


def compile_machine(model: ResolvedModel, machine_name: str) -> CompiledMachine:
    """Flatten one machine of a clean (zero-error) model."""
    scope = model.machines.get(machine_name)
    if scope is None:
        raise CompileError(f"unknown machine {machine_name!r}")
    m = scope.machine

    var_slots = tuple(
        VarSlot(
            v.name,
            v.type,
            coerce_value(v.type, v.init if v.init is not None else _TYPE_DEFAULT[v.type]),
        )
        for v, _ in scope.var_decls
    )

    # partition ops preserving interface declaration order
    externals: list[OpInfo] = []
    defined: list[OpInfo] = []
    op_kind: dict[str, tuple[str, int]] = {}
    for info in scope.ops:
        if info.is_defined:
            op_kind[info.name] = ("calld", len(defined))
            defined.append(info)
        else:
            op_kind[info.name] = ("callx", len(externals))
            externals.append(info)

    def contract(expr: ast.Expr | None, params: list[ast.Param]) -> Program | None:
        if expr is None:
            return None
        param_slot = {p.name: i for i, p in enumerate(params)}
        try:
            return _compile_expr(expr, scope, param_slot, op_kind)
        except KeyError as exc:
            raise CompileError(
                f"operation contract references name {exc.args[0]!r} that is not"
                f" in scope for machine {machine_name!r}"
                " (run check_operation_contracts)"
            ) from exc

    external_ops = tuple(
        ExternalOp(
            info.name,
            tuple(OpParam(p.name, p.type) for p in info.params),
            contract(info.definition.pre if info.definition else None, info.params),
            contract(info.definition.post if info.definition else None, info.params),
        )
        for info in externals
    )

    def compile_states(
        states: list[ast.StateDecl], param_slot: dict[str, int] | None
    ) -> tuple[CompiledState, ...]:
        out = []
        for s in states:
            progs = [
                _compile_actions(seq, scope, param_slot, op_kind)
                if seq is not None
                else None
                for seq in (s.entry, s.during, s.exit)
            ]
            out.append(CompiledState(s.name, progs[0], progs[1], progs[2], s.is_final))
        return tuple(out)

    def compile_transitions(
        transitions: list[ast.TransitionDecl],
        state_index: dict[str, int],
        event_index: dict[str, int] | None,
        param_slot: dict[str, int] | None,
    ) -> tuple[CompiledTransition, ...]:
        out = []
        for t in transitions:
            guard = (
                _compile_expr(t.guard, scope, param_slot, op_kind)
                if t.guard is not None
                else None
            )
            action = (
                _compile_actions(t.action, scope, param_slot, op_kind)
                if t.action is not None
                else None
            )
            event = event_index[t.trigger] if t.trigger is not None else None
            out.append(
                CompiledTransition(
                    state_index[t.source], state_index[t.target], event, guard, action
                )
            )
        return tuple(out)

    defined_ops = []
    for info in defined:
        op = info.definition
        param_slot = {p.name: i for i, p in enumerate(op.params)}
        body_state_index = {s.name: i for i, s in enumerate(op.body.states)}
        body = CompiledBody(
            compile_states(op.body.states, param_slot),
            next(i for i, s in enumerate(op.body.states) if s.is_initial),
            compile_transitions(op.body.transitions, body_state_index, None, param_slot),
        )
        defined_ops.append(
            DefinedOp(
                info.name,
                tuple(OpParam(p.name, p.type) for p in op.params),
                contract(op.pre, op.params),
                contract(op.post, op.params),
                body,
            )
        )

    cm = CompiledMachine(
        name=m.name,
        states=compile_states(m.states, None),
        initial=next(i for i, s in enumerate(m.states) if s.is_initial),
        transitions=compile_transitions(
            m.transitions, scope.state_index, scope.event_index, None
        ),
        events=tuple(scope.events),
        vars=var_slots,
        clocks=tuple(scope.clocks),
        external_ops=external_ops,
        defined_ops=tuple(defined_ops),
    )
    validate_compiled(cm)
    return cm


# --- static validation (used both after compile and after IR load) -----------

_PUSH_EFFECT = {"push": 1, "ldv": 1, "ldp": 1, "ldc": 1}
_NEUTRAL = {"not", "neg"}
_POP1 = {"stv", "stp"}
_ZERO = {"rsc"}


class InvalidMachineError(Exception):
    pass


def _check_program(
    cm: CompiledMachine,
    prog: Program,
    n_params: int,
    expect_depth: int,
    where: str,
) -> None:
    depth = 0
    for ins in prog:
        if ins.op in _PUSH_EFFECT:
            if ins.op == "ldv" and not 0 <= ins.arg < len(cm.vars):
                raise InvalidMachineError(f"{where}: bad variable slot {ins.arg}")
            if ins.op == "ldp" and not 0 <= ins.arg < n_params:
                raise InvalidMachineError(f"{where}: bad parameter slot {ins.arg}")
            if ins.op == "ldc" and not 0 <= ins.arg < len(cm.clocks):
                raise InvalidMachineError(f"{where}: bad clock index {ins.arg}")
            depth += 1
        elif ins.op in _NEUTRAL:
            if depth < 1:
                raise InvalidMachineError(f"{where}: stack underflow")
        elif ins.op in BINARY_OPS:
            if depth < 2:
                raise InvalidMachineError(f"{where}: stack underflow")
            depth -= 1
        elif ins.op == "sel":
            if depth < 3:
                raise InvalidMachineError(f"{where}: stack underflow")
            depth -= 2
        elif ins.op in _POP1:
            if ins.op == "stv" and not 0 <= ins.arg < len(cm.vars):
                raise InvalidMachineError(f"{where}: bad variable slot {ins.arg}")
            if ins.op == "stp" and not 0 <= ins.arg < n_params:
                raise InvalidMachineError(f"{where}: bad parameter slot {ins.arg}")
            if depth < 1:
                raise InvalidMachineError(f"{where}: stack underflow")
            depth -= 1
        elif ins.op in _ZERO:
            if not 0 <= ins.arg < len(cm.clocks):
                raise InvalidMachineError(f"{where}: bad clock index {ins.arg}")
        elif ins.op == "callx":
            if not 0 <= ins.arg < len(cm.external_ops):
                raise InvalidMachineError(f"{where}: bad external op index {ins.arg}")
            arity = len(cm.external_ops[ins.arg].params)
            if depth < arity:
                raise InvalidMachineError(f"{where}: stack underflow at call")
            depth -= arity
        elif ins.op == "calld":
            if not 0 <= ins.arg < len(cm.defined_ops):
                raise InvalidMachineError(f"{where}: bad defined op index {ins.arg}")
            arity = len(cm.defined_ops[ins.arg].params)
            if depth < arity:
                raise InvalidMachineError(f"{where}: stack underflow at call")
            depth -= arity
        else:
            raise InvalidMachineError(f"{where}: unknown opcode {ins.op!r}")
    if depth != expect_depth:
        raise InvalidMachineError(
            f"{where}: program has net stack depth {depth}, expected {expect_depth}"
        )


def _check_flat(
    cm: CompiledMachine,
    states: tuple[CompiledState, ...],
    initial: int,
    transitions: tuple[CompiledTransition, ...],
    n_params: int,
    n_events: int,
    where: str,
) -> None:
    if not 0 <= initial < len(states):
        raise InvalidMachineError(f"{where}: initial index {initial} out of range")
    for s in states:
        for label, prog in (("entry", s.entry), ("during", s.during), ("exit", s.exit)):
            if prog is not None:
                _check_program(cm, prog, n_params, 0, f"{where}/{s.name}/{label}")
        if s.final and (s.during is not None or s.exit is not None):
            raise InvalidMachineError(f"{where}: final state {s.name!r} has during/exit")
    for i, t in enumerate(transitions):
        if not (0 <= t.src < len(states) and 0 <= t.tgt < len(states)):
            raise InvalidMachineError(f"{where}: transition {i} has bad state index")
        if states[t.src].final:
            raise InvalidMachineError(f"{where}: transition {i} leaves a final state")
        if t.event is not None and not 0 <= t.event < n_events:
            raise InvalidMachineError(f"{where}: transition {i} has bad event index")
        if t.guard is not None:
            _check_program(cm, t.guard, n_params, 1, f"{where}/transition{i}/guard")
        if t.action is not None:
            _check_program(cm, t.action, n_params, 0, f"{where}/transition{i}/action")


def validate_compiled(cm: CompiledMachine) -> None:
    """Re-verify every structural invariant of a CompiledMachine."""
    _check_flat(
        cm, cm.states, cm.initial, cm.transitions, 0, len(cm.events), f"machine {cm.name}"
    )
    for op in cm.external_ops:
        for label, prog in (("pre", op.pre), ("post", op.post)):
            if prog is not None:
                _check_program(cm, prog, len(op.params), 1, f"{op.name}/{label}")
    for op in cm.defined_ops:
        for label, prog in (("pre", op.pre), ("post", op.post)):
            if prog is not None:
                _check_program(cm, prog, len(op.params), 1, f"{op.name}/{label}")
        if not any(s.final for s in op.body.states):
            raise InvalidMachineError(f"operation {op.name!r} body has no final state")
        for t in op.body.transitions:
            if t.event is not None:
                raise InvalidMachineError(
                    f"operation {op.name!r} body has an event trigger"
                )
        _check_flat(
            cm, op.body.states, op.body.initial, op.body.transitions,
            len(op.params), 0, f"operation {op.name}",
        )
