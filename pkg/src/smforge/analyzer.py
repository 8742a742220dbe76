"""Name resolution, type checking, and well-formedness over a parsed unit.

All diagnostics are gathered in one pass (no fail-fast) and reported sorted
by (file, span start, code). `analyze` yields a ResolvedModel only when there
are zero errors; warnings ride along on the model.

Scoping rules:
  - machine actions/guards see the variables, events and operations of the
    machine's required interfaces, in declaration order; any name collision
    across two required interfaces is rejected (E09) rather than merged.
  - an operation body sees its parameters first, then the variables and
    operations of the one interface that declares the operation's signature
    (operations are conceptually methods of that interface). Events and
    clocks are never in scope inside a body.
  - operation pre/postconditions are resolved leniently here (any interface
    variable); `check_operation_contracts` tightens them to in-scope names.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .diagnostics import Diagnostic, error, sort_diagnostics, warning

NUMERIC = (ast.TypeRef.INT, ast.TypeRef.REAL)


@dataclass
class OpInfo:
    name: str
    params: list[ast.Param]
    owner_iface: str | None
    definition: ast.OperationDef | None

    @property
    def is_defined(self) -> bool:
        return self.definition is not None and self.definition.body is not None


@dataclass
class MachineScope:
    machine: ast.MachineDecl
    var_decls: list[tuple[ast.VarDecl, str]]  # (decl, owner interface), slot order
    var_slot: dict[str, int]
    var_type: dict[str, ast.TypeRef]
    events: list[str]
    event_index: dict[str, int]
    ops: list[OpInfo]
    op_index: dict[str, int]
    clocks: list[str]
    clock_index: dict[str, int]
    state_index: dict[str, int]


@dataclass
class ResolvedModel:
    unit: ast.ModelUnit
    machines: dict[str, MachineScope]
    operations: dict[str, OpInfo]
    warnings: list[Diagnostic] = field(default_factory=list)


class _Analysis:
    def __init__(self, unit: ast.ModelUnit):
        self.unit = unit
        self.diags: list[Diagnostic] = []
        self.ifaces: dict[str, ast.InterfaceDecl] = {}
        self.ops: dict[str, OpInfo] = {}
        self.machines: dict[str, MachineScope] = {}
        self.used_events: set[str] = set()
        self.called_ops: set[str] = set()

    def err(self, code: str, span, msg: str) -> None:
        self.diags.append(error(code, span, msg))

    def warn(self, code: str, span, msg: str) -> None:
        self.diags.append(warning(code, span, msg))

    # --- interfaces and operations ------------------------------------------

    def collect_interfaces(self) -> None:
        for iface in self.unit.interfaces:
            if iface.name in self.ifaces:
                self.err("E09", iface.span, f"duplicate interface {iface.name!r}")
                continue
            self.ifaces[iface.name] = iface
            for v in iface.variables:
                if v.init is not None:
                    self.check_init(v)
            for sig in iface.op_signatures:
                self.check_param_names(sig.params)

    def check_init(self, v: ast.VarDecl) -> None:
        ok = {
            ast.TypeRef.BOOLEAN: lambda x: isinstance(x, bool),
            ast.TypeRef.INT: lambda x: isinstance(x, int) and not isinstance(x, bool),
            ast.TypeRef.REAL: lambda x: isinstance(x, (int, float))
            and not isinstance(x, bool),
            ast.TypeRef.VECTOR2D: lambda x: isinstance(x, tuple),
        }[v.type]
        if not ok(v.init):
            self.err(
                "E02", v.span,
                f"initializer of {v.name!r} does not have type {v.type}",
            )

    def check_param_names(self, params: list[ast.Param]) -> None:
        seen: set[str] = set()
        for p in params:
            if p.name in seen:
                self.err("E09", p.span, f"duplicate parameter {p.name!r}")
            seen.add(p.name)

    def collect_operations(self) -> None:
        # signatures declared in interfaces; the same name in two interfaces
        # is ambiguous for a definition, so reject it outright
        owners: dict[str, list[tuple[str, ast.OpSignature]]] = {}
        for iface in self.ifaces.values():
            for sig in iface.op_signatures:
                owners.setdefault(sig.name, []).append((iface.name, sig))
        for name, decls in owners.items():
            if len(decls) > 1:
                names = ", ".join(repr(i) for i, _ in decls)
                self.err(
                    "E09", decls[1][1].span,
                    f"operation {name!r} is declared in several interfaces: {names}",
                )
            iface_name, sig = decls[0]
            self.ops[name] = OpInfo(name, sig.params, iface_name, None)
        # top-level definitions
        seen_defs: set[str] = set()
        for op in self.unit.operations:
            if op.name in seen_defs:
                self.err("E09", op.span, f"duplicate operation definition {op.name!r}")
                continue
            seen_defs.add(op.name)
            self.check_param_names(op.params)
            info = self.ops.get(op.name)
            if info is None:
                self.ops[op.name] = OpInfo(op.name, op.params, None, op)
            else:
                self.check_signature_match(op, info)
                info.definition = op
                info.params = op.params  # contract exprs use the def's names

    def check_signature_match(self, op: ast.OperationDef, info: OpInfo) -> None:
        sig_types = [p.type for p in info.params]
        def_types = [p.type for p in op.params]
        if sig_types != def_types:
            self.err(
                "E07", op.span,
                f"definition of {op.name!r} does not match the signature"
                f" declared in interface {info.owner_iface!r}",
            )

    # --- machines ------------------------------------------------------------

    def build_machine_scope(self, m: ast.MachineDecl) -> MachineScope:
        var_decls: list[tuple[ast.VarDecl, str]] = []
        var_slot: dict[str, int] = {}
        var_type: dict[str, ast.TypeRef] = {}
        events: list[str] = []
        event_index: dict[str, int] = {}
        ops: list[OpInfo] = []
        op_index: dict[str, int] = {}
        owner_of: dict[str, str] = {}

        seen_req: set[str] = set()
        for req, span in m.requires:
            if req in seen_req:
                self.err("E09", span, f"interface {req!r} required twice")
                continue
            seen_req.add(req)
            iface = self.ifaces.get(req)
            if iface is None:
                self.err("E06", span, f"machine requires unknown interface {req!r}")
                continue
            for v in iface.variables:
                if v.name in owner_of:
                    self.err(
                        "E09", span,
                        f"name {v.name!r} is declared by both"
                        f" {owner_of[v.name]!r} and {req!r}",
                    )
                    continue
                owner_of[v.name] = req
                var_slot[v.name] = len(var_decls)
                var_type[v.name] = v.type
                var_decls.append((v, req))
            for ev, ev_span in iface.events:
                if ev in owner_of:
                    self.err(
                        "E09", span,
                        f"name {ev!r} is declared by both {owner_of[ev]!r} and {req!r}",
                    )
                    continue
                owner_of[ev] = req
                event_index[ev] = len(events)
                events.append(ev)
            for sig in iface.op_signatures:
                if sig.name in owner_of:
                    self.err(
                        "E09", span,
                        f"name {sig.name!r} is declared by both"
                        f" {owner_of[sig.name]!r} and {req!r}",
                    )
                    continue
                owner_of[sig.name] = req
                op_index[sig.name] = len(ops)
                ops.append(self.ops[sig.name])

        clocks: list[str] = []
        clock_index: dict[str, int] = {}
        for clk, span in m.clocks:
            if clk in clock_index:
                self.err("E09", span, f"duplicate clock {clk!r}")
                continue
            clock_index[clk] = len(clocks)
            clocks.append(clk)

        state_index: dict[str, int] = {}
        for s in m.states:
            if s.name in state_index:
                self.err("E09", s.span, f"duplicate state {s.name!r}")
                continue
            state_index[s.name] = len(state_index)

        return MachineScope(
            m, var_decls, var_slot, var_type, events, event_index,
            ops, op_index, clocks, clock_index, state_index,
        )

    def analyze_machine(self, m: ast.MachineDecl) -> None:
        if m.name in self.machines:
            self.err("E09", m.span, f"duplicate machine {m.name!r}")
            return
        scope = self.build_machine_scope(m)
        self.machines[m.name] = scope
        env = _Env(self, scope.var_type, scope.op_index, scope.ops, scope.clock_index)
        for s in m.states:
            for seq in (s.entry, s.during, s.exit):
                if seq is not None:
                    env.check_actions(seq)
        for t in m.transitions:
            self.check_transition(t, scope.state_index, scope.event_index, env)
        self.check_reachability(m.name, m.states, m.transitions, scope.state_index)

    def check_transition(
        self,
        t: ast.TransitionDecl,
        state_index: dict[str, int],
        event_index: dict[str, int] | None,
        env: "_Env",
    ) -> None:
        for name in (t.source, t.target):
            if name not in state_index:
                self.err("E04", t.span, f"transition references unknown state {name!r}")
        if t.trigger is not None:
            if event_index is None:
                self.err(
                    "E04", t.span,
                    "events are not in scope inside an operation body",
                )
            elif t.trigger not in event_index:
                self.err(
                    "E04", t.span,
                    f"transition references unknown event {t.trigger!r}",
                )
            else:
                self.used_events.add(t.trigger)
        if t.guard is not None:
            ty = env.type_expr(t.guard)
            if ty is not None and ty is not ast.TypeRef.BOOLEAN:
                self.err("E03", t.guard.span, f"guard has type {ty}, expected boolean")
        if t.action is not None:
            env.check_actions(t.action)

    def check_reachability(
        self,
        owner: str,
        states: list[ast.StateDecl],
        transitions: list[ast.TransitionDecl],
        state_index: dict[str, int],
    ) -> None:
        initials = [s.name for s in states if s.is_initial]
        if not initials:
            return
        edges: dict[str, set[str]] = {s.name: set() for s in states}
        for t in transitions:
            if t.source in edges and t.target in state_index:
                edges[t.source].add(t.target)
        seen = {initials[0]}
        stack = [initials[0]]
        while stack:
            for nxt in edges[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        for s in states:
            if s.name not in seen:
                self.warn(
                    "W01", s.span,
                    f"state {s.name!r} is unreachable from the initial state of {owner!r}",
                )

    # --- operation bodies and contracts -------------------------------------

    def analyze_operation(self, op: ast.OperationDef) -> None:
        info = self.ops.get(op.name)
        if info is None or info.definition is not op:
            return  # duplicate definition, already reported
        owner = self.ifaces.get(info.owner_iface) if info.owner_iface else None
        param_type = {p.name: p.type for p in op.params}

        # contracts: lenient scope (any interface variable); tightened by
        # check_operation_contracts
        lenient: dict[str, ast.TypeRef] = {}
        for iface in self.ifaces.values():
            for v in iface.variables:
                lenient.setdefault(v.name, v.type)
        lenient.update(param_type)
        contract_env = _Env(self, lenient, {}, [], {})
        for label, expr in (("precondition", op.pre), ("postcondition", op.post)):
            if expr is None:
                continue
            ty = contract_env.type_expr(expr)
            if ty is not None and ty is not ast.TypeRef.BOOLEAN:
                self.err("E02", expr.span, f"{label} has type {ty}, expected boolean")

        if op.body is None:
            return
        body_vars = dict(param_type)
        op_index: dict[str, int] = {}
        ops: list[OpInfo] = []
        if owner is not None:
            for v in owner.variables:
                body_vars.setdefault(v.name, v.type)
            for sig in owner.op_signatures:
                op_index[sig.name] = len(ops)
                ops.append(self.ops[sig.name])
        env = _Env(self, body_vars, op_index, ops, {})
        state_index: dict[str, int] = {}
        for s in op.body.states:
            if s.name in state_index:
                self.err("E09", s.span, f"duplicate state {s.name!r}")
                continue
            state_index[s.name] = len(state_index)
        for s in op.body.states:
            for seq in (s.entry, s.during, s.exit):
                if seq is not None:
                    env.check_actions(seq)
        for t in op.body.transitions:
            self.check_transition(t, state_index, None, env)
        self.check_reachability(op.name, op.body.states, op.body.transitions, state_index)

    # --- modules ----------------------------------------------------------------

    def analyze_modules(self) -> None:
        seen: set[str] = set()
        machine_names = {m.name for m in self.unit.machines}
        for mod in self.unit.modules:
            if mod.name in seen:
                self.err("E09", mod.span, f"duplicate module {mod.name!r}")
                continue
            seen.add(mod.name)
            for c, span in mod.controllers:
                if c not in machine_names:
                    self.err("E01", span, f"controller references unknown machine {c!r}")

    # --- warnings ----------------------------------------------------------------

    def emit_usage_warnings(self) -> None:
        for iface in self.ifaces.values():
            for ev, span in iface.events:
                if ev not in self.used_events:
                    self.warn("W02", span, f"event {ev!r} is declared but never used")
        for info in self.ops.values():
            if info.name not in self.called_ops:
                span = (
                    info.definition.span
                    if info.definition is not None
                    else next(
                        s.span
                        for s in self.ifaces[info.owner_iface].op_signatures
                        if s.name == info.name
                    )
                )
                self.warn(
                    "W03", span, f"operation {info.name!r} is declared but never called"
                )


class _Env:
    """Expression/action checker for one scope."""

    def __init__(
        self,
        analysis: _Analysis,
        var_type: dict[str, ast.TypeRef],
        op_index: dict[str, int],
        ops: list[OpInfo],
        clock_index: dict[str, int],
    ):
        self.a = analysis
        self.var_type = var_type
        self.op_index = op_index
        self.ops = ops
        self.clock_index = clock_index

    def check_actions(self, seq: ast.ActionSeq) -> None:
        for act in seq:
            if isinstance(act, ast.ClockReset):
                if act.clock not in self.clock_index:
                    self.a.err(
                        "E05", act.span, f"reset of undeclared clock {act.clock!r}"
                    )
            elif isinstance(act, ast.Assign):
                target_ty = self.var_type.get(act.target)
                if target_ty is None:
                    self.a.err(
                        "E08", act.span,
                        f"assignment to undeclared variable {act.target!r}",
                    )
                value_ty = self.type_expr(act.value)
                if target_ty is None or value_ty is None:
                    continue
                if not _assignable(target_ty, value_ty):
                    self.a.err(
                        "E02", act.span,
                        f"cannot assign {value_ty} to {act.target!r}: {target_ty}",
                    )
            elif isinstance(act, ast.OpCall):
                self.check_call(act)

    def check_call(self, call: ast.OpCall) -> None:
        arg_types = [self.type_expr(a) for a in call.args]
        if call.name not in self.op_index:
            self.a.err("E01", call.span, f"call to unresolved operation {call.name!r}")
            return
        self.a.called_ops.add(call.name)
        info = self.ops[self.op_index[call.name]]
        if len(call.args) != len(info.params):
            self.a.err(
                "E07", call.span,
                f"{call.name!r} expects {len(info.params)} argument(s),"
                f" got {len(call.args)}",
            )
            return
        for arg_ty, param in zip(arg_types, info.params):
            if arg_ty is not None and not _assignable(param.type, arg_ty):
                self.a.err(
                    "E07", call.span,
                    f"argument for {param.name!r} of {call.name!r} has type"
                    f" {arg_ty}, expected {param.type}",
                )

    # returns None when the expression could not be typed (error already reported)
    def type_expr(self, e: ast.Expr) -> ast.TypeRef | None:
        ty = self._type_expr(e)
        e.ty = ty
        return ty

    def _type_expr(self, e: ast.Expr) -> ast.TypeRef | None:
        if isinstance(e, ast.Literal):
            if isinstance(e.value, bool):
                return ast.TypeRef.BOOLEAN
            if isinstance(e.value, int):
                return ast.TypeRef.INT
            if isinstance(e.value, float):
                return ast.TypeRef.REAL
            return ast.TypeRef.VECTOR2D
        if isinstance(e, ast.VarRef):
            ty = self.var_type.get(e.name)
            if ty is None:
                self.a.err("E01", e.span, f"unresolved name {e.name!r}")
            return ty
        if isinstance(e, ast.SinceExpr):
            if e.clock not in self.clock_index:
                self.a.err("E05", e.span, f"since() of undeclared clock {e.clock!r}")
            return ast.TypeRef.REAL
        if isinstance(e, ast.Unary):
            ty = self.type_expr(e.operand)
            if ty is None:
                return None
            if e.op == "not":
                if ty is not ast.TypeRef.BOOLEAN:
                    self.a.err("E02", e.span, f"'not' applied to {ty}")
                    return None
                return ast.TypeRef.BOOLEAN
            if ty not in NUMERIC:
                self.a.err("E02", e.span, f"cannot negate {ty}")
                return None
            return ty
        if isinstance(e, ast.Binary):
            return self._type_binary(e)
        if isinstance(e, ast.Conditional):
            cond_ty = self.type_expr(e.cond)
            if cond_ty is not None and cond_ty is not ast.TypeRef.BOOLEAN:
                self.a.err("E02", e.cond.span, f"condition has type {cond_ty}")
            then_ty = self.type_expr(e.then)
            other_ty = self.type_expr(e.other)
            if then_ty is None or other_ty is None:
                return None
            unified = _unify(then_ty, other_ty)
            if unified is None:
                self.a.err(
                    "E02", e.span,
                    f"branches have incompatible types {then_ty} and {other_ty}",
                )
            return unified
        raise TypeError(f"unexpected expression node {e!r}")

    def _type_binary(self, e: ast.Binary) -> ast.TypeRef | None:
        lt = self.type_expr(e.left)
        rt = self.type_expr(e.right)
        if lt is None or rt is None:
            return None
        op = e.op
        if op in ("and", "or"):
            if lt is not ast.TypeRef.BOOLEAN or rt is not ast.TypeRef.BOOLEAN:
                self.a.err("E02", e.span, f"{op!r} applied to {lt} and {rt}")
                return None
            return ast.TypeRef.BOOLEAN
        if op in ("<", "<=", ">", ">="):
            if lt not in NUMERIC or rt not in NUMERIC:
                self.a.err("E02", e.span, f"cannot order {lt} and {rt}")
                return None
            return ast.TypeRef.BOOLEAN
        if op in ("==", "!="):
            if _unify(lt, rt) is None:
                self.a.err("E02", e.span, f"cannot compare {lt} and {rt}")
                return None
            return ast.TypeRef.BOOLEAN
        if op == "/":
            if lt not in NUMERIC or rt not in NUMERIC:
                self.a.err("E02", e.span, f"cannot divide {lt} by {rt}")
                return None
            return ast.TypeRef.REAL
        if op == "*":
            if lt is ast.TypeRef.VECTOR2D and rt in NUMERIC:
                return ast.TypeRef.VECTOR2D
            if rt is ast.TypeRef.VECTOR2D and lt in NUMERIC:
                return ast.TypeRef.VECTOR2D
            if lt in NUMERIC and rt in NUMERIC:
                return _unify(lt, rt)
            self.a.err("E02", e.span, f"cannot multiply {lt} by {rt}")
            return None
        if op in ("+", "-"):
            if lt is ast.TypeRef.VECTOR2D and rt is ast.TypeRef.VECTOR2D:
                return ast.TypeRef.VECTOR2D
            if lt in NUMERIC and rt in NUMERIC:
                return _unify(lt, rt)
            self.a.err("E02", e.span, f"cannot apply {op!r} to {lt} and {rt}")
            return None
        raise ValueError(f"unexpected operator {op!r}")


def _unify(a: ast.TypeRef, b: ast.TypeRef) -> ast.TypeRef | None:
    if a is b:
        return a
    if a in NUMERIC and b in NUMERIC:
        return ast.TypeRef.REAL
    return None


def _assignable(target: ast.TypeRef, value: ast.TypeRef) -> bool:
    # integers promote to real where a real is expected
    return target is value or (target is ast.TypeRef.REAL and value is ast.TypeRef.INT)


def analyze(unit: ast.ModelUnit) -> ResolvedModel | list[Diagnostic]:
    """Resolve and type-check a unit; a model iff there are zero errors."""
    a = _Analysis(unit)
    a.collect_interfaces()
    a.collect_operations()
    for m in unit.machines:
        a.analyze_machine(m)
    for op in unit.operations:
        a.analyze_operation(op)
    a.analyze_modules()
    a.emit_usage_warnings()
    diags = sort_diagnostics(a.diags)
    if any(d.is_error for d in diags):
        return diags
    return ResolvedModel(unit, a.machines, a.ops, warnings=diags)


def check_operation_contracts(model: ResolvedModel) -> list[Diagnostic]:
    """Contract-specific checks over a resolved model.

    E10: some state reachable from an operation body's initial state cannot
    reach any final state. E11: a pre/postcondition references a name that
    is not a parameter or a variable of the operation's declaring interface.
    """
    diags: list[Diagnostic] = []
    iface_by_name = {i.name: i for i in model.unit.interfaces}
    for op in model.unit.operations:
        info = model.operations[op.name]
        in_scope = {p.name for p in op.params}
        if info.owner_iface is not None:
            in_scope |= {v.name for v in iface_by_name[info.owner_iface].variables}
        for label, expr in (("precondition", op.pre), ("postcondition", op.post)):
            if expr is None:
                continue
            for ref in _var_refs(expr):
                if ref.name not in in_scope:
                    diags.append(
                        error(
                            "E11", ref.span,
                            f"{label} of {op.name!r} references out-of-scope"
                            f" name {ref.name!r}",
                        )
                    )
        if op.body is not None:
            diags.extend(_check_reaches_final(op))
    return sort_diagnostics(diags)


def _var_refs(e: ast.Expr):
    if isinstance(e, ast.VarRef):
        yield e
    elif isinstance(e, ast.Unary):
        yield from _var_refs(e.operand)
    elif isinstance(e, ast.Binary):
        yield from _var_refs(e.left)
        yield from _var_refs(e.right)
    elif isinstance(e, ast.Conditional):
        yield from _var_refs(e.cond)
        yield from _var_refs(e.then)
        yield from _var_refs(e.other)


def _check_reaches_final(op: ast.OperationDef) -> list[Diagnostic]:
    body = op.body
    names = {s.name for s in body.states}
    edges: dict[str, set[str]] = {n: set() for n in names}
    for t in body.transitions:
        if t.source in names and t.target in names:
            edges[t.source].add(t.target)

    def reachable(start: str) -> set[str]:
        seen = {start}
        stack = [start]
        while stack:
            for nxt in edges[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    initial = next((s.name for s in body.states if s.is_initial), None)
    if initial is None:
        return []
    finals = {s.name for s in body.states if s.is_final}
    out: list[Diagnostic] = []
    for state in sorted(reachable(initial)):
        if not reachable(state) & finals:
            out.append(
                error(
                    "E10", body.span,
                    f"state {state!r} of operation {op.name!r} cannot reach"
                    " a final state",
                )
            )
    return out
