"""Deterministic cycle-based interpreter for compiled machines.

One `step` = one control cycle:

  1. event flags for the cycle come from the platform (or an explicit set);
  2. on the very first step the initial state's entry program runs;
  3. outgoing transitions of the current state are scanned in table order;
     a transition is enabled iff its trigger event (if any) is flagged and
     its guard (if any) evaluates true. The first enabled transition fires;
  4. on fire: source exit, transition action, then target entry run in that
     order within this same cycle, and `during` is skipped;
  5. otherwise the current state's `during` program runs;
  6. a final current state finishes the context. Cycle number and all clock
     counters increment at cycle end.

At most one transition fires per cycle. Event flags live for exactly one
cycle. Operation bodies execute to their final state inside the caller's
cycle, consuming no simulated time, bounded by a step budget. Contract
violations, budget exhaustion, and division by zero fault the context; the
fault is reported on the cycle's trace record rather than raised, so traces
stay serializable.

`since(T)` yields elapsed time units: clock counter times
control_dt_s / time_unit_s. Both default to 0.1 s, so by default since()
counts control cycles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .ast import TypeRef, Value
from .compiler import CompiledBody, CompiledMachine, DefinedOp, ExternalOp, Program


class UnboundOperationError(Exception):
    def __init__(self, machine: str, missing: list[str]):
        super().__init__(
            f"platform does not bind external operation(s) of {machine!r}: "
            + ", ".join(missing)
        )
        self.missing = missing


class _Fault(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True, slots=True)
class RuntimeConfig:
    control_dt_s: float = 0.1
    time_unit_s: float = 0.1  # simulated seconds per RoboChart time unit
    op_step_budget: int = 10_000
    op_call_depth: int = 64
    post_violation_warns: bool = False  # downgrade post faults to trace warnings
    watch: tuple[str, ...] = ()

    def validate(self) -> None:
        if not self.control_dt_s > 0:
            raise ValueError("control_dt_s must be > 0")
        if not self.time_unit_s > 0:
            raise ValueError("time_unit_s must be > 0")
        if self.op_step_budget < 1 or self.op_call_depth < 1:
            raise ValueError("operation budgets must be >= 1")


class PlatformBinding:
    """Simulator-side realization of a machine's operations and events.

    `bound_ops` must cover every external operation of the machine; it may
    also name defined operations, which are then overridden (the platform
    implementation replaces the state-machine body; contracts still apply).
    `invoke` returns variable writes to apply to the context, or None.
    """

    bound_ops: frozenset[str] = frozenset()

    def attach(self, ctx: "ExecutionContext") -> None:
        self.ctx = ctx

    def events(self) -> set[str]:
        return set()

    def invoke(self, name: str, args: list[Value]) -> dict[str, Value] | None:
        raise NotImplementedError


class NullPlatform(PlatformBinding):
    """Binds the machine's external operations as no-ops (headless runs)."""

    def __init__(self, cm: CompiledMachine):
        self.bound_ops = frozenset(op.name for op in cm.external_ops)

    def invoke(self, name: str, args: list[Value]) -> None:
        return None


@dataclass(slots=True)
class TraceRecord:
    cycle: int
    state_before: str
    events: tuple[str, ...]
    fired: int | None
    state_after: str
    ops: tuple[tuple[str, tuple[Value, ...]], ...]
    watch: dict[str, Value]
    warnings: tuple[str, ...] = ()
    fault: str | None = None

    def to_json_obj(self) -> dict:
        def arg(v: Value):
            return [v[0], v[1]] if isinstance(v, tuple) else v

        obj = {
            "cycle": self.cycle,
            "state_before": self.state_before,
            "events": list(self.events),
            "fired": self.fired,
            "state_after": self.state_after,
            "ops": [{"name": n, "args": [arg(a) for a in args]} for n, args in self.ops],
            "watch": {k: arg(v) for k, v in self.watch.items()},
        }
        if self.warnings:
            obj["warnings"] = list(self.warnings)
        if self.fault is not None:
            obj["fault"] = self.fault
        return obj


def trace_to_ndjson(records: list[TraceRecord]) -> str:
    return "".join(
        json.dumps(r.to_json_obj(), separators=(",", ":"), allow_nan=False) + "\n"
        for r in records
    )


def _coerce(ty: TypeRef, v: Value) -> Value:
    if ty is TypeRef.REAL and isinstance(v, int) and not isinstance(v, bool):
        return float(v)
    return v


@dataclass
class ExecutionContext:
    machine: CompiledMachine
    platform: PlatformBinding
    config: RuntimeConfig
    current_state: int
    var_store: list[Value]
    clock_counters: list[int]
    cycle_number: int = 0
    status: str = "running"  # running | finished | faulted
    fault_reason: str | None = None
    _entry_pending: bool = True
    _unit_ratio: float = 1.0
    _outgoing: list[list[tuple[int, object]]] = field(default_factory=list)
    _var_index: dict[str, int] = field(default_factory=dict)
    _event_index: dict[str, int] = field(default_factory=dict)

    def get_var(self, name: str) -> Value:
        return self.var_store[self._var_index[name]]

    def set_var(self, name: str, value: Value) -> None:
        idx = self._var_index[name]
        self.var_store[idx] = _coerce(self.machine.vars[idx].type, value)

    @property
    def state_name(self) -> str:
        return self.machine.states[self.current_state].name


def create_context(
    cm: CompiledMachine, platform: PlatformBinding, config: RuntimeConfig | None = None
) -> ExecutionContext:
    """Fresh context in the initial state; entry runs on the first step."""
    config = config or RuntimeConfig()
    config.validate()
    missing = [op.name for op in cm.external_ops if op.name not in platform.bound_ops]
    if missing:
        raise UnboundOperationError(cm.name, missing)
    var_names = {v.name for v in cm.vars}
    for w in config.watch:
        if w not in var_names:
            raise ValueError(f"watch list names unknown variable {w!r}")
    ctx = ExecutionContext(
        machine=cm,
        platform=platform,
        config=config,
        current_state=cm.initial,
        var_store=[v.init for v in cm.vars],
        clock_counters=[0] * len(cm.clocks),
    )
    ctx._unit_ratio = config.control_dt_s / config.time_unit_s
    ctx._outgoing = [cm.outgoing(i) for i in range(len(cm.states))]
    ctx._var_index = {v.name: i for i, v in enumerate(cm.vars)}
    ctx._event_index = {name: i for i, name in enumerate(cm.events)}
    platform.attach(ctx)
    return ctx


class _Evaluator:
    """Executes postfix programs against one context."""

    def __init__(self, ctx: ExecutionContext, ops_out: list, warnings_out: list):
        self.ctx = ctx
        self.ops_out = ops_out
        self.warnings_out = warnings_out

    def run(
        self,
        prog: Program,
        frame: list[Value] | None,
        params: tuple = (),
        depth: int = 0,
    ) -> Value | None:
        ctx = self.ctx
        stack: list[Value] = []
        for ins in prog:
            op = ins.op
            if op == "push":
                stack.append(ins.arg)
            elif op == "ldv":
                stack.append(ctx.var_store[ins.arg])
            elif op == "stv":
                slot = ins.arg
                ctx.var_store[slot] = _coerce(ctx.machine.vars[slot].type, stack.pop())
            elif op == "ldp":
                stack.append(frame[ins.arg])
            elif op == "stp":
                frame[ins.arg] = _coerce(params[ins.arg].type, stack.pop())
            elif op == "ldc":
                stack.append(ctx.clock_counters[ins.arg] * ctx._unit_ratio)
            elif op == "rsc":
                ctx.clock_counters[ins.arg] = 0
            elif op == "not":
                stack[-1] = not stack[-1]
            elif op == "neg":
                stack[-1] = -stack[-1]
            elif op == "sel":
                other, then, cond = stack.pop(), stack.pop(), stack.pop()
                stack.append(then if cond else other)
            elif op == "callx":
                self._call_external(ctx.machine.external_ops[ins.arg], stack, depth)
            elif op == "calld":
                self._call_defined(ctx.machine.defined_ops[ins.arg], stack, depth)
            else:
                b = stack.pop()
                a = stack.pop()
                stack.append(_binary(op, a, b))
        return stack[-1] if stack else None

    # --- operation dispatch -------------------------------------------------

    def _pop_args(self, params, stack) -> list[Value]:
        n = len(params)
        args = stack[len(stack) - n :] if n else []
        del stack[len(stack) - n :]
        return [_coerce(p.type, v) for p, v in zip(params, args)]

    def _check_contract(
        self,
        op: ExternalOp | DefinedOp,
        prog: Program | None,
        frame: list[Value],
        kind: str,
        depth: int,
    ) -> None:
        if prog is None:
            return
        ok = self.run(prog, frame, op.params, depth)
        if not ok:
            if kind == "postconditionViolation" and self.ctx.config.post_violation_warns:
                self.warnings_out.append(f"{kind} {op.name}")
                return
            raise _Fault(f"{kind} {op.name}")

    def _call_external(self, op: ExternalOp, stack: list[Value], depth: int) -> None:
        args = self._pop_args(op.params, stack)
        self.ops_out.append((op.name, tuple(args)))
        frame = list(args)
        self._check_contract(op, op.pre, frame, "preconditionViolation", depth)
        self._apply_writes(op.name, self.ctx.platform.invoke(op.name, args))
        self._check_contract(op, op.post, frame, "postconditionViolation", depth)

    def _call_defined(self, op: DefinedOp, stack: list[Value], depth: int) -> None:
        if depth >= self.ctx.config.op_call_depth:
            raise _Fault(f"stepBudgetExceeded {op.name} (call depth)")
        args = self._pop_args(op.params, stack)
        self.ops_out.append((op.name, tuple(args)))
        frame = list(args)
        self._check_contract(op, op.pre, frame, "preconditionViolation", depth)
        if op.name in self.ctx.platform.bound_ops:
            # platform override of a defined operation (virtual-method style)
            self._apply_writes(op.name, self.ctx.platform.invoke(op.name, args))
        else:
            self._run_body(op, frame, depth + 1)
        self._check_contract(op, op.post, frame, "postconditionViolation", depth)

    def _apply_writes(self, op_name: str, writes: dict[str, Value] | None) -> None:
        if not writes:
            return
        for name, value in writes.items():
            idx = self.ctx._var_index.get(name)
            if idx is None:
                raise RuntimeError(
                    f"platform binding for {op_name!r} wrote unknown variable {name!r}"
                )
            self.ctx.var_store[idx] = _coerce(self.ctx.machine.vars[idx].type, value)

    def _run_body(self, op: DefinedOp, frame: list[Value], depth: int) -> None:
        """Run a state-machine body to its final state in zero simulated time."""
        body: CompiledBody = op.body
        params = op.params
        outgoing = [
            [t for t in body.transitions if t.src == i] for i in range(len(body.states))
        ]
        state = body.initial
        if body.states[state].entry is not None:
            self.run(body.states[state].entry, frame, params, depth)
        steps = 0
        while not body.states[state].final:
            steps += 1
            if steps > self.ctx.config.op_step_budget:
                raise _Fault(f"stepBudgetExceeded {op.name}")
            fired = None
            for t in outgoing[state]:
                if t.guard is None or self.run(t.guard, frame, params, depth):
                    fired = t
                    break
            if fired is None:
                during = body.states[state].during
                if during is not None:
                    self.run(during, frame, params, depth)
            else:
                if body.states[state].exit is not None:
                    self.run(body.states[state].exit, frame, params, depth)
                if fired.action is not None:
                    self.run(fired.action, frame, params, depth)
                state = fired.tgt
                if body.states[state].entry is not None:
                    self.run(body.states[state].entry, frame, params, depth)


def _binary(op: str, a: Value, b: Value) -> Value:
    if op == "add":
        if isinstance(a, tuple):
            return (a[0] + b[0], a[1] + b[1])
        return a + b
    if op == "sub":
        if isinstance(a, tuple):
            return (a[0] - b[0], a[1] - b[1])
        return a - b
    if op == "mul":
        if isinstance(a, tuple):
            return (a[0] * b, a[1] * b)
        if isinstance(b, tuple):
            return (b[0] * a, b[1] * a)
        return a * b
    if op == "div":
        if b == 0:
            raise _Fault("arithmetic divisionByZero")
        return a / b
    if op == "and":
        return a and b
    if op == "or":
        return a or b
    if op == "eq":
        return a == b
    if op == "ne":
        return a != b
    if op == "lt":
        return a < b
    if op == "le":
        return a <= b
    if op == "gt":
        return a > b
    if op == "ge":
        return a >= b
    raise AssertionError(f"unknown binary op {op!r}")


def step(ctx: ExecutionContext, events: set[str] | None = None) -> TraceRecord:
    """Run exactly one control cycle. Requires status == running."""
    if ctx.status != "running":
        raise RuntimeError(f"step on a {ctx.status} context")
    cm = ctx.machine
    if events is None:
        events = ctx.platform.events()
    for name in events:
        if name not in ctx._event_index:
            raise ValueError(f"unknown event {name!r} for machine {cm.name!r}")
    flags = frozenset(events)
    ordered_events = tuple(name for name in cm.events if name in flags)

    state_before = ctx.state_name
    ops_out: list[tuple[str, tuple[Value, ...]]] = []
    warnings_out: list[str] = []
    ev = _Evaluator(ctx, ops_out, warnings_out)
    fired_idx: int | None = None
    fault: str | None = None

    try:
        if ctx._entry_pending:
            entry = cm.states[ctx.current_state].entry
            if entry is not None:
                ev.run(entry, None)
            ctx._entry_pending = False

        fired = None
        for idx, t in ctx._outgoing[ctx.current_state]:
            if t.event is not None and cm.events[t.event] not in flags:
                continue
            if t.guard is not None and not ev.run(t.guard, None):
                continue
            fired = t
            fired_idx = idx
            break

        if fired is not None:
            src = cm.states[ctx.current_state]
            if src.exit is not None:
                ev.run(src.exit, None)
            if fired.action is not None:
                ev.run(fired.action, None)
            ctx.current_state = fired.tgt
            tgt = cm.states[ctx.current_state]
            if tgt.entry is not None:
                ev.run(tgt.entry, None)
        else:
            during = cm.states[ctx.current_state].during
            if during is not None:
                ev.run(during, None)

        if cm.states[ctx.current_state].final:
            ctx.status = "finished"
    except _Fault as f:
        ctx.status = "faulted"
        ctx.fault_reason = f.reason
        fault = f.reason

    record = TraceRecord(
        cycle=ctx.cycle_number,
        state_before=state_before,
        events=ordered_events,
        fired=fired_idx,
        state_after=ctx.state_name,
        ops=tuple(ops_out),
        watch={name: ctx.get_var(name) for name in ctx.config.watch},
        warnings=tuple(warnings_out),
        fault=fault,
    )
    if fault is None:
        ctx.cycle_number += 1
        for i in range(len(ctx.clock_counters)):
            ctx.clock_counters[i] += 1
    return record


def run_script(
    ctx: ExecutionContext, event_script: list[set[str]], max_cycles: int
) -> list[TraceRecord]:
    """Step through a per-cycle event script; stops on finish, fault,
    script exhaustion, or the cycle cap. Faults land in the final record."""
    records: list[TraceRecord] = []
    for i in range(min(len(event_script), max_cycles)):
        if ctx.status != "running":
            break
        rec = step(ctx, events=event_script[i])
        records.append(rec)
        if rec.fault is not None:
            break
    return records


def load_event_script(text: str) -> list[set[str]]:
    """Parse an NDJSON event script of {cycle, events} records.

    Cycles may be sparse; gaps get empty event sets. Duplicate cycle
    numbers are rejected.
    """
    by_cycle: dict[int, set[str]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            cycle = int(obj["cycle"])
            events = set(obj["events"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad event script line {line_no}: {exc}") from exc
        if cycle < 0:
            raise ValueError(f"bad event script line {line_no}: negative cycle")
        if cycle in by_cycle:
            raise ValueError(f"bad event script line {line_no}: duplicate cycle {cycle}")
        by_cycle[cycle] = events
    if not by_cycle:
        return []
    return [by_cycle.get(i, set()) for i in range(max(by_cycle) + 1)]
