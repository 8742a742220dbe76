"""Canonical pretty-printer: the inverse of parse, modulo spans.

Compound expressions render fully parenthesized, which keeps the round-trip
proof trivial (parentheses are transparent in the AST). Reals always carry a
decimal point; exponent notation is normalized to `1.0e-12` form so every
finite float survives render -> parse unchanged.
"""

from __future__ import annotations

from . import ast


def _real(x: float) -> str:
    r = repr(float(x))
    if "e" in r or "E" in r:
        mantissa, _, exp = r.lower().partition("e")
        if "." not in mantissa:
            mantissa += ".0"
        return f"{mantissa}e{exp}"
    return r


def _literal(value: ast.Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _real(value)
    if isinstance(value, tuple):
        return f"({_real(value[0])}, {_real(value[1])})"
    raise TypeError(f"unrenderable literal {value!r}")


def render_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.Literal):
        return _literal(e.value)
    if isinstance(e, ast.VarRef):
        return e.name
    if isinstance(e, ast.SinceExpr):
        return f"since({e.clock})"
    if isinstance(e, ast.Unary):
        inner = render_expr(e.operand)
        return f"(not {inner})" if e.op == "not" else f"(-{inner})"
    if isinstance(e, ast.Binary):
        return f"({render_expr(e.left)} {e.op} {render_expr(e.right)})"
    if isinstance(e, ast.Conditional):
        return (
            f"({render_expr(e.cond)} ? {render_expr(e.then)}"
            f" : {render_expr(e.other)})"
        )
    raise TypeError(f"unrenderable expression {e!r}")


def render_action(a: ast.Action) -> str:
    if isinstance(a, ast.ClockReset):
        return f"#{a.clock}"
    if isinstance(a, ast.Assign):
        return f"{a.target} := {render_expr(a.value)}"
    if isinstance(a, ast.OpCall):
        return f"{a.name}({', '.join(render_expr(x) for x in a.args)})"
    raise TypeError(f"unrenderable action {a!r}")


def _actions(seq: ast.ActionSeq) -> str:
    return "; ".join(render_action(a) for a in seq)


def _params(params: list[ast.Param]) -> str:
    return ", ".join(f"{p.name}: {p.type}" for p in params)


def _state(s: ast.StateDecl, indent: str) -> list[str]:
    head = indent
    if s.is_initial:
        head += "initial "
    if s.is_final:
        head += "final "
    head += f"state {s.name}"
    if s.entry is None and s.during is None and s.exit is None:
        return [head]
    lines = [head + " {"]
    if s.entry is not None:
        lines.append(f"{indent}  entry {_actions(s.entry)}")
    if s.during is not None:
        lines.append(f"{indent}  during {_actions(s.during)}")
    if s.exit is not None:
        lines.append(f"{indent}  exit {_actions(s.exit)}")
    lines.append(indent + "}")
    return lines


def _transition(t: ast.TransitionDecl, indent: str) -> str:
    parts = [f"{indent}transition {t.source} -> {t.target}"]
    if t.trigger is not None:
        parts.append(f"on {t.trigger}")
    if t.guard is not None:
        parts.append(f"[{render_expr(t.guard)}]")
    if t.action is not None:
        parts.append(f"/ {_actions(t.action)}")
    return " ".join(parts)


def render(unit: ast.ModelUnit) -> str:
    """Serialize a unit back to canonical source text."""
    blocks: list[str] = []

    for iface in unit.interfaces:
        lines = [f"interface {iface.name} {{"]
        for v in iface.variables:
            decl = f"  var {v.name}: {v.type}"
            if v.init is not None:
                decl += f" = {_literal(v.init)}"
            lines.append(decl)
        for name, _ in iface.events:
            lines.append(f"  event {name}")
        for sig in iface.op_signatures:
            lines.append(f"  op {sig.name}({_params(sig.params)})")
        lines.append("}")
        blocks.append("\n".join(lines))

    for m in unit.machines:
        head = f"machine {m.name}"
        if m.requires:
            head += " requires " + ", ".join(n for n, _ in m.requires)
        lines = [head + " {"]
        for clk, _ in m.clocks:
            lines.append(f"  clock {clk}")
        for s in m.states:
            lines.extend(_state(s, "  "))
        for t in m.transitions:
            lines.append(_transition(t, "  "))
        lines.append("}")
        blocks.append("\n".join(lines))

    for op in unit.operations:
        head = f"operation {op.name}({_params(op.params)})"
        if op.pre is not None:
            head += f" pre {render_expr(op.pre)}"
        if op.post is not None:
            head += f" post {render_expr(op.post)}"
        if op.body is None:
            blocks.append(head)
        else:
            lines = [head + " {"]
            for s in op.body.states:
                lines.extend(_state(s, "  "))
            for t in op.body.transitions:
                lines.append(_transition(t, "  "))
            lines.append("}")
            blocks.append("\n".join(lines))

    for mod in unit.modules:
        lines = [f"module {mod.name} {{", f"  platform {mod.platform};"]
        for c, _ in mod.controllers:
            lines.append(f"  controller {c};")
        lines.append("}")
        blocks.append("\n".join(lines))

    return "\n\n".join(blocks) + ("\n" if blocks else "")
