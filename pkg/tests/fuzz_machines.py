"""Deterministic generator of small valid models and event scripts.

Machines have <= 5 states and <= 8 transitions, a few typed variables,
events, clocks, and platform-bound operations. Everything is generated
valid-by-construction (it must analyze with zero errors) and within the
parser's image, so the same corpus also exercises render round-trips.
Division only ever has a nonzero literal denominator: traces stay
fault-free, which keeps the semantic-preservation comparison about
behavior, not about where a fault truncated the run.
"""

from __future__ import annotations

import random

BOOL, INT, REAL, VEC = "boolean", "int", "real", "vector2d"


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.vars: dict[str, str] = {}
        self.events: list[str] = []
        self.clocks: list[str] = []
        self.ops: list[tuple[str, list[str]]] = []

    def real_lit(self) -> str:
        return f"{self.rng.randint(0, 40) / 4}"

    def int_lit(self) -> str:
        return str(self.rng.randint(0, 9))

    def vec_lit(self) -> str:
        return f"({self.real_lit()}, {self.real_lit()})"

    def vars_of(self, ty) -> list[str]:
        types = ty if isinstance(ty, tuple) else (ty,)
        return [n for n, t in self.vars.items() if t in types]

    def numeric_expr(
        self, depth: int, int_only: bool = False, allow_vars: bool = True
    ) -> str:
        r = self.rng
        if depth <= 0 or r.random() < 0.4:
            pool = self.vars_of(INT if int_only else (INT, REAL)) if allow_vars else []
            choices = ["lit"] + (["var"] if pool else [])
            if not int_only and self.clocks:
                choices.append("since")
            pick = r.choice(choices)
            if pick == "var":
                return r.choice(pool)
            if pick == "since":
                return f"since({r.choice(self.clocks)})"
            return self.int_lit() if int_only or r.random() < 0.5 else self.real_lit()
        op = r.choice(["+", "-", "*", "/"])
        if op == "/":
            if int_only:
                op = r.choice(["+", "-", "*"])
            else:
                denom = r.choice(["2.0", "4.0", "0.5", "8.0", "3.0"])
                inner = self.numeric_expr(depth - 1, False, allow_vars)
                return f"({inner} / {denom})"
        left = self.numeric_expr(depth - 1, int_only, allow_vars)
        right = self.numeric_expr(depth - 1, int_only, allow_vars)
        return f"({left} {op} {right})"

    def vec_expr(self, depth: int, allow_vars: bool = True) -> str:
        r = self.rng
        pool = self.vars_of(VEC) if allow_vars else []
        if depth <= 0 or r.random() < 0.5:
            return r.choice(pool) if pool and r.random() < 0.7 else self.vec_lit()
        kind = r.choice(["add", "sub", "scale"])
        if kind == "scale":
            return f"({self.real_lit()} * {self.vec_expr(depth - 1, allow_vars)})"
        op = "+" if kind == "add" else "-"
        left = self.vec_expr(depth - 1, allow_vars)
        right = self.vec_expr(depth - 1, allow_vars)
        return f"({left} {op} {right})"

    def bool_expr(self, depth: int) -> str:
        r = self.rng
        if depth <= 0 or r.random() < 0.35:
            pool = self.vars_of(BOOL)
            if pool and r.random() < 0.5:
                return r.choice(pool)
            return r.choice(["true", "false"])
        kind = r.choice(["cmp", "cmp", "and", "or", "not", "veceq", "ternary"])
        if kind == "cmp":
            op = r.choice(["<", "<=", ">", ">=", "==", "!="])
            return f"({self.numeric_expr(depth - 1)} {op} {self.numeric_expr(depth - 1)})"
        if kind == "veceq":
            pool = self.vars_of(VEC)
            if not pool:
                return self.bool_expr(depth - 1)
            return f"({r.choice(pool)} == {self.vec_expr(depth - 1)})"
        if kind == "not":
            return f"(not {self.bool_expr(depth - 1)})"
        if kind == "ternary":
            return (
                f"({self.bool_expr(depth - 1)} ? {self.bool_expr(depth - 1)}"
                f" : {self.bool_expr(depth - 1)})"
            )
        op = "and" if kind == "and" else "or"
        return f"({self.bool_expr(depth - 1)} {op} {self.bool_expr(depth - 1)})"

    def expr_of(self, ty: str, depth: int, allow_vars: bool = True) -> str:
        if ty == BOOL:
            return self.bool_expr(depth)
        if ty == INT:
            return self.numeric_expr(depth, int_only=True, allow_vars=allow_vars)
        if ty == REAL:
            return self.numeric_expr(depth, allow_vars=allow_vars)
        return self.vec_expr(depth, allow_vars)

    def action(self) -> str:
        r = self.rng
        kinds = []
        if self.vars:
            kinds.append("assign")
        if self.clocks:
            kinds.append("reset")
        if self.ops:
            kinds.append("call")
        kind = r.choice(kinds)
        if kind == "assign":
            # numeric/vector stores take var-free values so repeated cycles
            # cannot compound a variable into an overflowing magnitude
            name = r.choice(list(self.vars))
            ty = self.vars[name]
            allow = ty == BOOL
            return f"{name} := {self.expr_of(ty, 2, allow_vars=allow)}"
        if kind == "reset":
            return f"#{r.choice(self.clocks)}"
        name, params = r.choice(self.ops)
        args = ", ".join(self.expr_of(t, 1) for t in params)
        return f"{name}({args})"

    def actions(self) -> str:
        return "; ".join(self.action() for _ in range(self.rng.randint(1, 2)))


def generate_model(seed: int) -> tuple[str, str, list[str]]:
    """Returns (source text, machine name, event names)."""
    rng = random.Random(seed)
    g = _Gen(rng)

    for i in range(rng.randint(0, 3)):
        ty = rng.choice([BOOL, INT, REAL, REAL, VEC])
        g.vars[f"v{i}"] = ty
    for i in range(rng.randint(0, 3)):
        g.events.append(f"e{i}")
    for i in range(rng.randint(0, 2)):
        g.clocks.append(f"c{i}")
    for i in range(rng.randint(0, 2)):
        params = [rng.choice([INT, REAL, BOOL]) for _ in range(rng.randint(0, 2))]
        g.ops.append((f"op{i}", params))
    if not (g.vars or g.clocks or g.ops):  # actions need something to act on
        g.vars["v0"] = REAL

    lines = ["interface If0 {"]
    init_by_type = {
        BOOL: lambda: rng.choice(["true", "false"]),
        INT: g.int_lit,
        REAL: g.real_lit,
        VEC: g.vec_lit,
    }
    for name, ty in g.vars.items():
        init = f" = {init_by_type[ty]()}" if rng.random() < 0.8 else ""
        lines.append(f"  var {name}: {ty}{init}")
    for ev in g.events:
        lines.append(f"  event {ev}")
    for name, params in g.ops:
        sig = ", ".join(f"p{k}: {t}" for k, t in enumerate(params))
        lines.append(f"  op {name}({sig})")
    lines.append("}")
    lines.append("")

    n_states = rng.randint(1, 5)
    has_final = n_states > 1 and rng.random() < 0.25
    state_names = [f"s{i}" for i in range(n_states)]
    lines.append("machine Fuzz requires If0 {")
    for clk in g.clocks:
        lines.append(f"  clock {clk}")
    for i, name in enumerate(state_names):
        prefix = "initial " if i == 0 else ""
        final = has_final and i == n_states - 1
        if final:
            head = f"  {prefix}final state {name}"
            body = []
            if rng.random() < 0.5:
                body.append(f"    entry {g.actions()}")
        else:
            head = f"  {prefix}state {name}"
            body = []
            for label in ("entry", "during", "exit"):
                if rng.random() < 0.45:
                    body.append(f"    {label} {g.actions()}")
        if body:
            lines.append(head + " {")
            lines.extend(body)
            lines.append("  }")
        else:
            lines.append(head)

    sources = state_names[:-1] if has_final else state_names
    for _ in range(rng.randint(0, 8)):
        src = rng.choice(sources)
        tgt = rng.choice(state_names)
        parts = [f"  transition {src} -> {tgt}"]
        if g.events and rng.random() < 0.5:
            parts.append(f"on {rng.choice(g.events)}")
        if rng.random() < 0.6:
            parts.append(f"[{g.bool_expr(2)}]")
        if rng.random() < 0.6:
            parts.append(f"/ {g.actions()}")
        lines.append(" ".join(parts))
    lines.append("}")

    return "\n".join(lines) + "\n", "Fuzz", list(g.events)


def generate_script(seed: int, events: list[str], cycles: int) -> list[set[str]]:
    rng = random.Random(seed * 7919 + 13)
    return [{e for e in events if rng.random() < 0.3} for _ in range(cycles)]
