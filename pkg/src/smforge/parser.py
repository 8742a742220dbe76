"""Recursive descent parser producing a ModelUnit or a list of diagnostics.

The grammar is LL with tiny fixed lookahead; guards sit in square brackets
after the trigger, clock resets are `#T` actions. On a parse error we record
a diagnostic and re-synchronize at the next top-level keyword, so several
bad declarations each get reported. No partial AST is ever returned: the
result is either a fully structurally-valid unit or diagnostics only.
"""

from __future__ import annotations

from . import ast
from .diagnostics import Diagnostic, Span, error, sort_diagnostics
from .lexer import LexError, Token, tokenize

_TOPLEVEL = {"interface", "machine", "operation", "module"}
_TYPES = {
    "boolean": ast.TypeRef.BOOLEAN,
    "int": ast.TypeRef.INT,
    "real": ast.TypeRef.REAL,
    "vector2d": ast.TypeRef.VECTOR2D,
}
_COMPARE = {"EQ": "==", "NE": "!=", "LT": "<", "LE": "<=", "GT": ">", "GE": ">="}


class _Bail(Exception):
    """Internal: unwind to the enclosing recovery point."""


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []

    # --- token plumbing ---------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            shown = what or kind
            got = tok.text or "end of input"
            self.diags.append(
                error("P02", tok.span, f"expected {shown}, got {got!r}")
            )
            raise _Bail()
        return self.advance()

    def fail(self, span: Span, message: str, code: str = "P02") -> None:
        self.diags.append(error(code, span, message))
        raise _Bail()

    def sync_toplevel(self) -> None:
        while not self.at("EOF") and self.peek().kind not in _TOPLEVEL:
            self.advance()

    # --- unit ---------------------------------------------------------------

    def parse_unit(self) -> ast.ModelUnit:
        unit = ast.ModelUnit([], [], [], [])
        while not self.at("EOF"):
            kind = self.peek().kind
            try:
                if kind == "interface":
                    unit.interfaces.append(self.parse_interface())
                elif kind == "machine":
                    unit.machines.append(self.parse_machine())
                elif kind == "operation":
                    unit.operations.append(self.parse_operation())
                elif kind == "module":
                    unit.modules.append(self.parse_module())
                else:
                    self.fail(
                        self.peek().span,
                        f"expected a top-level declaration, got {self.peek().text!r}",
                    )
            except _Bail:
                self.sync_toplevel()
        return unit

    # --- interfaces -----------------------------------------------------------

    def parse_interface(self) -> ast.InterfaceDecl:
        start = self.expect("interface")
        name = self.expect("IDENT", "interface name")
        self.expect("LBRACE")
        variables: list[ast.VarDecl] = []
        events: list[tuple[str, Span]] = []
        sigs: list[ast.OpSignature] = []
        seen: dict[str, Span] = {}

        def check_dup(n: str, sp: Span) -> None:
            if n in seen:
                self.diags.append(
                    error("P03", sp, f"duplicate name {n!r} in interface {name.text!r}")
                )
            seen[n] = sp

        while not self.at("RBRACE", "EOF"):
            tok = self.peek()
            if tok.kind == "var":
                v = self.parse_vardecl()
                check_dup(v.name, v.span)
                variables.append(v)
            elif tok.kind == "event":
                self.advance()
                ev = self.expect("IDENT", "event name")
                check_dup(ev.text, ev.span)
                events.append((ev.text, ev.span))
            elif tok.kind == "op":
                self.advance()
                op_name = self.expect("IDENT", "operation name")
                self.expect("LPAREN")
                params = self.parse_params()
                self.expect("RPAREN")
                check_dup(op_name.text, op_name.span)
                sigs.append(ast.OpSignature(op_name.span, op_name.text, params))
            else:
                self.fail(tok.span, f"expected var/event/op, got {tok.text!r}")
        end = self.expect("RBRACE")
        return ast.InterfaceDecl(
            start.span.merge(end.span), name.text, variables, events, sigs
        )

    def parse_vardecl(self) -> ast.VarDecl:
        start = self.expect("var")
        name = self.expect("IDENT", "variable name")
        self.expect("COLON")
        type_tok = self.peek()
        ty = self.parse_type()
        init: ast.Value | None = None
        end_span = type_tok.span
        if self.at("EQUALS"):
            self.advance()
            init, end_span = self.parse_literal_value()
        return ast.VarDecl(start.span.merge(end_span), name.text, ty, init)

    def parse_type(self) -> ast.TypeRef:
        tok = self.peek()
        if tok.kind not in _TYPES:
            self.fail(tok.span, f"expected a type, got {tok.text!r}")
        self.advance()
        return _TYPES[tok.kind]

    def parse_literal_value(self) -> tuple[ast.Value, Span]:
        """Signed numeric, boolean, or vector literal (initializer position)."""
        tok = self.peek()
        if tok.kind == "true":
            self.advance()
            return True, tok.span
        if tok.kind == "false":
            self.advance()
            return False, tok.span
        if tok.kind == "LPAREN":
            return self.parse_vector_literal()
        sign = 1
        if tok.kind == "MINUS":
            self.advance()
            sign = -1
        num = self.peek()
        if num.kind == "INT":
            self.advance()
            return sign * int(num.text), tok.span.merge(num.span)
        if num.kind == "REAL":
            self.advance()
            return sign * float(num.text), tok.span.merge(num.span)
        self.fail(num.span, f"expected a literal, got {num.text!r}")
        raise AssertionError  # unreachable

    def parse_vector_literal(self) -> tuple[tuple, Span]:
        start = self.expect("LPAREN")

        def component() -> float:
            sign = 1.0
            if self.at("MINUS"):
                self.advance()
                sign = -1.0
            num = self.peek()
            if num.kind not in ("INT", "REAL"):
                self.fail(num.span, "vector components must be numeric literals")
            self.advance()
            return sign * float(num.text)

        x = component()
        self.expect("COMMA")
        y = component()
        end = self.expect("RPAREN")
        return (x, y), start.span.merge(end.span)

    def parse_params(self) -> list[ast.Param]:
        params: list[ast.Param] = []
        if self.at("RPAREN"):
            return params
        while True:
            name = self.expect("IDENT", "parameter name")
            self.expect("COLON")
            ty = self.parse_type()
            params.append(ast.Param(name.span, name.text, ty))
            if not self.at("COMMA"):
                return params
            self.advance()

    # --- machines -------------------------------------------------------------

    def parse_machine(self) -> ast.MachineDecl:
        start = self.expect("machine")
        name = self.expect("IDENT", "machine name")
        requires: list[tuple[str, Span]] = []
        if self.at("requires"):
            self.advance()
            while True:
                r = self.expect("IDENT", "interface name")
                requires.append((r.text, r.span))
                if not self.at("COMMA"):
                    break
                self.advance()
        self.expect("LBRACE")
        clocks: list[tuple[str, Span]] = []
        while self.at("clock"):
            self.advance()
            c = self.expect("IDENT", "clock name")
            clocks.append((c.text, c.span))
        states = []
        while self.at("initial", "final", "state"):
            states.append(self.parse_state())
        transitions = []
        while self.at("transition"):
            transitions.append(self.parse_transition())
        end = self.expect("RBRACE")
        span = start.span.merge(end.span)
        decl = ast.MachineDecl(span, name.text, requires, clocks, states, transitions)
        self.check_machine_structure(decl)
        return decl

    def check_machine_structure(self, m: ast.MachineDecl) -> None:
        initials = [s for s in m.states if s.is_initial]
        if not initials:
            self.diags.append(
                error("P03", m.span, f"machine {m.name!r} has no initial state")
            )
        for extra in initials[1:]:
            self.diags.append(
                error("P03", extra.span, f"duplicate initial state {extra.name!r}")
            )
        self.check_final_states(m.states, m.transitions)

    def check_final_states(
        self, states: list[ast.StateDecl], transitions: list[ast.TransitionDecl]
    ) -> None:
        finals = {s.name for s in states if s.is_final}
        for s in states:
            if s.is_final and (s.during or s.exit):
                self.diags.append(
                    error("P03", s.span, f"final state {s.name!r} has during/exit actions")
                )
        for t in transitions:
            if t.source in finals:
                self.diags.append(
                    error("P03", t.span, f"transition out of final state {t.source!r}")
                )

    def parse_state(self) -> ast.StateDecl:
        start = self.peek()
        is_initial = is_final = False
        if self.at("initial"):
            self.advance()
            is_initial = True
        if self.at("final"):
            self.advance()
            is_final = True
        self.expect("state")
        name = self.expect("IDENT", "state name")
        entry = during = exit_ = None
        end_span = name.span
        if self.at("LBRACE"):
            self.advance()
            if self.at("entry"):
                self.advance()
                entry = self.parse_actions()
            if self.at("during"):
                self.advance()
                during = self.parse_actions()
            if self.at("exit"):
                self.advance()
                exit_ = self.parse_actions()
            end_span = self.expect("RBRACE").span
        return ast.StateDecl(
            start.span.merge(end_span), name.text, entry, during, exit_,
            is_initial, is_final,
        )

    def parse_transition(self) -> ast.TransitionDecl:
        start = self.expect("transition")
        source = self.expect("IDENT", "source state")
        self.expect("ARROW")
        target = self.expect("IDENT", "target state")
        end_span = target.span
        trigger = None
        if self.at("on"):
            self.advance()
            ev = self.expect("IDENT", "event name")
            trigger = ev.text
            end_span = ev.span
        guard = None
        if self.at("LBRACKET"):
            self.advance()
            guard = self.parse_expr()
            end_span = self.expect("RBRACKET").span
        action = None
        if self.at("SLASH"):
            self.advance()
            action = self.parse_actions()
            end_span = action[-1].span
        return ast.TransitionDecl(
            start.span.merge(end_span), source.text, target.text, trigger, guard, action
        )

    # --- actions ----------------------------------------------------------------

    def parse_actions(self) -> ast.ActionSeq:
        actions = [self.parse_action()]
        while self.at("SEMI"):
            self.advance()
            actions.append(self.parse_action())
        return actions

    def parse_action(self) -> ast.Action:
        tok = self.peek()
        if tok.kind == "HASH":
            self.advance()
            clk = self.expect("IDENT", "clock name")
            return ast.ClockReset(tok.span.merge(clk.span), clk.text)
        name = self.expect("IDENT", "an action")
        if self.at("ASSIGN"):
            self.advance()
            value = self.parse_expr()
            return ast.Assign(name.span.merge(value.span), name.text, value)
        if self.at("LPAREN"):
            self.advance()
            args: list[ast.Expr] = []
            if not self.at("RPAREN"):
                args.append(self.parse_expr())
                while self.at("COMMA"):
                    self.advance()
                    args.append(self.parse_expr())
            end = self.expect("RPAREN")
            return ast.OpCall(name.span.merge(end.span), name.text, args)
        self.fail(self.peek().span, "expected ':=' or '(' in action")
        raise AssertionError

    # --- operations -------------------------------------------------------------

    def parse_operation(self) -> ast.OperationDef:
        start = self.expect("operation")
        name = self.expect("IDENT", "operation name")
        self.expect("LPAREN")
        params = self.parse_params()
        end_span = self.expect("RPAREN").span
        pre = post = None
        if self.at("pre"):
            self.advance()
            pre = self.parse_expr()
            end_span = pre.span
        if self.at("post"):
            self.advance()
            post = self.parse_expr()
            end_span = post.span
        body = None
        if self.at("LBRACE"):
            lb = self.advance()
            states = []
            while self.at("initial", "final", "state"):
                states.append(self.parse_state())
            transitions = []
            while self.at("transition"):
                transitions.append(self.parse_transition())
            end_span = self.expect("RBRACE").span
            body = ast.OperationBody(lb.span.merge(end_span), states, transitions)
            self.check_body_structure(name.text, body)
        return ast.OperationDef(
            start.span.merge(end_span), name.text, params, pre, post, body
        )

    def check_body_structure(self, op_name: str, body: ast.OperationBody) -> None:
        initials = [s for s in body.states if s.is_initial]
        if len(initials) != 1:
            self.diags.append(
                error(
                    "P03", body.span,
                    f"operation {op_name!r} body must have exactly one initial state",
                )
            )
        if not any(s.is_final for s in body.states):
            self.diags.append(
                error("P03", body.span, f"operation {op_name!r} body has no final state")
            )
        self.check_final_states(body.states, body.transitions)

    # --- modules ----------------------------------------------------------------

    def parse_module(self) -> ast.ModuleDecl:
        start = self.expect("module")
        name = self.expect("IDENT", "module name")
        self.expect("LBRACE")
        self.expect("platform")
        plat = self.expect("IDENT", "platform name")
        self.expect("SEMI")
        controllers: list[tuple[str, Span]] = []
        while self.at("controller"):
            self.advance()
            c = self.expect("IDENT", "controller name")
            controllers.append((c.text, c.span))
            self.expect("SEMI")
        end = self.expect("RBRACE")
        span = start.span.merge(end.span)
        if not controllers:
            self.diags.append(
                error("P03", span, f"module {name.text!r} declares no controller")
            )
        return ast.ModuleDecl(span, name.text, plat.text, controllers)

    # --- expressions --------------------------------------------------------------
    # precedence loosest to tightest: ternary, or, and, comparison,
    # additive, multiplicative, unary, primary

    def parse_expr(self) -> ast.Expr:
        cond = self.parse_or()
        if not self.at("QUESTION"):
            return cond
        self.advance()
        then = self.parse_expr()
        self.expect("COLON")
        other = self.parse_expr()
        node = ast.Conditional(cond.span.merge(other.span))
        node.cond, node.then, node.other = cond, then, other
        return node

    def _binary_chain(self, sub, ops: dict[str, str]) -> ast.Expr:
        left = sub()
        while self.peek().kind in ops:
            op = ops[self.advance().kind]
            right = sub()
            node = ast.Binary(left.span.merge(right.span))
            node.op, node.left, node.right = op, left, right
            left = node
        return left

    def parse_or(self) -> ast.Expr:
        return self._binary_chain(self.parse_and, {"or": "or"})

    def parse_and(self) -> ast.Expr:
        return self._binary_chain(self.parse_comparison, {"and": "and"})

    def parse_comparison(self) -> ast.Expr:
        return self._binary_chain(self.parse_additive, _COMPARE)

    def parse_additive(self) -> ast.Expr:
        return self._binary_chain(
            self.parse_multiplicative, {"PLUS": "+", "MINUS": "-"}
        )

    def parse_multiplicative(self) -> ast.Expr:
        return self._binary_chain(self.parse_unary, {"STAR": "*", "SLASH": "/"})

    def parse_unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "not" or tok.kind == "MINUS":
            self.advance()
            operand = self.parse_unary()
            node = ast.Unary(tok.span.merge(operand.span))
            node.op = "not" if tok.kind == "not" else "neg"
            node.operand = operand
            return node
        return self.parse_primary()

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            node = ast.Literal(tok.span)
            node.value = int(tok.text)
            return node
        if tok.kind == "REAL":
            self.advance()
            node = ast.Literal(tok.span)
            node.value = float(tok.text)
            return node
        if tok.kind in ("true", "false"):
            self.advance()
            node = ast.Literal(tok.span)
            node.value = tok.kind == "true"
            return node
        if tok.kind == "since":
            self.advance()
            self.expect("LPAREN")
            clk = self.expect("IDENT", "clock name")
            end = self.expect("RPAREN")
            node = ast.SinceExpr(tok.span.merge(end.span))
            node.clock = clk.text
            return node
        if tok.kind == "IDENT":
            self.advance()
            node = ast.VarRef(tok.span)
            node.name = tok.text
            return node
        if tok.kind == "LPAREN":
            if self._looks_like_vector():
                value, span = self.parse_vector_literal()
                node = ast.Literal(span)
                node.value = value
                return node
            self.advance()
            inner = self.parse_expr()
            self.expect("RPAREN")
            return inner
        self.fail(tok.span, f"expected an expression, got {tok.text or 'end of input'!r}")
        raise AssertionError

    def _looks_like_vector(self) -> bool:
        k1, k2, k3 = self.peek(1).kind, self.peek(2).kind, self.peek(3).kind
        if k1 in ("INT", "REAL") and k2 == "COMMA":
            return True
        return k1 == "MINUS" and k2 in ("INT", "REAL") and k3 == "COMMA"


def parse(source: str, filename: str = "<input>") -> ast.ModelUnit | list[Diagnostic]:
    """Parse source text; returns the unit, or ≥1 diagnostics on any failure."""
    try:
        tokens = tokenize(source, filename)
    except LexError as exc:
        return [exc.diagnostic]
    parser = _Parser(tokens)
    unit = parser.parse_unit()
    if parser.diags:
        return sort_diagnostics(parser.diags)
    return unit
