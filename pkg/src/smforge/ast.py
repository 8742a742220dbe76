"""AST for the controller language.

Every node carries a source span. Declaration order is preserved exactly as
written (the runtime's transition tie-breaking depends on it). Expression
nodes have a `ty` slot the analyzer fills in; it is excluded from structural
equality, as are spans (see `ast_equal`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum

from .diagnostics import Span


class TypeRef(Enum):
    BOOLEAN = "boolean"
    INT = "int"
    REAL = "real"
    VECTOR2D = "vector2d"

    def __str__(self) -> str:
        return self.value


# literal runtime values: bool, int, float, or a 2-tuple of floats
Value = bool | int | float | tuple


# --- expressions -----------------------------------------------------------

@dataclass(eq=False)
class Expr:
    span: Span
    ty: TypeRef | None = field(default=None, init=False, compare=False)


@dataclass(eq=False)
class Literal(Expr):
    value: Value = False


@dataclass(eq=False)
class VarRef(Expr):
    name: str = ""


@dataclass(eq=False)
class Unary(Expr):
    op: str = ""  # "not" | "neg"
    operand: Expr | None = None


@dataclass(eq=False)
class Binary(Expr):
    op: str = ""  # and or == != < <= > >= + - * /
    left: Expr | None = None
    right: Expr | None = None


@dataclass(eq=False)
class SinceExpr(Expr):
    clock: str = ""


@dataclass(eq=False)
class Conditional(Expr):
    cond: Expr | None = None
    then: Expr | None = None
    other: Expr | None = None


# --- actions ---------------------------------------------------------------

@dataclass(eq=False)
class Action:
    span: Span


@dataclass(eq=False)
class ClockReset(Action):
    clock: str = ""


@dataclass(eq=False)
class Assign(Action):
    target: str = ""
    value: Expr | None = None


@dataclass(eq=False)
class OpCall(Action):
    name: str = ""
    args: list[Expr] = field(default_factory=list)


# an absent action sequence is represented as None, never as []
ActionSeq = list[Action]


# --- declarations ----------------------------------------------------------

@dataclass(eq=False)
class VarDecl:
    span: Span
    name: str
    type: TypeRef
    init: Value | None  # literal initial value, folded sign included


@dataclass(eq=False)
class Param:
    span: Span
    name: str
    type: TypeRef


@dataclass(eq=False)
class OpSignature:
    span: Span
    name: str
    params: list[Param]


@dataclass(eq=False)
class InterfaceDecl:
    span: Span
    name: str
    variables: list[VarDecl]
    events: list[tuple[str, Span]]
    op_signatures: list[OpSignature]


@dataclass(eq=False)
class StateDecl:
    span: Span
    name: str
    entry: ActionSeq | None
    during: ActionSeq | None
    exit: ActionSeq | None
    is_initial: bool
    is_final: bool


@dataclass(eq=False)
class TransitionDecl:
    span: Span
    source: str
    target: str
    trigger: str | None
    guard: Expr | None
    action: ActionSeq | None


@dataclass(eq=False)
class MachineDecl:
    span: Span
    name: str
    requires: list[tuple[str, Span]]
    clocks: list[tuple[str, Span]]
    states: list[StateDecl]
    transitions: list[TransitionDecl]

    @property
    def initial(self) -> str:
        return next(s.name for s in self.states if s.is_initial)


@dataclass(eq=False)
class OperationBody:
    span: Span
    states: list[StateDecl]
    transitions: list[TransitionDecl]


@dataclass(eq=False)
class OperationDef:
    span: Span
    name: str
    params: list[Param]
    pre: Expr | None
    post: Expr | None
    body: OperationBody | None  # absent: platform-bound


@dataclass(eq=False)
class ModuleDecl:
    span: Span
    name: str
    platform: str
    controllers: list[tuple[str, Span]]


@dataclass(eq=False)
class ModelUnit:
    interfaces: list[InterfaceDecl]
    machines: list[MachineDecl]
    operations: list[OperationDef]
    modules: list[ModuleDecl]

    def interface(self, name: str) -> InterfaceDecl:
        return next(i for i in self.interfaces if i.name == name)

    def machine(self, name: str) -> MachineDecl:
        return next(m for m in self.machines if m.name == name)


_IGNORED_FIELDS = {"span", "ty"}


def ast_equal(a: object, b: object) -> bool:
    """Structural equality over AST nodes, ignoring spans and type annotations."""
    if type(a) is not type(b):
        return False
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(ast_equal(x, y) for x, y in zip(a, b))
    if hasattr(a, "__dataclass_fields__"):
        if isinstance(a, Span):
            return True
        for f in fields(a):
            if f.name in _IGNORED_FIELDS:
                continue
            if not ast_equal(getattr(a, f.name), getattr(b, f.name)):
                return False
        return True
    return a == b
