"""Source-text emission for compiled machines and their interfaces.

Each machine becomes a class-like unit: states as an enumerated attribute,
clocks as timer-object attributes, required interfaces inherited, plus a
`MakeTransition` state-update method. Each interface becomes a class with
an enumerated event attribute, variable attributes, and overridable
methods. Machines with clocks also get a `Timer` unit with a `counter`
attribute and `StartTimer`/`ResetTimer` methods.

The output is deterministic text checked against golden files; it is never
compiled by this toolchain.
"""

from __future__ import annotations

from . import ast
from .compiler import CompiledMachine

_CPP_TYPE = {
    ast.TypeRef.BOOLEAN: "bool",
    ast.TypeRef.INT: "int",
    ast.TypeRef.REAL: "double",
    ast.TypeRef.VECTOR2D: "Vector2D",
}


def _cpp_value(ty: ast.TypeRef, value: ast.Value) -> str:
    if ty is ast.TypeRef.BOOLEAN:
        return "true" if value else "false"
    if ty is ast.TypeRef.VECTOR2D:
        return f"Vector2D({float(value[0])!r}, {float(value[1])!r})"
    if ty is ast.TypeRef.REAL:
        return repr(float(value))
    return repr(value)


def _method(name: str, params) -> str:
    args = ", ".join(f"{_CPP_TYPE[p.type]} {p.name}" for p in params)
    return f"  virtual void {name}({args});"


def emit_interface(iface: ast.InterfaceDecl) -> str:
    lines = [f"class {iface.name} {{", "public:"]
    if iface.events:
        names = ", ".join(name for name, _ in iface.events)
        lines.append(f"  enum Event {{ {names} }};")
        lines.append("  Event event;")
    for v in iface.variables:
        decl = f"  {_CPP_TYPE[v.type]} {v.name}"
        if v.init is not None:
            decl += f" = {_cpp_value(v.type, v.init)}"
        lines.append(decl + ";")
    for sig in iface.op_signatures:
        lines.append(_method(sig.name, sig.params))
    lines.append("};")
    return "\n".join(lines) + "\n"


def emit_timer_unit() -> str:
    return (
        "class Timer {\n"
        "public:\n"
        "  int counter = 0;\n"
        "  void StartTimer();\n"
        "  void ResetTimer();\n"
        "};\n"
    )


def emit_machine(cm: CompiledMachine, iface_names: list[str]) -> str:
    head = f"class {cm.name}"
    if iface_names:
        head += " : " + ", ".join(f"public {n}" for n in iface_names)
    lines = [head + " {", "public:"]
    state_names = ", ".join(s.name for s in cm.states)
    lines.append(f"  enum State {{ {state_names} }};")
    lines.append(f"  State state = {cm.states[cm.initial].name};")
    for clk in cm.clocks:
        lines.append(f"  Timer {clk};")
    lines.append("  void MakeTransition();")
    lines.append("};")
    text = "\n".join(lines) + "\n"
    if cm.clocks:
        text = emit_timer_unit() + "\n" + text
    return text


def emit_source(cm: CompiledMachine, iface: ast.InterfaceDecl) -> str:
    """One text with the interface unit followed by the machine unit."""
    return emit_interface(iface) + "\n" + emit_machine(cm, [iface.name])
