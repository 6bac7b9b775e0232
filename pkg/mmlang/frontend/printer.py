"""
Pretty printer producing source text that parses back to the same tree.

Binary and unary expressions are fully parenthesized so precedence never has
to be reconstructed.
"""

from __future__ import annotations

from decimal import Decimal
from functools import singledispatch

from mmlang.frontend import ast as A

INDENT = "    "
_ESCAPES = {"\n": "\\n", "\t": "\\t", '"': '\\"', "\\": "\\\\", "\0": "\\0", "\r": "\\r"}


def _quote(text: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in text) + '"'


def _float_text(value: float) -> str:
    text = format(Decimal(repr(value)), "f")
    return text if "." in text else text + ".0"


# ============================================================================
# EXPRESSIONS
# ============================================================================


@singledispatch
def format_expr(node) -> str:
    raise TypeError(f"not an expression node: {type(node).__name__}")


@format_expr.register
def _(node: A.IntLit) -> str:
    return str(node.value)


@format_expr.register
def _(node: A.FloatLit) -> str:
    return _float_text(node.value)


@format_expr.register
def _(node: A.BoolLit) -> str:
    return "true" if node.value else "false"


@format_expr.register
def _(node: A.StringLit) -> str:
    return _quote(node.value)


@format_expr.register
def _(node: A.Name) -> str:
    return node.name


def _args(args) -> str:
    return ", ".join(format_expr(a) for a in args)


@format_expr.register
def _(node: A.Call) -> str:
    return f"{node.name}({_args(node.args)})"


@format_expr.register
def _(node: A.MmCall) -> str:
    return f"{node.name}({_args(node.args)})"


@format_expr.register
def _(node: A.FieldAccess) -> str:
    return f"{format_expr(node.obj)}.{node.name}"


@format_expr.register
def _(node: A.MethodCall) -> str:
    return f"{format_expr(node.obj)}.{node.name}({_args(node.args)})"


@format_expr.register
def _(node: A.MmMethodCall) -> str:
    return f"{format_expr(node.obj)}.{node.name}({_args(node.args)})"


@format_expr.register
def _(node: A.Unary) -> str:
    return f"({node.op}{format_expr(node.operand)})"


@format_expr.register
def _(node: A.Binary) -> str:
    return f"({format_expr(node.left)} {node.op} {format_expr(node.right)})"


# ============================================================================
# STATEMENTS
# ============================================================================


def _stmt_lines(node, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(node, A.Block):
        lines = [pad + "{"]
        for stmt in node.stmts:
            lines.extend(_stmt_lines(stmt, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(node, A.LocalDecl):
        parts = [
            d.name if d.init is None else f"{d.name} = {format_expr(d.init)}"
            for d in node.declarators
        ]
        return [f"{pad}{node.type_name} {', '.join(parts)};"]
    if isinstance(node, A.Assign):
        return [f"{pad}{format_expr(node.target)} = {format_expr(node.value)};"]
    if isinstance(node, A.ExprStmt):
        return [f"{pad}{format_expr(node.expr)};"]
    if isinstance(node, A.ReturnStmt):
        if node.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {format_expr(node.value)};"]
    if isinstance(node, A.IfStmt):
        lines = [f"{pad}if ({format_expr(node.cond)})"]
        then = node.then
        if node.orelse is not None and _is_open(then):
            then = A.Block(stmts=(then,))
        lines.extend(_stmt_lines(then, depth))
        if node.orelse is not None:
            lines.append(f"{pad}else")
            lines.extend(_stmt_lines(node.orelse, depth))
        return lines
    if isinstance(node, A.WhileStmt):
        return [f"{pad}while ({format_expr(node.cond)})", *_stmt_lines(node.body, depth)]
    if isinstance(node, A.EmptyStmt):
        return [f"{pad};"]
    raise TypeError(f"not a statement node: {type(node).__name__}")


def _is_open(stmt) -> bool:
    """True when a following `else` would bind inside `stmt`."""
    if isinstance(stmt, A.IfStmt):
        return stmt.orelse is None or _is_open(stmt.orelse)
    if isinstance(stmt, A.WhileStmt):
        return _is_open(stmt.body)
    return False


# ============================================================================
# DECLARATIONS
# ============================================================================


def format_param(param: A.Param) -> str:
    text = ("const " if param.is_const else "") + param.type_name
    if param.by_ref:
        text += " &"
    if param.name:
        text += " " + param.name
    return text


def _signature(return_type: str, name: str, params) -> str:
    return f"{return_type} {name}({', '.join(format_param(p) for p in params)})"


def _callable_lines(head: str, body, depth: int) -> list[str]:
    pad = INDENT * depth
    if body is None:
        return [f"{pad}{head};"]
    return [f"{pad}{head}", *_stmt_lines(body, depth)]


def _class_lines(decl: A.ClassDecl) -> list[str]:
    head = f"class {decl.name}"
    if decl.parents:
        parents = []
        for p in decl.parents:
            mods = ("public " if p.is_public else "") + ("virtual " if p.is_virtual else "")
            parents.append(mods + p.name)
        head += ": " + ", ".join(parents)
    lines = [head + " {"]
    for f in decl.fields:
        lines.append(f"{INDENT}{f.type_name} {f.name};")
    for m in decl.members:
        sig = _signature(m.return_type, m.name, m.params)
        lines.extend(_callable_lines(("virtual " if m.is_virtual else "") + sig, m.body, 1))
    lines.append("};")
    return lines


def format_ast(tree: A.Ast) -> str:
    """Render a syntax tree as source text."""
    lines: list[str] = [f'#include "{inc.path}"' for inc in tree.includes]
    for decl in tree.class_decls:
        lines.extend(_class_lines(decl))
    for fn in (*tree.func_decls, *tree.mm_decls):
        name = fn.name if fn.owner is None else f"{fn.owner}::{fn.name}"
        lines.extend(_callable_lines(_signature(fn.return_type, name, fn.params), fn.body, 0))
    return "\n".join(lines) + ("\n" if lines else "")
