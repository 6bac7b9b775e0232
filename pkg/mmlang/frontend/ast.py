"""
Syntax tree of the mini-language.

Nodes are immutable dataclasses. Every node carries a `span`; spans are excluded
from equality so that structurally identical trees compare equal wherever they
came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from mmlang.models.diagnostics import Span

_NO_SPAN = Span()


def _span() -> Span:
    return field(default=_NO_SPAN, compare=False, repr=False)


# ============================================================================
# EXPRESSIONS
# ============================================================================


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class FloatLit:
    value: float
    span: Span = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class StringLit:
    value: str
    span: Span = _span()


@dataclass(frozen=True)
class Name:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    """Static function call `f(args)`, including the `print` builtin."""

    name: str
    args: tuple[Expr, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class MmCall:
    """Multimethod call `@m(args)`."""

    name: str
    args: tuple[Expr, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class FieldAccess:
    obj: Expr
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class MethodCall:
    obj: Expr
    name: str
    args: tuple[Expr, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class MmMethodCall:
    """Method-call syntax for a multimethod, `o.@m(args)`."""

    obj: Expr
    name: str
    args: tuple[Expr, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    span: Span = _span()


Expr = Union[
    IntLit,
    FloatLit,
    BoolLit,
    StringLit,
    Name,
    Call,
    MmCall,
    FieldAccess,
    MethodCall,
    MmMethodCall,
    Unary,
    Binary,
]


# ============================================================================
# STATEMENTS
# ============================================================================


@dataclass(frozen=True)
class Declarator:
    name: str
    init: Optional[Expr] = None
    span: Span = _span()


@dataclass(frozen=True)
class LocalDecl:
    type_name: str
    declarators: tuple[Declarator, ...]
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    target: Expr
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class ReturnStmt:
    value: Optional[Expr] = None
    span: Span = _span()


@dataclass(frozen=True)
class IfStmt:
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None
    span: Span = _span()


@dataclass(frozen=True)
class WhileStmt:
    cond: Expr
    body: Stmt
    span: Span = _span()


@dataclass(frozen=True)
class EmptyStmt:
    span: Span = _span()


@dataclass(frozen=True)
class Block:
    stmts: tuple[Stmt, ...] = ()
    span: Span = _span()


Stmt = Union[Block, LocalDecl, Assign, ExprStmt, ReturnStmt, IfStmt, WhileStmt, EmptyStmt]


# ============================================================================
# DECLARATIONS
# ============================================================================


@dataclass(frozen=True)
class Param:
    type_name: str
    is_const: bool = False
    by_ref: bool = False
    name: Optional[str] = None
    span: Span = _span()


@dataclass(frozen=True)
class ParentDecl:
    name: str
    is_virtual: bool = False
    is_public: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type_name: str
    span: Span = _span()


@dataclass(frozen=True)
class MethodDecl:
    """A method or member multimethod declared inside a class body."""

    name: str
    return_type: str
    params: tuple[Param, ...] = ()
    body: Optional[Block] = None
    is_virtual: bool = False
    span: Span = _span()

    @property
    def is_multimethod(self) -> bool:
        return self.name.startswith("@")


@dataclass(frozen=True)
class ClassDecl:
    name: str
    parents: tuple[ParentDecl, ...] = ()
    fields: tuple[FieldDecl, ...] = ()
    members: tuple[MethodDecl, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class FuncDecl:
    """Free static function (name without `@`).

    `owner` is set for an out-of-class method definition `C::name`.
    """

    name: str
    return_type: str
    params: tuple[Param, ...] = ()
    body: Optional[Block] = None
    owner: Optional[str] = None
    span: Span = _span()


@dataclass(frozen=True)
class MmDecl:
    """Free multimethod specialization.

    `receiver` names the class a member multimethod was declared in; its first
    parameter is then the implicit `this` reference and bare field names in the
    body resolve through it.
    `owner` is the written qualifier of an out-of-class definition `C::@m`;
    desugaring turns it into a receiver.
    """

    name: str
    return_type: str
    params: tuple[Param, ...] = ()
    body: Optional[Block] = None
    receiver: Optional[str] = None
    owner: Optional[str] = None
    span: Span = _span()


@dataclass(frozen=True)
class Include:
    path: str
    span: Span = _span()


@dataclass(frozen=True)
class Ast:
    file_name: str = ""
    class_decls: tuple[ClassDecl, ...] = ()
    func_decls: tuple[FuncDecl, ...] = ()
    mm_decls: tuple[MmDecl, ...] = ()
    includes: tuple[Include, ...] = ()

    def with_changes(self, **changes) -> "Ast":
        return replace(self, **changes)

    @property
    def has_bodies(self) -> bool:
        methods = (m for c in self.class_decls for m in c.members)
        return any(d.body is not None for d in (*self.func_decls, *self.mm_decls, *methods))
