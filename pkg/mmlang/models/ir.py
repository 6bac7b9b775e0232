"""
Typed body IR and the callable records built from it.

Bodies are checked once, at compile time. Field accesses and subsumption
conversions carry resolved slot offsets; static calls carry the callee symbol;
multimethod calls carry only the family key and the static signature, so the
selected specialization is decided by the linked dispatch tables.
"""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from mmlang.models.types import BOOL, FLOAT, INT, STRING, ParamEntry, TypeRef


class SubobjectAccess(BaseModel):
    """Where a slot or subobject lives relative to a reference.

    With no anchor, `offset` is relative to the referenced subobject's start.
    With an anchor, it is relative to the start of that virtual base inside
    the complete object, located at run time through the object's RTTable.
    """

    model_config = ConfigDict(frozen=True)

    anchor: Optional[str] = None
    offset: int = 0


# ============================================================================
# EXPRESSIONS
# ============================================================================


class IntLit(BaseModel):
    kind: Literal["int"] = "int"
    value: int
    ty: TypeRef = INT


class FloatLit(BaseModel):
    kind: Literal["float"] = "float"
    value: float
    ty: TypeRef = FLOAT


class BoolLit(BaseModel):
    kind: Literal["bool"] = "bool"
    value: bool
    ty: TypeRef = BOOL


class StrLit(BaseModel):
    kind: Literal["str"] = "str"
    value: str
    ty: TypeRef = STRING


class LocalGet(BaseModel):
    kind: Literal["local"] = "local"
    index: int
    ty: TypeRef


class FieldGet(BaseModel):
    kind: Literal["field"] = "field"
    obj: Expr
    name: str
    access: SubobjectAccess
    ty: TypeRef


class Unary(BaseModel):
    kind: Literal["unary"] = "unary"
    op: str
    operand: Expr
    ty: TypeRef


class Binary(BaseModel):
    kind: Literal["binary"] = "binary"
    op: str
    left: Expr
    right: Expr
    ty: TypeRef


class Upcast(BaseModel):
    """Subsumption of a class value to a unique ancestor (`ty`)."""

    kind: Literal["upcast"] = "upcast"
    operand: Expr
    access: SubobjectAccess
    ty: TypeRef


class StaticCall(BaseModel):
    kind: Literal["call"] = "call"
    symbol: str
    args: list[Expr] = Field(default_factory=list)
    ty: TypeRef


class MultiCall(BaseModel):
    """Multimethod invocation; `ty` is the statically computed return type."""

    kind: Literal["mcall"] = "mcall"
    key: str
    static_params: tuple[TypeRef, ...] = ()
    args: list[Expr] = Field(default_factory=list)
    ty: TypeRef


Expr = Annotated[
    Union[
        IntLit,
        FloatLit,
        BoolLit,
        StrLit,
        LocalGet,
        FieldGet,
        Unary,
        Binary,
        Upcast,
        StaticCall,
        MultiCall,
    ],
    Field(discriminator="kind"),
]


# ============================================================================
# STATEMENTS
# ============================================================================


class Block(BaseModel):
    kind: Literal["block"] = "block"
    body: list[Stmt] = Field(default_factory=list)


class LocalDecl(BaseModel):
    kind: Literal["decl"] = "decl"
    index: int
    ty: TypeRef
    init: Optional[Expr] = None


class SetLocal(BaseModel):
    kind: Literal["set_local"] = "set_local"
    index: int
    value: Expr


class SetField(BaseModel):
    kind: Literal["set_field"] = "set_field"
    obj: Expr
    name: str
    access: SubobjectAccess
    value: Expr


class ExprStmt(BaseModel):
    kind: Literal["expr"] = "expr"
    expr: Expr


class Return(BaseModel):
    kind: Literal["return"] = "return"
    value: Optional[Expr] = None


class If(BaseModel):
    kind: Literal["if"] = "if"
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None


class While(BaseModel):
    kind: Literal["while"] = "while"
    cond: Expr
    body: Stmt


class Print(BaseModel):
    kind: Literal["print"] = "print"
    value: Expr


Stmt = Annotated[
    Union[Block, LocalDecl, SetLocal, SetField, ExprStmt, Return, If, While, Print],
    Field(discriminator="kind"),
]


class FunctionBody(BaseModel):
    """Parameters occupy local indices 0..len(params)-1."""

    num_locals: int
    block: Block


for _model in (
    FieldGet,
    Unary,
    Binary,
    Upcast,
    StaticCall,
    MultiCall,
    Block,
    LocalDecl,
    SetLocal,
    SetField,
    ExprStmt,
    Return,
    If,
    While,
    Print,
    FunctionBody,
):
    _model.model_rebuild()


# ============================================================================
# CALLABLES
# ============================================================================


class FunctionEntry(BaseModel):
    """A static function (free function, non-virtual method, or main)."""

    symbol: str
    params: tuple[ParamEntry, ...] = ()
    return_type: TypeRef
    origin: str = ""
    body: Optional[FunctionBody] = None

    def signature_key(self) -> tuple:
        return (self.symbol, tuple(p.signature_part() for p in self.params))

    def display(self) -> str:
        params = ", ".join(str(p) for p in self.params)
        return f"{self.return_type} {self.symbol}({params})"


class Specialization(BaseModel):
    """One definition (or declaration) of a multimethod.

    `key` names the multimethod family: `@name(*,int)` for multimethods, where
    `*` marks a class position, and `Root::name` for virtual-method families.
    """

    key: str
    name: str
    params: tuple[ParamEntry, ...] = ()
    return_type: TypeRef
    dispatch_positions: tuple[int, ...] = ()
    origin: str = ""
    body: Optional[FunctionBody] = None

    @property
    def dispatch_types(self) -> tuple[TypeRef, ...]:
        return tuple(self.params[i].type for i in self.dispatch_positions)

    def signature_key(self) -> tuple:
        return (self.key, tuple(p.signature_part() for p in self.params))

    def short(self) -> str:
        """Compact form used in tables and traces, e.g. `@m(B,const A)`."""
        return f"{self.name}({','.join(str(p.type) for p in self.params)})"

    def display(self) -> str:
        params = ", ".join(str(p) for p in self.params)
        return f"{self.return_type} {self.name}({params})"
