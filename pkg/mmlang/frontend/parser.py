"""
Parser for the mini-language.

Tokens are produced by the lark lexer and fed one by one into an interactive
LALR parser. A parser checkpoint is taken after every `;`, `{` and `}` that was
accepted; on a syntax error the parser rolls back to the last checkpoint and
skips the offending statement, so one run reports every broken statement.
"""

from __future__ import annotations

import codecs
from pathlib import Path
from typing import Optional

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedInput

from mmlang.frontend.ast import (
    Assign,
    Ast,
    Binary,
    Block,
    BoolLit,
    Call,
    ClassDecl,
    Declarator,
    EmptyStmt,
    ExprStmt,
    FieldAccess,
    FieldDecl,
    FloatLit,
    FuncDecl,
    IfStmt,
    Include,
    IntLit,
    LocalDecl,
    MethodCall,
    MethodDecl,
    MmCall,
    MmDecl,
    MmMethodCall,
    Name,
    Param,
    ParentDecl,
    ReturnStmt,
    StringLit,
    Unary,
    WhileStmt,
)
from mmlang.models.diagnostics import Code, Diagnostic, Span, error
from mmlang.models.errors import ParseErrors
from mmlang.models.types import SCALAR_TYPES
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)

_GRAMMAR_PATH = Path(__file__).with_name("grammar.lark")
_GRAMMAR_SRC = _GRAMMAR_PATH.read_text()

_PARSER = Lark(
    _GRAMMAR_SRC,
    parser="lalr",
    lexer="basic",
    start="start",
    propagate_positions=True,
    maybe_placeholders=False,
)

_SYNC_VALUES = frozenset({";", "{", "}"})
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\", "0": "\0", "r": "\r"}


def _decode_string(raw: str) -> str:
    """Decode a STRING token (quotes included) with C escapes."""
    body = raw[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append(_ESCAPES.get(nxt, codecs.decode("\\" + nxt, "unicode_escape")))
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def _is_sync(tok: Token) -> bool:
    return tok.type != "STRING" and tok.value in _SYNC_VALUES


# ============================================================================
# TREE TO AST
# ============================================================================


@v_args(meta=True)
class _AstBuilder(Transformer):
    """Turns the lark parse tree into AST nodes."""

    def __init__(self, file_name: str):
        super().__init__()
        self.file_name = file_name
        self.diagnostics: list[Diagnostic] = []

    def _span(self, meta) -> Span:
        if getattr(meta, "empty", True):
            return Span(file=self.file_name)
        return Span(file=self.file_name, line=meta.line, column=meta.column)

    def _tok_span(self, tok: Token) -> Span:
        return Span(file=self.file_name, line=tok.line or 0, column=tok.column or 0)

    # ------------------------------------------------------------ top level

    def start(self, meta, children):
        classes, funcs, mms, includes = [], [], [], []
        for item in children:
            if isinstance(item, ClassDecl):
                classes.append(item)
            elif isinstance(item, FuncDecl):
                funcs.append(item)
            elif isinstance(item, MmDecl):
                mms.append(item)
            elif isinstance(item, Include):
                includes.append(item)
        return Ast(
            file_name=self.file_name,
            class_decls=tuple(classes),
            func_decls=tuple(funcs),
            mm_decls=tuple(mms),
            includes=tuple(includes),
        )

    def include(self, meta, children):
        tok = children[0]
        path = tok.value[tok.value.index('"') + 1 : -1]
        return Include(path=path, span=self._tok_span(tok))

    def empty_decl(self, meta, children):
        return None

    # ------------------------------------------------------------ classes

    def class_decl(self, meta, children):
        name = children[1].value
        parents, fields, members = [], [], []
        for item in children[2:]:
            if isinstance(item, ParentDecl):
                parents.append(item)
            elif isinstance(item, list):
                fields.extend(item)
            elif isinstance(item, MethodDecl):
                members.append(item)
        seen: set[str] = set()
        for parent in parents:
            if parent.name in seen:
                self.diagnostics.append(
                    error(
                        Code.E_SYNTAX,
                        f"class {name} names parent {parent.name} twice",
                        parent.span,
                    )
                )
            seen.add(parent.name)
        return ClassDecl(
            name=name,
            parents=tuple(parents),
            fields=tuple(fields),
            members=tuple(members),
            span=self._span(meta),
        )

    def parent(self, meta, children):
        mods = {c for c in children[:-1]}
        return ParentDecl(
            name=children[-1].value,
            is_virtual="virtual" in mods,
            is_public="public" in mods,
            span=self._span(meta),
        )

    def parent_mod(self, meta, children):
        return children[0].value

    def access_label(self, meta, children):
        return None

    def empty_member(self, meta, children):
        return None

    def field_decl(self, meta, children):
        type_name, *names = children
        type_name = str(type_name)
        if type_name not in SCALAR_TYPES:
            self.diagnostics.append(
                error(
                    Code.E_SYNTAX,
                    f"field {names[0].value} must have type int, bool or float, not {type_name}",
                    self._span(meta),
                )
            )
        return [FieldDecl(name=n.value, type_name=type_name, span=self._tok_span(n)) for n in names]

    def method_decl(self, meta, children):
        is_virtual = isinstance(children[0], Token) and children[0].type == "VIRTUAL"
        if is_virtual:
            children = children[1:]
        ret, name, params, body = children
        return MethodDecl(
            name=name,
            return_type=_type_text(ret),
            params=params,
            body=body,
            is_virtual=is_virtual,
            span=self._span(meta),
        )

    # ------------------------------------------------------------ functions

    def func_def(self, meta, children):
        ret, name, params, body = children
        owner = None
        if isinstance(name, tuple):
            owner, name = name
        cls = MmDecl if name.startswith("@") else FuncDecl
        return cls(
            name=name,
            return_type=_type_text(ret),
            params=params,
            body=body,
            owner=owner,
            span=self._span(meta),
        )

    def func_name(self, meta, children):
        return children[0].value

    def qualified_name(self, meta, children):
        owner, name = children
        return (owner.value, name.value)

    def no_body(self, meta, children):
        return None

    def param_list(self, meta, children):
        return tuple(children)

    def param(self, meta, children):
        is_const = by_ref = False
        type_name = None
        name = None
        for item in children:
            if isinstance(item, Token):
                if item.type == "CONST":
                    is_const = True
                elif item.type == "AMP":
                    by_ref = True
                else:
                    name = item.value
            else:
                type_name = str(item)
        return Param(
            type_name=type_name, is_const=is_const, by_ref=by_ref, name=name, span=self._span(meta)
        )

    def type(self, meta, children):
        return _TypeName(children[0].value)

    # ------------------------------------------------------------ statements

    def block(self, meta, children):
        return Block(stmts=tuple(children), span=self._span(meta))

    def local_decl(self, meta, children):
        type_name, *decls = children
        return LocalDecl(type_name=str(type_name), declarators=tuple(decls), span=self._span(meta))

    def declarator(self, meta, children):
        init = children[1] if len(children) > 1 else None
        return Declarator(name=children[0].value, init=init, span=self._span(meta))

    def assign(self, meta, children):
        target, value = children
        if not isinstance(target, (Name, FieldAccess)):
            self.diagnostics.append(
                error(Code.E_SYNTAX, "left side of assignment is not assignable", self._span(meta))
            )
        return Assign(target=target, value=value, span=self._span(meta))

    def expr_stmt(self, meta, children):
        return ExprStmt(expr=children[0], span=self._span(meta))

    def return_stmt(self, meta, children):
        value = children[1] if len(children) > 1 else None
        return ReturnStmt(value=value, span=self._span(meta))

    def if_stmt(self, meta, children):
        orelse = children[4] if len(children) > 4 else None
        return IfStmt(cond=children[1], then=children[2], orelse=orelse, span=self._span(meta))

    def while_stmt(self, meta, children):
        return WhileStmt(cond=children[1], body=children[2], span=self._span(meta))

    def empty_stmt(self, meta, children):
        return EmptyStmt(span=self._span(meta))

    # ------------------------------------------------------------ expressions

    def binary(self, meta, children):
        left, op, right = children
        return Binary(op=op.value, left=left, right=right, span=self._tok_span(op))

    def unary(self, meta, children):
        op, operand = children
        return Unary(op=op.value, operand=operand, span=self._span(meta))

    def field(self, meta, children):
        obj, name = children
        return FieldAccess(obj=obj, name=name.value, span=self._tok_span(name))

    def method_call(self, meta, children):
        obj, name, args = children
        return MethodCall(obj=obj, name=name.value, args=args, span=self._tok_span(name))

    def mm_method_call(self, meta, children):
        obj, name, args = children
        return MmMethodCall(obj=obj, name=name.value, args=args, span=self._tok_span(name))

    def int_lit(self, meta, children):
        return IntLit(value=int(children[0].value), span=self._span(meta))

    def float_lit(self, meta, children):
        return FloatLit(value=float(children[0].value), span=self._span(meta))

    def true_lit(self, meta, children):
        return BoolLit(value=True, span=self._span(meta))

    def false_lit(self, meta, children):
        return BoolLit(value=False, span=self._span(meta))

    def string_lit(self, meta, children):
        return StringLit(value=_decode_string(children[0].value), span=self._span(meta))

    def name(self, meta, children):
        return Name(name=children[0].value, span=self._span(meta))

    def call(self, meta, children):
        name, args = children
        return Call(name=name.value, args=args, span=self._span(meta))

    def mm_call(self, meta, children):
        name, args = children
        return MmCall(name=name.value, args=args, span=self._span(meta))

    def args(self, meta, children):
        return tuple(children)


class _TypeName(str):
    """Marks a parsed `type` subtree so it is not mistaken for an identifier token."""


def _type_text(node) -> str:
    return node.value if isinstance(node, Token) else str(node)


# ============================================================================
# LEXING AND ERROR RECOVERY
# ============================================================================


def _lex(text: str, file_name: str, diagnostics: list[Diagnostic]) -> list[Token]:
    """Lex the whole text; every bad character is reported once and blanked out."""
    while True:
        try:
            return list(_PARSER.lex(text))
        except UnexpectedCharacters as exc:
            diagnostics.append(
                error(
                    Code.E_SYNTAX,
                    f"unexpected character {exc.char!r}",
                    Span(file=file_name, line=exc.line, column=exc.column),
                )
            )
            pos = exc.pos_in_stream
            text = text[:pos] + " " + text[pos + 1 :]


def _resume_index(tokens: list[Token], start: int) -> int:
    """Index at which parsing resumes after an error at `start`.

    Skips to just past the next `;` at brace depth 0, or past a balanced
    `{...}` group, or up to (not past) an unmatched `}`.
    """
    depth = 0
    k = start
    while k < len(tokens):
        tok = tokens[k]
        if tok.type != "STRING":
            if tok.value == "{":
                depth += 1
            elif tok.value == "}":
                if depth == 0:
                    return k
                depth -= 1
                if depth == 0:
                    return k + 1
            elif tok.value == ";" and depth == 0:
                return k + 1
        k += 1
    return k


def _describe(tok: Token) -> str:
    if tok.type == "$END":
        return "end of input"
    return f"token {tok.value!r}"


def _parse_tokens(tokens: list[Token], file_name: str, diagnostics: list[Diagnostic]):
    parser = _PARSER.parse_interactive("")
    checkpoint = parser.copy()
    last_error: Optional[int] = None
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        try:
            parser.feed_token(tok)
        except UnexpectedInput:
            repeated = last_error == i
            if not repeated:
                diagnostics.append(
                    error(
                        Code.E_SYNTAX,
                        f"unexpected {_describe(tok)}",
                        Span(file=file_name, line=tok.line or 0, column=tok.column or 0),
                    )
                )
            last_error = i
            parser = checkpoint.copy()
            i = _resume_index(tokens, i + 1 if repeated else i)
            continue
        if _is_sync(tok):
            checkpoint = parser.copy()
        i += 1

    if tokens:
        eof = Token.new_borrow_pos("$END", "", tokens[-1])
    else:
        eof = Token("$END", "", 0, 1, 1)
    try:
        return parser.feed_token(eof)
    except UnexpectedInput:
        diagnostics.append(
            error(
                Code.E_SYNTAX,
                "unexpected end of input",
                Span(file=file_name, line=eof.line or 0, column=eof.column or 0),
            )
        )
        return None


# ============================================================================
# PUBLIC API
# ============================================================================


def parse(source_text: str, file_name: str = "<input>") -> Ast:
    """
    Parse one source or header file.

    Args:
        source_text: Program text
        file_name: Name recorded in every span

    Returns:
        The syntax tree of the file

    Raises:
        ParseErrors: If any syntax error was found; carries all of them
    """
    diagnostics: list[Diagnostic] = []
    tokens = _lex(source_text, file_name, diagnostics)
    tree = _parse_tokens(tokens, file_name, diagnostics)

    ast = None
    if tree is not None:
        builder = _AstBuilder(file_name)
        ast = builder.transform(tree)
        diagnostics.extend(builder.diagnostics)

    if diagnostics or ast is None:
        logger.debug(f"{file_name}: {len(diagnostics)} syntax error(s)")
        raise ParseErrors(diagnostics)

    logger.debug(
        f"{file_name}: {len(ast.class_decls)} classes, {len(ast.func_decls)} functions, "
        f"{len(ast.mm_decls)} multimethod specializations"
    )
    return ast
