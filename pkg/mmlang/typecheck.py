"""
Phase-1 checking: declarations, static types of bodies, multimethod invocations.

The checker works on one compilation unit (a source file plus the headers it
includes) and produces the object module the pre-linker consumes. Bodies are
lowered to the typed IR; every multimethod call is typed from the
specializations visible in this unit only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from mmlang.frontend import ast as A
from mmlang.frontend.includes import CompilationUnit, SourceReader, load_unit
from mmlang.hierarchy import Hierarchy, Relation, build, entry_from_decl
from mmlang.models import ir
from mmlang.models.diagnostics import Code, Diagnostic, Span, error, warning
from mmlang.models.errors import CompileError, HierarchyError
from mmlang.models.program import ObjectModule
from mmlang.models.types import (
    BOOL,
    INT,
    SCALAR_TYPES,
    STRING,
    VOID,
    VOID_TYPE,
    ClassEntry,
    MethodEntry,
    ParamEntry,
    TypeRef,
)
from mmlang.utils.config import Settings, get_settings
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)

ERROR_TYPE = TypeRef(name="<error>")


# ============================================================================
# SPECIALIZATION ORDER AND INVOCATION TYPING
# ============================================================================


def applicable(h: Hierarchy, spec: ir.Specialization, arg_types: Sequence[TypeRef]) -> Relation:
    """How `spec` applies to dispatch-position argument types."""
    result = Relation.UNIQUE
    for param_t, arg_t in zip(spec.dispatch_types, arg_types):
        answer = h.dispatch_subtype(arg_t, param_t)
        if answer.is_no:
            return Relation.NO
        if answer.is_ambiguous:
            result = Relation.AMBIGUOUS
    return result


def more_specific(h: Hierarchy, s1: ir.Specialization, s2: ir.Specialization) -> bool:
    """True when every dispatch type of `s1` is a unique dispatch-subtype of `s2`'s."""
    return all(
        h.dispatch_subtype(a, b).is_unique for a, b in zip(s1.dispatch_types, s2.dispatch_types)
    )


def minimal(h: Hierarchy, specs: Sequence[ir.Specialization]) -> list[ir.Specialization]:
    return [
        s
        for s in specs
        if not any(
            o is not s and more_specific(h, o, s) and not more_specific(h, s, o) for o in specs
        )
    ]


@dataclass(frozen=True)
class Invocation:
    """Static typing of one call: a return type, or a diagnostic code, or both."""

    return_type: Optional[TypeRef]
    code: Optional[Code] = None
    candidates: tuple[ir.Specialization, ...] = ()


def type_invocation(
    h: Hierarchy, specs: Sequence[ir.Specialization], arg_types: Sequence[TypeRef]
) -> Invocation:
    """
    Static return type of a multimethod call.

    Args:
        h: Hierarchy
        specs: Specializations of the called family visible at the call site
        arg_types: Static types of the arguments at the dispatch positions

    Returns:
        The invocation result; `code` is a warning when a type is still given
        and an error when `return_type` is None
    """
    unique = [s for s in specs if applicable(h, s, arg_types) is Relation.UNIQUE]
    if unique:
        best = minimal(h, unique)
        if len(best) == 1:
            return Invocation(best[0].return_type, None, tuple(best))
        if len({s.return_type for s in best}) == 1:
            return Invocation(best[0].return_type, Code.W_NO_MOST_SPECIFIC, tuple(best))
        return Invocation(None, Code.E_AMBIGUOUS_RETURN, tuple(best))

    ambiguous = [s for s in specs if applicable(h, s, arg_types) is Relation.AMBIGUOUS]
    if ambiguous:
        best = minimal(h, ambiguous)
        if len({s.return_type for s in best}) == 1:
            return Invocation(best[0].return_type, Code.W_AMBIG_SUBTYPE, tuple(best))
        return Invocation(None, Code.E_AMBIGUOUS_RETURN, tuple(best))

    return Invocation(None, Code.E_NO_APPLICABLE)


def return_compatible(h: Hierarchy, narrower: TypeRef, wider: TypeRef) -> bool:
    """Whether a result of type `narrower` may stand where `wider` is expected."""
    if narrower.is_class and wider.is_class:
        return h.subtype(narrower.name, wider.name).is_unique
    return narrower.name == wider.name


def family_key(name: str, param_types: Sequence[TypeRef]) -> str:
    """`@m(*,int)`: class positions are `*`, scalar positions keep their type."""
    parts = ("*" if t.is_class else t.name for t in param_types)
    return f"{name}({','.join(parts)})"


# ============================================================================
# MODULE CONTEXT
# ============================================================================


@dataclass
class _Callable:
    """A function or specialization being assembled, with its source facts."""

    record: object
    span: Span
    decl_body: Optional[A.Block] = None
    receiver: Optional[str] = None
    own: bool = False
    param_spans: tuple[Span, ...] = ()


@dataclass
class _Module:
    h: Hierarchy
    settings: Settings
    diagnostics: list[Diagnostic] = field(default_factory=list)
    functions: dict[str, _Callable] = field(default_factory=dict)
    specs: dict[tuple, _Callable] = field(default_factory=dict)
    families: dict[str, list[ir.Specialization]] = field(default_factory=dict)
    methods: dict[tuple[str, str], tuple[str, bool]] = field(default_factory=dict)

    def report(self, diagnostic: Diagnostic) -> None:
        self.diagnostics.append(diagnostic)


def _is_known_type(h: Hierarchy, name: str, allow_void: bool = False) -> bool:
    return name in SCALAR_TYPES or name in h or (allow_void and name == VOID)


def _param_entry(p: A.Param) -> ParamEntry:
    return ParamEntry(
        name=p.name or "",
        type=TypeRef(name=p.type_name, is_const=p.is_const),
        by_ref=p.by_ref,
    )


def _this_param(cls: str) -> ParamEntry:
    return ParamEntry(name="this", type=TypeRef(name=cls), by_ref=True)


def _same_params(a: Sequence[ParamEntry], b: Sequence[ParamEntry]) -> bool:
    return [p.signature_part() for p in a] == [p.signature_part() for p in b]


def _param_spans(decl, span: Span, count: int) -> tuple[Span, ...]:
    """Spans of a definition's parameters; an implicit `this` takes `span`."""
    own = tuple(p.span for p in decl.params)
    return (span,) * (count - len(own)) + own


# ============================================================================
# DECLARATIONS
# ============================================================================


def _collect_classes(unit: CompilationUnit, diagnostics: list[Diagnostic]):
    entries: dict[str, ClassEntry] = {}
    spans: dict[str, Span] = {}
    bodies: dict[tuple[str, str], A.MethodDecl] = {}
    for tree in (*unit.headers, unit.source):
        is_source = tree is unit.source
        in_tree: set[str] = set()
        for decl in tree.class_decls:
            entry = entry_from_decl(decl)
            repeated = decl.name in in_tree
            in_tree.add(decl.name)
            if decl.name in entries and (repeated or entries[decl.name] != entry):
                diagnostics.append(
                    error(
                        Code.E_DUPLICATE_DECL,
                        f"class {decl.name} is declared twice",
                        decl.span,
                        related=(spans[decl.name],),
                    )
                )
                continue
            entries.setdefault(decl.name, entry)
            spans.setdefault(decl.name, decl.span)
            if is_source:
                for member in decl.members:
                    if member.body is not None:
                        bodies[(decl.name, member.name)] = member
    return entries, spans, bodies


class _Declarations:
    """Builds the signature tables of one unit."""

    def __init__(self, mod: _Module, unit: CompilationUnit, class_spans: dict[str, Span]):
        self.mod = mod
        self.unit = unit
        self.class_spans = class_spans

    def check_types(self, params: Sequence[A.Param], return_type: str, span: Span) -> bool:
        ok = True
        for p in params:
            if not _is_known_type(self.mod.h, p.type_name):
                self.mod.report(error(Code.E_UNKNOWN_TYPE, f"unknown type {p.type_name}", p.span))
                ok = False
        if not _is_known_type(self.mod.h, return_type, allow_void=True):
            self.mod.report(error(Code.E_UNKNOWN_TYPE, f"unknown type {return_type}", span))
            ok = False
        return ok

    # ------------------------------------------------------------ methods

    def _virtual_roots(self, cls: str, name: str) -> set[str]:
        """Roots of the virtual families `cls::name` overrides (empty if none)."""
        roots: set[str] = set()
        seen: set[str] = set()
        for sub in self.mod.h.layout(cls).subobjects[1:]:
            if sub.cls in seen:
                continue
            seen.add(sub.cls)
            for method in self.mod.h.entry(sub.cls).methods:
                if method.name == name and self._is_virtual(sub.cls, method):
                    roots |= self._virtual_roots(sub.cls, name) or {sub.cls}
        return roots

    def _is_virtual(self, cls: str, method: MethodEntry) -> bool:
        return method.is_virtual or bool(self._virtual_roots(cls, method.name))

    def _check_override(self, cls: str, method: MethodEntry, span: Span) -> None:
        h = self.mod.h
        for anc in sorted({s.cls for s in h.layout(cls).subobjects[1:]}):
            for other in h.entry(anc).methods:
                if other.name != method.name or not self._is_virtual(anc, other):
                    continue
                if not _same_params(method.params, other.params):
                    self.mod.report(
                        error(
                            Code.E_OVERRIDE_PARAM,
                            f"{cls}::{method.name} overrides {anc}::{other.name} "
                            f"with different parameter types",
                            span,
                        )
                    )
                elif not return_compatible(h, method.return_type, other.return_type):
                    self.mod.report(
                        error(
                            Code.E_OVERRIDE_PARAM,
                            f"{cls}::{method.name} returns {method.return_type}, "
                            f"incompatible with {anc}::{other.name} returning {other.return_type}",
                            span,
                        )
                    )

    def declare_methods(self, bodies: dict[tuple[str, str], A.MethodDecl]) -> None:
        h = self.mod.h
        for cls in h.names:
            span = self.class_spans.get(cls, Span())
            names_seen: set[str] = set()
            for method in h.entry(cls).methods:
                if method.name in names_seen:
                    self.mod.report(
                        error(
                            Code.E_DUPLICATE_DECL,
                            f"method {cls}::{method.name} declared twice",
                            span,
                        )
                    )
                    continue
                names_seen.add(method.name)
                if any(not _is_known_type(h, p.type.name) for p in method.params) or not (
                    _is_known_type(h, method.return_type.name, allow_void=True)
                ):
                    self.mod.report(
                        error(Code.E_UNKNOWN_TYPE, f"unknown type in {cls}::{method.name}", span)
                    )
                    continue
                member = bodies.get((cls, method.name))
                params = (_this_param(cls), *method.params)
                roots = self._virtual_roots(cls, method.name)
                if len(roots) > 1:
                    self.mod.report(
                        error(
                            Code.E_AMBIGUOUS_MEMBER,
                            f"{cls}::{method.name} overrides methods of unrelated classes "
                            f"{', '.join(sorted(roots))}",
                            span,
                        )
                    )
                    continue
                if roots or method.is_virtual:
                    self._check_override(cls, method, span)
                    root = next(iter(roots)) if roots else cls
                    spec = ir.Specialization(
                        key=f"{root}::{method.name}",
                        name=f"{cls}::{method.name}",
                        params=params,
                        return_type=method.return_type,
                        dispatch_positions=(0,),
                    )
                    self.mod.methods[(cls, method.name)] = (spec.key, True)
                    self._add_spec(spec, member.span if member else span, member, cls)
                else:
                    fn = ir.FunctionEntry(
                        symbol=f"{cls}::{method.name}",
                        params=params,
                        return_type=method.return_type,
                    )
                    self.mod.methods[(cls, method.name)] = (fn.symbol, False)
                    self._add_function(fn, member.span if member else span, member, cls)

    # ------------------------------------------------------------ registration

    def _merge(
        self, existing: _Callable, body, span: Span, what: str, param_spans: tuple[Span, ...]
    ) -> None:
        if body is None:
            return
        if existing.decl_body is not None:
            self.mod.report(
                error(Code.E_DUPLICATE_DECL, f"{what} is defined twice", span, (existing.span,))
            )
            return
        existing.decl_body = body
        existing.span = span
        existing.param_spans = param_spans
        existing.own = True

    def _add_function(self, fn: ir.FunctionEntry, span: Span, decl, receiver=None) -> None:
        body = None if decl is None else decl.body
        spans = () if decl is None else _param_spans(decl, span, len(fn.params))
        existing = self.mod.functions.get(fn.symbol)
        if existing is None:
            self.mod.functions[fn.symbol] = _Callable(
                record=fn,
                span=span,
                decl_body=body,
                receiver=receiver,
                own=body is not None,
                param_spans=spans,
            )
            return
        old = existing.record
        if not _same_params(old.params, fn.params) or old.return_type != fn.return_type:
            self.mod.report(
                error(
                    Code.E_DUPLICATE_DECL,
                    f"{fn.symbol} is declared twice with different signatures",
                    span,
                    (existing.span,),
                )
            )
            return
        self._merge(existing, body, span, fn.symbol, spans)

    def _add_spec(self, spec: ir.Specialization, span: Span, decl, receiver=None) -> None:
        body = None if decl is None else decl.body
        spans = () if decl is None else _param_spans(decl, span, len(spec.params))
        key = spec.signature_key()
        existing = self.mod.specs.get(key)
        if existing is None:
            self.mod.specs[key] = _Callable(
                record=spec,
                span=span,
                decl_body=body,
                receiver=receiver,
                own=body is not None,
                param_spans=spans,
            )
            self.mod.families.setdefault(spec.key, []).append(spec)
            return
        if existing.record.return_type != spec.return_type:
            self.mod.report(
                error(
                    Code.E_DUPLICATE_DECL,
                    f"{spec.short()} is declared twice with different return types",
                    span,
                    (existing.span,),
                )
            )
            return
        self._merge(existing, body, span, spec.short(), spans)

    # ------------------------------------------------------------ free declarations

    def declare_free(self) -> None:
        for tree in (*self.unit.headers, self.unit.source):
            for fn in tree.func_decls:
                if not self.check_types(fn.params, fn.return_type, fn.span):
                    continue
                if fn.owner is not None:
                    self._define_method(fn)
                    continue
                entry = ir.FunctionEntry(
                    symbol=fn.name,
                    params=tuple(_param_entry(p) for p in fn.params),
                    return_type=TypeRef(name=fn.return_type),
                    origin=tree.file_name,
                )
                self._add_function(entry, fn.span, fn)
            for mm in tree.mm_decls:
                if not self.check_types(mm.params, mm.return_type, mm.span):
                    continue
                params = tuple(_param_entry(p) for p in mm.params)
                types = [p.type for p in params]
                spec = ir.Specialization(
                    key=family_key(mm.name, types),
                    name=mm.name,
                    params=params,
                    return_type=TypeRef(name=mm.return_type),
                    dispatch_positions=tuple(i for i, t in enumerate(types) if t.is_class),
                    origin=tree.file_name,
                )
                self._add_spec(spec, mm.span, mm, mm.receiver)

    def _define_method(self, fn: A.FuncDecl) -> None:
        slot = self.mod.methods.get((fn.owner, fn.name))
        params = (_this_param(fn.owner), *(_param_entry(p) for p in fn.params))
        if slot is None:
            self.mod.report(
                error(
                    Code.E_UNKNOWN_NAME,
                    f"class {fn.owner} declares no method {fn.name}",
                    fn.span,
                )
            )
            return
        symbol, is_virtual = slot
        if is_virtual:
            target = next(
                (
                    c
                    for c in self.mod.specs.values()
                    if c.record.name == f"{fn.owner}::{fn.name}"
                ),
                None,
            )
        else:
            target = self.mod.functions.get(symbol)
        if target is None:
            return
        if not _same_params(target.record.params, params) or (
            target.record.return_type != TypeRef(name=fn.return_type)
        ):
            self.mod.report(
                error(
                    Code.E_DUPLICATE_DECL,
                    f"definition of {fn.owner}::{fn.name} does not match its declaration",
                    fn.span,
                )
            )
            return
        spans = _param_spans(fn, fn.span, len(params))
        self._merge(target, fn.body, fn.span, f"{fn.owner}::{fn.name}", spans)
        target.receiver = fn.owner


# ============================================================================
# FAMILY CHECKS
# ============================================================================


def _family_warnings(mod: _Module) -> None:
    h = mod.h
    spans = {c.record.signature_key(): c.span for c in mod.specs.values()}
    universe = [h.dispatch_type(i) for i in range(h.universe_size)]
    for key in sorted(mod.families):
        specs = mod.families[key]
        for s1, s2 in itertools.permutations(specs, 2):
            if more_specific(h, s1, s2) and not return_compatible(
                h, s1.return_type, s2.return_type
            ):
                mod.report(
                    warning(
                        Code.W_RETURN_CONSTRAINT,
                        f"{s1.short()} returns {s1.return_type}, which does not convert "
                        f"uniquely to {s2.return_type} returned by {s2.short()}",
                        spans[s1.signature_key()],
                    )
                )
        for s1, s2 in itertools.combinations(specs, 2):
            if more_specific(h, s1, s2) or more_specific(h, s2, s1):
                continue
            witness = _conflict_witness(mod, specs, s1, s2, universe)
            if witness is not None:
                later = max((s1, s2), key=lambda s: spans[s.signature_key()].line)
                mod.report(
                    warning(
                        Code.W_LATENT_CONFLICT,
                        f"{s1.short()} and {s2.short()} both apply to "
                        f"({', '.join(map(str, witness))}) and neither is more specific",
                        spans[later.signature_key()],
                    )
                )


def _conflict_witness(mod, specs, s1, s2, universe) -> Optional[tuple[TypeRef, ...]]:
    """An argument tuple both apply to with no specialization covering them, if any."""
    h = mod.h
    columns = []
    for p1, p2 in zip(s1.dispatch_types, s2.dispatch_types):
        columns.append(
            [
                t
                for t in universe
                if h.dispatch_subtype(t, p1).is_unique and h.dispatch_subtype(t, p2).is_unique
            ]
        )
    covers = [
        s for s in specs if more_specific(h, s, s1) and more_specific(h, s, s2)
    ]
    for count, args in enumerate(itertools.product(*columns)):
        if count >= mod.settings.conflict_tuple_limit:
            logger.debug(f"Conflict search for {s1.short()} / {s2.short()} stopped at limit")
            return None
        if not any(applicable(h, s, args) is Relation.UNIQUE for s in covers):
            return args
    return None


# ============================================================================
# BODIES
# ============================================================================


def _always_returns(stmt) -> bool:
    if isinstance(stmt, A.ReturnStmt):
        return True
    if isinstance(stmt, A.Block):
        return any(_always_returns(s) for s in stmt.stmts)
    if isinstance(stmt, A.IfStmt):
        return stmt.orelse is not None and _always_returns(stmt.then) and _always_returns(
            stmt.orelse
        )
    return False


_ARITH = {"+", "-", "*", "/"}
_COMPARE = {"<", "<=", ">", ">="}


class _BodyChecker:
    """Types one body and lowers it to IR."""

    def __init__(
        self,
        mod: _Module,
        params: Sequence[ParamEntry],
        param_spans: Sequence[Span],
        return_type: TypeRef,
        receiver: Optional[str],
        what: str,
    ):
        self.mod = mod
        self.h = mod.h
        self.return_type = return_type
        self.receiver = receiver
        self.what = what
        self.num_locals = 0
        self.scopes: list[dict[str, tuple[int, TypeRef]]] = [{}]
        for p, span in zip(params, param_spans):
            index = self._allocate()
            if p.name:
                if p.name in self.scopes[0]:
                    self.mod.report(
                        error(Code.E_DUPLICATE_DECL, f"parameter {p.name} declared twice", span)
                    )
                ty = p.type if p.type.is_class else TypeRef(name=p.type.name)
                self.scopes[0][p.name] = (index, ty)

    def _allocate(self) -> int:
        self.num_locals += 1
        return self.num_locals - 1

    def _err(self, code: Code, message: str, span: Span) -> None:
        self.mod.report(error(code, message, span))

    def _lookup(self, name: str) -> Optional[tuple[int, TypeRef]]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def _this(self) -> ir.Expr:
        return ir.LocalGet(index=0, ty=TypeRef(name=self.receiver))

    # ------------------------------------------------------------ conversions

    def coerce(self, expr: ir.Expr, target: TypeRef, span: Span, by_ref: bool = False) -> ir.Expr:
        """Convert `expr` to `target`, reporting when it cannot."""
        if expr.ty == ERROR_TYPE or target == ERROR_TYPE:
            return expr
        if not target.is_class:
            if expr.ty.name != target.name:
                self._err(Code.E_TYPE_MISMATCH, f"expected {target.name}, got {expr.ty}", span)
            return expr
        if not expr.ty.is_class:
            self._err(Code.E_TYPE_MISMATCH, f"expected {target.name}, got {expr.ty}", span)
            return expr
        answer = self.h.subtype(expr.ty.name, target.name)
        if answer.is_no:
            self._err(Code.E_TYPE_MISMATCH, f"{expr.ty.name} is not a {target.name}", span)
            return expr
        if answer.is_ambiguous:
            self._err(
                Code.E_AMBIGUOUS_CONVERSION,
                f"{expr.ty.name} contains {len(answer.offsets)} {target.name} subobjects",
                span,
            )
            return expr
        if by_ref and expr.ty.is_const and not target.is_const:
            self._err(
                Code.E_CONST_VIOLATION,
                f"const {expr.ty.name} cannot bind to a non-const {target.name} reference",
                span,
            )
        if expr.ty.name == target.name:
            return expr
        return ir.Upcast(
            operand=expr,
            access=self.h.upcast_access(expr.ty.name, target.name),
            ty=TypeRef(name=target.name, is_const=expr.ty.is_const),
        )

    def _call_args(
        self, params: Sequence[ParamEntry], args: Sequence[A.Expr], what: str, span: Span
    ) -> Optional[list[ir.Expr]]:
        if len(params) != len(args):
            self._err(
                Code.E_NO_MATCHING_FUNCTION,
                f"{what} takes {len(params)} argument(s), {len(args)} given",
                span,
            )
            return None
        return [
            self.coerce(self.expr(a), p.type, getattr(a, "span", span), p.by_ref)
            for p, a in zip(params, args)
        ]

    # ------------------------------------------------------------ statements

    def block(self, node: A.Block) -> ir.Block:
        self.scopes.append({})
        body = [s for s in (self.stmt(st) for st in node.stmts) if s is not None]
        self.scopes.pop()
        return ir.Block(body=body)

    def stmt(self, node) -> Optional[ir.Stmt]:
        if isinstance(node, A.Block):
            return self.block(node)
        if isinstance(node, A.LocalDecl):
            return self._local_decl(node)
        if isinstance(node, A.Assign):
            return self._assign(node)
        if isinstance(node, A.ExprStmt):
            if isinstance(node.expr, A.Call) and node.expr.name == "print":
                printed = self._builtin_print(node.expr)
                if printed is not None:
                    return printed
            return ir.ExprStmt(expr=self.expr(node.expr))
        if isinstance(node, A.ReturnStmt):
            return self._return(node)
        if isinstance(node, A.IfStmt):
            cond = self._condition(node.cond)
            orelse = None if node.orelse is None else self._scoped(node.orelse)
            return ir.If(cond=cond, then=self._scoped(node.then), orelse=orelse)
        if isinstance(node, A.WhileStmt):
            return ir.While(cond=self._condition(node.cond), body=self._scoped(node.body))
        return None

    def _scoped(self, node) -> ir.Stmt:
        if isinstance(node, A.Block):
            return self.block(node)
        self.scopes.append({})
        result = self.stmt(node) or ir.Block()
        self.scopes.pop()
        return result

    def _condition(self, node) -> ir.Expr:
        cond = self.expr(node)
        if cond.ty not in (BOOL, ERROR_TYPE):
            self._err(Code.E_TYPE_MISMATCH, f"condition must be bool, got {cond.ty}", node.span)
        return cond

    def _local_decl(self, node: A.LocalDecl) -> Optional[ir.Stmt]:
        if not _is_known_type(self.h, node.type_name):
            self._err(Code.E_UNKNOWN_TYPE, f"unknown type {node.type_name}", node.span)
            return None
        ty = TypeRef(name=node.type_name)
        decls: list[ir.Stmt] = []
        for d in node.declarators:
            init = None
            if d.init is not None:
                init = self.coerce(self.expr(d.init), ty, d.init.span)
            if d.name in self.scopes[-1]:
                self._err(Code.E_DUPLICATE_DECL, f"{d.name} is already declared here", d.span)
            index = self._allocate()
            self.scopes[-1][d.name] = (index, ty)
            decls.append(ir.LocalDecl(index=index, ty=ty, init=init))
        return decls[0] if len(decls) == 1 else ir.Block(body=decls)

    def _assign(self, node: A.Assign) -> Optional[ir.Stmt]:
        value = self.expr(node.value)
        target = node.target
        if isinstance(target, A.Name):
            local = self._lookup(target.name)
            if local is not None:
                index, ty = local
                if ty.is_class:
                    self._err(
                        Code.E_TYPE_MISMATCH,
                        f"objects of class {ty.name} cannot be assigned",
                        node.span,
                    )
                    return None
                return ir.SetLocal(index=index, value=self.coerce(value, ty, node.span))
            if self.receiver is None:
                self._err(Code.E_UNKNOWN_NAME, f"unknown name {target.name}", target.span)
                return None
            obj = self._this()
        else:
            obj = self.expr(target.obj)
        if obj.ty == ERROR_TYPE:
            return None
        resolved = self._field(obj, target.name, target.span)
        if resolved is None:
            return None
        if obj.ty.is_const:
            self._err(
                Code.E_CONST_VIOLATION,
                f"field {target.name} of a const {obj.ty.name} cannot be assigned",
                node.span,
            )
        return ir.SetField(
            obj=obj,
            name=target.name,
            access=resolved.access,
            value=self.coerce(value, TypeRef(name=resolved.field.type), node.span),
        )

    def _return(self, node: A.ReturnStmt) -> ir.Stmt:
        if node.value is None:
            if not self.return_type.is_void:
                self._err(
                    Code.E_TYPE_MISMATCH, f"{self.what} must return {self.return_type}", node.span
                )
            return ir.Return()
        value = self.expr(node.value)
        if self.return_type.is_void:
            self._err(Code.E_TYPE_MISMATCH, f"{self.what} returns void", node.span)
            return ir.Return()
        return ir.Return(value=self.coerce(value, self.return_type, node.value.span))

    def _builtin_print(self, node: A.Call) -> Optional[ir.Stmt]:
        user = self.mod.functions.get("print")
        literal = any(isinstance(a, A.StringLit) for a in node.args)
        if user is not None and len(user.record.params) == len(node.args) and not literal:
            return None
        if len(node.args) != 1:
            self._err(Code.E_NO_MATCHING_FUNCTION, "print takes exactly one argument", node.span)
            return ir.Block()
        value = self.expr(node.args[0], allow_string=True)
        if value.ty not in (STRING, ERROR_TYPE) and not value.ty.is_scalar:
            self._err(
                Code.E_NO_MATCHING_FUNCTION, f"print cannot print a {value.ty}", node.span
            )
        return ir.Print(value=value)

    # ------------------------------------------------------------ expressions

    def expr(self, node, allow_string: bool = False) -> ir.Expr:
        if isinstance(node, A.IntLit):
            return ir.IntLit(value=node.value)
        if isinstance(node, A.FloatLit):
            return ir.FloatLit(value=node.value)
        if isinstance(node, A.BoolLit):
            return ir.BoolLit(value=node.value)
        if isinstance(node, A.StringLit):
            if not allow_string:
                self._err(
                    Code.E_TYPE_MISMATCH, "string literals may only be printed", node.span
                )
                return ir.StrLit(value=node.value, ty=ERROR_TYPE)
            return ir.StrLit(value=node.value, ty=STRING)
        if isinstance(node, A.Name):
            return self._name(node)
        if isinstance(node, A.FieldAccess):
            obj = self.expr(node.obj)
            if obj.ty == ERROR_TYPE:
                return obj
            resolved = self._field(obj, node.name, node.span)
            if resolved is None:
                return ir.IntLit(value=0, ty=ERROR_TYPE)
            return ir.FieldGet(
                obj=obj,
                name=node.name,
                access=resolved.access,
                ty=TypeRef(name=resolved.field.type),
            )
        if isinstance(node, A.Unary):
            return self._unary(node)
        if isinstance(node, A.Binary):
            return self._binary(node)
        if isinstance(node, A.Call):
            return self._call(node)
        if isinstance(node, A.MethodCall):
            return self._method_call(self.expr(node.obj), node.name, node.args, node.span)
        if isinstance(node, A.MmCall):
            return self._mm_call(node)
        raise TypeError(f"unexpected expression node {type(node).__name__}")

    def _name(self, node: A.Name) -> ir.Expr:
        local = self._lookup(node.name)
        if local is not None:
            return ir.LocalGet(index=local[0], ty=local[1])
        if self.receiver is not None:
            this = self._this()
            resolved = self._field(this, node.name, node.span, quiet=True)
            if resolved is not None:
                return ir.FieldGet(
                    obj=this,
                    name=node.name,
                    access=resolved.access,
                    ty=TypeRef(name=resolved.field.type),
                )
        self._err(Code.E_UNKNOWN_NAME, f"unknown name {node.name}", node.span)
        return ir.IntLit(value=0, ty=ERROR_TYPE)

    def _field(self, obj: ir.Expr, name: str, span: Span, quiet: bool = False):
        if not obj.ty.is_class:
            if not quiet:
                self._err(Code.E_TYPE_MISMATCH, f"{obj.ty} has no fields", span)
            return None
        found = self.h.find_fields(obj.ty.name, name)
        if len(found) == 1:
            return found[0]
        if quiet and not found:
            return None
        if not found:
            self._err(Code.E_UNKNOWN_FIELD, f"class {obj.ty.name} has no field {name}", span)
        else:
            self._err(
                Code.E_AMBIGUOUS_FIELD,
                f"field {name} is ambiguous in class {obj.ty.name}",
                span,
            )
        return None

    def _unary(self, node: A.Unary) -> ir.Expr:
        operand = self.expr(node.operand)
        if operand.ty == ERROR_TYPE:
            return operand
        if node.op == "-" and operand.ty.name in ("int", "float"):
            return ir.Unary(op="-", operand=operand, ty=TypeRef(name=operand.ty.name))
        if node.op == "!" and operand.ty.name == "bool":
            return ir.Unary(op="!", operand=operand, ty=BOOL)
        self._err(
            Code.E_TYPE_MISMATCH, f"operator {node.op} cannot apply to {operand.ty}", node.span
        )
        return ir.Unary(op=node.op, operand=operand, ty=ERROR_TYPE)

    def _binary(self, node: A.Binary) -> ir.Expr:
        left = self.expr(node.left)
        right = self.expr(node.right)
        if ERROR_TYPE in (left.ty, right.ty):
            return ir.Binary(op=node.op, left=left, right=right, ty=ERROR_TYPE)
        lt, rt = left.ty.name, right.ty.name
        result: Optional[TypeRef] = None
        if lt == rt:
            if node.op in _ARITH and lt in ("int", "float"):
                result = TypeRef(name=lt)
            elif node.op == "%" and lt == "int":
                result = INT
            elif node.op in _COMPARE and lt in ("int", "float"):
                result = BOOL
            elif node.op in ("==", "!=") and lt in SCALAR_TYPES:
                result = BOOL
            elif node.op in ("&&", "||") and lt == "bool":
                result = BOOL
        if result is None:
            self._err(
                Code.E_TYPE_MISMATCH,
                f"operator {node.op} cannot apply to {left.ty} and {right.ty}",
                node.span,
            )
            result = ERROR_TYPE
        return ir.Binary(op=node.op, left=left, right=right, ty=result)

    def _call(self, node: A.Call) -> ir.Expr:
        if self.receiver is not None and self.h.find_methods(self.receiver, node.name):
            return self._method_call(self._this(), node.name, node.args, node.span)
        target = self.mod.functions.get(node.name)
        if target is None:
            if node.name == "print":
                self._err(Code.E_TYPE_MISMATCH, "print has no value", node.span)
            else:
                self._err(Code.E_UNKNOWN_NAME, f"unknown function {node.name}", node.span)
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        fn = target.record
        args = self._call_args(fn.params, node.args, fn.symbol, node.span)
        if args is None:
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        return ir.StaticCall(symbol=fn.symbol, args=args, ty=fn.return_type)

    def _method_call(self, obj: ir.Expr, name: str, args, span: Span) -> ir.Expr:
        if obj.ty == ERROR_TYPE:
            return obj
        if not obj.ty.is_class:
            self._err(Code.E_TYPE_MISMATCH, f"{obj.ty} has no methods", span)
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        found = self.h.find_methods(obj.ty.name, name)
        if not found:
            self._err(Code.E_UNKNOWN_NAME, f"class {obj.ty.name} has no method {name}", span)
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        if len(found) > 1:
            self._err(
                Code.E_AMBIGUOUS_MEMBER, f"method {name} is ambiguous in class {obj.ty.name}", span
            )
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        cls, method = found[0]
        slot = self.mod.methods.get((cls, name))
        if slot is None:
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        symbol, is_virtual = slot
        if not is_virtual:
            params = (_this_param(cls), *method.params)
            lowered = self._call_args(params[1:], args, f"{cls}::{name}", span)
            receiver = self.coerce(obj, params[0].type, span, by_ref=True)
            if lowered is None:
                return ir.IntLit(value=0, ty=ERROR_TYPE)
            return ir.StaticCall(symbol=symbol, args=[receiver, *lowered], ty=method.return_type)

        lowered = self._call_args(method.params, args, f"{cls}::{name}", span)
        if lowered is None:
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        return self._invoke(symbol, f"{cls}::{name}", [obj, *lowered], (0,), span)

    def _mm_call(self, node: A.MmCall) -> ir.Expr:
        args = [self.expr(a) for a in node.args]
        if any(a.ty == ERROR_TYPE for a in args):
            return ir.IntLit(value=0, ty=ERROR_TYPE)
        for a, src in zip(args, node.args):
            if a.ty.is_void:
                self._err(Code.E_TYPE_MISMATCH, "void value passed to a multimethod", src.span)
                return ir.IntLit(value=0, ty=ERROR_TYPE)
        key = family_key(node.name, [a.ty for a in args])
        positions = tuple(i for i, a in enumerate(args) if a.ty.is_class)
        return self._invoke(key, node.name, args, positions, node.span)

    def _invoke(self, key, name, args: list[ir.Expr], positions, span: Span) -> ir.Expr:
        arg_types = tuple(args[i].ty for i in positions)
        result = type_invocation(self.h, self.mod.families.get(key, []), arg_types)
        shown = f"{name}({', '.join(str(t) for t in arg_types)})"
        candidates = ", ".join(s.short() for s in result.candidates)
        if result.code is Code.E_NO_APPLICABLE:
            self._err(result.code, f"no specialization of {shown} applies", span)
        elif result.code is Code.E_AMBIGUOUS_RETURN:
            self._err(
                result.code, f"{shown} may select {candidates} with different return types", span
            )
        elif result.code is Code.W_NO_MOST_SPECIFIC:
            self.mod.report(
                warning(
                    result.code,
                    f"{shown} has no most specific specialization among {candidates}",
                    span,
                )
            )
        elif result.code is Code.W_AMBIG_SUBTYPE:
            self.mod.report(
                warning(
                    result.code,
                    f"{shown} applies only through ambiguous subtypes ({candidates})",
                    span,
                )
            )
        ty = result.return_type if result.return_type is not None else ERROR_TYPE
        return ir.MultiCall(key=key, static_params=arg_types, args=args, ty=ty)


def _check_body(mod: _Module, item: _Callable, is_main: bool) -> Optional[ir.FunctionBody]:
    record = item.record
    body = item.decl_body
    what = record.symbol if isinstance(record, ir.FunctionEntry) else record.short()
    spans = item.param_spans or (item.span,) * len(record.params)
    checker = _BodyChecker(mod, record.params, spans, record.return_type, item.receiver, what)
    block = checker.block(body)
    if not record.return_type.is_void and not is_main and not _always_returns(body):
        mod.report(error(Code.E_MISSING_RETURN, f"{what} can end without returning", item.span))
    if is_main and not record.return_type.is_void and not _always_returns(body):
        block.body.append(ir.Return(value=ir.IntLit(value=0)))
    return ir.FunctionBody(num_locals=checker.num_locals, block=block)


# ============================================================================
# PUBLIC API
# ============================================================================


def check_module(
    unit: CompilationUnit, settings: Optional[Settings] = None
) -> tuple[ObjectModule, list[Diagnostic]]:
    """
    Check a compilation unit and build its object module.

    Args:
        unit: Desugared source file and its headers
        settings: Limits; read from the environment when omitted

    Returns:
        The object module and every diagnostic; the module must not be emitted
        when any diagnostic is an error
    """
    settings = settings or get_settings()
    diagnostics: list[Diagnostic] = []
    entries, class_spans, member_bodies = _collect_classes(unit, diagnostics)

    try:
        h = build(entries.values())
    except HierarchyError as exc:
        span = class_spans.get(exc.class_name, Span(file=unit.source.file_name))
        diagnostics.append(error(Code.E_HIERARCHY, str(exc), span))
        return ObjectModule(name=unit.source.file_name), diagnostics

    mod = _Module(h=h, settings=settings, diagnostics=diagnostics)
    for name, entry in entries.items():
        for fld in entry.fields:
            if fld.type not in SCALAR_TYPES:
                mod.report(
                    error(
                        Code.E_UNKNOWN_TYPE,
                        f"field {name}.{fld.name} is not scalar",
                        class_spans[name],
                    )
                )
    declarations = _Declarations(mod, unit, class_spans)
    declarations.declare_methods(member_bodies)
    declarations.declare_free()
    _family_warnings(mod)

    main = mod.functions.get("main")
    if main is not None and main.own:
        fn = main.record
        if fn.params or fn.return_type not in (INT, VOID_TYPE):
            mod.report(
                error(Code.E_TYPE_MISMATCH, "main must be `int main()` or `void main()`", main.span)
            )

    functions = []
    for symbol in sorted(mod.functions):
        item = mod.functions[symbol]
        origin = item.record.origin or unit.source.file_name
        record = item.record.model_copy(update={"origin": origin})
        if item.own:
            record = record.model_copy(update={"body": _check_body(mod, item, symbol == "main")})
        functions.append(record)

    specializations = []
    for key in sorted(mod.specs):
        item = mod.specs[key]
        origin = item.record.origin or unit.source.file_name
        record = item.record.model_copy(update={"origin": origin})
        if item.own:
            record = record.model_copy(update={"body": _check_body(mod, item, False)})
        specializations.append(record)

    module = ObjectModule(
        name=unit.source.file_name,
        classes=[h.entry(n) for n in h.names],
        specializations=specializations,
        functions=functions,
        has_main=main is not None and main.own,
        warnings=[d for d in mod.diagnostics if not d.is_error],
    ).sorted()
    logger.info(
        f"{unit.source.file_name}: {len(functions)} functions, {len(specializations)} "
        f"specializations, {sum(d.is_error for d in mod.diagnostics)} error(s)"
    )
    return module, sorted(mod.diagnostics, key=Diagnostic.sort_key)


def compile_source(
    file_name: str,
    text: str,
    reader: SourceReader,
    settings: Optional[Settings] = None,
    werror: bool = False,
) -> tuple[ObjectModule, list[Diagnostic]]:
    """
    Parse, load headers and check one source file.

    Args:
        file_name: Name used in spans and for relative header lookup
        text: Source text
        reader: Where included headers come from
        settings: Limits; read from the environment when omitted
        werror: Treat warnings as errors

    Returns:
        The object module and its warnings

    Raises:
        CompileError: When any error (or, with werror, any warning) was found
    """
    unit = load_unit(file_name, text, reader)
    module, diagnostics = check_module(unit, settings)
    if any(d.is_error for d in diagnostics) or (werror and diagnostics):
        raise CompileError(diagnostics)
    return module, diagnostics
