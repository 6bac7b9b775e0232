"""
Member multimethod desugaring.

A multimethod declared inside class `C` becomes a free specialization whose
first parameter is `C &this`; method-call syntax `o.@m(a)` becomes `@m(o, a)`.
"""

from __future__ import annotations

from dataclasses import replace

from mmlang.frontend import ast as A


def _expr(node):
    if isinstance(node, A.MmMethodCall):
        args = (_expr(node.obj), *(_expr(a) for a in node.args))
        return A.MmCall(name=node.name, args=args, span=node.span)
    if isinstance(node, (A.Call, A.MmCall)):
        return replace(node, args=tuple(_expr(a) for a in node.args))
    if isinstance(node, A.MethodCall):
        return replace(node, obj=_expr(node.obj), args=tuple(_expr(a) for a in node.args))
    if isinstance(node, A.FieldAccess):
        return replace(node, obj=_expr(node.obj))
    if isinstance(node, A.Unary):
        return replace(node, operand=_expr(node.operand))
    if isinstance(node, A.Binary):
        return replace(node, left=_expr(node.left), right=_expr(node.right))
    return node


def _opt_expr(node):
    return None if node is None else _expr(node)


def _stmt(node):
    if isinstance(node, A.Block):
        return replace(node, stmts=tuple(_stmt(s) for s in node.stmts))
    if isinstance(node, A.LocalDecl):
        decls = tuple(replace(d, init=_opt_expr(d.init)) for d in node.declarators)
        return replace(node, declarators=decls)
    if isinstance(node, A.Assign):
        return replace(node, target=_expr(node.target), value=_expr(node.value))
    if isinstance(node, A.ExprStmt):
        return replace(node, expr=_expr(node.expr))
    if isinstance(node, A.ReturnStmt):
        return replace(node, value=_opt_expr(node.value))
    if isinstance(node, A.IfStmt):
        orelse = None if node.orelse is None else _stmt(node.orelse)
        return replace(node, cond=_expr(node.cond), then=_stmt(node.then), orelse=orelse)
    if isinstance(node, A.WhileStmt):
        return replace(node, cond=_expr(node.cond), body=_stmt(node.body))
    return node


def _body(block):
    return None if block is None else _stmt(block)


def desugar_members(tree: A.Ast) -> A.Ast:
    """
    Hoist member multimethods to free specializations and rewrite method-call
    syntax for multimethods. Out-of-class definitions `C::@m` get the same
    implicit `this` parameter. Applying it twice gives the same tree.

    Args:
        tree: Parsed syntax tree

    Returns:
        Tree without member multimethods or `o.@m(...)` calls
    """
    classes = []
    hoisted = []
    for decl in tree.class_decls:
        kept = []
        for member in decl.members:
            if member.is_multimethod:
                this = A.Param(type_name=decl.name, by_ref=True, name="this", span=member.span)
                hoisted.append(
                    A.MmDecl(
                        name=member.name,
                        return_type=member.return_type,
                        params=(this, *member.params),
                        body=_body(member.body),
                        receiver=decl.name,
                        span=member.span,
                    )
                )
            else:
                kept.append(replace(member, body=_body(member.body)))
        classes.append(replace(decl, members=tuple(kept)))

    funcs = tuple(replace(f, body=_body(f.body)) for f in tree.func_decls)
    mms = []
    for mm in tree.mm_decls:
        if mm.owner is not None:
            this = A.Param(type_name=mm.owner, by_ref=True, name="this", span=mm.span)
            mm = replace(mm, params=(this, *mm.params), receiver=mm.owner, owner=None)
        mms.append(replace(mm, body=_body(mm.body)))
    return tree.with_changes(
        class_decls=tuple(classes), func_decls=funcs, mm_decls=(*hoisted, *mms)
    )
