"""
Interpreter for linked programs.

Class values are handled through fat references: the object's storage, the
slot offset of the referenced subobject, its static class and a const flag.
By-value class parameters are copied by the callee onto a secondary stack
that is unwound when the call returns; returned objects are copied into
program-lifetime storage.

A multimethod call looks up every dispatched argument's pole, reads the
selection matrix, and rebases each argument: complete-object start, plus the
offset of the pole subobject, plus the matrix offset to the parameter's
subobject.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, TextIO, Union

from mmlang.hierarchy import Hierarchy, build
from mmlang.models import ir
from mmlang.models.errors import RuntimeFault
from mmlang.models.program import LinkedProgram
from mmlang.models.types import TypeRef
from mmlang.utils.config import get_settings
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)

_ZERO = {"int": 0, "bool": False, "float": 0.0}
_FRAMES_PER_CALL = 40


# ============================================================================
# VALUES
# ============================================================================


@dataclass(eq=False)
class ObjectStorage:
    """Slots of one complete object and its dynamic class."""

    class_name: str
    type_id: int
    slots: list

    def copy(self) -> "ObjectStorage":
        return ObjectStorage(self.class_name, self.type_id, list(self.slots))


@dataclass(frozen=True)
class FatRef:
    storage: ObjectStorage
    offset: int
    static_type: str
    is_const: bool = False

    @property
    def dispatch_id(self) -> int:
        return 2 * self.storage.type_id + int(self.is_const)


Value = Union[int, bool, float, FatRef, None]


# ============================================================================
# EVENTS
# ============================================================================


@dataclass(frozen=True)
class CallEvent:
    """Entry to (`entering=True`) or exit from a function body."""

    symbol: str
    entering: bool
    depth: int
    secondary_depth: int


@dataclass(frozen=True)
class ArgumentRealignment:
    """How one argument moved to the selected parameter's subobject.

    Without an anchor the new offset is base + vector + matrix. With one, the
    matrix offset counts from `anchor_start`, where the named virtual base
    starts in the argument's complete object.
    """

    position: int
    base: int
    vector: int
    matrix: int
    anchor: Optional[str] = None
    anchor_start: int = 0

    @property
    def offset(self) -> int:
        if self.anchor is not None:
            return self.anchor_start + self.matrix
        return self.base + self.vector + self.matrix

    def format(self) -> str:
        if self.anchor is not None:
            start = f"{self.anchor}@{self.anchor_start}"
            return f"  arg{self.position}: {start}+{self.matrix}={self.offset}"
        return f"  arg{self.position}: {self.base}+{self.vector}+{self.matrix}={self.offset}"


@dataclass(frozen=True)
class DispatchEvent:
    key: str
    dynamic_ids: tuple[int, ...]
    pole_ids: tuple[int, ...]
    spec_id: int
    spec: str
    arguments: tuple[ArgumentRealignment, ...] = field(default_factory=tuple)

    def format(self) -> str:
        dyn = ",".join(map(str, self.dynamic_ids))
        poles = ",".join(f"P{p + 1}" for p in self.pole_ids)
        lines = [f"dispatch {self.key} dyn=({dyn}) poles=({poles}) -> #{self.spec_id} {self.spec}"]
        lines.extend(arg.format() for arg in self.arguments)
        return "\n".join(lines)


Observer = Callable[[Union[CallEvent, DispatchEvent]], None]


class _Return(Exception):
    def __init__(self, value: Value):
        self.value = value


# ============================================================================
# INTERPRETER
# ============================================================================


def format_value(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Interpreter:
    """
    Executes a linked program.

    Args:
        program: Linked program image
        out: Where `print` writes
        trace: Where dispatch trace lines go, if anywhere
        observer: Called with every call and dispatch event
        max_call_depth: Nested call limit; read from the environment when omitted
    """

    def __init__(
        self,
        program: LinkedProgram,
        out: Optional[TextIO] = None,
        trace: Optional[TextIO] = None,
        observer: Optional[Observer] = None,
        max_call_depth: Optional[int] = None,
    ):
        self.program = program
        self.out = out if out is not None else sys.stdout
        self.trace = trace
        self.observer = observer
        self.max_call_depth = max_call_depth or get_settings().max_call_depth
        self.hierarchy: Hierarchy = build(program.classes)
        self._templates: dict[str, list] = {}
        self._secondary: list[ObjectStorage] = []
        self._depth = 0

    # ------------------------------------------------------------ objects

    def instantiate(self, class_name: str) -> FatRef:
        """A zero-initialized complete object."""
        template = self._templates.get(class_name)
        if template is None:
            layout = self.hierarchy.layout(class_name)
            template = [None] * layout.size
            for slot, _, fld in self.hierarchy.field_slots(class_name):
                template[slot] = _ZERO[fld.type]
            self._templates[class_name] = template
        storage = ObjectStorage(class_name, self.program.class_id(class_name), list(template))
        return FatRef(storage, 0, class_name)

    def _slot(self, ref: FatRef, access: ir.SubobjectAccess) -> int:
        if access.anchor is None:
            return ref.offset + access.offset
        table = self.program.complete_table(ref.storage.type_id)
        start = table.ancestor_offset(self.program.class_id(access.anchor))
        if start is None:
            raise RuntimeFault(
                f"virtual base {access.anchor} not found in a {ref.storage.class_name} object"
            )
        return start + access.offset

    # ------------------------------------------------------------ calls

    def _notify(self, event) -> None:
        if self.observer is not None:
            self.observer(event)

    def _invoke(self, symbol: str, callee, args: list[Value]) -> Value:
        if callee.body is None:
            raise RuntimeFault(f"{symbol} has no body")
        if self._depth >= self.max_call_depth:
            raise RuntimeFault(f"call depth exceeded {self.max_call_depth} in {symbol}")
        mark = len(self._secondary)
        self._depth += 1
        self._notify(CallEvent(symbol, True, self._depth, mark))
        try:
            frame: list[Value] = [None] * callee.body.num_locals
            for i, (param, arg) in enumerate(zip(callee.params, args)):
                if isinstance(arg, FatRef):
                    if param.passes_by_value:
                        copy = arg.storage.copy()
                        self._secondary.append(copy)
                        arg = FatRef(copy, arg.offset, param.type.name, False)
                    else:
                        arg = FatRef(arg.storage, arg.offset, param.type.name, param.type.is_const)
                frame[i] = arg
            try:
                self._exec(callee.body.block, frame)
            except _Return as ret:
                return ret.value
            return None
        finally:
            del self._secondary[mark:]
            self._depth -= 1
            self._notify(CallEvent(symbol, False, self._depth, len(self._secondary)))

    def call_static(self, symbol: str, args: list[Value]) -> Value:
        fn = self.program.functions.get(symbol)
        if fn is None:
            raise RuntimeFault(f"unknown function {symbol}")
        return self._invoke(symbol, fn, args)

    def dispatch(self, key: str, args: list[Value]) -> Value:
        """Select and run the specialization of `key` for the arguments' dynamic types."""
        structures = self.program.dispatch.get(key)
        if structures is None:
            raise RuntimeFault(f"no dispatch structures for {key}")
        dynamic_ids, pole_ids = [], []
        for i, pos in enumerate(structures.dispatch_positions):
            ref = args[pos]
            pole = structures.pole_vectors[i][ref.dispatch_id]
            if pole is None:
                raise RuntimeFault(
                    f"dispatch trap in {key}: no specialization accepts argument {pos} "
                    f"of type {'const ' if ref.is_const else ''}{ref.storage.class_name}"
                )
            dynamic_ids.append(ref.dispatch_id)
            pole_ids.append(pole)
        entry = structures.entry(tuple(pole_ids))
        if entry.is_trap:
            raise RuntimeFault(f"dispatch trap in {key}: no specialization selected")
        spec = self.program.specializations[entry.spec]

        adjusted = list(args)
        realignments = []
        for i, pos in enumerate(structures.dispatch_positions):
            ref = args[pos]
            table = self.program.rttable(
                ref.storage.type_id, self.program.class_id(ref.static_type), ref.offset
            )
            if table is None:
                raise RuntimeFault(
                    f"no runtime table for a {ref.static_type} subobject at {ref.offset} "
                    f"of a {ref.storage.class_name} object"
                )
            anchor = entry.anchor(i)
            anchor_start = 0
            if anchor is not None:
                host = self.program.complete_table(ref.storage.type_id)
                start = host.ancestor_offset(self.program.class_id(anchor))
                if start is None:
                    raise RuntimeFault(
                        f"virtual base {anchor} is not unique in a {ref.storage.class_name} object"
                    )
                anchor_start = start
            move = ArgumentRealignment(
                position=pos,
                base=ref.offset - table.subobject_offset,
                vector=structures.realign_vectors[i][ref.dispatch_id],
                matrix=entry.offsets[i],
                anchor=anchor,
                anchor_start=anchor_start,
            )
            realignments.append(move)
            adjusted[pos] = FatRef(
                ref.storage, move.offset, spec.params[pos].type.name, ref.is_const
            )

        event = DispatchEvent(
            key=key,
            dynamic_ids=tuple(dynamic_ids),
            pole_ids=tuple(pole_ids),
            spec_id=entry.spec,
            spec=spec.short(),
            arguments=tuple(realignments),
        )
        if self.trace is not None:
            print(event.format(), file=self.trace)
        self._notify(event)
        return self._invoke(spec.name, spec, adjusted)

    def realign_return(self, value: Value, expected: TypeRef) -> Value:
        """Move a returned reference to the subobject of the statically expected class."""
        if not isinstance(value, FatRef) or value.static_type == expected.name:
            return value
        table = self.program.rttable(
            value.storage.type_id, self.program.class_id(value.static_type), value.offset
        )
        target = self.program.class_id(expected.name)
        offset = None if table is None else table.ancestor_offset(target)
        if offset is None:
            raise RuntimeFault(
                f"cannot realign a returned {value.static_type} to {expected.name}"
            )
        return FatRef(value.storage, offset, expected.name, value.is_const)

    # ------------------------------------------------------------ statements

    def _exec(self, stmt, frame: list[Value]) -> None:
        if isinstance(stmt, ir.Block):
            for inner in stmt.body:
                self._exec(inner, frame)
        elif isinstance(stmt, ir.LocalDecl):
            if stmt.ty.is_class:
                if stmt.init is None:
                    frame[stmt.index] = self.instantiate(stmt.ty.name)
                else:
                    src = self._eval(stmt.init, frame)
                    frame[stmt.index] = FatRef(src.storage.copy(), src.offset, stmt.ty.name)
            else:
                init = _ZERO[stmt.ty.name] if stmt.init is None else self._eval(stmt.init, frame)
                frame[stmt.index] = init
        elif isinstance(stmt, ir.SetLocal):
            frame[stmt.index] = self._eval(stmt.value, frame)
        elif isinstance(stmt, ir.SetField):
            ref = self._eval(stmt.obj, frame)
            ref.storage.slots[self._slot(ref, stmt.access)] = self._eval(stmt.value, frame)
        elif isinstance(stmt, ir.ExprStmt):
            self._eval(stmt.expr, frame)
        elif isinstance(stmt, ir.Return):
            value = None if stmt.value is None else self._eval(stmt.value, frame)
            if isinstance(value, FatRef):
                value = FatRef(value.storage.copy(), value.offset, value.static_type)
            raise _Return(value)
        elif isinstance(stmt, ir.If):
            if self._eval(stmt.cond, frame):
                self._exec(stmt.then, frame)
            elif stmt.orelse is not None:
                self._exec(stmt.orelse, frame)
        elif isinstance(stmt, ir.While):
            while self._eval(stmt.cond, frame):
                self._exec(stmt.body, frame)
        elif isinstance(stmt, ir.Print):
            self.out.write(format_value(self._eval(stmt.value, frame)))
        else:
            raise RuntimeFault(f"unknown statement {type(stmt).__name__}")

    # ------------------------------------------------------------ expressions

    def _eval(self, expr, frame: list[Value]) -> Any:
        if isinstance(expr, (ir.IntLit, ir.FloatLit, ir.BoolLit, ir.StrLit)):
            return expr.value
        if isinstance(expr, ir.LocalGet):
            return frame[expr.index]
        if isinstance(expr, ir.FieldGet):
            ref = self._eval(expr.obj, frame)
            return ref.storage.slots[self._slot(ref, expr.access)]
        if isinstance(expr, ir.Upcast):
            ref = self._eval(expr.operand, frame)
            return FatRef(ref.storage, self._slot(ref, expr.access), expr.ty.name, ref.is_const)
        if isinstance(expr, ir.Unary):
            value = self._eval(expr.operand, frame)
            return (not value) if expr.op == "!" else -value
        if isinstance(expr, ir.Binary):
            return self._binary(expr, frame)
        if isinstance(expr, ir.StaticCall):
            return self.call_static(expr.symbol, [self._eval(a, frame) for a in expr.args])
        if isinstance(expr, ir.MultiCall):
            value = self.dispatch(expr.key, [self._eval(a, frame) for a in expr.args])
            return self.realign_return(value, expr.ty)
        raise RuntimeFault(f"unknown expression {type(expr).__name__}")

    def _binary(self, expr: ir.Binary, frame: list[Value]) -> Any:
        op = expr.op
        left = self._eval(expr.left, frame)
        if op == "&&":
            return bool(left) and bool(self._eval(expr.right, frame))
        if op == "||":
            return bool(left) or bool(self._eval(expr.right, frame))
        right = self._eval(expr.right, frame)
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op in ("/", "%"):
            if right == 0:
                raise RuntimeFault("division by zero")
            if isinstance(left, float):
                return left / right if op == "/" else math.fmod(left, right)
            quotient = abs(left) // abs(right)
            if (left < 0) != (right < 0):
                quotient = -quotient
            return quotient if op == "/" else left - right * quotient
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        raise RuntimeFault(f"unknown operator {op}")

    # ------------------------------------------------------------ entry

    def run(self) -> int:
        """
        Run `main`.

        Returns:
            main's return value, or 0 when main returns void

        Raises:
            RuntimeFault: On a dispatch trap, a failed realignment, division by
                zero, or when the call depth limit is reached
        """
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, self.max_call_depth * _FRAMES_PER_CALL))
        try:
            result = self.call_static(self.program.entry, [])
        except RecursionError:
            raise RuntimeFault("call depth exceeded the interpreter's stack") from None
        finally:
            sys.setrecursionlimit(limit)
        logger.debug(f"main returned {result!r}")
        return result if isinstance(result, int) and not isinstance(result, bool) else 0


def run(
    program: LinkedProgram,
    out: Optional[TextIO] = None,
    trace: Optional[TextIO] = None,
    observer: Optional[Observer] = None,
) -> int:
    """Run a linked program and return its exit code."""
    return Interpreter(program, out=out, trace=trace, observer=observer).run()
