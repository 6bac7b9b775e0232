"""
Pre-linker: merges object modules and builds the dispatch structures.

For every multimethod family and every dispatch position, dispatch types that
select the same specializations are grouped under one pole. A type with no
applicable parameter type has no pole. Selection is then tabulated over pole
tuples only, together with the offsets that realign each argument from its
pole subobject to the subobject the winning specialization expects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from pydantic import BaseModel

from mmlang.hierarchy import Hierarchy, Relation, all_rttables, build
from mmlang.models import ir
from mmlang.models.diagnostics import Code, Diagnostic, link_error
from mmlang.models.errors import HierarchyError, LinkError
from mmlang.models.program import LinkedProgram, ObjectModule
from mmlang.models.tables import DispatchStructures, MatrixEntry
from mmlang.models.types import ClassEntry, TypeRef
from mmlang.typecheck import applicable, minimal, return_compatible
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)


# ============================================================================
# MERGING
# ============================================================================


@dataclass
class MergedProgram:
    classes: dict[str, ClassEntry] = field(default_factory=dict)
    functions: dict[str, ir.FunctionEntry] = field(default_factory=dict)
    specializations: dict[tuple, ir.Specialization] = field(default_factory=dict)


def _merge_callable(existing, incoming, what: str, diagnostics: list[Diagnostic]):
    """Combine two records with the same signature; returns the survivor."""
    if existing.return_type != incoming.return_type:
        diagnostics.append(
            link_error(
                Code.E_SIGNATURE_MISMATCH,
                f"{what} returns {existing.return_type} in {existing.origin} "
                f"and {incoming.return_type} in {incoming.origin}",
            )
        )
        return existing
    if existing.body is None:
        if incoming.body is not None or incoming.origin < existing.origin:
            return incoming
        return existing
    if incoming.body is None:
        return existing
    if existing.body != incoming.body:
        first, second = sorted((existing.origin, incoming.origin))
        diagnostics.append(
            link_error(
                Code.E_DUPLICATE_BODY, f"{what} has different bodies in {first} and {second}"
            )
        )
        return existing
    return existing if existing.origin <= incoming.origin else incoming


def merge(modules: Sequence[ObjectModule]) -> tuple[MergedProgram, list[Diagnostic]]:
    """
    Merge the tables of every module.

    Args:
        modules: Object modules, in any order

    Returns:
        The merged tables and the consistency diagnostics
    """
    merged = MergedProgram()
    diagnostics: list[Diagnostic] = []

    for module in sorted(modules, key=lambda m: (m.name, serialized_key(m))):
        for cls in module.classes:
            known = merged.classes.get(cls.name)
            if known is None:
                merged.classes[cls.name] = cls
            elif known != cls:
                diagnostics.append(
                    link_error(
                        Code.E_CLASS_MISMATCH,
                        f"class {cls.name} has different definitions across modules",
                    )
                )
        for fn in module.functions:
            known = merged.functions.get(fn.symbol)
            if known is None:
                merged.functions[fn.symbol] = fn
            elif known.signature_key() != fn.signature_key():
                diagnostics.append(
                    link_error(
                        Code.E_SIGNATURE_MISMATCH,
                        f"{fn.symbol} is declared as {known.display()} in {known.origin} "
                        f"and as {fn.display()} in {fn.origin}",
                    )
                )
            elif fn.symbol != "main":
                merged.functions[fn.symbol] = _merge_callable(known, fn, fn.symbol, diagnostics)
            elif fn.body is not None and known.body is None:
                merged.functions[fn.symbol] = fn
        for spec in module.specializations:
            key = spec.signature_key()
            known = merged.specializations.get(key)
            if known is None:
                merged.specializations[key] = spec
            else:
                merged.specializations[key] = _merge_callable(
                    known, spec, spec.short(), diagnostics
                )

    mains = sum(1 for m in modules if m.has_main)
    if mains == 0:
        diagnostics.append(link_error(Code.E_NO_MAIN, "no module defines main"))
    elif mains > 1:
        names = ", ".join(sorted(m.name for m in modules if m.has_main))
        diagnostics.append(
            link_error(Code.E_MULTIPLE_MAIN, f"main is defined by {mains} modules: {names}")
        )
    return merged, diagnostics


def serialized_key(module: ObjectModule) -> str:
    return module.sorted().model_dump_json()


# ============================================================================
# IDS AND POLES
# ============================================================================


def assign_ids(h: Hierarchy) -> dict[str, int]:
    """Class ids: position in name order."""
    return {name: h.class_id(name) for name in h.names}


@dataclass
class PoleAssignment:
    """Poles of one dispatch position of one family."""

    poles: list[TypeRef]
    vector: list[Optional[int]]
    realign: list[Optional[int]]
    blocked: list[TypeRef]


def compute_poles(h: Hierarchy, param_types: Iterable[TypeRef]) -> PoleAssignment:
    """
    Group dispatch types by the parameter types they reach at one position.

    Two types share a pole exactly when they are unique subtypes of the same
    parameter types and ambiguous subtypes of the same parameter types. The
    pole is the parameter type with that grouping when there is one, and the
    type itself otherwise.

    Args:
        h: Hierarchy
        param_types: Parameter types of the family's specializations at the position

    Returns:
        Poles (by dispatch id), the pole vector, the realignment vector and the
        types that reach a parameter type only ambiguously
    """
    params = sorted(set(param_types), key=h.dispatch_id)

    def grouping(t: TypeRef) -> tuple[frozenset, frozenset]:
        app, amb = set(), set()
        for q in params:
            answer = h.dispatch_subtype(t, q)
            if answer.is_unique:
                app.add(q)
            elif answer.is_ambiguous:
                amb.add(q)
        return frozenset(app), frozenset(amb)

    by_grouping = {grouping(q): q for q in params}
    chosen: dict[int, TypeRef] = {}
    blocked = []
    for type_id in range(h.universe_size):
        t = h.dispatch_type(type_id)
        app, amb = grouping(t)
        if not app:
            if amb:
                blocked.append(t)
            continue
        chosen[type_id] = by_grouping.get((app, amb), t)

    poles = sorted(set(chosen.values()), key=h.dispatch_id)
    index = {p: i for i, p in enumerate(poles)}
    vector: list[Optional[int]] = [None] * h.universe_size
    realign: list[Optional[int]] = [None] * h.universe_size
    for type_id, pole in chosen.items():
        vector[type_id] = index[pole]
        realign[type_id] = h.subtype(h.dispatch_type(type_id).name, pole.name).offset
    return PoleAssignment(poles=poles, vector=vector, realign=realign, blocked=blocked)


# ============================================================================
# DISPATCH STRUCTURES
# ============================================================================


def build_dispatch(
    h: Hierarchy,
    key: str,
    specs: Sequence[ir.Specialization],
    spec_ids: dict[tuple, int],
) -> tuple[DispatchStructures, list[Diagnostic]]:
    """
    Build the pole vectors and selection matrix of one family.

    Args:
        h: Hierarchy of the whole program
        key: Family key
        specs: Every specialization of the family
        spec_ids: Global id of each specialization, by signature key

    Returns:
        The structures and any E_AMBIG_POLE, E_LINK_AMBIGUOUS or
        E_RETURN_CONSTRAINT diagnostics
    """
    diagnostics: list[Diagnostic] = []
    positions = specs[0].dispatch_positions
    assignments = [
        compute_poles(h, (s.dispatch_types[i] for s in specs)) for i, _ in enumerate(positions)
    ]
    blocked = [set(a.blocked) for a in assignments]

    entries = []
    reported: set = set()
    for pole_ids in itertools.product(*(range(len(a.poles)) for a in assignments)):
        pole_types = tuple(a.poles[p] for a, p in zip(assignments, pole_ids))
        entry = _select(h, key, specs, pole_types, spec_ids, diagnostics, reported)
        if entry.is_trap:
            for i in _blocked_positions(h, specs, pole_types):
                vector = assignments[i].vector
                blocked[i].update(
                    h.dispatch_type(t) for t, p in enumerate(vector) if p == pole_ids[i]
                )
        entries.append(entry)

    ambiguous_poles = [
        link_error(
            Code.E_AMBIG_POLE,
            f"{key}: argument {positions[i]} of type {t} reaches a parameter type "
            f"only through an ambiguous subtype",
        )
        for i, types in enumerate(blocked)
        for t in sorted(types, key=h.dispatch_id)
    ]

    structures = DispatchStructures(
        key=key,
        name=key.split("(")[0],
        dispatch_positions=positions,
        poles=[a.poles for a in assignments],
        pole_vectors=[a.vector for a in assignments],
        realign_vectors=[a.realign for a in assignments],
        entries=entries,
    )
    return structures, ambiguous_poles + diagnostics


def _blocked_positions(h: Hierarchy, specs, pole_types) -> set[int]:
    """
    Positions where only an ambiguous subtype keeps a specialization from
    applying to a pole tuple that selects nothing.
    """
    if any(applicable(h, s, pole_types) is Relation.UNIQUE for s in specs):
        return set()
    positions = set()
    for spec in specs:
        if applicable(h, spec, pole_types) is not Relation.AMBIGUOUS:
            continue
        positions.update(
            i
            for i, (p, q) in enumerate(zip(pole_types, spec.dispatch_types))
            if h.dispatch_subtype(p, q).is_ambiguous
        )
    return positions


def _select(h, key, specs, pole_types, spec_ids, diagnostics, reported) -> MatrixEntry:
    shown = f"({', '.join(map(str, pole_types))})"
    candidates = [s for s in specs if applicable(h, s, pole_types) is Relation.UNIQUE]
    if not candidates:
        return MatrixEntry()
    best = minimal(h, candidates)
    if len(best) != 1:
        names = tuple(sorted(s.short() for s in best))
        if names not in reported:
            reported.add(names)
            diagnostics.append(
                link_error(
                    Code.E_LINK_AMBIGUOUS,
                    f"{key}: no most specific specialization for {shown} among {', '.join(names)}",
                )
            )
        return MatrixEntry()

    winner = best[0]
    for other in specs:
        if other is winner or applicable(h, other, pole_types) is Relation.NO:
            continue
        if not return_compatible(h, winner.return_type, other.return_type):
            pair = (winner.short(), other.short())
            if pair not in reported:
                reported.add(pair)
                diagnostics.append(
                    link_error(
                        Code.E_RETURN_CONSTRAINT,
                        f"{key}: {winner.short()} selected for {shown} returns "
                        f"{winner.return_type}, which does not convert uniquely to "
                        f"{other.return_type} returned by {other.short()}",
                    )
                )
    steps = [h.upcast_access(p.name, q.name) for p, q in zip(pole_types, winner.dispatch_types)]
    anchors = tuple(step.anchor for step in steps)
    return MatrixEntry(
        spec=spec_ids[winner.signature_key()],
        offsets=tuple(step.offset for step in steps),
        anchors=anchors if any(anchors) else (),
    )


# ============================================================================
# CALL SITES
# ============================================================================


def iter_calls(node) -> Iterator[BaseModel]:
    """Every StaticCall and MultiCall inside an IR node."""
    if isinstance(node, (ir.StaticCall, ir.MultiCall)):
        yield node
    if isinstance(node, BaseModel):
        for name in type(node).model_fields:
            yield from iter_calls(getattr(node, name))
    elif isinstance(node, (list, tuple)):
        for item in node:
            yield from iter_calls(item)


# ============================================================================
# LINKING
# ============================================================================


def link(modules: Sequence[ObjectModule]) -> LinkedProgram:
    """
    Merge modules and build every dispatch structure.

    Args:
        modules: Object modules; their order does not affect the result

    Returns:
        The linked program

    Raises:
        LinkError: Carries every link diagnostic
    """
    merged, diagnostics = merge(modules)
    try:
        h = build(merged.classes.values())
    except HierarchyError as exc:
        diagnostics.append(link_error(Code.E_CLASS_MISMATCH, str(exc)))
        raise LinkError(diagnostics) from None

    specs = sorted(merged.specializations.values(), key=lambda s: s.signature_key())
    spec_ids = {s.signature_key(): i for i, s in enumerate(specs)}
    families: dict[str, list[ir.Specialization]] = {}
    for spec in specs:
        families.setdefault(spec.key, []).append(spec)

    bodies = [f.body for f in merged.functions.values()] + [s.body for s in specs]
    called_keys: set[str] = set()
    called_symbols: set[str] = {"main"}
    for call in iter_calls(bodies):
        if isinstance(call, ir.MultiCall):
            called_keys.add(call.key)
        else:
            called_symbols.add(call.symbol)

    for k in sorted(called_keys - set(families)):
        diagnostics.append(link_error(Code.E_UNRESOLVED_CALL, f"no specialization of {k} exists"))
    for symbol in sorted(called_symbols):
        fn = merged.functions.get(symbol)
        if fn is None:
            if symbol != "main":
                diagnostics.append(
                    link_error(Code.E_UNRESOLVED_CALL, f"function {symbol} does not exist")
                )
        elif fn.body is None and symbol != "main":
            diagnostics.append(link_error(Code.E_MISSING_BODY, f"{fn.display()} has no body"))

    dispatch: dict[str, DispatchStructures] = {}
    for k in sorted(families):
        structures, found = build_dispatch(h, k, families[k], spec_ids)
        diagnostics.extend(found)
        dispatch[k] = structures
        if k in called_keys:
            selected = {e.spec for e in structures.entries if e.spec is not None}
            for spec_id in sorted(selected):
                if specs[spec_id].body is None:
                    diagnostics.append(
                        link_error(Code.E_MISSING_BODY, f"{specs[spec_id].display()} has no body")
                    )

    if any(d.is_error for d in diagnostics):
        raise LinkError(diagnostics)

    program = LinkedProgram(
        classes=[h.entry(n) for n in h.names],
        specializations=specs,
        dispatch=dispatch,
        functions={s: merged.functions[s] for s in sorted(merged.functions)},
        rttables=all_rttables(h),
    )
    logger.info(
        f"Linked {len(modules)} module(s): {len(h.names)} classes, {len(specs)} "
        f"specializations in {len(dispatch)} families"
    )
    return program


# ============================================================================
# DUMPING
# ============================================================================


def _vector_text(h: Hierarchy, values: Sequence[Optional[int]], pole_names: bool) -> str:
    parts = []
    for type_id, value in enumerate(values):
        shown = "-" if value is None else (f"P{value + 1}" if pole_names else str(value))
        parts.append(f"{h.dispatch_type(type_id)}:{shown}")
    return " ".join(parts)


def dump_tables(program: LinkedProgram) -> str:
    """Readable listing of every family's poles, vectors and matrix."""
    h = build(program.classes)
    lines = ["types: " + " ".join(f"{i}={n}" for i, n in enumerate(h.names))]
    for key, structures in program.dispatch.items():
        lines.append(f"family {key}")
        members = [
            (i, s) for i, s in enumerate(program.specializations) if s.key == key
        ]
        for spec_id, spec in members:
            lines.append(f"  #{spec_id} {spec.display()}")
        for pos, poles in enumerate(structures.poles):
            arg = structures.dispatch_positions[pos]
            names = " ".join(f"P{i + 1}={p}" for i, p in enumerate(poles))
            lines.append(f"  argument {arg} poles: {names or '(none)'}")
            lines.append("    poles:   " + _vector_text(h, structures.pole_vectors[pos], True))
            lines.append("    realign: " + _vector_text(h, structures.realign_vectors[pos], False))
        lines.append("  matrix:")
        for pole_ids in itertools.product(*(range(len(p)) for p in structures.poles)):
            entry = structures.entry(pole_ids)
            cell = "(" + ",".join(f"P{p + 1}" for p in pole_ids) + ")"
            if entry.is_trap:
                lines.append(f"    {cell} -> TRAP")
            else:
                spec = program.specializations[entry.spec]
                offsets = ",".join(
                    f"{o}" if entry.anchor(i) is None else f"{entry.anchor(i)}+{o}"
                    for i, o in enumerate(entry.offsets)
                )
                lines.append(f"    {cell} -> #{entry.spec} {spec.short()} offsets ({offsets})")
    return "\n".join(lines) + "\n"
