"""
Class hierarchy, object layout and the subtype relation.

Objects are laid out the way C++ compilers do it. The non-virtual part of a
class holds the non-virtual parts of its non-virtual parents, in declaration
order, followed by its own fields. A complete object is its non-virtual part
followed by one shared copy of every transitive virtual base, each laid out as
its own non-virtual part. Every field takes one slot.

Subsumption between classes is answered by counting subobjects: a class with
exactly one subobject of an ancestor converts to it uniquely, one with several
converts ambiguously.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

from mmlang.frontend import ast as A
from mmlang.models.errors import (
    CyclicInheritance,
    DuplicateClass,
    MixedVirtuality,
    UnknownParent,
)
from mmlang.models.ir import SubobjectAccess
from mmlang.models.tables import RTAncestor, RTTable
from mmlang.models.types import (
    ClassEntry,
    FieldEntry,
    MethodEntry,
    ParamEntry,
    ParentEntry,
    TypeRef,
)
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)


# ============================================================================
# SUBTYPE ANSWERS
# ============================================================================


class Relation(str, Enum):
    NO = "no"
    UNIQUE = "unique"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class SubtypeAnswer:
    """Result of a subtype query; `offsets` locate each matching subobject."""

    relation: Relation
    offsets: tuple[int, ...] = ()

    @property
    def is_no(self) -> bool:
        return self.relation is Relation.NO

    @property
    def is_unique(self) -> bool:
        return self.relation is Relation.UNIQUE

    @property
    def is_ambiguous(self) -> bool:
        return self.relation is Relation.AMBIGUOUS

    @property
    def offset(self) -> int:
        if not self.is_unique:
            raise ValueError(f"no unique offset for a {self.relation.value} subtype answer")
        return self.offsets[0]

    def __str__(self) -> str:
        if self.is_unique:
            return f"Unique({self.offsets[0]})"
        if self.is_ambiguous:
            return f"Ambiguous({', '.join(map(str, self.offsets))})"
        return "No"


NO = SubtypeAnswer(Relation.NO)


# ============================================================================
# LAYOUT RECORDS
# ============================================================================


@dataclass(frozen=True)
class Subobject:
    """One subobject of a complete object.

    `path` lists the classes from the complete object down to this subobject;
    a virtual base is reached directly from the complete object. `anchor`
    names the virtual base whose non-virtual part contains the subobject (None
    for the complete object's own non-virtual part) and `anchor_offset` is the
    offset from that part's start.
    """

    cls: str
    path: tuple[str, ...]
    offset: int
    is_virtual_base: bool = False
    anchor: Optional[str] = None
    anchor_offset: int = 0


@dataclass(frozen=True)
class Layout:
    name: str
    size: int
    nv_size: int
    own_field_start: int
    subobjects: tuple[Subobject, ...]
    virtual_bases: tuple[str, ...]

    def records_of(self, cls: str) -> list[Subobject]:
        return [s for s in self.subobjects if s.cls == cls]

    def record_at(self, path: tuple[str, ...]) -> Subobject:
        for sub in self.subobjects:
            if sub.path == path:
                return sub
        raise KeyError(f"class {self.name} has no subobject at path {'.'.join(path)}")


@dataclass(frozen=True)
class FieldResolution:
    """A field found through a static class: the subobject holding it and its access."""

    field: FieldEntry
    holder: Subobject
    access: SubobjectAccess


class Hierarchy:
    """Validated class graph with precomputed layouts.

    Class ids are positions in name order; dispatch-type ids are
    `2 * class_id + const`.
    """

    def __init__(self, entries: dict[str, ClassEntry], order: tuple[str, ...]):
        self.entries = entries
        self.order = order
        self.names = tuple(sorted(entries))
        self._ids = {name: i for i, name in enumerate(self.names)}
        self._nv: dict[str, tuple[list[tuple[str, tuple[str, ...], int]], int, int]] = {}
        self._vbases: dict[str, tuple[str, ...]] = {}
        self._ancestors: dict[str, frozenset[str]] = {}
        self._layouts: dict[str, Layout] = {}
        self._subtype_cache: dict[tuple[str, str], SubtypeAnswer] = {}
        for name in order:
            self._layouts[name] = self._complete_layout(name)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    # ------------------------------------------------------------ ids

    def class_id(self, name: str) -> int:
        return self._ids[name]

    def dispatch_id(self, t: TypeRef) -> int:
        return 2 * self._ids[t.name] + int(t.is_const)

    def dispatch_type(self, dispatch_id: int) -> TypeRef:
        return TypeRef(name=self.names[dispatch_id // 2], is_const=bool(dispatch_id % 2))

    @property
    def universe_size(self) -> int:
        return 2 * len(self.names)

    # ------------------------------------------------------------ layout

    def entry(self, name: str) -> ClassEntry:
        return self.entries[name]

    def layout(self, name: str) -> Layout:
        return self._layouts[name]

    def _nv_part(self, name: str):
        """Records of the non-virtual part relative to its start, its size and own-field start."""
        if name in self._nv:
            return self._nv[name]
        entry = self.entries[name]
        records = [(name, (name,), 0)]
        offset = 0
        for parent in entry.parents:
            if parent.is_virtual:
                continue
            sub_records, sub_size, _ = self._nv_part(parent.name)
            records.extend((cls, (name, *path), offset + o) for cls, path, o in sub_records)
            offset += sub_size
        result = (records, offset + len(entry.fields), offset)
        self._nv[name] = result
        return result

    def _ancestry(self, name: str) -> frozenset[str]:
        if name not in self._ancestors:
            found: set[str] = set()
            for parent in self.entries[name].parents:
                found.add(parent.name)
                found.update(self._ancestry(parent.name))
            self._ancestors[name] = frozenset(found)
        return self._ancestors[name]

    def virtual_bases(self, name: str) -> tuple[str, ...]:
        """Transitive virtual bases; ancestors before descendants, then by name."""
        if name in self._vbases:
            return self._vbases[name]
        remaining: set[str] = set()
        for parent in self.entries[name].parents:
            if parent.is_virtual:
                remaining.add(parent.name)
            remaining.update(self.virtual_bases(parent.name))
        order = []
        while remaining:
            ready = min(n for n in remaining if not self._ancestry(n) & remaining)
            order.append(ready)
            remaining.discard(ready)
        self._vbases[name] = tuple(order)
        return self._vbases[name]

    def _complete_layout(self, name: str) -> Layout:
        records, nv_size, own_start = self._nv_part(name)
        subobjects = [Subobject(cls, path, o, anchor_offset=o) for cls, path, o in records]
        offset = nv_size
        vbases = self.virtual_bases(name)
        for vbase in vbases:
            v_records, v_size, _ = self._nv_part(vbase)
            for cls, path, o in v_records:
                subobjects.append(
                    Subobject(
                        cls=cls,
                        path=(name, *path),
                        offset=offset + o,
                        is_virtual_base=len(path) == 1,
                        anchor=vbase,
                        anchor_offset=o,
                    )
                )
            offset += v_size

        vset = set(vbases)
        for sub in subobjects:
            if sub.cls in vset and not sub.is_virtual_base:
                raise MixedVirtuality(
                    f"class {name} inherits {sub.cls} both virtually and non-virtually",
                    name,
                )
        return Layout(
            name=name,
            size=offset,
            nv_size=nv_size,
            own_field_start=own_start,
            subobjects=tuple(subobjects),
            virtual_bases=vbases,
        )

    # ------------------------------------------------------------ subtyping

    def subtype(self, sub: str, sup: str) -> SubtypeAnswer:
        key = (sub, sup)
        if key not in self._subtype_cache:
            offsets = tuple(sorted(s.offset for s in self._layouts[sub].records_of(sup)))
            if not offsets:
                answer = NO
            elif len(offsets) == 1:
                answer = SubtypeAnswer(Relation.UNIQUE, offsets)
            else:
                answer = SubtypeAnswer(Relation.AMBIGUOUS, offsets)
            self._subtype_cache[key] = answer
        return self._subtype_cache[key]

    def dispatch_subtype(self, t: TypeRef, u: TypeRef) -> SubtypeAnswer:
        """Subtyping between dispatch types: `T <= const T`, never `const T <= T`."""
        if t.is_const and not u.is_const:
            return NO
        return self.subtype(t.name, u.name)

    def is_proper_ancestor(self, ancestor: str, cls: str) -> bool:
        return ancestor != cls and not self.subtype(cls, ancestor).is_no

    def unique_ancestors(self, name: str) -> list[Subobject]:
        """Proper ancestors with exactly one subobject, in layout (preorder) order."""
        layout = self._layouts[name]
        seen: set[str] = set()
        result = []
        for sub in layout.subobjects[1:]:
            if sub.cls in seen or not self.subtype(name, sub.cls).is_unique:
                continue
            seen.add(sub.cls)
            result.append(sub)
        return result

    # ------------------------------------------------------------ member access

    @staticmethod
    def access_of(record: Subobject, extra: int = 0) -> SubobjectAccess:
        """Access to `record` (plus `extra` slots) from the start of its complete layout."""
        if record.anchor is None:
            return SubobjectAccess(offset=record.offset + extra)
        return SubobjectAccess(anchor=record.anchor, offset=record.anchor_offset + extra)

    def upcast_access(self, sub: str, sup: str) -> SubobjectAccess:
        records = self._layouts[sub].records_of(sup)
        if len(records) != 1:
            raise ValueError(f"{sub} does not convert uniquely to {sup}")
        return self.access_of(records[0])

    def find_fields(self, static_cls: str, field_name: str) -> list[FieldResolution]:
        """
        Candidate fields named `field_name` visible through `static_cls`.

        A field declared in a derived class hides the same name in its ancestors.
        More than one result means the access is ambiguous; none means unknown.
        """
        candidates: list[tuple[Subobject, FieldEntry, int]] = []
        for record in self._layouts[static_cls].subobjects:
            entry = self.entries[record.cls]
            for i, fld in enumerate(entry.fields):
                if fld.name == field_name:
                    start = self._nv_part(record.cls)[2]
                    candidates.append((record, fld, start + i))
        classes = {rec.cls for rec, _, _ in candidates}
        visible = [
            c
            for c in candidates
            if not any(self.is_proper_ancestor(c[0].cls, other) for other in classes)
        ]
        return [
            FieldResolution(field=fld, holder=rec, access=self.access_of(rec, slot))
            for rec, fld, slot in visible
        ]

    def find_methods(self, static_cls: str, method_name: str) -> list[tuple[str, MethodEntry]]:
        """Visible declarations of a method, most-derived first hiding the rest."""
        found: dict[str, MethodEntry] = {}
        for record in self._layouts[static_cls].subobjects:
            for method in self.entries[record.cls].methods:
                if method.name == method_name:
                    found.setdefault(record.cls, method)
        return [
            (cls, m)
            for cls, m in found.items()
            if not any(self.is_proper_ancestor(cls, other) for other in found)
        ]

    def field_slots(self, name: str) -> list[tuple[int, Subobject, FieldEntry]]:
        """Every slot of a complete object with the subobject that owns it."""
        slots = []
        for record in self._layouts[name].subobjects:
            start = self._nv_part(record.cls)[2]
            for i, fld in enumerate(self.entries[record.cls].fields):
                slots.append((record.offset + start + i, record, fld))
        return sorted(slots, key=lambda s: s[0])


# ============================================================================
# BUILDING
# ============================================================================


def entry_from_decl(decl: A.ClassDecl) -> ClassEntry:
    """Structural record of a parsed class declaration."""
    methods = []
    for m in decl.members:
        params = tuple(
            ParamEntry(
                name=p.name or "",
                type=TypeRef(name=p.type_name, is_const=p.is_const),
                by_ref=p.by_ref,
            )
            for p in m.params
        )
        methods.append(
            MethodEntry(
                name=m.name,
                params=params,
                return_type=TypeRef(name=m.return_type),
                is_virtual=m.is_virtual,
            )
        )
    return ClassEntry(
        name=decl.name,
        parents=tuple(
            ParentEntry(name=p.name, is_virtual=p.is_virtual, is_public=p.is_public)
            for p in decl.parents
        ),
        fields=tuple(FieldEntry(name=f.name, type=f.type_name) for f in decl.fields),
        methods=tuple(methods),
    )


def _topological_order(entries: dict[str, ClassEntry]) -> tuple[str, ...]:
    remaining = {name: {p.name for p in e.parents} for name, e in entries.items()}
    children: dict[str, list[str]] = {name: [] for name in entries}
    for name, parents in remaining.items():
        for parent in parents:
            children[parent].append(name)
    ready = [name for name, parents in remaining.items() if not parents]
    heapq.heapify(ready)
    order = []
    while ready:
        name = heapq.heappop(ready)
        order.append(name)
        for child in children[name]:
            remaining[child].discard(name)
            if not remaining[child]:
                heapq.heappush(ready, child)
    if len(order) != len(entries):
        stuck = sorted(set(entries) - set(order))[0]
        raise CyclicInheritance(f"class {stuck} inherits from itself", stuck)
    return tuple(order)


def build(class_decls: Iterable[Union[ClassEntry, A.ClassDecl]]) -> Hierarchy:
    """
    Validate a set of classes and compute their layouts.

    Args:
        class_decls: Parsed class declarations or structural class records

    Returns:
        The hierarchy

    Raises:
        DuplicateClass: Two classes share a name
        UnknownParent: A parent is not among the classes
        CyclicInheritance: A class is its own ancestor
        MixedVirtuality: A class holds an ancestor both virtually and non-virtually
    """
    entries: dict[str, ClassEntry] = {}
    for decl in class_decls:
        entry = entry_from_decl(decl) if isinstance(decl, A.ClassDecl) else decl
        if entry.name in entries:
            raise DuplicateClass(f"class {entry.name} is declared twice", entry.name)
        entries[entry.name] = entry

    for entry in entries.values():
        for parent in entry.parents:
            if parent.name not in entries:
                raise UnknownParent(
                    f"class {entry.name} inherits from unknown class {parent.name}",
                    entry.name,
                )

    hierarchy = Hierarchy(entries, _topological_order(entries))
    logger.debug(f"Built hierarchy of {len(entries)} classes")
    return hierarchy


def unit_hierarchy(unit) -> Hierarchy:
    """Hierarchy of a compilation unit's classes, headers first; repeats keep the first."""
    entries: dict[str, ClassEntry] = {}
    for tree in (*unit.headers, unit.source):
        for decl in tree.class_decls:
            entries.setdefault(decl.name, entry_from_decl(decl))
    return build(entries.values())


def subtype(h: Hierarchy, sub: str, sup: str) -> SubtypeAnswer:
    return h.subtype(sub, sup)


# ============================================================================
# RUNTIME TABLES
# ============================================================================


def rttable(h: Hierarchy, complete: str, path: tuple[str, ...] = ()) -> RTTable:
    """
    Runtime table of one subobject of a `complete` object.

    Args:
        h: Hierarchy
        complete: Class of the complete object
        path: Classes below the complete object leading to the subobject;
            empty for the complete object itself

    Returns:
        The table; ancestor offsets are measured from the complete object's start
    """
    layout = h.layout(complete)
    record = layout.record_at((complete, *path))
    vbase_start = {s.cls: s.offset for s in layout.subobjects if s.is_virtual_base}
    ancestors = []
    for anc in h.unique_ancestors(record.cls):
        if anc.anchor is None:
            offset = record.offset + anc.offset
        else:
            offset = vbase_start[anc.anchor] + anc.anchor_offset
        ancestors.append(RTAncestor(type_id=h.class_id(anc.cls), offset=offset))
    return RTTable(
        type_id=h.class_id(record.cls),
        host_id=h.class_id(complete),
        size=layout.size,
        subobject_offset=record.offset,
        ancestors=ancestors,
    )


def all_rttables(h: Hierarchy) -> list[RTTable]:
    """One table per subobject of every class, deduplicated by location."""
    tables: dict[tuple[int, int, int], RTTable] = {}
    for name in h.names:
        for record in h.layout(name).subobjects:
            table = rttable(h, name, record.path[1:])
            tables.setdefault((table.host_id, table.type_id, table.subobject_offset), table)
    return [tables[k] for k in sorted(tables)]


# ============================================================================
# DISPATCH TYPES
# ============================================================================


@dataclass(frozen=True)
class DispatchUniverse:
    """Every dispatch type, by id, with the covering edges of its order."""

    types: tuple[TypeRef, ...]
    edges: tuple[tuple[TypeRef, TypeRef], ...]


def dispatch_universe(h: Hierarchy) -> DispatchUniverse:
    types = tuple(h.dispatch_type(i) for i in range(h.universe_size))
    edges = []
    for name in h.names:
        plain = TypeRef(name=name)
        edges.append((plain, plain.with_const(True)))
        for parent in h.entry(name).parents:
            if h.subtype(name, parent.name).is_unique:
                edges.append((plain, TypeRef(name=parent.name)))
                edges.append((plain.with_const(True), TypeRef(name=parent.name, is_const=True)))
    return DispatchUniverse(types=types, edges=tuple(edges))


# ============================================================================
# DUMPING
# ============================================================================


def format_layout(h: Hierarchy, name: str) -> str:
    """Human-readable layout: subobjects with offsets, then slot owners."""
    layout = h.layout(name)
    lines = [f"class {name} size {layout.size}", "subobjects:"]
    for sub in layout.subobjects:
        flag = " virtual" if sub.is_virtual_base else ""
        lines.append(f"  {sub.offset} {sub.cls} path={'.'.join(sub.path)}{flag}")
    lines.append("slots:")
    for slot, record, fld in h.field_slots(name):
        lines.append(f"  {slot} {'.'.join(record.path)}.{fld.name} {fld.type}")
    return "\n".join(lines) + "\n"
