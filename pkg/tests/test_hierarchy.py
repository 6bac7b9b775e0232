import pytest

from mmlang.frontend import parse
from mmlang.hierarchy import Relation, build, dispatch_universe, format_layout, rttable
from mmlang.models.errors import (
    CyclicInheritance,
    DuplicateClass,
    MixedVirtuality,
    UnknownParent,
)
from mmlang.models.types import TypeRef


def _hierarchy(fixture_dir, name):
    return build(parse((fixture_dir / name).read_text(), name).class_decls)


def _slot_owners(h, name):
    return [(slot, ".".join(record.path), fld.name) for slot, record, fld in h.field_slots(name)]


def test_class_ids_follow_name_order():
    h = build(parse("class Zed { int z; }; class Alpha { int a; };").class_decls)
    assert h.names == ("Alpha", "Zed")
    assert h.class_id("Zed") == 1
    assert h.dispatch_id(TypeRef(name="Zed", is_const=True)) == 3
    assert h.dispatch_type(2) == TypeRef(name="Zed")


def test_replicated_base_layout(fixture_dir):
    h = _hierarchy(fixture_dir, "diamond.ool")
    assert h.layout("D").size == 5
    assert _slot_owners(h, "D") == [
        (0, "D.B.A", "a"),
        (1, "D.B", "b"),
        (2, "D.C.A", "a"),
        (3, "D.C", "c"),
        (4, "D", "d"),
    ]
    answer = h.subtype("D", "A")
    assert answer.relation is Relation.AMBIGUOUS
    assert answer.offsets == (0, 2)
    assert h.subtype("D", "B").offset == 0
    assert h.subtype("D", "C").offset == 2


def test_virtual_base_layout(fixture_dir):
    h = _hierarchy(fixture_dir, "virtual_diamond.ool")
    layout = h.layout("D")
    assert layout.size == 4
    assert layout.virtual_bases == ("A",)
    assert _slot_owners(h, "D") == [
        (0, "D.B", "b"),
        (1, "D.C", "c"),
        (2, "D", "d"),
        (3, "D.A", "a"),
    ]
    answer = h.subtype("D", "A")
    assert answer.is_unique
    assert answer.offset == 3
    # a B on its own keeps its virtual base right after its own part
    assert h.subtype("B", "A").offset == 1


def test_nested_non_virtual_layout(fixture_dir):
    h = _hierarchy(fixture_dir, "nested.ool")
    assert _slot_owners(h, "E") == [
        (0, "E.C", "c"),
        (1, "E.D.A", "a"),
        (2, "E.D.B", "b"),
        (3, "E.D", "d"),
        (4, "E", "e"),
    ]
    assert h.subtype("E", "D").offset == 1
    assert h.subtype("D", "B").offset == 1
    assert h.subtype("E", "B").offset == 2
    assert h.subtype("B", "E").is_no


def test_virtual_bases_are_ordered_ancestors_first():
    h = build(
        parse(
            """
            class Z { int z; };
            class Y : virtual public Z { int y; };
            class X { int x; };
            class W : virtual public Y, virtual public X { int w; };
            """
        ).class_decls
    )
    assert h.virtual_bases("W") == ("X", "Z", "Y")


def test_dispatch_subtyping_respects_const():
    h = build(parse("class A { int a; }; class B : public A { int b; };").class_decls)
    a, b = TypeRef(name="A"), TypeRef(name="B")
    assert h.dispatch_subtype(b, a.with_const(True)).is_unique
    assert h.dispatch_subtype(b.with_const(True), a).is_no
    assert h.dispatch_subtype(a.with_const(True), a.with_const(True)).is_unique

    universe = dispatch_universe(h)
    assert len(universe.types) == 4
    assert (b, a) in universe.edges
    assert (a, a.with_const(True)) in universe.edges


def test_runtime_table_of_virtual_diamond(fixture_dir):
    h = _hierarchy(fixture_dir, "virtual_diamond.ool")
    table = rttable(h, "D")
    ids = {name: h.class_id(name) for name in h.names}
    assert [(a.type_id, a.offset) for a in table.ancestors] == [
        (ids["B"], 0),
        (ids["C"], 1),
        (ids["A"], 3),
    ]
    # the C subobject still finds the shared A through the complete object
    inner = rttable(h, "D", ("C",))
    assert inner.subobject_offset == 1
    assert inner.ancestor_offset(ids["A"]) == 3


def test_runtime_table_omits_ambiguous_ancestors(fixture_dir):
    h = _hierarchy(fixture_dir, "diamond.ool")
    table = rttable(h, "D")
    assert [(h.names[a.type_id], a.offset) for a in table.ancestors] == [("B", 0), ("C", 2)]
    assert rttable(h, "D", ("C", "A")).subobject_offset == 2


def test_format_layout(fixture_dir):
    h = _hierarchy(fixture_dir, "virtual_diamond.ool")
    assert format_layout(h, "D") == (
        "class D size 4\n"
        "subobjects:\n"
        "  0 D path=D\n"
        "  0 B path=D.B\n"
        "  1 C path=D.C\n"
        "  3 A path=D.A virtual\n"
        "slots:\n"
        "  0 D.B.b int\n"
        "  1 D.C.c int\n"
        "  2 D.d int\n"
        "  3 D.A.a int\n"
    )


def test_fieldless_classes_have_zero_size():
    h = build(parse("class A { }; class B : public A { int b; };").class_decls)
    assert h.layout("A").size == 0
    assert h.subtype("B", "A").offset == 0


@pytest.mark.parametrize(
    "source, error",
    [
        ("class A : public B { int a; }; class B : public A { int b; };", CyclicInheritance),
        ("class A : public Missing { int a; };", UnknownParent),
        (
            "class A { int a; }; class B : virtual public A { int b; };"
            " class C : public A, public B { int c; };",
            MixedVirtuality,
        ),
    ],
)
def test_invalid_hierarchies(source, error):
    with pytest.raises(error):
        build(parse(source).class_decls)


def test_duplicate_class():
    decls = parse("class A { int a; };").class_decls
    with pytest.raises(DuplicateClass):
        build([*decls, *decls])
