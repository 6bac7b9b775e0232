import pytest

from mmlang.frontend import MemoryReader, desugar_members, format_ast, load_unit, parse
from mmlang.frontend import ast as A
from mmlang.models.diagnostics import Code
from mmlang.models.errors import CompileError, ParseErrors

FIXTURE_FILES = [
    "dump_virtual.ool",
    "equal.ool",
    "pole_offsets.ool",
    "return_realign.ool",
    "const_dispatch.ool",
    "virtual_anchor.ool",
    "unrelated.oolh",
]


def test_parse_declarations():
    tree = parse(
        """
        class A { int a; float w; };
        class B : public A, virtual public C { bool flag; };
        int f(const A &x, B y);
        int @m(A x, int n) { return n; }
        """,
        "decls.ool",
    )
    assert [c.name for c in tree.class_decls] == ["A", "B"]
    b = tree.class_decls[1]
    assert [(p.name, p.is_virtual, p.is_public) for p in b.parents] == [
        ("A", False, True),
        ("C", True, True),
    ]
    assert [(f.name, f.type_name) for f in tree.class_decls[0].fields] == [
        ("a", "int"),
        ("w", "float"),
    ]

    (f,) = tree.func_decls
    assert f.body is None
    assert (f.params[0].is_const, f.params[0].by_ref, f.params[0].type_name) == (True, True, "A")
    (m,) = tree.mm_decls
    assert m.name == "@m"
    assert m.body is not None
    assert tree.class_decls[0].span.file == "decls.ool"


def test_string_escapes_are_decoded():
    tree = parse('void main() { print("a\\tb\\n"); }')
    stmt = tree.func_decls[0].body.stmts[0]
    assert stmt.expr.args[0] == A.StringLit(value="a\tb\n", span=stmt.expr.args[0].span)


def test_precedence():
    tree = parse("int main() { return 1 + 2 * 3 == 7 && !false; }")
    value = tree.func_decls[0].body.stmts[0].value
    assert value.op == "&&"
    assert value.left.op == "=="
    assert value.left.left.op == "+"
    assert value.left.left.right.op == "*"
    assert isinstance(value.right, A.Unary)


@pytest.mark.parametrize("name", FIXTURE_FILES)
def test_printer_round_trip(fixture_dir, name):
    tree = parse((fixture_dir / name).read_text(), name)
    printed = format_ast(tree)
    reparsed = parse(printed, name)
    assert format_ast(reparsed) == printed
    assert [c.name for c in reparsed.class_decls] == [c.name for c in tree.class_decls]
    assert [m.name for m in reparsed.mm_decls] == [m.name for m in tree.mm_decls]


def test_syntax_errors_are_all_reported():
    source = "int main() {\n    int x = ;\n    int y = 1 +;\n    return 0;\n}\n"
    with pytest.raises(ParseErrors) as exc_info:
        parse(source, "broken.ool")
    diagnostics = exc_info.value.diagnostics
    assert [d.code for d in diagnostics] == [Code.E_SYNTAX, Code.E_SYNTAX]
    assert [d.span.line for d in diagnostics] == [2, 3]
    assert all(d.span.file == "broken.ool" for d in diagnostics)


def test_unexpected_character():
    with pytest.raises(ParseErrors) as exc_info:
        parse("int main() { return 1 $ 2; }")
    assert any("unexpected character" in d.message for d in exc_info.value.diagnostics)


def test_class_field_must_be_scalar():
    with pytest.raises(ParseErrors) as exc_info:
        parse("class A { int a; }; class B { A inner; };")
    (diagnostic,) = exc_info.value.diagnostics
    assert "inner" in diagnostic.message


def test_duplicate_parent_is_a_syntax_error():
    with pytest.raises(ParseErrors):
        parse("class A { int a; }; class B : public A, public A { int b; };")


# ============================================================================
# DESUGARING
# ============================================================================


def test_member_multimethods_are_hoisted(fixture_dir):
    tree = desugar_members(parse((fixture_dir / "equal.ool").read_text(), "equal.ool"))
    point = tree.class_decls[0]
    assert point.members == ()

    hoisted = [m for m in tree.mm_decls if m.receiver == "Point"]
    assert len(hoisted) == 1
    this = hoisted[0].params[0]
    assert (this.name, this.type_name, this.by_ref) == ("this", "Point", True)
    assert [p.name for p in hoisted[0].params] == ["this", "p"]


def test_member_call_syntax_becomes_a_multimethod_call():
    tree = desugar_members(parse("bool f(A a, A b) { return a.@equal(b); }"))
    value = tree.func_decls[0].body.stmts[0].value
    assert isinstance(value, A.MmCall)
    assert value.name == "@equal"
    assert [arg.name for arg in value.args] == ["a", "b"]


def test_out_of_class_multimethod_gets_receiver():
    tree = desugar_members(
        parse("class A { int a; }; int A::@m(A other) { return a + other.a; }")
    )
    (mm,) = tree.mm_decls
    assert mm.receiver == "A"
    assert mm.owner is None
    assert [p.name for p in mm.params] == ["this", "other"]


def test_desugaring_twice_changes_nothing(fixture_dir):
    once = desugar_members(parse((fixture_dir / "equal.ool").read_text(), "equal.ool"))
    assert desugar_members(once) == once


# ============================================================================
# HEADERS
# ============================================================================


def test_headers_are_loaded_once():
    sources = {
        "main.ool": '#include "a.oolh"\n#include "b.oolh"\nint main() { return 0; }\n',
        "a.oolh": '#include "b.oolh"\nclass A { int a; };\n',
        "b.oolh": '#include "a.oolh"\nclass B { int b; };\n',
    }
    unit = load_unit("main.ool", sources["main.ool"], MemoryReader(sources))
    assert sorted(h.file_name for h in unit.headers) == ["a.oolh", "b.oolh"]


def test_missing_header():
    sources = {"main.ool": '#include "nowhere.oolh"\nint main() { return 0; }\n'}
    with pytest.raises(CompileError) as exc_info:
        load_unit("main.ool", sources["main.ool"], MemoryReader(sources))
    assert [d.code for d in exc_info.value.diagnostics] == [Code.E_INCLUDE]


def test_header_with_body_is_rejected():
    sources = {
        "main.ool": '#include "bad.oolh"\nint main() { return f(); }\n',
        "bad.oolh": "int f() { return 1; }\n",
    }
    with pytest.raises(CompileError) as exc_info:
        load_unit("main.ool", sources["main.ool"], MemoryReader(sources))
    assert [d.code for d in exc_info.value.diagnostics] == [Code.E_HEADER_BODY]


def test_header_lookup_is_relative_to_the_including_file():
    sources = {
        "lib/main.ool": '#include "shapes.oolh"\nint main() { return 0; }\n',
        "lib/shapes.oolh": "class S { int s; };\n",
    }
    unit = load_unit("lib/main.ool", sources["lib/main.ool"], MemoryReader(sources))
    assert [h.file_name for h in unit.headers] == ["lib/shapes.oolh"]
