import pytest

from mmlang.hierarchy import build
from mmlang.models.diagnostics import Code, Severity
from mmlang.models.errors import CompileError
from mmlang.models.types import TypeRef
from mmlang.typecheck import family_key, type_invocation

CLASSES = """
class A { int a; };
class B : public A { int b; };
class C : public A { int c; };
class D : public B, public C { int d; };
"""


def _error_codes(toolchain, text):
    with pytest.raises(CompileError) as exc_info:
        toolchain.compile(text)
    return {d.code for d in exc_info.value.diagnostics if d.severity is Severity.ERROR}


def _warning_codes(diagnostics):
    return {d.code for d in diagnostics if d.severity is Severity.WARNING}


def test_module_contents(toolchain):
    module, diagnostics = toolchain.compile_fixture("const_dispatch.ool")
    assert diagnostics == []
    assert [c.name for c in module.classes] == ["A", "B"]
    assert [s.short() for s in module.specializations] == ["@m(A,B)", "@m(const A,B)"]
    assert {s.key for s in module.specializations} == {"@m(*,*)"}
    assert all(s.dispatch_positions == (0, 1) for s in module.specializations)
    assert [f.symbol for f in module.functions] == ["g", "main"]
    assert module.has_main


def test_virtual_methods_form_a_family(toolchain):
    module, _ = toolchain.compile_fixture("dump_virtual.ool")
    assert {(s.key, s.name) for s in module.specializations} == {
        ("Point::dump", "Point::dump"),
        ("Point::dump", "ColorPoint::dump"),
    }
    first = module.specializations[0]
    assert first.params[0].name == "this"
    assert first.params[0].by_ref


def test_scalar_positions_do_not_dispatch(toolchain):
    module, _ = toolchain.compile(
        "class A { int a; };\n"
        "int @m(A x, int n) { return n; }\n"
        "int main() { A a; return @m(a, 3); }"
    )
    (spec,) = module.specializations
    assert spec.key == "@m(*,int)"
    assert spec.dispatch_positions == (0,)


def test_family_key():
    types = [TypeRef(name="A"), TypeRef(name="int"), TypeRef(name="B", is_const=True)]
    assert family_key("@m", types) == "@m(*,int,*)"


def test_type_invocation_prefers_non_const(toolchain):
    module, _ = toolchain.compile_fixture("const_dispatch.ool")
    h = build(module.classes)
    a, b = TypeRef(name="A"), TypeRef(name="B")

    plain = type_invocation(h, module.specializations, (a, b))
    assert plain.code is None
    assert [s.short() for s in plain.candidates] == ["@m(A,B)"]

    constant = type_invocation(h, module.specializations, (a.with_const(True), b))
    assert [s.short() for s in constant.candidates] == ["@m(const A,B)"]

    none = type_invocation(h, module.specializations, (b, a))
    assert none.code is Code.E_NO_APPLICABLE
    assert none.return_type is None


# ============================================================================
# ERRORS
# ============================================================================


def test_override_with_different_parameter(toolchain):
    with pytest.raises(CompileError) as exc_info:
        toolchain.compile_fixture("override_param.ool")
    assert {d.code for d in exc_info.value.diagnostics} == {Code.E_OVERRIDE_PARAM}


def test_ambiguous_return_type(toolchain):
    with pytest.raises(CompileError) as exc_info:
        toolchain.compile_fixture("ambiguous_return.ool")
    errors = [d for d in exc_info.value.diagnostics if d.is_error]
    assert [d.code for d in errors] == [Code.E_AMBIGUOUS_RETURN]
    assert errors[0].span.file == "ambiguous_return.ool"


@pytest.mark.parametrize(
    "body, code",
    [
        ("int f(D d) { return d.a; }", Code.E_AMBIGUOUS_FIELD),
        ("int g(A a) { return 1; }\nint f(D d) { return g(d); }", Code.E_AMBIGUOUS_CONVERSION),
        ("int f(A x) { return x.nothing; }", Code.E_UNKNOWN_FIELD),
        ("int f() { return missing; }", Code.E_UNKNOWN_NAME),
        ("int f() { return g(); }", Code.E_UNKNOWN_NAME),
        ("int f(Z z) { return 0; }", Code.E_UNKNOWN_TYPE),
        ("int f() { return true; }", Code.E_TYPE_MISMATCH),
        ("int f(A x) { return x.a + 1.5; }", Code.E_TYPE_MISMATCH),
        ("int f(int x) { if (x > 0) { return 1; } }", Code.E_MISSING_RETURN),
        ("int f(int x) { return x; }\nint g() { return f(1, 2); }", Code.E_NO_MATCHING_FUNCTION),
        ("void f(const A &x) { x.a = 1; }", Code.E_CONST_VIOLATION),
        ("void g(A &x) { }\nvoid f(const A &x) { g(x); }", Code.E_CONST_VIOLATION),
        ("int @m(A x) { return 1; }\nint f(const A &x) { return @m(x); }", Code.E_NO_APPLICABLE),
        ("int f() { return 1; }\nint f() { return 2; }", Code.E_DUPLICATE_DECL),
        ("int f(A x) { A y; y = x; return 0; }", Code.E_TYPE_MISMATCH),
        ('int f() { int s; s = "text"; return s; }', Code.E_TYPE_MISMATCH),
        ("int main(int argc) { return argc; }", Code.E_TYPE_MISMATCH),
    ],
)
def test_body_errors(toolchain, body, code):
    assert code in _error_codes(toolchain, CLASSES + body)


def test_invalid_hierarchy_is_reported_once(toolchain):
    codes = _error_codes(
        toolchain, "class A : public B { int a; };\nclass B : public A { int b; };"
    )
    assert codes == {Code.E_HIERARCHY}


def test_errors_are_sorted_by_position(toolchain):
    with pytest.raises(CompileError) as exc_info:
        toolchain.compile(CLASSES + "int f() { return x; }\nint g() { return y; }")
    lines = [d.span.line for d in exc_info.value.diagnostics]
    assert lines == sorted(lines)
    assert len(lines) == 2


# ============================================================================
# WARNINGS
# ============================================================================


def test_latent_conflict(toolchain):
    _, diagnostics = toolchain.compile_fixture("latent_conflict.ool")
    (conflict,) = [d for d in diagnostics if d.code is Code.W_LATENT_CONFLICT]
    assert "(C, C)" in conflict.message
    assert "@m(A,A)" in conflict.message and "@m(B,B)" in conflict.message


def test_no_most_specific_with_equal_returns(toolchain):
    _, diagnostics = toolchain.compile_fixture("unrelated_main.ool")
    assert _warning_codes(diagnostics) == {Code.W_NO_MOST_SPECIFIC, Code.W_LATENT_CONFLICT}


def test_applicable_only_through_ambiguity(toolchain):
    _, diagnostics = toolchain.compile_fixture("blocked_main.ool")
    assert _warning_codes(diagnostics) == {Code.W_AMBIG_SUBTYPE}


def test_return_constraint_warning(toolchain):
    module, diagnostics = toolchain.compile_fixture("return_constraint.ool")
    assert _warning_codes(diagnostics) == {Code.W_RETURN_CONSTRAINT}
    assert [d.code for d in module.warnings] == [Code.W_RETURN_CONSTRAINT]


def test_werror_turns_warnings_into_failures(toolchain):
    with pytest.raises(CompileError) as exc_info:
        toolchain.compile_fixture("return_constraint.ool", werror=True)
    assert [d.code for d in exc_info.value.diagnostics] == [Code.W_RETURN_CONSTRAINT]


def test_more_specific_cover_silences_conflict(toolchain):
    _, diagnostics = toolchain.compile(
        '#include "shapes.oolh"\n'
        "int @m(A x, A y) { return 1; }\n"
        "int @m(B x, B y) { return 2; }\n"
        "int @m(C x, C y) { return 3; }\n",
        headers=toolchain.sources(),
    )
    assert diagnostics == []


def test_main_gets_an_implicit_return(toolchain):
    module, _ = toolchain.compile("int main() { }")
    (main,) = module.functions
    assert main.body.block.body[-1].kind == "return"


@pytest.mark.parametrize(
    "text, line",
    [
        ("int f(int a,\n      int a) { return a; }\nint main() { return 0; }", 2),
        (
            "class A { int x; };\nint @m(A a,\n       A a) { return 1; }\nint main() { return 0; }",
            3,
        ),
        (
            "class A { int x; int g(int n, int m); };\n"
            "int A::g(int n,\n         int n) { return n; }\nint main() { return 0; }",
            3,
        ),
    ],
)
def test_parameter_diagnostics_point_at_the_parameter(toolchain, text, line):
    with pytest.raises(CompileError) as exc_info:
        toolchain.compile(text)
    (duplicate,) = [d for d in exc_info.value.diagnostics if d.message.startswith("parameter ")]
    assert duplicate.code is Code.E_DUPLICATE_DECL
    assert duplicate.span.line == line
