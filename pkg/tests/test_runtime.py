import pytest

from mmlang.models.errors import RuntimeFault
from mmlang.runtime import CallEvent, DispatchEvent, format_value


@pytest.mark.parametrize(
    "names, exit_code",
    [
        (("equal.ool",), 1),
        (("pole_offsets.ool",), 34),
        (("return_realign.ool",), 7),
        (("const_dispatch.ool",), 12),
        (("by_value.ool",), 2),
        (("virtual_anchor.ool",), 42),
        (("latent_conflict.ool", "conflict_resolved.ool"), 5),
    ],
)
def test_exit_codes(toolchain, names, exit_code):
    assert toolchain.run_fixtures(*names).exit_code == exit_code


def test_virtual_call_on_a_copy_keeps_the_dynamic_class(toolchain):
    result = toolchain.run_fixtures("dump_virtual.ool")
    assert result.stdout == "Point\nColorPoint\n"
    assert result.exit_code == 0


def test_trace_of_realigned_arguments(toolchain):
    trace = toolchain.run_fixtures("pole_offsets.ool").trace
    assert trace.splitlines() == [
        "dispatch @m(*,*) dyn=(2,8) poles=(P1,P2) -> #0 @m(B,B)",
        "  arg0: 0+0+0=0",
        "  arg1: 0+1+1=2",
    ]


def test_fields_are_read_through_the_realigned_reference(toolchain):
    # every field of e holds a different value; only the D subobject gives 95
    result = toolchain.run_text(
        "class A { int a; };\nclass B { int b; };\nclass C { int c; };\n"
        "class D : public A, public B { int d; };\n"
        "class E : public C, public D { int e; };\n"
        "int @m(B x, B y) { return 1; }\n"
        "int @m(D x, D y) { return x.d * 10 + y.a; }\n"
        "int main() { E e; e.a = 5; e.b = 4; e.c = 8; e.d = 9; e.e = 6; return @m(e, e); }"
    )
    assert result.exit_code == 95
    assert result.trace.splitlines()[0].endswith("-> #1 @m(D,D)")


def test_member_specialization_is_selected_for_mixed_points(toolchain):
    result = toolchain.run_fixtures("equal.ool")
    assert result.exit_code == 1
    dispatches = [line for line in result.trace.splitlines() if line.startswith("dispatch")]
    assert dispatches == [
        "dispatch @equal(*,*) dyn=(2,0) poles=(P2,P1) -> #1 @equal(Point,Point)",
        "dispatch @equal(*,*) dyn=(0,2) poles=(P1,P2) -> #1 @equal(Point,Point)",
    ]


def test_trace_through_a_virtual_base(toolchain):
    trace = toolchain.run_fixtures("virtual_anchor.ool").trace
    assert trace.splitlines() == [
        "dispatch @m(*,*) dyn=(6,8) poles=(P2,P1) -> #0 @m(A,X)",
        "  arg0: A@3+0=3",
        "  arg1: 0+0+0=0",
    ]


def test_trace_of_most_specific_selection(toolchain):
    trace = toolchain.run_fixtures("latent_conflict.ool", "conflict_resolved.ool").trace
    assert trace.splitlines()[0] == "dispatch @m(*,*) dyn=(4,4) poles=(P3,P3) -> #2 @m(C,C)"


def test_by_value_copies_are_unwound(toolchain):
    events = []
    toolchain.run_fixtures("by_value.ool", observer=events.append)
    calls = [e for e in events if isinstance(e, CallEvent)]
    assert [(e.symbol, e.entering, e.secondary_depth) for e in calls] == [
        ("main", True, 0),
        ("f", True, 0),
        ("@m", True, 1),
        ("@m", False, 1),
        ("f", False, 0),
        ("main", False, 0),
    ]
    (dispatched,) = [e for e in events if isinstance(e, DispatchEvent)]
    assert dispatched.spec == "@m(B)"


def test_by_value_writes_stay_in_the_callee(toolchain):
    result = toolchain.run_text(
        "class A { int a; };\nclass B : public A { int b; };\n"
        "void by_value(A x) { x.a = 5; }\n"
        "void by_ref(A &x) { x.a = 7; }\n"
        "int main() { B b; b.a = 1; by_value(b); int first = b.a; by_ref(b);"
        " return first * 10 + b.a; }"
    )
    assert result.exit_code == 17


def test_every_call_leaves_the_secondary_stack_as_found(toolchain):
    events = []
    toolchain.run_fixtures("return_realign.ool", observer=events.append)
    open_calls = []
    for event in events:
        if not isinstance(event, CallEvent):
            continue
        if event.entering:
            open_calls.append(event)
        else:
            entered = open_calls.pop()
            assert (entered.symbol, entered.secondary_depth) == (
                event.symbol,
                event.secondary_depth,
            )
    assert open_calls == []


def test_division_by_zero(toolchain):
    with pytest.raises(RuntimeFault, match="division by zero"):
        toolchain.run_text("int main() { int z; z = 0; return 1 / z; }")


def test_call_depth_limit(toolchain):
    with pytest.raises(RuntimeFault, match="call depth"):
        toolchain.run_text(
            "int f(int n) { return f(n + 1); }\nint main() { return f(0); }",
            max_call_depth=50,
        )


def test_integer_division_truncates(toolchain):
    result = toolchain.run_text(
        'int main() { print(-7 / 2); print(" "); print(-7 % 2); print(" "); print(7 / 2);'
        " return 0; }"
    )
    assert result.stdout == "-3 -1 3"


def test_scalar_printing(toolchain):
    result = toolchain.run_text(
        'int main() { print(true); print(" "); print(1.5); print(" "); print(2 > 3); return 0; }'
    )
    assert result.stdout == "true 1.5 false"


def test_user_print_shadows_builtin_except_for_strings(toolchain):
    result = toolchain.run_text(
        'void print(int n) { }\nint main() { print("hi"); print(3); return 0; }'
    )
    assert result.stdout == "hi"


def test_qualified_method_definition(toolchain):
    result = toolchain.run_text(
        "class A { int a; int get(); };\n"
        "int A::get() { return a; }\n"
        "int main() { A x; x.a = 9; return x.get(); }"
    )
    assert result.exit_code == 9


def test_while_loop_and_locals(toolchain):
    result = toolchain.run_text(
        "int main() { int i = 0, s = 0; while (i < 5) { s = s + i; i = i + 1; } return s; }"
    )
    assert result.exit_code == 10


def test_void_main_exits_zero(toolchain):
    assert toolchain.run_text("void main() { print(1); }").exit_code == 0


@pytest.mark.parametrize(
    "value, text", [(True, "true"), (False, "false"), (0.25, "0.25"), (-4, "-4")]
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_multimethod_without_class_parameters(toolchain):
    result = toolchain.run_text(
        "int @twice(int n) { return n * 2; }\nint main() { return @twice(4); }"
    )
    assert result.exit_code == 8
    assert result.trace == "dispatch @twice(int) dyn=() poles=() -> #0 @twice(int)\n"
