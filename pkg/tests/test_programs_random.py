"""
Randomized end-to-end runs: generated sources are compiled, linked and run,
and the exit code must name the specialization the oracle selects.

Each call goes through a forwarding function whose parameters are passed by
value or by reference at random. The forwarder checks the dynamic class of
every parameter, dispatches, then writes every parameter; main reads the
fields back to tell copies from references.
"""

import random

import pytest

from mmlang.models.diagnostics import Code
from mmlang.models.errors import LinkError
from mmlang.oracle import AMBIGUOUS, Oracle
from mmlang.prelink import link
from mmlang.runtime import CallEvent, DispatchEvent

SEEDS = range(200)

WRONG_DYNAMIC_CLASS = 251
WRONG_FIELD = 252


def _class_source(cls) -> str:
    parents = ", ".join(
        ("virtual public " if p.is_virtual else "public ") + p.name for p in cls.parents
    )
    head = f"class {cls.name}" + (f" : {parents}" if parents else "")
    return f"{head} {{ int f_{cls.name}; }};"


def _spec_source(index, spec) -> str:
    params = ", ".join(
        ("const " if p.type.is_const else "") + f"{p.type.name} {p.name}" for p in spec.params
    )
    reads = " + ".join(f"{p.name}.f_{p.type.name}" for p in spec.params)
    return f"int @m({params}) {{ return {(index + 1) * 20} + {reads}; }}"


def _accessors(cls) -> list[str]:
    n = cls.name
    return [
        f"void set_{n}({n} &r, int v) {{ r.f_{n} = v; }}",
        f"int get_{n}({n} &r) {{ return r.f_{n}; }}",
        f"int @id({n} x) {{ return {n[1:]}; }}",
    ]


def _forwarder(args, winner, by_ref) -> str:
    params = ", ".join(
        f"{p.type.name} {'&' if ref else ''}p{i}"
        for i, (p, ref) in enumerate(zip(winner.params, by_ref))
    )
    body = [
        f"if (@id(p{i}) != {t.name[1:]}) {{ return {WRONG_DYNAMIC_CLASS}; }}"
        for i, t in enumerate(args)
    ]
    names = ", ".join(f"p{i}" for i in range(len(args)))
    body.append(f"int r = @m({names});")
    body.extend(f"set_{p.type.name}(p{i}, {100 + i});" for i, p in enumerate(winner.params))
    body.append("return r;")
    return f"int forward({params}) {{ " + " ".join(body) + " }"


def _program(classes, specs, call):
    lines = [_class_source(c) for c in classes]
    for c in classes:
        lines.extend(_accessors(c))
    lines.extend(_spec_source(i, s) for i, s in enumerate(specs))
    if call is None:
        lines.append("int main() { return 0; }")
        return "\n".join(lines) + "\n"

    args, winner, by_ref = call
    lines.append(_forwarder(args, winner, by_ref))
    body = [f"{t.name} o{i};" for i, t in enumerate(args)]
    body.extend(f"set_{p.type.name}(o{i}, {3 + 2 * i});" for i, p in enumerate(winner.params))
    names = ", ".join(f"o{i}" for i in range(len(args)))
    body.append(f"int r = forward({names});")
    for i, (p, ref) in enumerate(zip(winner.params, by_ref)):
        seen = 100 + i if ref else 3 + 2 * i
        body.append(f"if (get_{p.type.name}(o{i}) != {seen}) {{ return {WRONG_FIELD}; }}")
    body.append("return r;")
    lines.append("int main() { " + " ".join(body) + " }")
    return "\n".join(lines) + "\n"


def _assert_calls_balanced(events):
    open_calls = []
    for event in events:
        if not isinstance(event, CallEvent):
            continue
        if event.entering:
            open_calls.append(event)
        else:
            entered = open_calls.pop()
            assert entered.symbol == event.symbol
            assert entered.secondary_depth == event.secondary_depth
    assert open_calls == []


@pytest.mark.parametrize("seed", SEEDS)
def test_generated_programs(seed, toolchain, make_classes, make_family):
    rng = random.Random(seed)
    classes = make_classes(rng, max_classes=5)
    arity = rng.randint(1, 2)
    specs = make_family(rng, classes, arity, rng.randint(1, 4))
    oracle = Oracle(classes)
    table = oracle.full_table(specs)

    callable_tuples = sorted(
        (
            args
            for args, v in table.items()
            if isinstance(v, int) and not any(t.is_const for t in args)
        ),
        key=lambda args: tuple(map(str, args)),
    )
    call = None
    if callable_tuples:
        args = rng.choice(callable_tuples)
        by_ref = tuple(rng.random() < 0.5 for _ in args)
        call = (args, specs[table[args]], by_ref)
    source = _program(classes, specs, call)

    module, _ = toolchain.compile(source, file_name=f"gen{seed}.ool")
    should_fail = any(v is AMBIGUOUS for v in table.values()) or any(
        oracle.blocked_types(specs, i) for i in range(arity)
    )
    if should_fail:
        with pytest.raises(LinkError) as exc_info:
            link([module])
        codes = {d.code for d in exc_info.value.diagnostics}
        assert codes <= {Code.E_LINK_AMBIGUOUS, Code.E_AMBIG_POLE}, source
        return

    events = []
    result = toolchain.run(link([module]), observer=events.append)
    _assert_calls_balanced(events)
    if call is None:
        assert result.exit_code == 0
        return

    args, winner, _ = call
    expected = (table[args] + 1) * 20 + sum(3 + 2 * i for i in range(arity))
    assert result.exit_code == expected, source
    dispatched = [e.spec for e in events if isinstance(e, DispatchEvent) and e.key.startswith("@m")]
    assert dispatched == [winner.short()], source
