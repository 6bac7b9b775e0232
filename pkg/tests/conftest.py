"""
Shared fixtures: in-memory compilation, linking and running, plus the random
hierarchy and family generators used by the randomized suites.
"""

import io
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pytest

from mmlang.frontend import MemoryReader
from mmlang.hierarchy import build
from mmlang.models.errors import MixedVirtuality
from mmlang.models.ir import Specialization
from mmlang.models.program import LinkedProgram, ObjectModule
from mmlang.models.types import ClassEntry, FieldEntry, ParamEntry, ParentEntry, TypeRef
from mmlang.prelink import link
from mmlang.runtime import Interpreter
from mmlang.typecheck import compile_source, family_key
from mmlang.utils.config import Settings

FIXTURES = Path(__file__).parent / "fixtures"


@dataclass
class RunResult:
    exit_code: int
    stdout: str
    trace: str


class Toolchain:
    """Compiles fixture files or inline text without touching the disk."""

    def __init__(self):
        self.settings = Settings()

    def sources(self, *names: str) -> dict[str, str]:
        """Fixture files by name, with every header of the fixture directory."""
        found = {p.name: p.read_text() for p in FIXTURES.glob("*.oolh")}
        found.update({name: (FIXTURES / name).read_text() for name in names})
        return found

    def compile(
        self, text: str, file_name: str = "main.ool", headers: Optional[dict] = None, **kw
    ) -> tuple[ObjectModule, list]:
        reader = MemoryReader({file_name: text, **(headers or {})})
        return compile_source(file_name, text, reader, self.settings, **kw)

    def compile_fixture(self, name: str, **kw) -> tuple[ObjectModule, list]:
        sources = self.sources(name)
        return compile_source(name, sources[name], MemoryReader(sources), self.settings, **kw)

    def link_fixtures(self, *names: str) -> LinkedProgram:
        return link([self.compile_fixture(name)[0] for name in names])

    def run(self, program: LinkedProgram, **kw) -> RunResult:
        out, trace = io.StringIO(), io.StringIO()
        code = Interpreter(program, out=out, trace=trace, **kw).run()
        return RunResult(code, out.getvalue(), trace.getvalue())

    def run_text(self, text: str, **kw) -> RunResult:
        module, _ = self.compile(text)
        return self.run(link([module]), **kw)

    def run_fixtures(self, *names: str, **kw) -> RunResult:
        return self.run(self.link_fixtures(*names), **kw)


@pytest.fixture
def toolchain() -> Toolchain:
    return Toolchain()


@pytest.fixture
def fixture_dir() -> Path:
    return FIXTURES


# ============================================================================
# RANDOM GENERATORS
# ============================================================================


def random_classes(rng: random.Random, max_classes: int = 6) -> list[ClassEntry]:
    """
    A random acyclic hierarchy where every class owns one int field named
    after it. Each inheritance edge is virtual or not on its own draw; a
    hierarchy holding some ancestor both ways is drawn again.
    """
    while True:
        names = [f"C{i}" for i in range(rng.randint(1, max_classes))]
        classes = []
        for i, name in enumerate(names):
            parents = rng.sample(names[:i], k=rng.randint(0, min(2, i)))
            classes.append(
                ClassEntry(
                    name=name,
                    parents=tuple(
                        ParentEntry(name=p, is_virtual=rng.random() < 0.3) for p in parents
                    ),
                    fields=(FieldEntry(name=f"f_{name}", type="int"),),
                )
            )
        try:
            build(classes)
        except MixedVirtuality:
            continue
        return classes


def random_family(
    rng: random.Random, classes: list[ClassEntry], arity: int, count: int
) -> list[Specialization]:
    """Up to `count` specializations of `@m` with pairwise distinct parameter types."""
    names = [c.name for c in classes]
    seen: set[tuple[TypeRef, ...]] = set()
    specs = []
    for _ in range(count * 4):
        if len(specs) == count:
            break
        types = tuple(
            TypeRef(name=rng.choice(names), is_const=rng.random() < 0.2) for _ in range(arity)
        )
        if types in seen:
            continue
        seen.add(types)
        specs.append(
            Specialization(
                key=family_key("@m", types),
                name="@m",
                params=tuple(ParamEntry(name=f"p{i}", type=t) for i, t in enumerate(types)),
                return_type=TypeRef(name="int"),
                dispatch_positions=tuple(range(arity)),
            )
        )
    return specs


@pytest.fixture
def make_classes():
    return random_classes


@pytest.fixture
def make_family():
    return random_family
