import hashlib
import struct

import pytest

from mmlang.models.errors import (
    BadMagic,
    ChecksumMismatch,
    MalformedModule,
    TruncatedFile,
    VersionMismatch,
)
from mmlang.models.program import FORMAT_VERSION
from mmlang.objmod import (
    MODULE_MAGIC,
    deserialize,
    deserialize_program,
    dump_module,
    read_module,
    read_program,
    serialize,
    serialize_program,
    strip_bodies,
    write_module,
    write_program,
)

HEADER_SIZE = 42


@pytest.fixture
def module(toolchain):
    return toolchain.compile_fixture("return_realign.ool")[0]


def test_module_survives_a_round_trip(module):
    data = serialize(module)
    decoded = deserialize(data)
    assert decoded == module.sorted()
    assert serialize(decoded) == data


def test_serialization_ignores_table_order(module):
    shuffled = module.model_copy(
        update={
            "specializations": list(reversed(module.specializations)),
            "functions": list(reversed(module.functions)),
        }
    )
    assert serialize(shuffled) == serialize(module)


def test_program_round_trip(toolchain, tmp_path):
    program = toolchain.link_fixtures("virtual_anchor.ool")
    path = tmp_path / "anchor.ool1"
    write_program(path, program)
    assert read_program(path) == program
    assert serialize_program(read_program(path)) == path.read_bytes()


def test_files_on_disk(module, tmp_path):
    path = tmp_path / "realign.oom"
    write_module(path, module)
    assert read_module(path) == module.sorted()


def test_bad_magic(module):
    data = serialize(module)
    with pytest.raises(BadMagic):
        deserialize(b"XXXX" + data[4:])
    with pytest.raises(BadMagic):
        deserialize_program(data)
    with pytest.raises(BadMagic):
        deserialize(b"ZZ")


def test_version_mismatch(module):
    data = bytearray(serialize(module))
    data[4:6] = struct.pack("<H", FORMAT_VERSION + 1)
    with pytest.raises(VersionMismatch):
        deserialize(bytes(data))


@pytest.mark.parametrize("keep", [6, HEADER_SIZE - 1, HEADER_SIZE + 10])
def test_truncated(module, keep):
    with pytest.raises(TruncatedFile):
        deserialize(serialize(module)[:keep])


def test_checksum_mismatch(module):
    data = bytearray(serialize(module))
    data[-2] ^= 0x01
    with pytest.raises(ChecksumMismatch):
        deserialize(bytes(data))


def test_malformed_payload():
    payload = b'{"classes": 5}'
    header = struct.pack(
        "<4sHI32s", MODULE_MAGIC, FORMAT_VERSION, len(payload), hashlib.sha256(payload).digest()
    )
    with pytest.raises(MalformedModule):
        deserialize(header + payload)


def test_strip_bodies(module):
    stripped = strip_bodies(module)
    assert not stripped.has_main
    assert "main" not in {f.symbol for f in stripped.functions}
    assert all(f.body is None for f in stripped.functions)
    assert all(s.body is None for s in stripped.specializations)
    assert [s.short() for s in stripped.specializations] == [
        s.short() for s in module.specializations
    ]


def test_dump_module(toolchain):
    module, _ = toolchain.compile_fixture("return_constraint.ool")
    text = dump_module(module)
    assert text.startswith("module return_constraint.ool (format 1)\nmain: yes\n")
    assert "  B : A {int b}\n" in text
    assert "  @m(*) bool @m(B x) [defined]\n" in text
    assert "  int main() [defined]\n" in text
    assert "warnings:\n  warning W_RETURN_CONSTRAINT return_constraint.ool:" in text
