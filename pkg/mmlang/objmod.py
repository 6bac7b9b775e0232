"""
Binary container for object modules and linked program images.

Layout: 4-byte magic, u16 format version, u32 payload length, 32-byte SHA-256
of the payload, then the payload itself, a canonical JSON rendering of the
pydantic model. Writing a freshly read file gives back identical bytes.
"""

import hashlib
import struct
from pathlib import Path
from typing import TypeVar, Union

from pydantic import BaseModel, ValidationError

from mmlang.models.errors import (
    BadMagic,
    ChecksumMismatch,
    MalformedModule,
    TruncatedFile,
    VersionMismatch,
)
from mmlang.models.program import FORMAT_VERSION, LinkedProgram, ObjectModule
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)

MODULE_MAGIC = b"OOM\0"
PROGRAM_MAGIC = b"OOL1"
_HEADER = struct.Struct("<4sHI32s")

M = TypeVar("M", bound=BaseModel)


def _pack(magic: bytes, model: BaseModel) -> bytes:
    payload = model.model_dump_json().encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return _HEADER.pack(magic, FORMAT_VERSION, len(payload), digest) + payload


def _unpack(data: bytes, magic: bytes, model_type: type[M]) -> M:
    if len(data) < _HEADER.size:
        if not magic.startswith(data[: len(magic)]):
            raise BadMagic(f"not a {model_type.__name__} file")
        raise TruncatedFile(f"file is {len(data)} bytes, shorter than its header")
    found_magic, version, length, digest = _HEADER.unpack_from(data)
    if found_magic != magic:
        raise BadMagic(f"expected magic {magic!r}, found {found_magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"format version {version} is not supported (expected {FORMAT_VERSION})"
        )
    payload = data[_HEADER.size :]
    if len(payload) < length:
        raise TruncatedFile(f"payload is {len(payload)} bytes, header announces {length}")
    payload = payload[:length]
    if hashlib.sha256(payload).digest() != digest:
        raise ChecksumMismatch("payload checksum does not match")
    try:
        return model_type.model_validate_json(payload)
    except ValidationError as exc:
        raise MalformedModule(
            f"invalid {model_type.__name__}: {exc.error_count()} error(s)"
        ) from exc


def serialize(module: ObjectModule) -> bytes:
    return _pack(MODULE_MAGIC, module.sorted())


def deserialize(data: bytes) -> ObjectModule:
    """
    Decode an object module.

    Raises:
        BadMagic, VersionMismatch, TruncatedFile, ChecksumMismatch, MalformedModule
    """
    return _unpack(data, MODULE_MAGIC, ObjectModule)


def serialize_program(program: LinkedProgram) -> bytes:
    return _pack(PROGRAM_MAGIC, program)


def deserialize_program(data: bytes) -> LinkedProgram:
    return _unpack(data, PROGRAM_MAGIC, LinkedProgram)


def write_module(path: Union[str, Path], module: ObjectModule) -> None:
    Path(path).write_bytes(serialize(module))
    logger.debug(f"Wrote object module {path}")


def read_module(path: Union[str, Path]) -> ObjectModule:
    return deserialize(Path(path).read_bytes())


def write_program(path: Union[str, Path], program: LinkedProgram) -> None:
    Path(path).write_bytes(serialize_program(program))
    logger.debug(f"Wrote linked program {path}")


def read_program(path: Union[str, Path]) -> LinkedProgram:
    return deserialize_program(Path(path).read_bytes())


def strip_bodies(module: ObjectModule) -> ObjectModule:
    """Interface-only copy: every body removed, `main` dropped."""
    return module.model_copy(
        update={
            "specializations": [
                s.model_copy(update={"body": None}) for s in module.specializations
            ],
            "functions": [
                f.model_copy(update={"body": None}) for f in module.functions if f.symbol != "main"
            ],
            "has_main": False,
        }
    )


def dump_module(module: ObjectModule) -> str:
    """Human-readable listing of an object module's tables."""
    module = module.sorted()
    lines = [f"module {module.name} (format {module.format_version})"]
    lines.append(f"main: {'yes' if module.has_main else 'no'}")
    lines.append("classes:")
    for cls in module.classes:
        parents = ", ".join(
            ("virtual " if p.is_virtual else "") + p.name for p in cls.parents
        )
        fields = ", ".join(f"{f.type} {f.name}" for f in cls.fields)
        lines.append(f"  {cls.name}" + (f" : {parents}" if parents else "") + f" {{{fields}}}")
        for m in cls.methods:
            params = ", ".join(str(p) for p in m.params)
            prefix = "virtual " if m.is_virtual else ""
            lines.append(f"    {prefix}{m.return_type} {m.name}({params})")
    lines.append("specializations:")
    for spec in module.specializations:
        tag = "defined" if spec.body is not None else "declared"
        lines.append(f"  {spec.key} {spec.display()} [{tag}]")
    lines.append("functions:")
    for fn in module.functions:
        tag = "defined" if fn.body is not None else "declared"
        lines.append(f"  {fn.display()} [{tag}]")
    if module.warnings:
        lines.append("warnings:")
        lines.extend(f"  {w.format()}" for w in module.warnings)
    return "\n".join(lines) + "\n"
