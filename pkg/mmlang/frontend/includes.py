"""
Header inclusion.

`#include "file"` names a header that contributes declarations only. Headers
are looked up next to the including file first, then along the include path.
A header reached twice (directly, transitively or through a cycle) is read once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Optional, Protocol

from mmlang.frontend.ast import Ast
from mmlang.frontend.desugar import desugar_members
from mmlang.frontend.parser import parse
from mmlang.models.diagnostics import Code, Diagnostic, error, has_errors
from mmlang.models.errors import CompileError, ParseErrors
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)


class SourceReader(Protocol):
    def read(self, name: str, including: str) -> Optional[tuple[str, str]]:
        """Return `(resolved_name, text)` of header `name`, or None if not found."""


class FileSystemReader:
    """Reads headers from disk."""

    def __init__(self, include_path: tuple[Path, ...] = ()):
        self.include_path = tuple(include_path)

    def read(self, name: str, including: str) -> Optional[tuple[str, str]]:
        candidates = [Path(including).parent / name]
        candidates.extend(directory / name for directory in self.include_path)
        for candidate in candidates:
            if candidate.is_file():
                return str(candidate), candidate.read_text()
        return None


class MemoryReader:
    """Reads headers from an in-memory `{file name: text}` mapping."""

    def __init__(self, sources: dict[str, str]):
        self.sources = dict(sources)

    def read(self, name: str, including: str) -> Optional[tuple[str, str]]:
        sibling = str(PurePosixPath(including).parent / name)
        for candidate in (sibling, name):
            if candidate in self.sources:
                return candidate, self.sources[candidate]
        return None


@dataclass
class CompilationUnit:
    """A desugared source file plus the desugared headers it includes."""

    source: Ast
    headers: list[Ast] = field(default_factory=list)


def load_unit(file_name: str, text: str, reader: SourceReader) -> CompilationUnit:
    """
    Parse a source file and every header it reaches.

    Args:
        file_name: Name of the source file, used in spans and for relative lookup
        text: Source text
        reader: Where headers come from

    Returns:
        The compilation unit

    Raises:
        CompileError: On syntax errors, missing headers or headers with bodies
    """
    diagnostics: list[Diagnostic] = []
    try:
        source = parse(text, file_name)
    except ParseErrors as exc:
        raise CompileError(exc.diagnostics) from None

    headers: list[Ast] = []
    visited: set[str] = set()
    pending: list[tuple[Ast, object]] = [(source, inc) for inc in source.includes]
    while pending:
        owner, inc = pending.pop(0)
        found = reader.read(inc.path, owner.file_name)
        if found is None:
            diagnostics.append(error(Code.E_INCLUDE, f'cannot find header "{inc.path}"', inc.span))
            continue
        resolved, header_text = found
        if resolved in visited:
            continue
        visited.add(resolved)
        try:
            header = parse(header_text, resolved)
        except ParseErrors as exc:
            diagnostics.extend(exc.diagnostics)
            continue
        if header.has_bodies:
            diagnostics.append(
                error(
                    Code.E_HEADER_BODY,
                    f'header "{inc.path}" defines a body; headers may only declare',
                    inc.span,
                )
            )
        headers.append(header)
        pending.extend((header, nested) for nested in header.includes)

    if has_errors(diagnostics):
        raise CompileError(diagnostics)

    logger.debug(f"{file_name}: {len(headers)} header(s) included")
    return CompilationUnit(
        source=desugar_members(source),
        headers=[desugar_members(h) for h in headers],
    )
