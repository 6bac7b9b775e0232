"""
Frontend of the mmlang toolchain: parsing, printing, desugaring, headers.
"""

from mmlang.frontend.ast import Ast
from mmlang.frontend.desugar import desugar_members
from mmlang.frontend.includes import (
    CompilationUnit,
    FileSystemReader,
    MemoryReader,
    load_unit,
)
from mmlang.frontend.parser import parse
from mmlang.frontend.printer import format_ast

__all__ = [
    "Ast",
    "CompilationUnit",
    "FileSystemReader",
    "MemoryReader",
    "desugar_members",
    "format_ast",
    "load_unit",
    "parse",
]
