"""
Models module exports.
"""

from mmlang.models.diagnostics import Code, Diagnostic, Severity, Span
from mmlang.models.errors import (
    CompileError,
    LinkError,
    ObjectFormatError,
    RuntimeFault,
    ToolchainError,
    function_not_found_error,
    internal_error,
    invalid_params_error,
)
from mmlang.models.program import LinkedProgram, ObjectModule
from mmlang.models.responses import CompileResponse, DumpResponse, RunResponse
from mmlang.models.types import TypeRef

__all__ = [
    # Diagnostics
    "Code",
    "Diagnostic",
    "Severity",
    "Span",
    # Errors
    "CompileError",
    "LinkError",
    "ObjectFormatError",
    "RuntimeFault",
    "ToolchainError",
    "function_not_found_error",
    "internal_error",
    "invalid_params_error",
    # Program images
    "LinkedProgram",
    "ObjectModule",
    # Responses
    "CompileResponse",
    "DumpResponse",
    "RunResponse",
    # Types
    "TypeRef",
]
