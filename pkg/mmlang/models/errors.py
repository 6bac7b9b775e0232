"""
Exceptions raised by the toolchain, and error-dict helpers for the tool server.
"""

from typing import Any

from mmlang.models.diagnostics import Diagnostic


class ToolchainError(Exception):
    """Base class for every toolchain failure."""


class DiagnosticsError(ToolchainError):
    """A failure that carries a list of diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = sorted(diagnostics, key=Diagnostic.sort_key)
        first = self.diagnostics[0].format() if self.diagnostics else "no diagnostics"
        super().__init__(f"{len(self.diagnostics)} diagnostic(s), first: {first}")


class ParseErrors(DiagnosticsError):
    """Syntax errors collected while parsing one file."""


class CompileError(DiagnosticsError):
    """Phase-1 errors; no object module is emitted."""


class LinkError(DiagnosticsError):
    """Pre-link consistency checks failed."""


# ============================================================================
# HIERARCHY
# ============================================================================


class HierarchyError(ToolchainError):
    """The class graph cannot be laid out."""

    def __init__(self, message: str, class_name: str):
        self.class_name = class_name
        super().__init__(message)


class CyclicInheritance(HierarchyError):
    pass


class UnknownParent(HierarchyError):
    pass


class MixedVirtuality(HierarchyError):
    pass


class DuplicateClass(HierarchyError):
    pass


# ============================================================================
# OBJECT FILES
# ============================================================================


class ObjectFormatError(ToolchainError):
    """An object module or linked image cannot be read."""


class BadMagic(ObjectFormatError):
    pass


class VersionMismatch(ObjectFormatError):
    pass


class TruncatedFile(ObjectFormatError):
    pass


class ChecksumMismatch(ObjectFormatError):
    pass


class MalformedModule(ObjectFormatError):
    pass


# ============================================================================
# RUNTIME AND ORACLE
# ============================================================================


class RuntimeFault(ToolchainError):
    """The interpreter hit a condition that checked programs never reach."""


class SizeLimitExceeded(ToolchainError):
    pass


# ============================================================================
# TOOL SERVER ERROR RESPONSES
# ============================================================================


def function_not_found_error(function_name: str, available_functions: list[str]) -> dict[str, Any]:
    """
    Create an error response for a tool function that is not registered.

    Args:
        function_name: Name of the function that was not found
        available_functions: List of available function names

    Returns:
        Error dictionary
    """
    return {
        "error": "Function not found",
        "function": function_name,
        "message": f"Function '{function_name}' is not available",
        "available_functions": sorted(available_functions),
        "suggestion": "Use list_functions() to see all available functions",
    }


def invalid_params_error(message: str, operation: str) -> dict[str, Any]:
    """
    Create an error response for invalid parameters.

    Args:
        message: Error message describing the issue
        operation: Name of the operation that failed

    Returns:
        Error dictionary
    """
    return {
        "error": "Invalid parameters",
        "operation": operation,
        "message": message,
    }


def internal_error(message: str, operation: str) -> dict[str, Any]:
    """
    Create an error response for internal errors.

    Args:
        message: Error message
        operation: Name of the operation that failed

    Returns:
        Error dictionary
    """
    return {
        "error": "Internal error",
        "operation": operation,
        "message": message,
    }
