"""
Diagnostic records shared by the compiler and the pre-linker.
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class Severity(str, Enum):
    """Diagnostic severity; an error aborts the current stage, a warning does not."""

    ERROR = "error"
    WARNING = "warning"


class Code(str, Enum):
    """Stable diagnostic codes."""

    # phase 1 errors
    E_SYNTAX = "E_SYNTAX"
    E_HEADER_BODY = "E_HEADER_BODY"
    E_INCLUDE = "E_INCLUDE"
    E_HIERARCHY = "E_HIERARCHY"
    E_DUPLICATE_DECL = "E_DUPLICATE_DECL"
    E_UNKNOWN_NAME = "E_UNKNOWN_NAME"
    E_UNKNOWN_TYPE = "E_UNKNOWN_TYPE"
    E_UNKNOWN_FIELD = "E_UNKNOWN_FIELD"
    E_AMBIGUOUS_FIELD = "E_AMBIGUOUS_FIELD"
    E_AMBIGUOUS_MEMBER = "E_AMBIGUOUS_MEMBER"
    E_TYPE_MISMATCH = "E_TYPE_MISMATCH"
    E_CONST_VIOLATION = "E_CONST_VIOLATION"
    E_NO_MATCHING_FUNCTION = "E_NO_MATCHING_FUNCTION"
    E_AMBIGUOUS_CONVERSION = "E_AMBIGUOUS_CONVERSION"
    E_NO_APPLICABLE = "E_NO_APPLICABLE"
    E_AMBIGUOUS_RETURN = "E_AMBIGUOUS_RETURN"
    E_OVERRIDE_PARAM = "E_OVERRIDE_PARAM"
    E_MISSING_RETURN = "E_MISSING_RETURN"
    # phase 1 warnings
    W_NO_MOST_SPECIFIC = "W_NO_MOST_SPECIFIC"
    W_AMBIG_SUBTYPE = "W_AMBIG_SUBTYPE"
    W_LATENT_CONFLICT = "W_LATENT_CONFLICT"
    W_RETURN_CONSTRAINT = "W_RETURN_CONSTRAINT"
    # link errors
    E_CLASS_MISMATCH = "E_CLASS_MISMATCH"
    E_SIGNATURE_MISMATCH = "E_SIGNATURE_MISMATCH"
    E_DUPLICATE_BODY = "E_DUPLICATE_BODY"
    E_MISSING_BODY = "E_MISSING_BODY"
    E_NO_MAIN = "E_NO_MAIN"
    E_MULTIPLE_MAIN = "E_MULTIPLE_MAIN"
    E_LINK_AMBIGUOUS = "E_LINK_AMBIGUOUS"
    E_RETURN_CONSTRAINT = "E_RETURN_CONSTRAINT"
    E_AMBIG_POLE = "E_AMBIG_POLE"
    E_UNRESOLVED_CALL = "E_UNRESOLVED_CALL"


class Span(BaseModel):
    """A source position; 1-based line and column, 0 when unknown."""

    model_config = ConfigDict(frozen=True)

    file: str = ""
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


LINK_SPAN = Span(file="<link>")


class Diagnostic(BaseModel):
    """One compile-time or link-time finding."""

    model_config = ConfigDict(frozen=True)

    severity: Severity
    code: Code
    message: str
    span: Span = Field(default_factory=Span)
    related: tuple[Span, ...] = ()

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def sort_key(self) -> tuple:
        return (self.span.file, self.span.line, self.span.column, self.code.value, self.message)

    def format(self) -> str:
        """Render as `severity code file:line:col message`."""
        return f"{self.severity.value} {self.code.value} {self.span} {self.message}"


def error(code: Code, message: str, span: Span | None = None, related=()) -> Diagnostic:
    return Diagnostic(
        severity=Severity.ERROR,
        code=code,
        message=message,
        span=span or Span(),
        related=tuple(related),
    )


def warning(code: Code, message: str, span: Span | None = None, related=()) -> Diagnostic:
    return Diagnostic(
        severity=Severity.WARNING,
        code=code,
        message=message,
        span=span or Span(),
        related=tuple(related),
    )


def link_error(code: Code, message: str) -> Diagnostic:
    return error(code, message, LINK_SPAN)


def has_errors(diagnostics) -> bool:
    return any(d.is_error for d in diagnostics)


def format_diagnostics(diagnostics) -> str:
    """One `severity code file:line:col message` line per diagnostic, sorted."""
    return "".join(d.format() + "\n" for d in sorted(diagnostics, key=Diagnostic.sort_key))
