"""
Pydantic models returned by the tool server's toolchain functions.
"""

from pydantic import BaseModel, Field


class CompileResponse(BaseModel):
    """Outcome of compiling one in-memory source file."""

    file_name: str
    ok: bool = Field(description="True when an object module could be emitted")
    diagnostics: list[str] = Field(default_factory=list)
    classes: list[str] = Field(default_factory=list)
    specializations: list[str] = Field(default_factory=list)
    functions: list[str] = Field(default_factory=list)
    listing: str | None = Field(default=None, description="dump-module text of the module")


class RunResponse(BaseModel):
    """Outcome of compiling, linking and running a set of in-memory sources."""

    stage: str = Field(description="Last stage reached: compile, link or run")
    exit_code: int
    stdout: str = ""
    diagnostics: list[str] = Field(default_factory=list)
    fault: str | None = None
    trace: str | None = None


class DumpResponse(BaseModel):
    """A textual dump, or the diagnostics that prevented it."""

    ok: bool
    text: str = ""
    diagnostics: list[str] = Field(default_factory=list)
