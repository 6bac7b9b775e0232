"""
Toolchain operations for the mmlang tool server.

Every function works on in-memory sources given as a `{file name: text}`
mapping; headers are looked up in the same mapping.
"""

import io

from mcp.server.fastmcp import Context

from mmlang.frontend import MemoryReader, load_unit
from mmlang.hierarchy import format_layout, unit_hierarchy
from mmlang.models.diagnostics import Diagnostic
from mmlang.models.errors import CompileError, HierarchyError, LinkError, RuntimeFault
from mmlang.models.program import ObjectModule
from mmlang.models.responses import CompileResponse, DumpResponse, RunResponse
from mmlang.objmod import dump_module
from mmlang.prelink import dump_tables as render_tables
from mmlang.prelink import link
from mmlang.runtime import Interpreter
from mmlang.typecheck import compile_source
from mmlang.utils.config import Settings
from mmlang.utils.context import get_toolchain_context
from mmlang.utils.logging import get_logger

__register_mcp_tools__ = True

logger = get_logger(__name__)

SOURCE_SUFFIX = ".ool"


def _lines(diagnostics: list[Diagnostic]) -> list[str]:
    return [d.format() for d in sorted(diagnostics, key=Diagnostic.sort_key)]


def _compile_all(
    sources: dict[str, str], settings: Settings
) -> tuple[list[ObjectModule], list[Diagnostic], bool]:
    reader = MemoryReader(sources)
    modules, diagnostics, ok = [], [], True
    for name in sorted(n for n in sources if n.endswith(SOURCE_SUFFIX)):
        try:
            module, found = compile_source(name, sources[name], reader, settings)
        except CompileError as exc:
            diagnostics.extend(exc.diagnostics)
            ok = False
            continue
        modules.append(module)
        diagnostics.extend(found)
    if not modules and ok:
        raise ValueError(f"no {SOURCE_SUFFIX} file among the sources")
    return modules, diagnostics, ok


# ============================================================================
# COMPILE AND RUN
# ============================================================================


async def compile_program(
    ctx: Context,
    file_name: str,
    sources: dict[str, str],
    werror: bool = False,
    include_listing: bool = False,
) -> CompileResponse:
    """Compile one source file to an object module and summarize it.

    Args:
        ctx: The MCP context
        file_name: Which entry of sources to compile
        sources: Mapping of file name to text; holds the source and its headers
        werror: If True, warnings also prevent the module from being emitted
        include_listing: If True, attach the dump-module listing

    Returns:
        CompileResponse with diagnostics and the module's classes, specializations and functions
    """
    tctx = get_toolchain_context(ctx)
    if file_name not in sources:
        raise ValueError(f"{file_name} is not among the sources")

    try:
        module, diagnostics = compile_source(
            file_name, sources[file_name], MemoryReader(sources), tctx.settings, werror
        )
    except CompileError as exc:
        return CompileResponse(file_name=file_name, ok=False, diagnostics=_lines(exc.diagnostics))

    return CompileResponse(
        file_name=file_name,
        ok=True,
        diagnostics=_lines(diagnostics),
        classes=[c.name for c in module.classes],
        specializations=[s.display() for s in module.specializations],
        functions=[f.display() for f in module.functions],
        listing=dump_module(module) if include_listing else None,
    )


async def run_program(
    ctx: Context,
    sources: dict[str, str],
    trace_dispatch: bool = False,
) -> RunResponse:
    """Compile every source file, link the modules and run main.

    Args:
        ctx: The MCP context
        sources: Mapping of file name to text; every .ool entry is compiled separately
        trace_dispatch: If True, return one trace block per multimethod dispatch

    Returns:
        RunResponse with the program's output and exit code, or the diagnostics of the failing stage
    """
    tctx = get_toolchain_context(ctx)
    modules, diagnostics, ok = _compile_all(sources, tctx.settings)
    if not ok:
        return RunResponse(stage="compile", exit_code=1, diagnostics=_lines(diagnostics))

    try:
        program = link(modules)
    except LinkError as exc:
        return RunResponse(
            stage="link", exit_code=1, diagnostics=_lines(diagnostics + exc.diagnostics)
        )

    out = io.StringIO()
    trace = io.StringIO() if trace_dispatch else None
    interpreter = Interpreter(
        program, out=out, trace=trace, max_call_depth=tctx.settings.max_call_depth
    )
    try:
        exit_code = interpreter.run() % 256
        fault = None
    except RuntimeFault as exc:
        logger.warning(f"Program faulted: {exc}")
        exit_code, fault = 3, str(exc)

    return RunResponse(
        stage="run",
        exit_code=exit_code,
        stdout=out.getvalue(),
        diagnostics=_lines(diagnostics),
        fault=fault,
        trace=trace.getvalue() if trace is not None else None,
    )


# ============================================================================
# DUMPS
# ============================================================================


async def dump_tables(ctx: Context, sources: dict[str, str]) -> DumpResponse:
    """Link the sources and list every family's poles, vectors and dispatch matrix.

    Args:
        ctx: The MCP context
        sources: Mapping of file name to text; every .ool entry is compiled separately

    Returns:
        DumpResponse with the table listing, or the diagnostics that stopped linking
    """
    tctx = get_toolchain_context(ctx)
    modules, diagnostics, ok = _compile_all(sources, tctx.settings)
    if not ok:
        return DumpResponse(ok=False, diagnostics=_lines(diagnostics))
    try:
        program = link(modules)
    except LinkError as exc:
        return DumpResponse(ok=False, diagnostics=_lines(diagnostics + exc.diagnostics))
    return DumpResponse(ok=True, text=render_tables(program), diagnostics=_lines(diagnostics))


async def dump_layout(
    ctx: Context, file_name: str, class_name: str, sources: dict[str, str]
) -> DumpResponse:
    """Show the slot layout of a class declared in a source file or its headers.

    Args:
        ctx: The MCP context
        file_name: Which entry of sources declares the class
        class_name: Class whose complete-object layout is shown
        sources: Mapping of file name to text

    Returns:
        DumpResponse with subobject offsets and slot owners
    """
    get_toolchain_context(ctx)
    if file_name not in sources:
        raise ValueError(f"{file_name} is not among the sources")

    try:
        unit = load_unit(file_name, sources[file_name], MemoryReader(sources))
        h = unit_hierarchy(unit)
    except CompileError as exc:
        return DumpResponse(ok=False, diagnostics=_lines(exc.diagnostics))
    except HierarchyError as exc:
        return DumpResponse(ok=False, diagnostics=[str(exc)])

    if class_name not in h.names:
        raise ValueError(f"class {class_name} is not declared in {file_name}")
    return DumpResponse(ok=True, text=format_layout(h, class_name))

