"""
Command-line driver for the mmlang toolchain.

Program output goes to stdout; diagnostics, trace lines and logs go to stderr.
Exit codes: 0 success, 1 diagnostics or unreadable inputs, 2 usage, 3 runtime
fault. `run` exits with main's value modulo 256.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional, Sequence, TypeVar

from mmlang import __version__
from mmlang.frontend import FileSystemReader, load_unit
from mmlang.hierarchy import Hierarchy, build, format_layout, unit_hierarchy
from mmlang.models.diagnostics import Diagnostic, format_diagnostics
from mmlang.models.errors import (
    CompileError,
    HierarchyError,
    LinkError,
    ObjectFormatError,
    RuntimeFault,
)
from mmlang.models.program import LinkedProgram
from mmlang.objmod import (
    dump_module,
    read_module,
    read_program,
    strip_bodies,
    write_module,
    write_program,
)
from mmlang.prelink import dump_tables, link
from mmlang.runtime import Interpreter
from mmlang.typecheck import compile_source
from mmlang.utils.config import Settings, get_settings
from mmlang.utils.logging import configure_logging, get_logger

logger = get_logger(__name__)

T = TypeVar("T")

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2
EXIT_FAULT = 3

SOURCE_SUFFIX = ".ool"
MODULE_SUFFIX = ".oom"
PROGRAM_SUFFIX = ".ool1"


class _InputError(Exception):
    """An input file is missing or cannot be decoded."""


def emit_diagnostics(diagnostics: Sequence[Diagnostic], max_errors: int) -> None:
    """Write at most `max_errors` diagnostic lines to stderr."""
    ordered = sorted(diagnostics, key=Diagnostic.sort_key)
    sys.stderr.write(format_diagnostics(ordered[:max_errors]))
    if len(ordered) > max_errors:
        sys.stderr.write(f"... {len(ordered) - max_errors} more diagnostic(s) not shown\n")


def _read_text(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as e:
        raise _InputError(f"cannot read {path}: {e.strerror}") from None


def _load_program(paths: Sequence[Path]) -> LinkedProgram:
    """A linked image, or the link of several object modules."""
    if len(paths) == 1 and paths[0].suffix == PROGRAM_SUFFIX:
        return _read_object(read_program, paths[0])
    return link([_read_object(read_module, p) for p in paths])


def _read_object(reader: Callable[[Path], T], path: Path) -> T:
    try:
        return reader(path)
    except OSError as e:
        raise _InputError(f"cannot read {path}: {e.strerror}") from None
    except ObjectFormatError as e:
        raise _InputError(f"{path}: {type(e).__name__}: {e}") from None


def _hierarchy_of(path: Path, settings: Settings) -> Hierarchy:
    if path.suffix == MODULE_SUFFIX:
        return build(_read_object(read_module, path).classes)
    if path.suffix == PROGRAM_SUFFIX:
        return build(_read_object(read_program, path).classes)
    unit = load_unit(str(path), _read_text(path), FileSystemReader(settings.include_path))
    return unit_hierarchy(unit)


# ============================================================================
# SUBCOMMANDS
# ============================================================================


def cmd_compile(args: argparse.Namespace, settings: Settings) -> int:
    source = Path(args.source)
    reader = FileSystemReader(tuple(Path(d) for d in args.include) + settings.include_path)
    try:
        module, warnings = compile_source(
            str(source), _read_text(source), reader, settings, werror=args.werror
        )
    except CompileError as e:
        emit_diagnostics(e.diagnostics, args.max_errors)
        return EXIT_DIAGNOSTICS
    emit_diagnostics(warnings, args.max_errors)

    if args.strip_bodies:
        module = strip_bodies(module)
    output = Path(args.output) if args.output else source.with_suffix(MODULE_SUFFIX)
    write_module(output, module)
    logger.info(f"Compiled {source} -> {output}")
    return EXIT_OK


def cmd_link(args: argparse.Namespace, settings: Settings) -> int:
    modules = [_read_object(read_module, Path(p)) for p in args.modules]
    try:
        program = link(modules)
    except LinkError as e:
        emit_diagnostics(e.diagnostics, args.max_errors)
        return EXIT_DIAGNOSTICS
    output = Path(args.output or Path(args.modules[0]).with_suffix(PROGRAM_SUFFIX))
    write_program(output, program)
    logger.info(f"Linked {len(modules)} module(s) -> {output}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    try:
        program = _load_program([Path(p) for p in args.inputs])
    except LinkError as e:
        emit_diagnostics(e.diagnostics, args.max_errors)
        return EXIT_DIAGNOSTICS

    interpreter = Interpreter(
        program,
        out=sys.stdout,
        trace=sys.stderr if args.trace_dispatch else None,
        max_call_depth=settings.max_call_depth,
    )
    try:
        result = interpreter.run()
    except RuntimeFault as e:
        sys.stderr.write(f"runtime fault: {e}\n")
        return EXIT_FAULT
    finally:
        sys.stdout.flush()
    return result % 256


def cmd_dump_module(args: argparse.Namespace, settings: Settings) -> int:
    sys.stdout.write(dump_module(_read_object(read_module, Path(args.module))))
    return EXIT_OK


def cmd_dump_tables(args: argparse.Namespace, settings: Settings) -> int:
    try:
        program = _load_program([Path(p) for p in args.inputs])
    except LinkError as e:
        emit_diagnostics(e.diagnostics, args.max_errors)
        return EXIT_DIAGNOSTICS
    sys.stdout.write(dump_tables(program))
    return EXIT_OK


def cmd_dump_layout(args: argparse.Namespace, settings: Settings) -> int:
    try:
        h = _hierarchy_of(Path(args.input), settings)
    except CompileError as e:
        emit_diagnostics(e.diagnostics, args.max_errors)
        return EXIT_DIAGNOSTICS
    except HierarchyError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_DIAGNOSTICS
    if args.class_name not in h.names:
        sys.stderr.write(f"error: class {args.class_name} is not declared in {args.input}\n")
        return EXIT_USAGE
    sys.stdout.write(format_layout(h, args.class_name))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, settings: Settings) -> int:
    from mmlang.server import mcp

    logger.info("Starting mmlang tool server")
    try:
        mcp.run()
    except KeyboardInterrupt:
        logger.info("Server stopped by user")
    return EXIT_OK


# ============================================================================
# ARGUMENT PARSING
# ============================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmlang",
        description="Compile, link and run programs with symmetric multimethods.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING (default), ERROR")
    common.add_argument(
        "--max-errors", type=int, help="Diagnostics printed before the rest are summarized"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser(
        "compile", parents=[common], help="Check a source file and write its object module"
    )
    p.add_argument("source", help=f"Source file ({SOURCE_SUFFIX})")
    p.add_argument("-o", "--output", help=f"Object module path (default: SOURCE{MODULE_SUFFIX})")
    p.add_argument("-I", "--include", action="append", default=[], help="Header directory")
    p.add_argument("--werror", action="store_true", help="Treat warnings as errors")
    p.add_argument("--strip-bodies", action="store_true", help="Write declarations only")
    p.set_defaults(handler=cmd_compile)

    p = sub.add_parser(
        "link", parents=[common], help="Pre-link object modules into a program image"
    )
    p.add_argument("modules", nargs="+", help=f"Object modules ({MODULE_SUFFIX})")
    p.add_argument("-o", "--output", help=f"Program image path (default: first{PROGRAM_SUFFIX})")
    p.set_defaults(handler=cmd_link)

    p = sub.add_parser(
        "run", parents=[common], help="Run a program image, or link object modules and run them"
    )
    p.add_argument("inputs", nargs="+", help=f"One {PROGRAM_SUFFIX} or several {MODULE_SUFFIX}")
    p.add_argument("--trace-dispatch", action="store_true", help="Trace dispatches to stderr")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("dump-module", parents=[common], help="Print an object module")
    p.add_argument("module")
    p.set_defaults(handler=cmd_dump_module)

    p = sub.add_parser(
        "dump-tables", parents=[common], help="Print poles, vectors and dispatch matrices"
    )
    p.add_argument("inputs", nargs="+", help=f"One {PROGRAM_SUFFIX} or several {MODULE_SUFFIX}")
    p.set_defaults(handler=cmd_dump_tables)

    p = sub.add_parser("dump-layout", parents=[common], help="Print the object layout of a class")
    p.add_argument("input", help=f"{SOURCE_SUFFIX}, {MODULE_SUFFIX} or {PROGRAM_SUFFIX}")
    p.add_argument("class_name", metavar="CLASS")
    p.set_defaults(handler=cmd_dump_layout)

    p = sub.add_parser("serve", parents=[common], help="Serve the toolchain over MCP (stdio)")
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = get_settings()
        if args.log_level:
            settings = replace(settings, log_level=args.log_level.upper())
        configure_logging(settings.log_level)
    except ValueError as e:
        sys.stderr.write(f"mmlang: {e}\n")
        return EXIT_USAGE

    if args.max_errors is None:
        args.max_errors = settings.max_errors
    elif args.max_errors <= 0:
        parser.error("--max-errors must be positive")

    try:
        return args.handler(args, settings)
    except _InputError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_DIAGNOSTICS


if __name__ == "__main__":
    sys.exit(main())
