import json
from types import SimpleNamespace

import pytest

from mmlang.registry_builder import FUNCTION_REGISTRY, extract_function_metadata
from mmlang.server import call_function, list_functions
from mmlang.tools.toolchain import compile_program, dump_layout, dump_tables, run_program
from mmlang.utils.config import Settings
from mmlang.utils.context import ToolchainContext, get_toolchain_context


@pytest.fixture
def ctx():
    return SimpleNamespace(
        request_context=SimpleNamespace(lifespan_context=ToolchainContext(settings=Settings()))
    )


def test_context_is_required():
    with pytest.raises(ValueError, match="Toolchain context not found"):
        get_toolchain_context(SimpleNamespace())


def test_registry_describes_every_tool():
    assert set(FUNCTION_REGISTRY) == {
        "compile_program",
        "run_program",
        "dump_tables",
        "dump_layout",
    }
    params = FUNCTION_REGISTRY["compile_program"]["parameters"]
    assert "ctx" not in params
    assert params["sources"]["type"] == "object"
    assert params["werror"] == {
        "type": "boolean",
        "required": False,
        "description": "If True, warnings also prevent the module from being emitted",
        "default": False,
    }
    assert FUNCTION_REGISTRY["run_program"]["returns"]["type"] == "object"


def test_undocumented_parameter_is_rejected():
    async def tool(ctx, depth: int):
        """Does something.

        Args:
            ctx: The MCP context
        """

    with pytest.raises(ValueError, match="depth"):
        extract_function_metadata(tool)


async def test_list_functions():
    listing = await list_functions()
    assert listing["total_functions"] == 4
    assert "implementation" not in listing["available_functions"]["run_program"]


async def test_compile_program(ctx, toolchain):
    response = await compile_program(
        ctx,
        "return_constraint.ool",
        toolchain.sources("return_constraint.ool"),
        include_listing=True,
    )
    assert response.ok
    assert response.classes == ["A", "B"]
    assert response.functions == ["int main()"]
    assert response.diagnostics[0].startswith("warning W_RETURN_CONSTRAINT")
    assert response.listing.startswith("module return_constraint.ool")


async def test_compile_program_with_errors(ctx, toolchain):
    response = await compile_program(
        ctx, "override_param.ool", toolchain.sources("override_param.ool")
    )
    assert not response.ok
    assert "E_OVERRIDE_PARAM" in response.diagnostics[0]


async def test_run_program(ctx, toolchain):
    sources = toolchain.sources("latent_conflict.ool", "conflict_resolved.ool")
    response = await run_program(ctx, sources, trace_dispatch=True)
    assert (response.stage, response.exit_code, response.fault) == ("run", 5, None)
    assert response.trace.startswith("dispatch @m(*,*) dyn=(4,4) poles=(P3,P3)")


async def test_run_program_stops_at_link(ctx, toolchain):
    sources = toolchain.sources("ambiguous_left.ool", "ambiguous_right.ool")
    response = await run_program(ctx, sources)
    assert (response.stage, response.exit_code) == ("link", 1)
    assert any("E_LINK_AMBIGUOUS" in line for line in response.diagnostics)


async def test_run_program_reports_faults(ctx):
    response = await run_program(ctx, {"div.ool": "int main() { int z; return 1 / z; }"})
    assert (response.stage, response.exit_code) == ("run", 3)
    assert response.fault == "division by zero"


async def test_dumps(ctx, toolchain):
    tables = await dump_tables(ctx, toolchain.sources("pole_offsets.ool"))
    assert tables.ok
    assert "(P1,P2) -> #0 @m(B,B) offsets (0,1)" in tables.text

    layout = await dump_layout(ctx, "diamond.ool", "D", toolchain.sources("diamond.ool"))
    assert layout.text.startswith("class D size 5\n")


async def test_call_function_accepts_json(ctx):
    params = json.dumps({"sources": {"main.ool": "int main() { print(4); return 2; }"}})
    result = await call_function(ctx, "run_program", params)
    assert result["data"]["stdout"] == "4"
    assert result["data"]["exit_code"] == 2
    assert result["schema"]["model_name"] == "RunResponse"


async def test_call_function_errors(ctx):
    missing = await call_function(ctx, "format_disk")
    assert missing["error"] == "Function not found"
    assert "run_program" in missing["available_functions"]

    bad_json = await call_function(ctx, "run_program", "{not json")
    assert bad_json["error"] == "Invalid parameters"

    unknown_arg = await call_function(ctx, "run_program", {"sources": {}, "colour": "red"})
    assert unknown_arg["error"] == "Invalid parameters"

    no_sources = await call_function(ctx, "run_program", {"sources": {"a.oolh": ""}})
    assert no_sources["error"] == "Invalid parameters"

    no_class = await call_function(
        ctx,
        "dump_layout",
        {"file_name": "a.ool", "class_name": "Q", "sources": {"a.ool": "class A { int a; };"}},
    )
    assert "class Q is not declared" in no_class["message"]
