"""
Object modules and linked program images.
"""

from typing import Optional

from pydantic import BaseModel, Field, PrivateAttr

from mmlang.models.diagnostics import Diagnostic
from mmlang.models.ir import FunctionEntry, Specialization
from mmlang.models.tables import DispatchStructures, RTTable
from mmlang.models.types import ClassEntry

FORMAT_VERSION = 1


class ObjectModule(BaseModel):
    """Everything the pre-linker needs from one compiled source file.

    Imported declarations are carried as body-less entries so the linker can
    check them against the modules that define them.
    """

    format_version: int = FORMAT_VERSION
    name: str = ""
    classes: list[ClassEntry] = Field(default_factory=list)
    specializations: list[Specialization] = Field(default_factory=list)
    functions: list[FunctionEntry] = Field(default_factory=list)
    has_main: bool = False
    warnings: list[Diagnostic] = Field(default_factory=list)

    def sorted(self) -> "ObjectModule":
        """Copy with every table in canonical order."""
        return self.model_copy(
            update={
                "classes": sorted(self.classes, key=lambda c: c.name),
                "specializations": sorted(
                    self.specializations, key=lambda s: s.signature_key()
                ),
                "functions": sorted(self.functions, key=lambda f: f.signature_key()),
                "warnings": sorted(self.warnings, key=Diagnostic.sort_key),
            }
        )


class LinkedProgram(BaseModel):
    """A whole program after the pre-link phase.

    Class ids are the positions in `classes` (sorted by name); specialization
    ids are positions in `specializations`.
    """

    format_version: int = FORMAT_VERSION
    classes: list[ClassEntry] = Field(default_factory=list)
    specializations: list[Specialization] = Field(default_factory=list)
    dispatch: dict[str, DispatchStructures] = Field(default_factory=dict)
    functions: dict[str, FunctionEntry] = Field(default_factory=dict)
    rttables: list[RTTable] = Field(default_factory=list)
    entry: str = "main"

    _rttable_index: Optional[dict] = PrivateAttr(default=None)
    _class_ids: Optional[dict] = PrivateAttr(default=None)

    def class_id(self, name: str) -> int:
        if self._class_ids is None:
            self._class_ids = {c.name: i for i, c in enumerate(self.classes)}
        return self._class_ids[name]

    def class_name(self, class_id: int) -> str:
        return self.classes[class_id].name

    def rttable(self, host_id: int, type_id: int, offset: int) -> Optional[RTTable]:
        """Table of the `type_id` subobject starting at `offset` in a `host_id` object."""
        if self._rttable_index is None:
            self._rttable_index = {
                (t.host_id, t.type_id, t.subobject_offset): t for t in self.rttables
            }
        return self._rttable_index.get((host_id, type_id, offset))

    def complete_table(self, host_id: int) -> RTTable:
        return self.rttable(host_id, host_id, 0)
