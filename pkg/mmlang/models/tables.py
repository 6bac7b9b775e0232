"""
Runtime metadata and dispatch structures produced by the pre-linker.
"""

from typing import Optional

from pydantic import BaseModel, Field

from mmlang.models.types import TypeRef


class RTAncestor(BaseModel):
    type_id: int
    offset: int


class RTTable(BaseModel):
    """Per-subobject runtime metadata.

    `host_id` is the class of the complete object the table belongs to.
    Ancestor offsets are measured from the start of the complete object; only
    unambiguous ancestors are listed.
    """

    type_id: int
    host_id: int
    size: int
    subobject_offset: int = 0
    ancestors: list[RTAncestor] = Field(default_factory=list)

    def ancestor_offset(self, type_id: int) -> Optional[int]:
        for anc in self.ancestors:
            if anc.type_id == type_id:
                return anc.offset
        return None


class MatrixEntry(BaseModel):
    """Selected specialization (None marks a TRAP) and per-position offsets.

    An offset normally runs from the pole subobject to the parameter's
    subobject. When that step enters a virtual base of the pole, `anchors`
    names the base and the offset is measured from the base's start instead.
    """

    spec: Optional[int] = None
    offsets: tuple[int, ...] = ()
    anchors: tuple[Optional[str], ...] = ()

    def anchor(self, position: int) -> Optional[str]:
        return self.anchors[position] if self.anchors else None

    @property
    def is_trap(self) -> bool:
        return self.spec is None


class DispatchStructures(BaseModel):
    """Compressed selection and realignment tables of one multimethod family.

    Vectors are indexed by dispatch-type id; a `None` pole means the type can
    never reach that position. The matrix is stored flat in row-major order
    over the pole indices of each position.
    """

    key: str
    name: str
    dispatch_positions: tuple[int, ...] = ()
    poles: list[list[TypeRef]] = Field(default_factory=list)
    pole_vectors: list[list[Optional[int]]] = Field(default_factory=list)
    realign_vectors: list[list[Optional[int]]] = Field(default_factory=list)
    entries: list[MatrixEntry] = Field(default_factory=list)

    @property
    def extents(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.poles)

    def flat_index(self, pole_ids: tuple[int, ...]) -> int:
        index = 0
        for pole, extent in zip(pole_ids, self.extents):
            index = index * extent + pole
        return index

    def entry(self, pole_ids: tuple[int, ...]) -> MatrixEntry:
        return self.entries[self.flat_index(pole_ids)]
