"""
Pydantic models for types, class shapes and callable signatures.

These are the structural records written into object modules; the frontend
produces equivalent shapes and the hierarchy builder accepts either.
"""

from pydantic import BaseModel, ConfigDict

SCALAR_TYPES = frozenset({"int", "bool", "float"})
VOID = "void"


class TypeRef(BaseModel):
    """A static type: a scalar, `void`, or a class with a const flag.

    A class TypeRef doubles as a dispatch type (class + const flag).
    """

    model_config = ConfigDict(frozen=True)

    name: str
    is_const: bool = False

    @property
    def is_class(self) -> bool:
        return self.name not in SCALAR_TYPES and self.name != VOID

    @property
    def is_scalar(self) -> bool:
        return self.name in SCALAR_TYPES

    @property
    def is_void(self) -> bool:
        return self.name == VOID

    def with_const(self, is_const: bool) -> "TypeRef":
        return TypeRef(name=self.name, is_const=is_const)

    def __str__(self) -> str:
        return f"const {self.name}" if self.is_const else self.name


INT = TypeRef(name="int")
BOOL = TypeRef(name="bool")
FLOAT = TypeRef(name="float")
VOID_TYPE = TypeRef(name=VOID)
STRING = TypeRef(name="<string>")


class ParamEntry(BaseModel):
    """One formal parameter."""

    model_config = ConfigDict(frozen=True)

    name: str = ""
    type: TypeRef
    by_ref: bool = False

    @property
    def passes_by_value(self) -> bool:
        """Class parameter that the callee copies onto the secondary stack."""
        return self.type.is_class and not self.by_ref and not self.type.is_const

    def signature_part(self) -> tuple[str, bool, bool]:
        return (self.type.name, self.type.is_const, self.by_ref)

    def __str__(self) -> str:
        text = str(self.type) + (" &" if self.by_ref else "")
        return f"{text} {self.name}" if self.name else text


class ParentEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    is_virtual: bool = False
    is_public: bool = True


class FieldEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    type: str


class MethodEntry(BaseModel):
    """A method declared in a class body (virtual or not); bodies live elsewhere."""

    model_config = ConfigDict(frozen=True)

    name: str
    params: tuple[ParamEntry, ...] = ()
    return_type: TypeRef
    is_virtual: bool = False


class ClassEntry(BaseModel):
    """Full structural description of one class."""

    model_config = ConfigDict(frozen=True)

    name: str
    parents: tuple[ParentEntry, ...] = ()
    fields: tuple[FieldEntry, ...] = ()
    methods: tuple[MethodEntry, ...] = ()
