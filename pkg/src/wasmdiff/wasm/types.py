"""Intermediate representation of a decoded WebAssembly module."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any


class ValType(str, enum.Enum):
    I32 = "i32"
    I64 = "i64"
    F32 = "f32"
    F64 = "f64"
    V128 = "v128"
    FUNCREF = "funcref"
    EXTERNREF = "externref"
    # Only ever appears inside stack-type templates.
    WILDCARD = "t"

    def __str__(self) -> str:
        return self.value

    @property
    def is_ref(self) -> bool:
        return self in (ValType.FUNCREF, ValType.EXTERNREF)

    @property
    def is_num(self) -> bool:
        return self in (ValType.I32, ValType.I64, ValType.F32, ValType.F64)


VALTYPE_BYTES: dict[int, ValType] = {
    0x7F: ValType.I32,
    0x7E: ValType.I64,
    0x7D: ValType.F32,
    0x7C: ValType.F64,
    0x7B: ValType.V128,
    0x70: ValType.FUNCREF,
    0x6F: ValType.EXTERNREF,
}
BYTE_OF_VALTYPE: dict[ValType, int] = {v: k for k, v in VALTYPE_BYTES.items()}

# The five value types the generator flattens locals and globals onto.
PRIMARY_TYPES: tuple[ValType, ...] = (
    ValType.I32,
    ValType.I64,
    ValType.F32,
    ValType.F64,
    ValType.V128,
)
TYPE_SLOT: dict[ValType, int] = {t: i for i, t in enumerate(PRIMARY_TYPES)}


@dataclass(frozen=True)
class StackType:
    """Operand-stack signature ``[params] -> [results]``.

    ``variadic`` marks templates such as ``call`` whose arity is only known
    once the instruction is bound to a module (``[t*] -> [t*]``).
    """

    params: tuple[ValType, ...] = ()
    results: tuple[ValType, ...] = ()
    variadic: bool = False

    @property
    def concrete(self) -> bool:
        if self.variadic:
            return False
        return ValType.WILDCARD not in self.params + self.results

    def __str__(self) -> str:
        p = ",".join(t.value for t in self.params)
        r = ",".join(t.value for t in self.results)
        star = "*" if self.variadic else ""
        return f"[{p}{star}]->[{r}{star}]"


# Function types are plain concrete stack types.
FuncType = StackType


@dataclass(frozen=True)
class Instruction:
    opcode: str
    immediates: tuple[Any, ...] = ()
    # Offset from the start of the function's code entry; not part of identity.
    offset: int = field(default=-1, compare=False)

    def with_imm(self, *immediates: Any) -> Instruction:
        return Instruction(self.opcode, tuple(immediates), self.offset)

    def __repr__(self) -> str:
        if not self.immediates:
            return self.opcode
        return f"{self.opcode} {' '.join(map(_fmt_imm, self.immediates))}"


def _fmt_imm(value: Any) -> str:
    if isinstance(value, bytes):
        return "0x" + value.hex()
    return repr(value) if isinstance(value, (tuple, list)) else str(value)


@dataclass(frozen=True)
class Limits:
    min: int
    max: int | None = None


@dataclass(frozen=True)
class TableType:
    elem_type: ValType
    limits: Limits


@dataclass(frozen=True)
class GlobalType:
    valtype: ValType
    mutable: bool


@dataclass(frozen=True)
class Import:
    module: str
    name: str
    kind: str  # "func" | "table" | "memory" | "global"
    desc: Any  # type index | TableType | Limits | GlobalType


@dataclass(frozen=True)
class Global:
    type: GlobalType
    init: tuple[Instruction, ...]


@dataclass(frozen=True)
class Export:
    name: str
    kind: str
    index: int


@dataclass(frozen=True)
class ElementSegment:
    """One element segment.

    ``flags`` is the 0..7 encoding variant; it is kept so re-encoding picks
    the same variant. ``init`` holds function indices for the index-list
    variants and constant expressions (tuples of instructions) otherwise.
    """

    flags: int
    mode: str  # "active" | "passive" | "declarative"
    elem_type: ValType
    init: tuple[Any, ...]
    table: int = 0
    offset: tuple[Instruction, ...] | None = None

    @property
    def uses_exprs(self) -> bool:
        return bool(self.flags & 0x4)


@dataclass(frozen=True)
class Code:
    locals: tuple[tuple[int, ValType], ...]
    body: tuple[Instruction, ...]

    def local_types(self) -> list[ValType]:
        out: list[ValType] = []
        for count, t in self.locals:
            out.extend([t] * count)
        return out


@dataclass(frozen=True)
class DataSegment:
    flags: int
    mode: str  # "active" | "passive"
    data: bytes
    memory: int = 0
    offset: tuple[Instruction, ...] | None = None


@dataclass(frozen=True)
class CustomSection:
    name: str
    data: bytes
    # Id of the last non-custom section emitted before this one (0 = header).
    after: int = 0


@dataclass
class WasmModule:
    types: list[FuncType] = field(default_factory=list)
    imports: list[Import] = field(default_factory=list)
    functions: list[int] = field(default_factory=list)
    tables: list[TableType] = field(default_factory=list)
    memories: list[Limits] = field(default_factory=list)
    globals: list[Global] = field(default_factory=list)
    exports: list[Export] = field(default_factory=list)
    start: int | None = None
    elements: list[ElementSegment] = field(default_factory=list)
    codes: list[Code] = field(default_factory=list)
    datas: list[DataSegment] = field(default_factory=list)
    data_count: int | None = None
    customs: list[CustomSection] = field(default_factory=list)

    # -- index spaces -------------------------------------------------------

    def imported(self, kind: str) -> list[Import]:
        return [imp for imp in self.imports if imp.kind == kind]

    @property
    def num_imported_funcs(self) -> int:
        return sum(1 for imp in self.imports if imp.kind == "func")

    def func_type_indices(self) -> list[int]:
        return [imp.desc for imp in self.imported("func")] + list(self.functions)

    def func_type(self, funcidx: int) -> FuncType:
        return self.types[self.func_type_indices()[funcidx]]

    def all_tables(self) -> list[TableType]:
        return [imp.desc for imp in self.imported("table")] + list(self.tables)

    def all_memories(self) -> list[Limits]:
        return [imp.desc for imp in self.imported("memory")] + list(self.memories)

    def all_global_types(self) -> list[GlobalType]:
        return [imp.desc for imp in self.imported("global")] + [g.type for g in self.globals]

    def type_index(self, sig: FuncType, add: bool = True) -> int:
        """Return the index of ``sig`` in the type section, appending it if absent."""
        for i, t in enumerate(self.types):
            if t == sig:
                return i
        if not add:
            raise KeyError(sig)
        self.types.append(StackType(tuple(sig.params), tuple(sig.results)))
        return len(self.types) - 1

    def export_of(self, name: str) -> Export | None:
        for exp in self.exports:
            if exp.name == name:
                return exp
        return None
