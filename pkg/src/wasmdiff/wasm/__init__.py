from .binary import decode_module, encode_module, encode_instructions
from .errors import EncodingOverflow, MalformedBinary, UnsupportedProposal, WasmError
from .opcodes import (
    ConstraintKind,
    Group,
    InstructionMeta,
    UnknownOpcode,
    all_opcodes,
    instruction_meta,
)
from .types import FuncType, Instruction, StackType, ValType, WasmModule
from .validate import Verdict, Violation, validate_module

__all__ = [
    "ConstraintKind",
    "EncodingOverflow",
    "FuncType",
    "Group",
    "Instruction",
    "InstructionMeta",
    "MalformedBinary",
    "StackType",
    "UnknownOpcode",
    "UnsupportedProposal",
    "ValType",
    "Verdict",
    "Violation",
    "WasmError",
    "WasmModule",
    "all_opcodes",
    "decode_module",
    "encode_instructions",
    "encode_module",
    "instruction_meta",
    "validate_module",
]
