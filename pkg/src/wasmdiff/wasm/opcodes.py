"""Per-opcode metadata: binary encoding, immediates, stack-type template and
semantic-constraint template for every supported instruction."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .types import StackType, ValType

I32, I64, F32, F64, V128 = ValType.I32, ValType.I64, ValType.F32, ValType.F64, ValType.V128
FUNCREF = ValType.FUNCREF
T = ValType.WILDCARD


class Group(str, enum.Enum):
    NUMERIC = "Numeric"
    VECTOR = "Vector"
    PARAMETRIC = "Parametric"
    VARIABLE = "Variable"
    MEMORY = "Memory"
    TABLE = "Table"
    CONTROL = "Control"


class ConstraintKind(str, enum.Enum):
    NONE = "None"
    LOCAL_REF = "LocalRef"
    GLOBAL_REF = "GlobalRef"
    MEMORY_RANGE = "MemoryRange"
    TABLE_REF = "TableRef"
    DIRECT_CALL = "DirectCall"
    INDIRECT_CALL = "IndirectCall"
    BLOCK_SIG = "BlockSig"


class UnknownOpcode(KeyError):
    pass


@dataclass(frozen=True)
class InstructionMeta:
    opcode: str
    group: Group
    stack: StackType
    constraint: ConstraintKind
    code: tuple[int, ...]  # (byte,) or (prefix, subopcode)
    imm: str = "none"
    # Memory access width in bytes (loads/stores); natural alignment is log2.
    mem_bytes: int = 0
    lanes: int = 0

    @property
    def natural_align(self) -> int:
        return self.mem_bytes.bit_length() - 1

    @property
    def stackTemplate(self) -> StackType:  # noqa: N802 - mirrors the contract name
        return self.stack


_TABLE: dict[str, InstructionMeta] = {}
_BY_CODE: dict[tuple[int, ...], InstructionMeta] = {}


def _add(name, group, params, results, constraint=ConstraintKind.NONE, code=(), imm="none",
         variadic=False, mem_bytes=0, lanes=0):
    meta = InstructionMeta(
        name, group, StackType(tuple(params), tuple(results), variadic), constraint,
        tuple(code), imm, mem_bytes, lanes,
    )
    assert name not in _TABLE, name
    assert meta.code not in _BY_CODE, (name, meta.code)
    _TABLE[name] = meta
    _BY_CODE[meta.code] = meta


C, G = ConstraintKind, Group

# -- control ----------------------------------------------------------------
_add("unreachable", G.CONTROL, [], [], code=(0x00,))
_add("nop", G.CONTROL, [], [], code=(0x01,))
_add("block", G.CONTROL, [], [], C.BLOCK_SIG, (0x02,), "blocktype", variadic=True)
_add("loop", G.CONTROL, [], [], C.BLOCK_SIG, (0x03,), "blocktype", variadic=True)
_add("if", G.CONTROL, [I32], [], C.BLOCK_SIG, (0x04,), "blocktype", variadic=True)
_add("else", G.CONTROL, [], [], C.BLOCK_SIG, (0x05,))
_add("end", G.CONTROL, [], [], C.BLOCK_SIG, (0x0B,))
_add("br", G.CONTROL, [], [], C.BLOCK_SIG, (0x0C,), "label", variadic=True)
_add("br_if", G.CONTROL, [I32], [], C.BLOCK_SIG, (0x0D,), "label", variadic=True)
_add("br_table", G.CONTROL, [I32], [], C.BLOCK_SIG, (0x0E,), "br_table", variadic=True)
_add("return", G.CONTROL, [], [], C.BLOCK_SIG, (0x0F,), variadic=True)
_add("call", G.CONTROL, [], [], C.DIRECT_CALL, (0x10,), "func", variadic=True)
_add("call_indirect", G.CONTROL, [I32], [], C.INDIRECT_CALL, (0x11,), "call_indirect",
     variadic=True)

# -- parametric ---------------------------------------------------------------
_add("drop", G.PARAMETRIC, [T], [], code=(0x1A,))
_add("select", G.PARAMETRIC, [T, T, I32], [T], code=(0x1B,))
_add("select_t", G.PARAMETRIC, [T, T, I32], [T], code=(0x1C,), imm="select_t")

# -- variable -----------------------------------------------------------------
_add("local.get", G.VARIABLE, [], [T], C.LOCAL_REF, (0x20,), "local")
_add("local.set", G.VARIABLE, [T], [], C.LOCAL_REF, (0x21,), "local")
_add("local.tee", G.VARIABLE, [T], [T], C.LOCAL_REF, (0x22,), "local")
_add("global.get", G.VARIABLE, [], [T], C.GLOBAL_REF, (0x23,), "global")
_add("global.set", G.VARIABLE, [T], [], C.GLOBAL_REF, (0x24,), "global")

# -- table / reference ----------------------------------------------------------
_add("table.get", G.TABLE, [I32], [T], C.TABLE_REF, (0x25,), "table")
_add("table.set", G.TABLE, [I32, T], [], C.TABLE_REF, (0x26,), "table")
_add("table.init", G.TABLE, [I32, I32, I32], [], C.TABLE_REF, (0xFC, 12), "table_init")
_add("elem.drop", G.TABLE, [], [], C.TABLE_REF, (0xFC, 13), "elem")
_add("table.copy", G.TABLE, [I32, I32, I32], [], C.TABLE_REF, (0xFC, 14), "table_copy")
_add("table.grow", G.TABLE, [T, I32], [I32], C.TABLE_REF, (0xFC, 15), "table")
_add("table.size", G.TABLE, [], [I32], C.TABLE_REF, (0xFC, 16), "table")
_add("table.fill", G.TABLE, [I32, T, I32], [], C.TABLE_REF, (0xFC, 17), "table")
_add("ref.null", G.PARAMETRIC, [], [T], code=(0xD0,), imm="reftype")
_add("ref.is_null", G.PARAMETRIC, [T], [I32], code=(0xD1,))
_add("ref.func", G.CONTROL, [], [FUNCREF], C.DIRECT_CALL, (0xD2,), "func")

# -- memory -------------------------------------------------------------------
_LOADS = [
    ("i32.load", I32, 4), ("i64.load", I64, 8), ("f32.load", F32, 4), ("f64.load", F64, 8),
    ("i32.load8_s", I32, 1), ("i32.load8_u", I32, 1), ("i32.load16_s", I32, 2),
    ("i32.load16_u", I32, 2), ("i64.load8_s", I64, 1), ("i64.load8_u", I64, 1),
    ("i64.load16_s", I64, 2), ("i64.load16_u", I64, 2), ("i64.load32_s", I64, 4),
    ("i64.load32_u", I64, 4),
]
for _i, (_n, _t, _w) in enumerate(_LOADS):
    _add(_n, G.MEMORY, [I32], [_t], C.MEMORY_RANGE, (0x28 + _i,), "memarg", mem_bytes=_w)
_STORES = [
    ("i32.store", I32, 4), ("i64.store", I64, 8), ("f32.store", F32, 4), ("f64.store", F64, 8),
    ("i32.store8", I32, 1), ("i32.store16", I32, 2), ("i64.store8", I64, 1),
    ("i64.store16", I64, 2), ("i64.store32", I64, 4),
]
for _i, (_n, _t, _w) in enumerate(_STORES):
    _add(_n, G.MEMORY, [I32, _t], [], C.MEMORY_RANGE, (0x36 + _i,), "memarg", mem_bytes=_w)
_add("memory.size", G.MEMORY, [], [I32], C.MEMORY_RANGE, (0x3F,), "memidx")
_add("memory.grow", G.MEMORY, [I32], [I32], C.MEMORY_RANGE, (0x40,), "memidx")
_add("memory.init", G.MEMORY, [I32, I32, I32], [], C.MEMORY_RANGE, (0xFC, 8), "mem_init")
_add("data.drop", G.MEMORY, [], [], C.MEMORY_RANGE, (0xFC, 9), "data")
_add("memory.copy", G.MEMORY, [I32, I32, I32], [], C.MEMORY_RANGE, (0xFC, 10), "mem_copy")
_add("memory.fill", G.MEMORY, [I32, I32, I32], [], C.MEMORY_RANGE, (0xFC, 11), "memidx")

# -- numeric ------------------------------------------------------------------
_add("i32.const", G.NUMERIC, [], [I32], code=(0x41,), imm="i32")
_add("i64.const", G.NUMERIC, [], [I64], code=(0x42,), imm="i64")
_add("f32.const", G.NUMERIC, [], [F32], code=(0x43,), imm="f32")
_add("f64.const", G.NUMERIC, [], [F64], code=(0x44,), imm="f64")


def _seq(start: int, names: list[str], params, results, prefix: tuple[int, ...] = ()):
    for i, n in enumerate(names):
        _add(n, G.NUMERIC, params, results, code=prefix + (start + i,))


_ICMP = ["eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u"]
_FCMP = ["eq", "ne", "lt", "gt", "le", "ge"]
_IUN = ["clz", "ctz", "popcnt"]
_IBIN = ["add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u", "and", "or", "xor",
         "shl", "shr_s", "shr_u", "rotl", "rotr"]
_FUN = ["abs", "neg", "ceil", "floor", "trunc", "nearest", "sqrt"]
_FBIN = ["add", "sub", "mul", "div", "min", "max", "copysign"]

_seq(0x45, ["i32.eqz"], [I32], [I32])
_seq(0x46, [f"i32.{n}" for n in _ICMP], [I32, I32], [I32])
_seq(0x50, ["i64.eqz"], [I64], [I32])
_seq(0x51, [f"i64.{n}" for n in _ICMP], [I64, I64], [I32])
_seq(0x5B, [f"f32.{n}" for n in _FCMP], [F32, F32], [I32])
_seq(0x61, [f"f64.{n}" for n in _FCMP], [F64, F64], [I32])
_seq(0x67, [f"i32.{n}" for n in _IUN], [I32], [I32])
_seq(0x6A, [f"i32.{n}" for n in _IBIN], [I32, I32], [I32])
_seq(0x79, [f"i64.{n}" for n in _IUN], [I64], [I64])
_seq(0x7C, [f"i64.{n}" for n in _IBIN], [I64, I64], [I64])
_seq(0x8B, [f"f32.{n}" for n in _FUN], [F32], [F32])
_seq(0x92, [f"f32.{n}" for n in _FBIN], [F32, F32], [F32])
_seq(0x99, [f"f64.{n}" for n in _FUN], [F64], [F64])
_seq(0xA0, [f"f64.{n}" for n in _FBIN], [F64, F64], [F64])

_CONVERSIONS = [
    ("i32.wrap_i64", I64, I32), ("i32.trunc_f32_s", F32, I32), ("i32.trunc_f32_u", F32, I32),
    ("i32.trunc_f64_s", F64, I32), ("i32.trunc_f64_u", F64, I32),
    ("i64.extend_i32_s", I32, I64), ("i64.extend_i32_u", I32, I64),
    ("i64.trunc_f32_s", F32, I64), ("i64.trunc_f32_u", F32, I64),
    ("i64.trunc_f64_s", F64, I64), ("i64.trunc_f64_u", F64, I64),
    ("f32.convert_i32_s", I32, F32), ("f32.convert_i32_u", I32, F32),
    ("f32.convert_i64_s", I64, F32), ("f32.convert_i64_u", I64, F32),
    ("f32.demote_f64", F64, F32),
    ("f64.convert_i32_s", I32, F64), ("f64.convert_i32_u", I32, F64),
    ("f64.convert_i64_s", I64, F64), ("f64.convert_i64_u", I64, F64),
    ("f64.promote_f32", F32, F64),
    ("i32.reinterpret_f32", F32, I32), ("i64.reinterpret_f64", F64, I64),
    ("f32.reinterpret_i32", I32, F32), ("f64.reinterpret_i64", I64, F64),
    ("i32.extend8_s", I32, I32), ("i32.extend16_s", I32, I32),
    ("i64.extend8_s", I64, I64), ("i64.extend16_s", I64, I64), ("i64.extend32_s", I64, I64),
]
for _i, (_n, _a, _r) in enumerate(_CONVERSIONS):
    _add(_n, G.NUMERIC, [_a], [_r], code=(0xA7 + _i,))

_SAT = [
    ("i32.trunc_sat_f32_s", F32, I32), ("i32.trunc_sat_f32_u", F32, I32),
    ("i32.trunc_sat_f64_s", F64, I32), ("i32.trunc_sat_f64_u", F64, I32),
    ("i64.trunc_sat_f32_s", F32, I64), ("i64.trunc_sat_f32_u", F32, I64),
    ("i64.trunc_sat_f64_s", F64, I64), ("i64.trunc_sat_f64_u", F64, I64),
]
for _i, (_n, _a, _r) in enumerate(_SAT):
    _add(_n, G.NUMERIC, [_a], [_r], code=(0xFC, _i))

# -- vector (fixed-width SIMD, 0xFD prefix) -------------------------------------

_VV = ([V128], [V128])
_VVV = ([V128, V128], [V128])
_SHIFT = ([V128, I32], [V128])
_TEST = ([V128], [I32])

_SIMD: list[tuple[int, str, tuple, str, int, int]] = []


def _v(code: int, name: str, sig, imm: str = "none", mem_bytes: int = 0, lanes: int = 0):
    _SIMD.append((code, name, sig, imm, mem_bytes, lanes))


_v(0x00, "v128.load", ([I32], [V128]), "memarg", 16)
for _i, _n in enumerate(["v128.load8x8_s", "v128.load8x8_u", "v128.load16x4_s",
                         "v128.load16x4_u", "v128.load32x2_s", "v128.load32x2_u"]):
    _v(0x01 + _i, _n, ([I32], [V128]), "memarg", 8)
for _i, (_n, _w) in enumerate([("v128.load8_splat", 1), ("v128.load16_splat", 2),
                               ("v128.load32_splat", 4), ("v128.load64_splat", 8)]):
    _v(0x07 + _i, _n, ([I32], [V128]), "memarg", _w)
_v(0x0B, "v128.store", ([I32, V128], []), "memarg", 16)
_v(0x0C, "v128.const", ([], [V128]), "v128")
_v(0x0D, "i8x16.shuffle", _VVV, "shuffle")
_v(0x0E, "i8x16.swizzle", _VVV)
for _i, (_n, _t) in enumerate([("i8x16", I32), ("i16x8", I32), ("i32x4", I32),
                               ("i64x2", I64), ("f32x4", F32), ("f64x2", F64)]):
    _v(0x0F + _i, f"{_n}.splat", ([_t], [V128]))
_LANE_OPS = [
    (0x15, "i8x16.extract_lane_s", ([V128], [I32]), 16),
    (0x16, "i8x16.extract_lane_u", ([V128], [I32]), 16),
    (0x17, "i8x16.replace_lane", ([V128, I32], [V128]), 16),
    (0x18, "i16x8.extract_lane_s", ([V128], [I32]), 8),
    (0x19, "i16x8.extract_lane_u", ([V128], [I32]), 8),
    (0x1A, "i16x8.replace_lane", ([V128, I32], [V128]), 8),
    (0x1B, "i32x4.extract_lane", ([V128], [I32]), 4),
    (0x1C, "i32x4.replace_lane", ([V128, I32], [V128]), 4),
    (0x1D, "i64x2.extract_lane", ([V128], [I64]), 2),
    (0x1E, "i64x2.replace_lane", ([V128, I64], [V128]), 2),
    (0x1F, "f32x4.extract_lane", ([V128], [F32]), 4),
    (0x20, "f32x4.replace_lane", ([V128, F32], [V128]), 4),
    (0x21, "f64x2.extract_lane", ([V128], [F64]), 2),
    (0x22, "f64x2.replace_lane", ([V128, F64], [V128]), 2),
]
for _c, _n, _s, _l in _LANE_OPS:
    _v(_c, _n, _s, "lane", lanes=_l)
for _i, _n in enumerate(_ICMP):
    _v(0x23 + _i, f"i8x16.{_n}", _VVV)
    _v(0x2D + _i, f"i16x8.{_n}", _VVV)
    _v(0x37 + _i, f"i32x4.{_n}", _VVV)
for _i, _n in enumerate(_FCMP):
    _v(0x41 + _i, f"f32x4.{_n}", _VVV)
    _v(0x47 + _i, f"f64x2.{_n}", _VVV)
_v(0x4D, "v128.not", _VV)
_v(0x4E, "v128.and", _VVV)
_v(0x4F, "v128.andnot", _VVV)
_v(0x50, "v128.or", _VVV)
_v(0x51, "v128.xor", _VVV)
_v(0x52, "v128.bitselect", ([V128, V128, V128], [V128]))
_v(0x53, "v128.any_true", _TEST)
for _i, (_n, _w, _l) in enumerate([("8", 1, 16), ("16", 2, 8), ("32", 4, 4), ("64", 8, 2)]):
    _v(0x54 + _i, f"v128.load{_n}_lane", ([I32, V128], [V128]), "memarg_lane", _w, _l)
    _v(0x58 + _i, f"v128.store{_n}_lane", ([I32, V128], []), "memarg_lane", _w, _l)
_v(0x5C, "v128.load32_zero", ([I32], [V128]), "memarg", 4)
_v(0x5D, "v128.load64_zero", ([I32], [V128]), "memarg", 8)
_v(0x5E, "f32x4.demote_f64x2_zero", _VV)
_v(0x5F, "f64x2.promote_low_f32x4", _VV)
_SIMD_REST = {
    0x60: ("i8x16.abs", _VV), 0x61: ("i8x16.neg", _VV), 0x62: ("i8x16.popcnt", _VV),
    0x63: ("i8x16.all_true", _TEST), 0x64: ("i8x16.bitmask", _TEST),
    0x65: ("i8x16.narrow_i16x8_s", _VVV), 0x66: ("i8x16.narrow_i16x8_u", _VVV),
    0x67: ("f32x4.ceil", _VV), 0x68: ("f32x4.floor", _VV), 0x69: ("f32x4.trunc", _VV),
    0x6A: ("f32x4.nearest", _VV),
    0x6B: ("i8x16.shl", _SHIFT), 0x6C: ("i8x16.shr_s", _SHIFT), 0x6D: ("i8x16.shr_u", _SHIFT),
    0x6E: ("i8x16.add", _VVV), 0x6F: ("i8x16.add_sat_s", _VVV),
    0x70: ("i8x16.add_sat_u", _VVV), 0x71: ("i8x16.sub", _VVV),
    0x72: ("i8x16.sub_sat_s", _VVV), 0x73: ("i8x16.sub_sat_u", _VVV),
    0x74: ("f64x2.ceil", _VV), 0x75: ("f64x2.floor", _VV),
    0x76: ("i8x16.min_s", _VVV), 0x77: ("i8x16.min_u", _VVV),
    0x78: ("i8x16.max_s", _VVV), 0x79: ("i8x16.max_u", _VVV),
    0x7A: ("f64x2.trunc", _VV), 0x7B: ("i8x16.avgr_u", _VVV),
    0x7C: ("i16x8.extadd_pairwise_i8x16_s", _VV), 0x7D: ("i16x8.extadd_pairwise_i8x16_u", _VV),
    0x7E: ("i32x4.extadd_pairwise_i16x8_s", _VV), 0x7F: ("i32x4.extadd_pairwise_i16x8_u", _VV),
    0x80: ("i16x8.abs", _VV), 0x81: ("i16x8.neg", _VV),
    0x82: ("i16x8.q15mulr_sat_s", _VVV), 0x83: ("i16x8.all_true", _TEST),
    0x84: ("i16x8.bitmask", _TEST),
    0x85: ("i16x8.narrow_i32x4_s", _VVV), 0x86: ("i16x8.narrow_i32x4_u", _VVV),
    0x87: ("i16x8.extend_low_i8x16_s", _VV), 0x88: ("i16x8.extend_high_i8x16_s", _VV),
    0x89: ("i16x8.extend_low_i8x16_u", _VV), 0x8A: ("i16x8.extend_high_i8x16_u", _VV),
    0x8B: ("i16x8.shl", _SHIFT), 0x8C: ("i16x8.shr_s", _SHIFT), 0x8D: ("i16x8.shr_u", _SHIFT),
    0x8E: ("i16x8.add", _VVV), 0x8F: ("i16x8.add_sat_s", _VVV),
    0x90: ("i16x8.add_sat_u", _VVV), 0x91: ("i16x8.sub", _VVV),
    0x92: ("i16x8.sub_sat_s", _VVV), 0x93: ("i16x8.sub_sat_u", _VVV),
    0x94: ("f64x2.nearest", _VV), 0x95: ("i16x8.mul", _VVV),
    0x96: ("i16x8.min_s", _VVV), 0x97: ("i16x8.min_u", _VVV),
    0x98: ("i16x8.max_s", _VVV), 0x99: ("i16x8.max_u", _VVV),
    0x9B: ("i16x8.avgr_u", _VVV),
    0x9C: ("i16x8.extmul_low_i8x16_s", _VVV), 0x9D: ("i16x8.extmul_high_i8x16_s", _VVV),
    0x9E: ("i16x8.extmul_low_i8x16_u", _VVV), 0x9F: ("i16x8.extmul_high_i8x16_u", _VVV),
    0xA0: ("i32x4.abs", _VV), 0xA1: ("i32x4.neg", _VV),
    0xA3: ("i32x4.all_true", _TEST), 0xA4: ("i32x4.bitmask", _TEST),
    0xA7: ("i32x4.extend_low_i16x8_s", _VV), 0xA8: ("i32x4.extend_high_i16x8_s", _VV),
    0xA9: ("i32x4.extend_low_i16x8_u", _VV), 0xAA: ("i32x4.extend_high_i16x8_u", _VV),
    0xAB: ("i32x4.shl", _SHIFT), 0xAC: ("i32x4.shr_s", _SHIFT), 0xAD: ("i32x4.shr_u", _SHIFT),
    0xAE: ("i32x4.add", _VVV), 0xB1: ("i32x4.sub", _VVV), 0xB5: ("i32x4.mul", _VVV),
    0xB6: ("i32x4.min_s", _VVV), 0xB7: ("i32x4.min_u", _VVV),
    0xB8: ("i32x4.max_s", _VVV), 0xB9: ("i32x4.max_u", _VVV),
    0xBA: ("i32x4.dot_i16x8_s", _VVV),
    0xBC: ("i32x4.extmul_low_i16x8_s", _VVV), 0xBD: ("i32x4.extmul_high_i16x8_s", _VVV),
    0xBE: ("i32x4.extmul_low_i16x8_u", _VVV), 0xBF: ("i32x4.extmul_high_i16x8_u", _VVV),
    0xC0: ("i64x2.abs", _VV), 0xC1: ("i64x2.neg", _VV),
    0xC3: ("i64x2.all_true", _TEST), 0xC4: ("i64x2.bitmask", _TEST),
    0xC7: ("i64x2.extend_low_i32x4_s", _VV), 0xC8: ("i64x2.extend_high_i32x4_s", _VV),
    0xC9: ("i64x2.extend_low_i32x4_u", _VV), 0xCA: ("i64x2.extend_high_i32x4_u", _VV),
    0xCB: ("i64x2.shl", _SHIFT), 0xCC: ("i64x2.shr_s", _SHIFT), 0xCD: ("i64x2.shr_u", _SHIFT),
    0xCE: ("i64x2.add", _VVV), 0xD1: ("i64x2.sub", _VVV), 0xD5: ("i64x2.mul", _VVV),
    0xD6: ("i64x2.eq", _VVV), 0xD7: ("i64x2.ne", _VVV), 0xD8: ("i64x2.lt_s", _VVV),
    0xD9: ("i64x2.gt_s", _VVV), 0xDA: ("i64x2.le_s", _VVV), 0xDB: ("i64x2.ge_s", _VVV),
    0xDC: ("i64x2.extmul_low_i32x4_s", _VVV), 0xDD: ("i64x2.extmul_high_i32x4_s", _VVV),
    0xDE: ("i64x2.extmul_low_i32x4_u", _VVV), 0xDF: ("i64x2.extmul_high_i32x4_u", _VVV),
    0xE0: ("f32x4.abs", _VV), 0xE1: ("f32x4.neg", _VV), 0xE3: ("f32x4.sqrt", _VV),
    0xE4: ("f32x4.add", _VVV), 0xE5: ("f32x4.sub", _VVV), 0xE6: ("f32x4.mul", _VVV),
    0xE7: ("f32x4.div", _VVV), 0xE8: ("f32x4.min", _VVV), 0xE9: ("f32x4.max", _VVV),
    0xEA: ("f32x4.pmin", _VVV), 0xEB: ("f32x4.pmax", _VVV),
    0xEC: ("f64x2.abs", _VV), 0xED: ("f64x2.neg", _VV), 0xEF: ("f64x2.sqrt", _VV),
    0xF0: ("f64x2.add", _VVV), 0xF1: ("f64x2.sub", _VVV), 0xF2: ("f64x2.mul", _VVV),
    0xF3: ("f64x2.div", _VVV), 0xF4: ("f64x2.min", _VVV), 0xF5: ("f64x2.max", _VVV),
    0xF6: ("f64x2.pmin", _VVV), 0xF7: ("f64x2.pmax", _VVV),
    0xF8: ("i32x4.trunc_sat_f32x4_s", _VV), 0xF9: ("i32x4.trunc_sat_f32x4_u", _VV),
    0xFA: ("f32x4.convert_i32x4_s", _VV), 0xFB: ("f32x4.convert_i32x4_u", _VV),
    0xFC: ("i32x4.trunc_sat_f64x2_s_zero", _VV), 0xFD: ("i32x4.trunc_sat_f64x2_u_zero", _VV),
    0xFE: ("f64x2.convert_low_i32x4_s", _VV), 0xFF: ("f64x2.convert_low_i32x4_u", _VV),
}
for _c, (_n, _s) in _SIMD_REST.items():
    _v(_c, _n, _s)

for _c, _n, (_p, _r), _imm, _w, _l in _SIMD:
    _grp = G.MEMORY if _w else G.VECTOR
    _con = C.MEMORY_RANGE if _w else C.NONE
    _add(_n, _grp, _p, _r, _con, (0xFD, _c), _imm, mem_bytes=_w, lanes=_l)

SIMD_OPCODES: tuple[str, ...] = tuple(n for _, n, *_ in _SIMD)

del _c, _n, _i, _s, _l, _w, _t, _p, _r, _imm, _grp, _con, _a


def instruction_meta(opcode: str) -> InstructionMeta:
    """Metadata row for ``opcode``; raises :class:`UnknownOpcode` if unsupported."""
    try:
        return _TABLE[opcode]
    except KeyError:
        raise UnknownOpcode(opcode) from None


def meta_by_code(code: tuple[int, ...]) -> InstructionMeta | None:
    return _BY_CODE.get(code)


def all_opcodes() -> tuple[str, ...]:
    return tuple(_TABLE)


BLOCK_OPENERS = frozenset({"block", "loop", "if"})
BRANCHES = frozenset({"br", "br_if", "br_table", "return"})
CONTROL_FLOW = frozenset(
    {"block", "loop", "if", "else", "end", "br", "br_if", "br_table", "return",
     "unreachable", "nop", "call", "call_indirect"}
)
