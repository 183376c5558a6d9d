"""Bit-exact decoder and encoder for the core WebAssembly binary format."""

from __future__ import annotations

import struct

from .errors import EncodingOverflow, MalformedBinary, UnsupportedProposal
from .opcodes import meta_by_code, instruction_meta
from .types import (
    BYTE_OF_VALTYPE,
    VALTYPE_BYTES,
    Code,
    CustomSection,
    DataSegment,
    ElementSegment,
    Export,
    FuncType,
    Global,
    GlobalType,
    Import,
    Instruction,
    Limits,
    TableType,
    ValType,
    WasmModule,
)

MAGIC = b"\x00asm"
VERSION = b"\x01\x00\x00\x00"
HEADER = MAGIC + VERSION

# Canonical section order; data count (12) sits between element and code.
SECTION_ORDER = (1, 2, 3, 4, 5, 6, 7, 8, 9, 12, 10, 11)
_ORDER_RANK = {sid: i for i, sid in enumerate(SECTION_ORDER)}

EXTERN_KINDS = ("func", "table", "memory", "global")

_PROPOSAL_BYTES = {
    0x06: "exception-handling", 0x07: "exception-handling", 0x08: "exception-handling",
    0x09: "exception-handling", 0x0A: "exception-handling", 0x18: "exception-handling",
    0x19: "exception-handling", 0x1F: "exception-handling",
    0x12: "tail-call", 0x13: "tail-call", 0x14: "function-references",
    0x15: "function-references", 0xD3: "function-references", 0xD4: "function-references",
    0xD5: "gc", 0xD6: "gc", 0xFB: "gc", 0xFE: "threads",
}


class Reader:
    __slots__ = ("data", "pos", "end")

    def __init__(self, data: bytes, pos: int = 0, end: int | None = None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def eof(self) -> bool:
        return self.pos >= self.end

    def byte(self) -> int:
        if self.pos >= self.end:
            raise MalformedBinary(self.pos, "unexpected end")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def raw(self, n: int) -> bytes:
        if n < 0 or self.pos + n > self.end:
            raise MalformedBinary(self.pos, "unexpected end")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return bytes(out)

    def u32(self) -> int:
        return self._uleb(32)

    def _uleb(self, bits: int) -> int:
        result = shift = 0
        data, pos, end = self.data, self.pos, self.end
        start = pos
        maxlen = (bits + 6) // 7
        while True:
            if pos >= end:
                raise MalformedBinary(pos, "truncated LEB128")
            b = data[pos]
            pos += 1
            result |= (b & 0x7F) << shift
            if not b & 0x80:
                break
            shift += 7
            if pos - start >= maxlen:
                raise MalformedBinary(pos, "LEB128 too long")
        if pos - start == maxlen and b >> (bits - 7 * (maxlen - 1)):
            raise MalformedBinary(pos - 1, "LEB128 integer too large")
        self.pos = pos
        return result

    def sleb(self, bits: int) -> int:
        result = shift = 0
        data, pos, end = self.data, self.pos, self.end
        start = pos
        maxlen = (bits + 6) // 7
        while True:
            if pos >= end:
                raise MalformedBinary(pos, "truncated LEB128")
            b = data[pos]
            pos += 1
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                break
            if pos - start >= maxlen:
                raise MalformedBinary(pos, "LEB128 too long")
        if pos - start == maxlen:
            # Unused bits of the final byte must sign-extend the value.
            used = bits - 7 * (maxlen - 1)
            top = (b & 0x7F) >> (used - 1)
            if top not in (0, (0x7F >> (used - 1))):
                raise MalformedBinary(pos - 1, "LEB128 integer too large")
        if result & (1 << (shift - 1)):
            result -= 1 << shift
        self.pos = pos
        return _wrap_signed(result, bits)

    def name(self) -> str:
        n = self.u32()
        at = self.pos
        try:
            return self.raw(n).decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedBinary(at, "malformed UTF-8 name") from None

    def valtype(self) -> ValType:
        at = self.pos
        b = self.byte()
        try:
            return VALTYPE_BYTES[b]
        except KeyError:
            raise MalformedBinary(at, f"invalid value type 0x{b:02x}") from None

    def reftype(self) -> ValType:
        at = self.pos
        t = self.valtype()
        if not t.is_ref:
            raise MalformedBinary(at, "expected reference type")
        return t

    def limits(self, what: str) -> Limits:
        at = self.pos
        flag = self.byte()
        if flag == 0x00:
            return Limits(self.u32())
        if flag == 0x01:
            return Limits(self.u32(), self.u32())
        if flag in (0x02, 0x03):
            raise UnsupportedProposal("threads", at)
        if flag in (0x04, 0x05, 0x06, 0x07):
            raise UnsupportedProposal("memory64", at)
        raise MalformedBinary(at, f"invalid {what} limits flag 0x{flag:02x}")

    def vec(self, item):
        return [item() for _ in range(self.u32())]


def _wrap_signed(v: int, bits: int) -> int:
    lo = -(1 << (bits - 1))
    hi = (1 << (bits - 1)) - 1
    if v < lo or v > hi:
        raise MalformedBinary(-1, "signed LEB128 out of range")
    return v


# -- instructions -------------------------------------------------------------


def _read_blocktype(r: Reader):
    b = r.data[r.pos] if r.pos < r.end else None
    if b is None:
        raise MalformedBinary(r.pos, "unexpected end")
    if b == 0x40:
        r.pos += 1
        return None
    if b in VALTYPE_BYTES:
        r.pos += 1
        return VALTYPE_BYTES[b]
    at = r.pos
    idx = r.sleb(33)
    if idx < 0:
        raise MalformedBinary(at, "invalid block type")
    return idx


def _read_memarg(r: Reader) -> tuple[int, int]:
    at = r.pos
    align = r.u32()
    if align & 0x40:
        raise UnsupportedProposal("multi-memory", at)
    return align, r.u32()


def _read_zero(r: Reader) -> int:
    at = r.pos
    b = r.byte()
    if b != 0:
        raise UnsupportedProposal("multi-memory", at)
    return 0


def _imm_reader(kind: str):
    return _IMM_READERS[kind]


_IMM_READERS = {
    "none": lambda r: (),
    "blocktype": lambda r: (_read_blocktype(r),),
    "label": lambda r: (r.u32(),),
    "br_table": lambda r: (tuple(r.vec(r.u32)), r.u32()),
    "func": lambda r: (r.u32(),),
    "call_indirect": lambda r: (r.u32(), r.u32()),
    "local": lambda r: (r.u32(),),
    "global": lambda r: (r.u32(),),
    "table": lambda r: (r.u32(),),
    "memarg": _read_memarg,
    "memidx": lambda r: (_read_zero(r),),
    "i32": lambda r: (r.sleb(32),),
    "i64": lambda r: (r.sleb(64),),
    "f32": lambda r: (struct.unpack("<I", r.raw(4))[0],),
    "f64": lambda r: (struct.unpack("<Q", r.raw(8))[0],),
    "select_t": lambda r: (tuple(r.vec(r.valtype)),),
    "reftype": lambda r: (r.reftype(),),
    "v128": lambda r: (r.raw(16),),
    "shuffle": lambda r: (tuple(r.raw(16)),),
    "lane": lambda r: (r.byte(),),
    "memarg_lane": lambda r: _read_memarg(r) + (r.byte(),),
    "mem_init": lambda r: (r.u32(), _read_zero(r)),
    "data": lambda r: (r.u32(),),
    "mem_copy": lambda r: (_read_zero(r), _read_zero(r)),
    "table_init": lambda r: (r.u32(), r.u32()),
    "elem": lambda r: (r.u32(),),
    "table_copy": lambda r: (r.u32(), r.u32()),
}


def read_instruction(r: Reader, base: int = 0) -> Instruction:
    at = r.pos
    b = r.byte()
    if b == 0xFC or b == 0xFD:
        code = (b, r.u32())
    else:
        code = (b,)
    meta = meta_by_code(code)
    if meta is None:
        name = _PROPOSAL_BYTES.get(b)
        if name is None:
            name = "relaxed-simd" if b == 0xFD and 0x100 <= code[1] <= 0x113 else (
                f"opcode {'/'.join(f'0x{c:02x}' for c in code)}"
            )
        raise UnsupportedProposal(name, at)
    imm = _IMM_READERS[meta.imm](r)
    return Instruction(meta.opcode, imm, at - base)


def read_expr(r: Reader, base: int = 0) -> list[Instruction]:
    """Read instructions up to and including the matching final ``end``.

    The final ``end`` is consumed but not returned.
    """
    out: list[Instruction] = []
    depth = 0
    while True:
        ins = read_instruction(r, base)
        op = ins.opcode
        if op == "end":
            if depth == 0:
                return out
            depth -= 1
        elif op in ("block", "loop", "if"):
            depth += 1
        out.append(ins)


# -- module -------------------------------------------------------------------


def decode_module(data: bytes) -> WasmModule:
    """Decode a binary into a :class:`WasmModule`."""
    data = bytes(data)
    if len(data) < 8:
        raise MalformedBinary(len(data), "unexpected end of header")
    if data[:4] != MAGIC:
        raise MalformedBinary(0, "bad magic number")
    if data[4:8] != VERSION:
        if data[4:8] == b"\x0d\x00\x01\x00":
            raise UnsupportedProposal("component-model", 4)
        raise MalformedBinary(4, "unknown binary version")

    m = WasmModule()
    r = Reader(data, 8)
    last_rank = -1
    last_id = 0
    func_count: int | None = None
    while not r.eof():
        sid_at = r.pos
        sid = r.byte()
        size = r.u32()
        start = r.pos
        if start + size > len(data):
            raise MalformedBinary(start, "section size mismatch")
        sr = Reader(data, start, start + size)
        if sid == 0:
            name = sr.name()
            m.customs.append(CustomSection(name, sr.raw(sr.end - sr.pos), last_id))
        else:
            if sid not in _ORDER_RANK:
                raise MalformedBinary(sid_at, f"unknown section id {sid}")
            rank = _ORDER_RANK[sid]
            if rank <= last_rank:
                raise MalformedBinary(sid_at, "section out of order or duplicated")
            last_rank, last_id = rank, sid
            if sid == 1:
                m.types = sr.vec(lambda: _read_functype(sr))
            elif sid == 2:
                m.imports = sr.vec(lambda: _read_import(sr))
            elif sid == 3:
                m.functions = sr.vec(sr.u32)
                func_count = len(m.functions)
            elif sid == 4:
                m.tables = sr.vec(lambda: TableType(sr.reftype(), sr.limits("table")))
            elif sid == 5:
                m.memories = sr.vec(lambda: sr.limits("memory"))
            elif sid == 6:
                m.globals = sr.vec(lambda: Global(_read_globaltype(sr), tuple(read_expr(sr))))
            elif sid == 7:
                m.exports = sr.vec(lambda: _read_export(sr))
            elif sid == 8:
                m.start = sr.u32()
            elif sid == 9:
                m.elements = sr.vec(lambda: _read_elem(sr))
            elif sid == 12:
                m.data_count = sr.u32()
            elif sid == 10:
                m.codes = sr.vec(lambda: _read_code(sr))
            elif sid == 11:
                m.datas = sr.vec(lambda: _read_data(sr))
            if sr.pos != sr.end:
                raise MalformedBinary(sr.pos, "section size mismatch")
        r.pos = start + size
    if len(m.codes) != (func_count or 0):
        raise MalformedBinary(len(data), "function and code section have inconsistent lengths")
    if m.data_count is not None and m.data_count != len(m.datas):
        raise MalformedBinary(len(data), "data count and data section have inconsistent lengths")
    return m


def _read_functype(r: Reader) -> FuncType:
    at = r.pos
    form = r.byte()
    if form != 0x60:
        raise MalformedBinary(at, f"invalid function type form 0x{form:02x}")
    params = tuple(r.vec(r.valtype))
    results = tuple(r.vec(r.valtype))
    return FuncType(params, results)


def _read_globaltype(r: Reader) -> GlobalType:
    t = r.valtype()
    at = r.pos
    mut = r.byte()
    if mut not in (0, 1):
        raise MalformedBinary(at, "invalid mutability")
    return GlobalType(t, bool(mut))


def _read_import(r: Reader) -> Import:
    mod = r.name()
    name = r.name()
    at = r.pos
    kind = r.byte()
    if kind == 0:
        return Import(mod, name, "func", r.u32())
    if kind == 1:
        return Import(mod, name, "table", TableType(r.reftype(), r.limits("table")))
    if kind == 2:
        return Import(mod, name, "memory", r.limits("memory"))
    if kind == 3:
        return Import(mod, name, "global", _read_globaltype(r))
    if kind == 4:
        raise UnsupportedProposal("exception-handling", at)
    raise MalformedBinary(at, "invalid import kind")


def _read_export(r: Reader) -> Export:
    name = r.name()
    at = r.pos
    kind = r.byte()
    if kind > 3:
        if kind == 4:
            raise UnsupportedProposal("exception-handling", at)
        raise MalformedBinary(at, "invalid export kind")
    return Export(name, EXTERN_KINDS[kind], r.u32())


def _read_elemkind(r: Reader) -> ValType:
    at = r.pos
    if r.byte() != 0x00:
        raise MalformedBinary(at, "invalid element kind")
    return ValType.FUNCREF


def _read_elem(r: Reader) -> ElementSegment:
    at = r.pos
    flags = r.u32()
    if flags > 7:
        raise MalformedBinary(at, "invalid element segment flags")
    table = 0
    offset = None
    if flags & 0x1 == 0:
        mode = "active"
        if flags & 0x2:
            table = r.u32()
        offset = tuple(read_expr(r))
    else:
        mode = "declarative" if flags & 0x2 else "passive"
    if flags & 0x4:
        elem_type = ValType.FUNCREF if flags in (4,) else r.reftype()
        init = tuple(tuple(read_expr(r)) for _ in range(r.u32()))
    else:
        elem_type = ValType.FUNCREF if flags == 0 else _read_elemkind(r)
        init = tuple(r.vec(r.u32))
    return ElementSegment(flags, mode, elem_type, init, table, offset)


def _read_code(r: Reader) -> Code:
    size = r.u32()
    start = r.pos
    end = start + size
    if end > r.end:
        raise MalformedBinary(start, "function body size mismatch")
    br = Reader(r.data, start, end)
    groups = []
    total = 0
    for _ in range(br.u32()):
        n = br.u32()
        total += n
        if total > 0xFFFFFFFF:
            raise MalformedBinary(br.pos, "too many locals")
        groups.append((n, br.valtype()))
    body = read_expr(br, start)
    if br.pos != end:
        raise MalformedBinary(br.pos, "function body size mismatch")
    r.pos = end
    return Code(tuple(groups), tuple(body))


def _read_data(r: Reader) -> DataSegment:
    at = r.pos
    flags = r.u32()
    if flags == 0:
        offset = tuple(read_expr(r))
        return DataSegment(0, "active", r.raw(r.u32()), 0, offset)
    if flags == 1:
        return DataSegment(1, "passive", r.raw(r.u32()))
    if flags == 2:
        mem = r.u32()
        offset = tuple(read_expr(r))
        return DataSegment(2, "active", r.raw(r.u32()), mem, offset)
    raise MalformedBinary(at, "invalid data segment flags")


# -- encoding -----------------------------------------------------------------


def uleb(v: int, bits: int = 32) -> bytes:
    if v < 0 or v >= 1 << bits:
        raise EncodingOverflow(f"{v} does not fit in u{bits}")
    out = bytearray()
    while True:
        b = v & 0x7F
        v >>= 7
        if v:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def sleb(v: int, bits: int) -> bytes:
    if v < -(1 << (bits - 1)) or v >= 1 << (bits - 1):
        raise EncodingOverflow(f"{v} does not fit in s{bits}")
    out = bytearray()
    while True:
        b = v & 0x7F
        v >>= 7
        if (v == 0 and not b & 0x40) or (v == -1 and b & 0x40):
            out.append(b)
            return bytes(out)
        out.append(b | 0x80)


def _name(s: str) -> bytes:
    raw = s.encode("utf-8")
    return uleb(len(raw)) + raw


def _vec(items, enc) -> bytes:
    items = list(items)
    return uleb(len(items)) + b"".join(enc(x) for x in items)


def _valtype(t: ValType) -> bytes:
    try:
        return bytes([BYTE_OF_VALTYPE[ValType(t)]])
    except (KeyError, ValueError):
        raise EncodingOverflow(f"value type {t!r} cannot be encoded") from None


def _limits(lim: Limits) -> bytes:
    if lim.max is None:
        return b"\x00" + uleb(lim.min)
    return b"\x01" + uleb(lim.min) + uleb(lim.max)


def _blocktype(bt) -> bytes:
    if bt is None:
        return b"\x40"
    if isinstance(bt, ValType):
        return _valtype(bt)
    return sleb(bt, 33)


def _memarg(align: int, offset: int) -> bytes:
    return uleb(align) + uleb(offset)


def _enc_imm(kind: str, imm: tuple) -> bytes:
    if kind == "none":
        return b""
    if kind in ("label", "func", "local", "global", "table", "data", "elem"):
        return uleb(imm[0])
    if kind == "i32":
        return sleb(imm[0], 32)
    if kind == "memarg":
        return _memarg(imm[0], imm[1])
    if kind == "blocktype":
        return _blocktype(imm[0])
    if kind == "i64":
        return sleb(imm[0], 64)
    if kind == "f32":
        return struct.pack("<I", imm[0])
    if kind == "f64":
        return struct.pack("<Q", imm[0])
    if kind == "br_table":
        return _vec(imm[0], uleb) + uleb(imm[1])
    if kind in ("call_indirect", "table_init", "table_copy"):
        return uleb(imm[0]) + uleb(imm[1])
    if kind == "memidx":
        return b"\x00"
    if kind == "select_t":
        return _vec(imm[0], _valtype)
    if kind == "reftype":
        return _valtype(imm[0])
    if kind == "v128":
        if len(imm[0]) != 16:
            raise EncodingOverflow("v128 immediate must be 16 bytes")
        return bytes(imm[0])
    if kind == "shuffle":
        return bytes(imm[0])
    if kind == "lane":
        return bytes([imm[0]])
    if kind == "memarg_lane":
        return _memarg(imm[0], imm[1]) + bytes([imm[2]])
    if kind == "mem_init":
        return uleb(imm[0]) + b"\x00"
    if kind == "mem_copy":
        return b"\x00\x00"
    raise AssertionError(kind)


def encode_instruction(ins: Instruction) -> bytes:
    meta = instruction_meta(ins.opcode)
    code = meta.code
    head = bytes([code[0]]) + (uleb(code[1]) if len(code) > 1 else b"")
    return head + _enc_imm(meta.imm, ins.immediates)


def encode_instructions(instrs) -> bytes:
    return b"".join(encode_instruction(i) for i in instrs)


def encode_expr(instrs) -> bytes:
    return encode_instructions(instrs) + b"\x0b"


def _enc_import(imp: Import) -> bytes:
    head = _name(imp.module) + _name(imp.name)
    if imp.kind == "func":
        return head + b"\x00" + uleb(imp.desc)
    if imp.kind == "table":
        return head + b"\x01" + _valtype(imp.desc.elem_type) + _limits(imp.desc.limits)
    if imp.kind == "memory":
        return head + b"\x02" + _limits(imp.desc)
    return head + b"\x03" + _valtype(imp.desc.valtype) + bytes([int(imp.desc.mutable)])


def _enc_elem(seg: ElementSegment) -> bytes:
    f = seg.flags
    out = bytearray(uleb(f))
    if f & 0x1 == 0:
        if f & 0x2:
            out += uleb(seg.table)
        out += encode_expr(seg.offset or ())
    if f & 0x4:
        if f != 4:
            out += _valtype(seg.elem_type)
        out += _vec(seg.init, encode_expr)
    else:
        if f != 0:
            out += b"\x00"
        out += _vec(seg.init, uleb)
    return bytes(out)


def _enc_data(seg: DataSegment) -> bytes:
    if seg.flags == 1:
        return b"\x01" + uleb(len(seg.data)) + seg.data
    out = uleb(seg.flags)
    if seg.flags == 2:
        out += uleb(seg.memory)
    return out + encode_expr(seg.offset or ()) + uleb(len(seg.data)) + seg.data


def _enc_code(code: Code) -> bytes:
    body = _vec(code.locals, lambda g: uleb(g[0]) + _valtype(g[1])) + encode_expr(code.body)
    return uleb(len(body)) + body


def _section(sid: int, payload: bytes) -> bytes:
    return bytes([sid]) + uleb(len(payload)) + payload


def encode_module(m: WasmModule) -> bytes:
    """Encode ``m`` to bytes. Empty sections are omitted."""
    payloads: dict[int, bytes | None] = {
        1: _vec(m.types, lambda t: b"\x60" + _vec(t.params, _valtype) + _vec(t.results, _valtype))
        if m.types else None,
        2: _vec(m.imports, _enc_import) if m.imports else None,
        3: _vec(m.functions, uleb) if m.functions else None,
        4: _vec(m.tables, lambda t: _valtype(t.elem_type) + _limits(t.limits))
        if m.tables else None,
        5: _vec(m.memories, _limits) if m.memories else None,
        6: _vec(m.globals, lambda g: _valtype(g.type.valtype) + bytes([int(g.type.mutable)])
                + encode_expr(g.init)) if m.globals else None,
        7: _vec(m.exports, lambda e: _name(e.name) + bytes([EXTERN_KINDS.index(e.kind)])
                + uleb(e.index)) if m.exports else None,
        8: uleb(m.start) if m.start is not None else None,
        9: _vec(m.elements, _enc_elem) if m.elements else None,
        12: uleb(m.data_count) if m.data_count is not None else None,
        10: _vec(m.codes, _enc_code) if m.codes else None,
        11: _vec(m.datas, _enc_data) if m.datas else None,
    }
    out = bytearray(HEADER)
    customs = list(m.customs)

    def flush_customs(after: int) -> None:
        for c in customs:
            if c.after == after:
                out.extend(_section(0, _name(c.name) + c.data))

    flush_customs(0)
    for sid in SECTION_ORDER:
        payload = payloads[sid]
        if payload is not None:
            out.extend(_section(sid, payload))
        flush_customs(sid)
    return bytes(out)
