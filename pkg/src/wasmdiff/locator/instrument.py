"""Static instrumentation that makes a binary print what it is doing.

Probe lines are written through an imported WASI ``fd_write`` into an extra
memory page and go to stdout:

    ##WD|CALL|<callee>|<hex>,<hex>,...    before a call, with its arguments
    ##WD|RET|<callee>|<hex>,...           after a call, with its results
    ##WD|STEP|<offset>|<opcode>|<hex>     after an instruction, with the top value

Callee indices and offsets refer to the binary before instrumentation. The
helper code avoids ``i32.add`` so that a runtime miscomputing it does not
corrupt its own logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..harness.panel import PROBE_PREFIX
from ..wasm import decode_module, encode_module
from ..wasm.edit import add_function_import, copy_module
from ..wasm.opcodes import CONTROL_FLOW
from ..wasm.types import (
    Code,
    Export,
    FuncType,
    Global,
    GlobalType,
    Instruction,
    Limits,
    ValType,
    WasmModule,
)
from ..wasm.validate import type_function

PAGE = 65536
MAX_PAGES = 65536
WASI = "wasi_snapshot_preview1"
FD_WRITE_SIG = FuncType((ValType.I32,) * 4, (ValType.I32,))
# Bytes at the start of the log page: iovec (8), nwritten (4), padding (4).
HEADER = 16
# Probe lines a run may print before probes go silent; divergences show up early.
DEFAULT_LINE_BUDGET = 5_000
I = Instruction  # noqa: E741

HEX_DIGITS = {ValType.I32: 8, ValType.F32: 8, ValType.I64: 16, ValType.F64: 16,
              ValType.V128: 32, ValType.FUNCREF: 1, ValType.EXTERNREF: 1}


class InstrumentationOverflow(Exception):
    """The binary cannot be instrumented within the configured budgets."""


@dataclass(frozen=True)
class Probe:
    kind: str  # "CALL" | "RET" | "STEP"
    func: int  # function containing the site (original index)
    site: int | str  # callee index (or "T<slot>" placeholder) for calls, byte offset for steps
    types: tuple[ValType, ...]
    opcode: str = ""


@dataclass
class InstrumentedBinary:
    bytes: bytes
    probeMap: list[Probe]  # noqa: N815
    logBufferBase: int  # noqa: N815
    module: WasmModule
    entryExportName: str = "main"  # noqa: N815
    # Original index of every defined function, in order.
    funcIndices: list[int] = field(default_factory=list)  # noqa: N815


def _i32(v: int) -> Instruction:
    v &= 0xFFFFFFFF
    return I("i32.const", (v - (1 << 32) if v >= 1 << 31 else v,))


@dataclass
class _Log:
    """Indices of the logging helpers inside the instrumented module."""

    base: int
    put: int
    hexn: int
    begin: int
    flush: int
    budget: int  # global holding the lines still allowed

    def text(self, s: str) -> list[Instruction]:
        out = []
        for b in s.encode():
            out += [_i32(b), I("call", (self.put,))]
        return out

    def value(self, t: ValType, local: int) -> list[Instruction]:
        get = I("local.get", (local,))
        hexn = I("call", (self.hexn,))
        if t is ValType.I32:
            return [get, I("i64.extend_i32_u"), _i32(8), hexn]
        if t is ValType.F32:
            return [get, I("i32.reinterpret_f32"), I("i64.extend_i32_u"), _i32(8), hexn]
        if t is ValType.I64:
            return [get, _i32(16), hexn]
        if t is ValType.F64:
            return [get, I("i64.reinterpret_f64"), _i32(16), hexn]
        if t is ValType.V128:
            return [get, I("i64x2.extract_lane", (1,)), _i32(16), hexn,
                    get, I("i64x2.extract_lane", (0,)), _i32(16), hexn]
        return [get, I("ref.is_null"), I("i64.extend_i32_u"), _i32(1), hexn]

    def line(self, head: str, payload: list[tuple[ValType, int]],
             slot: int | None = None) -> list[Instruction]:
        """Emit one probe line; ``slot`` names a local whose value replaces the callee index.

        The line is skipped outright once the budget is spent, so hot loops stay cheap.
        """
        out = [I("global.get", (self.budget,)), I("if", (None,)), I("call", (self.begin,))]
        out += self.text(PROBE_PREFIX + head)
        if slot is not None:
            out += self.text("T") + self.value(ValType.I32, slot)
        out += self.text("|")
        for k, (t, local) in enumerate(payload):
            if k:
                out += self.text(",")
            out += self.value(t, local)
        return out + [I("call", (self.flush,)), I("end")]


def _helpers(m: WasmModule, fd_write: int, cursor: int, budget: int, base: int) -> _Log:
    """Append the logging helper functions; returns their indices."""
    first = m.num_imported_funcs + len(m.functions)
    log = _Log(base, first, first + 1, first + 2, first + 3, budget)
    text = base + HEADER
    put = [
        I("global.get", (cursor,)), I("local.get", (0,)), I("i32.store8", (0, 0)),
        I("global.get", (cursor,)), _i32(-1), I("i32.sub"), I("global.set", (cursor,)),
    ]
    # hexn(v: i64, n: i32): write the low n nibbles of v, most significant first.
    hexn = [
        I("block", (None,)), I("loop", (None,)),
        I("local.get", (1,)), I("i32.eqz"), I("br_if", (1,)),
        I("local.get", (1,)), _i32(1), I("i32.sub"), I("local.set", (1,)),
        I("local.get", (0,)), I("local.get", (1,)), _i32(2), I("i32.shl"),
        I("i64.extend_i32_u"), I("i64.shr_u"), I("i32.wrap_i64"), _i32(15), I("i32.and"),
        I("local.set", (2,)),
        I("local.get", (2,)), _i32(0x30), I("i32.or"),
        I("local.get", (2,)), _i32(9), I("i32.sub"), _i32(0x60), I("i32.or"),
        I("local.get", (2,)), _i32(10), I("i32.lt_u"), I("select"),
        I("call", (log.put,)), I("br", (0,)),
        I("end"), I("end"),
    ]
    begin = [_i32(text), I("global.set", (cursor,))]
    flush = [
        I("global.get", (budget,)), I("i32.eqz"), I("if", (None,)), I("return"), I("end"),
        I("global.get", (budget,)), _i32(1), I("i32.sub"), I("global.set", (budget,)),
        _i32(ord("\n")), I("call", (log.put,)),
        _i32(base), _i32(text), I("i32.store", (2, 0)),
        _i32(base), I("global.get", (cursor,)), _i32(text), I("i32.sub"), I("i32.store", (2, 4)),
        _i32(1), _i32(base), _i32(1), _i32(base + 8), I("call", (fd_write,)), I("drop"),
    ]
    defs = [
        (FuncType((ValType.I32,), ()), (), put),
        (FuncType((ValType.I64, ValType.I32), ()), ((1, ValType.I32),), hexn),
        (FuncType((), ()), (), begin),
        (FuncType((), ()), (), flush),
    ]
    for sig, locals_, body in defs:
        m.functions.append(m.type_index(sig))
        m.codes.append(Code(locals_, tuple(body)))
    return log


class _Scratch:
    """Extra locals of one function, one per (value type, position)."""

    def __init__(self, nlocals: int, cap: int):
        self.next = nlocals
        self.cap = cap
        self.slots: dict[tuple[ValType, int], int] = {}
        self.decls: list[tuple[int, ValType]] = []

    def get(self, t: ValType, k: int) -> int:
        key = (t, k)
        if key not in self.slots:
            if len(self.slots) >= self.cap:
                raise InstrumentationOverflow(f"more than {self.cap} scratch locals needed")
            self.slots[key] = self.next
            self.next += 1
            self.decls.append((1, t))
        return self.slots[key]


def _prepare(data: bytes, line_budget: int) -> tuple[WasmModule, WasmModule, _Log, int]:
    """Decode, add the fd_write import, the log page, the cursor and the helpers."""
    original = decode_module(data)
    m = copy_module(original)
    if m.imported("memory"):
        raise InstrumentationOverflow("imported memories cannot be extended")
    existing = m.export_of("memory")
    if existing is not None and (existing.kind != "memory" or existing.index != 0):
        raise InstrumentationOverflow("export name 'memory' is taken")
    if m.memories:
        lim = m.memories[0]
        if lim.min + 1 > MAX_PAGES or (lim.max is not None and lim.max + 1 > MAX_PAGES):
            raise InstrumentationOverflow("no room for the log page")
        base = lim.min * PAGE
        m.memories[0] = Limits(lim.min + 1, None if lim.max is None else lim.max + 1)
    else:
        base = 0
        m.memories.append(Limits(1, 1))
    if existing is None:
        m.exports.append(Export("memory", "memory", 0))
    fd_write = add_function_import(m, WASI, "fd_write", FD_WRITE_SIG)
    cursor = len(m.all_global_types())
    m.globals.append(Global(GlobalType(ValType.I32, True), (_i32(base + HEADER),)))
    m.globals.append(Global(GlobalType(ValType.I32, True), (_i32(line_budget),)))
    log = _helpers(m, fd_write, cursor, cursor + 1, base)
    return original, m, log, fd_write


def _orig_index(idx: int, at: int) -> int:
    return idx - 1 if idx > at else idx


def _static_slot(body, k: int) -> int | None:
    if k > 0 and body[k - 1].opcode == "i32.const":
        return body[k - 1].immediates[0]
    return None


def _slot_target(original: WasmModule, table: int, slot: int | None) -> int | None:
    """Resolve a constant table slot through active, constant-offset element segments."""
    if slot is None:
        return None
    found = None
    for seg in original.elements:
        if seg.mode != "active" or seg.table != table or seg.uses_exprs:
            continue
        if not seg.offset or len(seg.offset) != 1 or seg.offset[0].opcode != "i32.const":
            continue
        start = seg.offset[0].immediates[0] & 0xFFFFFFFF
        if start <= slot < start + len(seg.init):
            found = seg.init[slot - start]
    return found


def _check_budget(probe_lines: list[int]) -> None:
    room = PAGE - HEADER
    if probe_lines and max(probe_lines) > room:
        raise InstrumentationOverflow(f"a probe line needs {max(probe_lines)} bytes, page holds {room}")


def _payload_len(types) -> int:
    return sum(HEX_DIGITS[t] + 1 for t in types)


def instrument_functions(binary, max_scratch: int = 4096,
                         line_budget: int = DEFAULT_LINE_BUDGET) -> InstrumentedBinary:
    """Log callee index and arguments before, and results after, every call."""
    original, m, log, at = _prepare(binary.bytes, line_budget)
    nimp = original.num_imported_funcs
    probes: list[Probe] = []
    lengths: list[int] = []
    codes = list(m.codes)
    for di in range(len(original.codes)):
        func = nimp + di
        code = m.codes[di]
        sig = original.func_type(func)
        scratch = _Scratch(len(sig.params) + len(code.local_types()), max_scratch)
        out: list[Instruction] = []
        body = code.body
        for k, ins in enumerate(body):
            if ins.opcode not in ("call", "call_indirect"):
                out.append(ins)
                continue
            if ins.opcode == "call":
                callee = _orig_index(ins.immediates[0], at)
                csig = original.func_type(callee)
                name: int | str = callee
            else:
                csig = original.types[ins.immediates[0]]
                target = _slot_target(original, ins.immediates[1], _static_slot(body, k))
                name = target if target is not None else "T"
            spill = [(t, scratch.get(t, j)) for j, t in enumerate(csig.params)]
            slot = None
            if name == "T":
                # Unresolvable table slot: the slot number is logged instead.
                slot = scratch.get(ValType.I32, -1)
                spill.append((ValType.I32, slot))
            ident = "" if slot is not None else str(name)
            out += [I("local.set", (loc,)) for _, loc in reversed(spill)]
            out += log.line(f"CALL|{ident}", spill[:len(csig.params)], slot)
            out += [I("local.get", (loc,)) for _, loc in spill]
            out.append(ins)
            results = [(t, scratch.get(t, j)) for j, t in enumerate(csig.results)]
            out += [I("local.set", (loc,)) for _, loc in reversed(results)]
            out += log.line(f"RET|{ident}", results, slot)
            out += [I("local.get", (loc,)) for _, loc in results]
            probes.append(Probe("CALL", func, name, tuple(csig.params), ins.opcode))
            probes.append(Probe("RET", func, name, tuple(csig.results), ins.opcode))
            lengths.append(40 + _payload_len(csig.params))
            lengths.append(40 + _payload_len(csig.results))
        codes[di] = Code(code.locals + tuple(scratch.decls), tuple(out))
    m.codes = codes
    _check_budget(lengths)
    return _finish(binary, original, m, probes, log.base)


def instrument_instructions(binary, func_idx: int, max_scratch: int = 4096,
                            line_budget: int = DEFAULT_LINE_BUDGET) -> InstrumentedBinary:
    """Log opcode, offset and top-of-stack value after each non-control instruction."""
    original, m, log, _ = _prepare(binary.bytes, line_budget)
    nimp = original.num_imported_funcs
    di = func_idx - nimp
    if not 0 <= di < len(original.codes):
        raise ValueError(f"function {func_idx} is not a defined function")
    typings = type_function(original, di)
    code = m.codes[di]
    sig = original.func_type(func_idx)
    scratch = _Scratch(len(sig.params) + len(code.local_types()), max_scratch)
    probes: list[Probe] = []
    out: list[Instruction] = []
    # The edited body has import-shifted call indices but keeps original offsets.
    for ins, typing in zip(code.body, typings):
        out.append(ins)
        if ins.opcode in CONTROL_FLOW or not typing.reachable:
            continue
        head = f"STEP|{ins.offset}|{ins.opcode}"
        top = typing.results[-1] if typing.results else None
        if top is None:
            if typing.results:
                continue
            out += log.line(head, [])
            probes.append(Probe("STEP", func_idx, ins.offset, (), ins.opcode))
            continue
        loc = scratch.get(top, 0)
        out.append(I("local.tee", (loc,)))
        out += log.line(head, [(top, loc)])
        probes.append(Probe("STEP", func_idx, ins.offset, (top,), ins.opcode))
    m.codes[di] = Code(code.locals + tuple(scratch.decls), tuple(out))
    return _finish(binary, original, m, probes, log.base)


def _finish(binary, original, m, probes, base) -> InstrumentedBinary:
    nimp = original.num_imported_funcs
    return InstrumentedBinary(
        bytes=encode_module(m),
        probeMap=probes,
        logBufferBase=base,
        module=m,
        entryExportName=binary.entryExportName,
        funcIndices=[nimp + i for i in range(len(original.codes))],
    )
