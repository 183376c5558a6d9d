"""Entry wrapper that returns only integers, and raw-bit result rendering.

Not every embedding can hand back floats bit-exactly or v128 values at all,
so the harness calls a wrapper export that reinterprets floats as integers
and splits each v128 into two i64 halves (high half first).
"""

from __future__ import annotations

from ..wasm.edit import copy_module, used_export_names
from ..wasm.types import Code, Export, FuncType, Instruction, ValType, WasmModule

ENTRY_WRAPPER = "__wasmdiff_entry"
I = Instruction  # noqa: E741

WIDTH_DIGITS = {ValType.I32: 8, ValType.F32: 8, ValType.I64: 16, ValType.F64: 16, ValType.V128: 32}
CANONICAL_NAN = {ValType.F32: 0x7FC00000, ValType.F64: 0x7FF8000000000000}


class LoweringError(Exception):
    pass


def lowered(t: ValType) -> list[ValType]:
    if t in (ValType.I32, ValType.F32) or t.is_ref:
        return [ValType.I32]
    if t is ValType.V128:
        return [ValType.I64, ValType.I64]
    return [ValType.I64]


def _zero(t: ValType) -> Instruction:
    if t is ValType.V128:
        return I("v128.const", (bytes(16),))
    if t.is_ref:
        return I("ref.null", (t,))
    return I(f"{t.value}.const", (0,))


def _lower_value(t: ValType, local: int) -> list[Instruction]:
    get = I("local.get", (local,))
    if t is ValType.F32:
        return [get, I("i32.reinterpret_f32")]
    if t is ValType.F64:
        return [get, I("i64.reinterpret_f64")]
    if t is ValType.V128:
        return [get, I("i64x2.extract_lane", (1,)), get, I("i64x2.extract_lane", (0,))]
    if t.is_ref:
        return [get, I("ref.is_null")]
    return [get]


def entry_signature(module: WasmModule, export: str) -> FuncType:
    exp = module.export_of(export)
    if exp is None or exp.kind != "func":
        raise LoweringError(f"no function export named {export!r}")
    return module.func_type(exp.index)


def lower_entry(module: WasmModule, export: str) -> tuple[WasmModule, tuple[ValType, ...]]:
    """Return a copy of ``module`` with an integer-only wrapper around ``export``.

    Parameters of the entry are passed as zeros. Also returns the entry's
    original result types, needed to render the printed integers.
    """
    if ENTRY_WRAPPER in used_export_names(module):
        raise LoweringError(f"export {ENTRY_WRAPPER!r} already taken")
    sig = entry_signature(module, export)
    target = module.export_of(export).index
    m = copy_module(module)
    out_types = [lt for t in sig.results for lt in lowered(t)]
    body = [_zero(t) for t in sig.params] + [I("call", (target,))]
    # One local per result, popped in reverse then pushed back lowered.
    for k in reversed(range(len(sig.results))):
        body.append(I("local.set", (k,)))
    for k, t in enumerate(sig.results):
        body += _lower_value(t, k)
    m.functions.append(m.type_index(FuncType((), tuple(out_types))))
    m.codes.append(Code(tuple((1, t) for t in sig.results), tuple(body)))
    m.exports.append(Export(ENTRY_WRAPPER, "func", m.num_imported_funcs + len(m.functions) - 1))
    return m, tuple(sig.results)


def _canon_float(t: ValType, bits: int) -> int:
    if t is ValType.F32 and (bits >> 23) & 0xFF == 0xFF and bits & 0x7FFFFF:
        return CANONICAL_NAN[t]
    if t is ValType.F64 and (bits >> 52) & 0x7FF == 0x7FF and bits & 0xFFFFFFFFFFFFF:
        return CANONICAL_NAN[t]
    return bits


def hex_bits(t: ValType, bits: int, canonical_nan: bool = False) -> str:
    if canonical_nan and t in CANONICAL_NAN:
        bits = _canon_float(t, bits)
    return format(bits, f"0{WIDTH_DIGITS.get(t, 8)}x")


def canonical_hex(t: ValType, text: str, canonical_nan: bool = False) -> str:
    """Re-canonicalize an already rendered value (used for probe payloads)."""
    if not canonical_nan or t not in CANONICAL_NAN or not text:
        return text
    return hex_bits(t, int(text, 16), True)


def render(types, values: list[int], canonical_nan: bool = False) -> str:
    """Render the wrapper's integers as comma-separated raw-bit hex per original value.

    Raises ``ValueError`` when the count does not match the lowered shape.
    """
    expected = sum(len(lowered(t)) for t in types)
    if len(values) != expected:
        raise ValueError(f"expected {expected} printed values, got {len(values)}")
    out, it = [], iter(values)
    for t in types:
        if t is ValType.V128:
            hi, lo = next(it) & (2**64 - 1), next(it) & (2**64 - 1)
            out.append(format(hi << 64 | lo, "032x"))
        elif t in (ValType.I64, ValType.F64):
            out.append(hex_bits(t, next(it) & (2**64 - 1), canonical_nan))
        elif t.is_ref:
            out.append(format(next(it) & 1, "x"))
        else:
            out.append(hex_bits(t, next(it) & (2**32 - 1), canonical_nan))
    return ",".join(out)

