"""Validity-preserving mutations on AST sub-trees and on whole modules."""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass

from .corpus import AstNode, ConcreteContext
from .wasm.edit import add_function_import, copy_module, used_export_names
from .wasm.opcodes import ConstraintKind, Group, all_opcodes, instruction_meta
from .wasm.types import (
    Export,
    FuncType,
    Global,
    GlobalType,
    Instruction,
    Limits,
    StackType,
    TableType,
    ValType,
    WasmModule,
)

I32, I64, F32, F64, V128 = ValType.I32, ValType.I64, ValType.F32, ValType.F64, ValType.V128

AST_STRATEGIES = ("immediates", "simd", "swap")
MODULE_STRATEGIES = frozenset({"GlobalAttrs", "ImportExport", "MemoryLimits", "TableLimits"})

# Export names the harness and locator rely on; never handed out by mutation.
RESERVED_EXPORTS = frozenset({"main", "memory", "_start", "__wasmdiff_entry"})

# Host functions every harness runner provides.
WASI_IMPORTS: dict[str, FuncType] = {
    "fd_write": StackType((I32, I32, I32, I32), (I32,)),
    "proc_exit": StackType((I32,), ()),
}


@dataclass(frozen=True)
class MutationPlan:
    astBudget: float = 2.0  # noqa: N815
    moduleOps: frozenset[str] = MODULE_STRATEGIES  # noqa: N815
    validityBreaking: bool = False  # noqa: N815
    seed: int = 0
    astOps: tuple[str, ...] = AST_STRATEGIES  # noqa: N815
    wasiImports: bool = False  # noqa: N815

    def __post_init__(self) -> None:
        if self.validityBreaking:
            raise ValueError("validity-breaking mutations are not supported")
        unknown = set(self.moduleOps) - MODULE_STRATEGIES
        if unknown:
            raise ValueError(f"unknown module strategies: {sorted(unknown)}")
        if set(self.astOps) - set(AST_STRATEGIES):
            raise ValueError(f"unknown AST strategies: {self.astOps}")
        if self.astBudget < 0:
            raise ValueError("astBudget must be non-negative")


# -- boundary values -----------------------------------------------------------------------

INT_BOUNDARY = {
    32: (0, 1, -1, -(1 << 31), -(1 << 31) + 1, (1 << 31) - 1, (1 << 31) - 2),
    64: (0, 1, -1, -(1 << 63), -(1 << 63) + 1, (1 << 63) - 1, (1 << 63) - 2),
}
F32_BOUNDARY = (
    0x00000000, 0x80000000, 0x3F800000, 0xBF800000, 0x7F800000, 0xFF800000,
    0x7FC00000, 0xFFC00000, 0x7F800001, 0x7FBFFFFF,
    0x00000001, 0x80000001, 0x00800000, 0x7F7FFFFF, 0xFF7FFFFF,
)
F64_BOUNDARY = (
    0x0000000000000000, 0x8000000000000000, 0x3FF0000000000000, 0xBFF0000000000000,
    0x7FF0000000000000, 0xFFF0000000000000, 0x7FF8000000000000, 0xFFF8000000000000,
    0x7FF0000000000001, 0x7FF7FFFFFFFFFFFF,
    0x0000000000000001, 0x8000000000000001, 0x0010000000000000,
    0x7FEFFFFFFFFFFFFF, 0xFFEFFFFFFFFFFFFF,
)
OFFSET_BOUNDARY = (0, 1, 2, 4, 8, 255, 256, 4095, 65535, 65536, (1 << 31) - 1, 1 << 31,
                   (1 << 32) - 2, (1 << 32) - 1)

_LANE_FORMATS = {  # lane shape -> (struct code, boundary values as raw lane ints)
    "i8": ("B", (0, 1, 0x7F, 0x80, 0x81, 0xFE, 0xFF)),
    "i16": ("H", (0, 1, 0x7FFF, 0x8000, 0x8001, 0xFFFE, 0xFFFF)),
    "i32": ("I", tuple(v & 0xFFFFFFFF for v in INT_BOUNDARY[32])),
    "i64": ("Q", tuple(v & 0xFFFFFFFFFFFFFFFF for v in INT_BOUNDARY[64])),
    "f32": ("I", F32_BOUNDARY),
    "f64": ("Q", F64_BOUNDARY),
}


def boundary_v128(rng: random.Random) -> bytes:
    shape = rng.choice(sorted(_LANE_FORMATS))
    code, values = _LANE_FORMATS[shape]
    n = 16 // struct.calcsize(code)
    if rng.random() < 0.5:
        lanes = [rng.choice(values)] * n
    else:
        lanes = [rng.choice(values) for _ in range(n)]
    return struct.pack(f"<{n}{code}", *lanes)


def _boundary_for(op: str, old, rng: random.Random):
    if op == "i32.const":
        choices = INT_BOUNDARY[32]
    elif op == "i64.const":
        choices = INT_BOUNDARY[64]
    elif op == "f32.const":
        choices = F32_BOUNDARY
    elif op == "f64.const":
        choices = F64_BOUNDARY
    else:
        return boundary_v128(rng)
    others = [v for v in choices if v != old]
    return rng.choice(others)


# -- helpers -------------------------------------------------------------------------------


def _ctx(op: str, like: AstNode | None = None) -> ConcreteContext:
    constraints = ()
    if like is not None and like.context.constraint(ConstraintKind.MEMORY_RANGE) is not None:
        constraints = (like.context.constraint(ConstraintKind.MEMORY_RANGE),)
    return ConcreteContext(instruction_meta(op).stack, constraints)


def _node(op: str, children: list[AstNode], imm: tuple = (), like: AstNode | None = None) -> AstNode:
    return AstNode(Instruction(op, imm), _ctx(op, like), children, len(children))


def _well_formed(node: AstNode) -> bool:
    """True when every operand child yields exactly one value (no interleaved void roots)."""
    return node.n_operands == len(node.context.stackType.params) and all(
        len(c.context.stackType.results) == 1 for c in node.operands
    )


def _transform(node: AstNode, site, rng: random.Random, rate: float | None, state: dict) -> AstNode:
    """Rebuild ``node`` bottom-up, applying ``site`` where selected.

    ``site(node, rng)`` returns a replacement or None when not applicable.
    With ``rate`` None exactly one eligible site (chosen up front) mutates.
    """
    children = [_transform(c, site, rng, rate, state) for c in node.children]
    node = AstNode(node.instruction, node.context, children, node.n_operands, node.else_at)
    if not site.eligible(node):
        return node
    idx = state["seen"]
    state["seen"] += 1
    chosen = (rate is None and idx == state["target"]) or (rate is not None and rng.random() < rate)
    if not chosen:
        return node
    new = site.apply(node, rng)
    if new is None:
        return node
    state["log"].append({"strategy": site.name, "site": idx,
                         "before": repr(node.instruction), "after": repr(new.instruction)})
    return new


def _run(node: AstNode, site, rng: random.Random, rate: float | None, log: list | None) -> AstNode:
    state = {"seen": 0, "target": -1, "log": log if log is not None else []}
    if rate is None:
        n = count_sites(node, site)
        if n == 0:
            return node
        state["target"] = rng.randrange(n)
    return _transform(node, site, rng, rate, state)


def count_sites(node: AstNode, site) -> int:
    return sum(1 for n in node.walk() if site.eligible(n))


# -- immediates ----------------------------------------------------------------------------

_CONSTS = frozenset({"i32.const", "i64.const", "f32.const", "f64.const", "v128.const"})


class _Immediates:
    name = "immediates"

    @staticmethod
    def eligible(node: AstNode) -> bool:
        op = node.instruction.opcode
        return op in _CONSTS or instruction_meta(op).imm in ("memarg", "memarg_lane")

    @staticmethod
    def apply(node: AstNode, rng: random.Random) -> AstNode | None:
        ins = node.instruction
        op = ins.opcode
        if op in _CONSTS:
            new = ins.with_imm(_boundary_for(op, ins.immediates[0], rng))
        else:
            meta = instruction_meta(op)
            align = rng.randrange(meta.natural_align + 1)
            offset = rng.choice(OFFSET_BOUNDARY)
            new = ins.with_imm(align, offset, *ins.immediates[2:])
        return AstNode(new, node.context, node.children, node.n_operands, node.else_at)


def mutate_immediates(node: AstNode, rng: random.Random, rate: float | None = None,
                      log: list | None = None) -> AstNode:
    """Swap constants for boundary values and memargs for boundary offsets / legal alignments."""
    return _run(node, _Immediates, rng, rate, log)


# -- scalar to SIMD ------------------------------------------------------------------------

_SPLAT = {I32: "i32x4.splat", I64: "i64x2.splat", F32: "f32x4.splat", F64: "f64x2.splat"}
_EXTRACT = {I32: "i32x4.extract_lane", I64: "i64x2.extract_lane",
            F32: "f32x4.extract_lane", F64: "f64x2.extract_lane"}
_SHAPE = {I32: "i32x4", I64: "i64x2", F32: "f32x4", F64: "f64x2"}
_PREFIX = {"i32": I32, "i64": I64, "f32": F32, "f64": F64}

_LANEWISE_BINARY = {
    "i32": {"add": "i32x4.add", "sub": "i32x4.sub", "mul": "i32x4.mul",
            "and": "v128.and", "or": "v128.or", "xor": "v128.xor"},
    "i64": {"add": "i64x2.add", "sub": "i64x2.sub", "mul": "i64x2.mul",
            "and": "v128.and", "or": "v128.or", "xor": "v128.xor"},
    "f32": {n: f"f32x4.{n}" for n in ("add", "sub", "mul", "div", "min", "max")},
    "f64": {n: f"f64x2.{n}" for n in ("add", "sub", "mul", "div", "min", "max")},
}
_LANEWISE_SHIFT = {"i32": {"shl", "shr_s", "shr_u"}, "i64": {"shl", "shr_s", "shr_u"}}
_LANEWISE_UNARY = {
    p: {n: f"{_SHAPE[_PREFIX[p]]}.{n}" for n in ("abs", "neg", "sqrt", "ceil", "floor", "trunc", "nearest")}
    for p in ("f32", "f64")
}
# scalar load -> (lane-carrying vector load, lane extraction, widening to the scalar type)
_LOADS = {
    "i32.load": ("v128.load32_zero", "i32x4.extract_lane", None),
    "i64.load": ("v128.load64_zero", "i64x2.extract_lane", None),
    "f32.load": ("v128.load32_zero", "f32x4.extract_lane", None),
    "f64.load": ("v128.load64_zero", "f64x2.extract_lane", None),
    "i32.load8_s": ("v128.load8_splat", "i8x16.extract_lane_s", None),
    "i32.load8_u": ("v128.load8_splat", "i8x16.extract_lane_u", None),
    "i32.load16_s": ("v128.load16_splat", "i16x8.extract_lane_s", None),
    "i32.load16_u": ("v128.load16_splat", "i16x8.extract_lane_u", None),
    "i64.load8_s": ("v128.load8_splat", "i8x16.extract_lane_s", "i64.extend_i32_s"),
    "i64.load8_u": ("v128.load8_splat", "i8x16.extract_lane_u", "i64.extend_i32_u"),
    "i64.load16_s": ("v128.load16_splat", "i16x8.extract_lane_s", "i64.extend_i32_s"),
    "i64.load16_u": ("v128.load16_splat", "i16x8.extract_lane_u", "i64.extend_i32_u"),
    "i64.load32_s": ("v128.load32_zero", "i32x4.extract_lane", "i64.extend_i32_s"),
    "i64.load32_u": ("v128.load32_zero", "i32x4.extract_lane", "i64.extend_i32_u"),
}
# scalar store -> (lane store, splat of the stored value, narrowing applied first)
_STORES = {
    "i32.store": ("v128.store32_lane", "i32x4.splat", None),
    "i64.store": ("v128.store64_lane", "i64x2.splat", None),
    "f32.store": ("v128.store32_lane", "f32x4.splat", None),
    "f64.store": ("v128.store64_lane", "f64x2.splat", None),
    "i32.store8": ("v128.store8_lane", "i8x16.splat", None),
    "i32.store16": ("v128.store16_lane", "i16x8.splat", None),
    "i64.store8": ("v128.store8_lane", "i8x16.splat", "i32.wrap_i64"),
    "i64.store16": ("v128.store16_lane", "i16x8.splat", "i32.wrap_i64"),
    "i64.store32": ("v128.store32_lane", "i32x4.splat", "i32.wrap_i64"),
}


def simd_analogue(op: str) -> str | None:
    """Name of the vector instruction a scalar op is rewritten through, if any."""
    if op in _LOADS:
        return _LOADS[op][0]
    if op in _STORES:
        return _STORES[op][0]
    prefix, _, name = op.partition(".")
    if prefix not in _PREFIX:
        return None
    if name == "const":
        return "v128.const"
    if name in _LANEWISE_BINARY.get(prefix, {}):
        return _LANEWISE_BINARY[prefix][name]
    if name in _LANEWISE_SHIFT.get(prefix, ()):
        return f"{_SHAPE[_PREFIX[prefix]]}.{name}"
    if name in _LANEWISE_UNARY.get(prefix, {}):
        return _LANEWISE_UNARY[prefix][name]
    return None


def _const_v128(op: str, value) -> bytes:
    t = _PREFIX[op.split(".")[0]]
    code = {I32: "<4i", I64: "<2q", F32: "<4I", F64: "<2Q"}[t]
    n = int(code[1])
    return struct.pack(code, *([value] * n))


class _ToSimd:
    name = "simd"

    @staticmethod
    def eligible(node: AstNode) -> bool:
        op = node.instruction.opcode
        return simd_analogue(op) is not None and (op.endswith(".const") or _well_formed(node))

    @staticmethod
    def apply(node: AstNode, rng: random.Random) -> AstNode | None:
        ins = node.instruction
        op = ins.opcode
        kids = node.operands
        if op in _LOADS:
            vload, extract, widen = _LOADS[op]
            align, offset = ins.immediates
            inner = _node(vload, kids, (min(align, instruction_meta(vload).natural_align), offset), node)
            out = _node(extract, [inner], (0,))
            return _node(widen, [out]) if widen else out
        if op in _STORES:
            vstore, splat, narrow = _STORES[op]
            addr, value = kids
            if narrow:
                value = _node(narrow, [value])
            align, offset = ins.immediates
            return _node(vstore, [addr, _node(splat, [value])], (align, offset, 0), node)
        t = _PREFIX[op.split(".")[0]]
        name = op.split(".", 1)[1]
        if name == "const":
            return _node(_EXTRACT[t], [_node("v128.const", [], (_const_v128(op, ins.immediates[0]),))], (0,))
        vop = simd_analogue(op)
        if name in ("shl", "shr_s", "shr_u"):
            value, count = kids
            if t is I64:
                count = _node("i32.wrap_i64", [count])
            inner = _node(vop, [_node(_SPLAT[t], [value]), count])
        else:
            inner = _node(vop, [_node(_SPLAT[t], [k]) for k in kids])
        return _node(_EXTRACT[t], [inner], (0,))


def mutate_to_simd(node: AstNode, rng: random.Random, rate: float | None = None,
                   log: list | None = None) -> AstNode:
    """Route scalar arithmetic, constants, loads and stores through lane 0 of a vector."""
    return _run(node, _ToSimd, rng, rate, log)


# -- same-stack-type swap ------------------------------------------------------------------


def _build_swap_classes() -> dict[str, tuple[str, ...]]:
    classes: dict[tuple, list[str]] = {}
    for op in all_opcodes():
        meta = instruction_meta(op)
        if meta.group not in (Group.NUMERIC, Group.VECTOR) or meta.imm != "none":
            continue
        if not meta.stack.concrete or meta.constraint is not ConstraintKind.NONE:
            continue
        classes.setdefault((meta.stack.params, meta.stack.results), []).append(op)
    out: dict[str, tuple[str, ...]] = {}
    for members in classes.values():
        for op in members:
            out[op] = tuple(m for m in members if m != op)
    return out


SWAP_CLASSES = _build_swap_classes()


class _Swap:
    name = "swap"

    @staticmethod
    def eligible(node: AstNode) -> bool:
        return bool(SWAP_CLASSES.get(node.instruction.opcode))

    @staticmethod
    def apply(node: AstNode, rng: random.Random) -> AstNode | None:
        new_op = rng.choice(SWAP_CLASSES[node.instruction.opcode])
        return AstNode(Instruction(new_op), _ctx(new_op), node.children, node.n_operands, node.else_at)


def swap_same_stacktype(node: AstNode, rng: random.Random, rate: float | None = None,
                        log: list | None = None) -> AstNode:
    """Replace instructions by others sharing their exact stack type (e.g. add <-> sub)."""
    return _run(node, _Swap, rng, rate, log)


_SITES = {"immediates": _Immediates, "simd": _ToSimd, "swap": _Swap}
_OPS = {"immediates": mutate_immediates, "simd": mutate_to_simd, "swap": swap_same_stacktype}


def mutate_ast(roots: list[AstNode], plan: MutationPlan, rng: random.Random,
               log: list | None = None) -> list[AstNode]:
    """Apply the plan's AST strategies to one function's roots.

    Each eligible site mutates with probability astBudget / eligible-site count,
    so the expected number of mutations per function equals the budget.
    """
    if not plan.astOps or plan.astBudget == 0:
        return roots
    total = sum(count_sites(r, _SITES[s]) for r in roots for s in plan.astOps)
    if total == 0:
        return roots
    rate = min(1.0, plan.astBudget / total)
    out = []
    for r in roots:
        for s in plan.astOps:
            r = _OPS[s](r, rng, rate, log)
        out.append(r)
    return out


# -- module level --------------------------------------------------------------------------


def _set_globals(module: WasmModule) -> set[int]:
    targets = set()
    for code in module.codes:
        for ins in code.body:
            if ins.opcode == "global.set":
                targets.add(ins.immediates[0])
    return targets


def _mutate_global_attrs(m: WasmModule, rng: random.Random, log: list) -> None:
    base = len(m.imported("global"))
    written = _set_globals(m)
    for i, g in enumerate(m.globals):
        if base + i in written or rng.random() >= 0.5:
            continue
        m.globals[i] = Global(GlobalType(g.type.valtype, not g.type.mutable), g.init)
        log.append({"strategy": "GlobalAttrs", "site": f"global {base + i}",
                    "before": "mut" if g.type.mutable else "const",
                    "after": "const" if g.type.mutable else "mut"})


_NAME_ALPHABET = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_$."


def fresh_export_name(rng: random.Random, taken: set[str]) -> str:
    """An unused, possibly odd-looking export name (empty, NUL-led, non-ASCII)."""
    while True:
        style = rng.randrange(4)
        body = "".join(rng.choice(_NAME_ALPHABET) for _ in range(rng.randrange(1, 8)))
        name = ["", "\x00" + body, body, body + "é中"][style]
        if name not in taken and name not in RESERVED_EXPORTS:
            return name


def _mutate_import_export(m: WasmModule, plan: MutationPlan, rng: random.Random, log: list) -> None:
    taken = used_export_names(m)
    kinds = [("func", len(m.func_type_indices())), ("memory", len(m.all_memories())),
             ("global", len(m.all_global_types())), ("table", len(m.all_tables()))]
    kinds = [(k, n) for k, n in kinds if n]
    for _ in range(rng.randrange(1, 4)):
        kind, n = rng.choice(kinds)
        name = fresh_export_name(rng, taken)
        taken.add(name)
        m.exports.append(Export(name, kind, rng.randrange(n)))
        log.append({"strategy": "ImportExport", "site": f"export {name!r}",
                    "before": "", "after": f"{kind} {m.exports[-1].index}"})
    if plan.wasiImports and rng.random() < 0.5:
        name = rng.choice(sorted(WASI_IMPORTS))
        idx = add_function_import(m, "wasi_snapshot_preview1", name, WASI_IMPORTS[name])
        log.append({"strategy": "ImportExport", "site": f"import {name}",
                    "before": "", "after": f"func {idx}"})


def _data_pages(m: WasmModule) -> int:
    end = 0
    for seg in m.datas:
        if seg.mode == "active" and seg.offset and seg.offset[0].opcode == "i32.const":
            end = max(end, (seg.offset[0].immediates[0] & 0xFFFFFFFF) + len(seg.data))
    return -(-end // 65536)


def _mutate_memory_limits(m: WasmModule, rng: random.Random, log: list) -> None:
    if not m.memories:
        return
    lim = m.memories[0]
    floor = _data_pages(m)
    lo = lim.min
    if rng.random() < 0.3 and lim.min > floor:
        # Shrinking below constant addresses is fine: it only provokes traps.
        lo = rng.randrange(floor, lim.min + 1)
    hi = lo + rng.choice((0, 1, rng.randrange(2, 17)))
    new = Limits(lo, min(hi, 65536))
    if new != lim:
        m.memories[0] = new
        log.append({"strategy": "MemoryLimits", "site": "memory 0",
                    "before": f"{lim.min}..{lim.max}", "after": f"{new.min}..{new.max}"})


def _mutate_table_limits(m: WasmModule, rng: random.Random, log: list) -> None:
    for i, t in enumerate(m.tables):
        need = 0
        for seg in m.elements:
            if seg.mode == "active" and seg.table == i and seg.offset \
                    and seg.offset[0].opcode == "i32.const":
                need = max(need, seg.offset[0].immediates[0] + len(seg.init))
        lo = need + rng.choice((0, 0, 1, rng.randrange(2, 9)))
        hi = rng.choice((lo, lo + 1, lo + rng.randrange(2, 33), None))
        new = TableType(t.elem_type, Limits(lo, hi))
        if new != t:
            m.tables[i] = new
            log.append({"strategy": "TableLimits", "site": f"table {i}",
                        "before": f"{t.limits.min}..{t.limits.max}", "after": f"{lo}..{hi}"})


def mutate_module(module: WasmModule, plan: MutationPlan, rng: random.Random,
                  log: list | None = None) -> WasmModule:
    """Apply the plan's module-level strategies to a copy of ``module``."""
    log = log if log is not None else []
    m = copy_module(module)
    for strategy in sorted(plan.moduleOps):
        if strategy == "GlobalAttrs":
            _mutate_global_attrs(m, rng, log)
        elif strategy == "ImportExport":
            _mutate_import_export(m, plan, rng, log)
        elif strategy == "MemoryLimits":
            _mutate_memory_limits(m, rng, log)
        elif strategy == "TableLimits":
            _mutate_table_limits(m, rng, log)
    return m

