"""Bottom-up assembly of runnable binaries from corpus sub-trees.

A function body is built from sampled roots over five typed locals. Every
call site then gets a freshly synthesized callee (a tree, never a graph),
indirect callees are registered in a funcref table, and finally memory,
data, globals and the entry export are added.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass, field
from typing import Any

from .corpus import AstNode, Corpus
from .wasm.binary import encode_module
from .wasm.opcodes import BLOCK_OPENERS, ConstraintKind, instruction_meta
from .wasm.oracle import independent_validate
from .wasm.types import (
    PRIMARY_TYPES,
    TYPE_SLOT,
    Code,
    DataSegment,
    ElementSegment,
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
from .wasm.validate import validate_module

PAGE = 65536
ENTRY_EXPORT = "main"
K = ConstraintKind

# Instructions whose semantics depend on module parts the generator never
# emits (reference values, tables beyond the indirect-call table, passive data).
_EXCLUDED_OPS = frozenset({
    "ref.null", "ref.is_null", "ref.func", "table.get", "table.set", "table.size",
    "table.grow", "table.fill", "table.copy", "table.init", "elem.drop",
    "memory.init", "data.drop", "unreachable",
})


class EmptyCorpus(Exception):
    pass


class GenerationFailed(Exception):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass
class GenConfig:
    subtreesPerFunction: int = 4  # noqa: N815
    maxCallDepth: int = 3  # noqa: N815
    # None draws one random type among the five for every binary.
    entryResultTypes: list[ValType] | None = None  # noqa: N815
    memoryPageCap: int = 16  # noqa: N815
    seed: int = 0
    maxFunctions: int = 32  # noqa: N815
    # Total loop iterations before every function returns early; None disables the guard.
    loopFuel: int | None = 100_000  # noqa: N815
    mutation: Any = None  # MutationPlan; kept untyped to avoid an import cycle

    def __post_init__(self) -> None:
        if self.maxCallDepth < 1 or self.memoryPageCap < 1 or self.subtreesPerFunction < 0:
            raise ValueError("maxCallDepth and memoryPageCap must be >= 1")


@dataclass
class GeneratedBinary:
    bytes: bytes
    moduleIR: WasmModule  # noqa: N815
    entryExportName: str = ENTRY_EXPORT  # noqa: N815
    lineage: dict = field(default_factory=dict)

    @property
    def binary_id(self) -> str:
        return hashlib.sha256(self.bytes).hexdigest()


# -- root profiling -------------------------------------------------------------------


@dataclass(frozen=True)
class RootProfile:
    portable: bool
    has_call: bool
    escapes: bool


def _types_of(node: AstNode):
    st = node.context.stackType
    yield from st.params
    yield from st.results
    for c in node.context.constraints:
        if c.valueType is not None:
            yield c.valueType
        if c.signature is not None:
            yield from c.signature.params
            yield from c.signature.results


def profile_root(root: AstNode) -> RootProfile:
    """Decide whether a corpus root can be transplanted into a generated function."""
    portable, has_call, escapes = True, False, False
    work = [(root, 0)]
    while work:
        node, nest = work.pop()
        op = node.instruction.opcode
        if op in _EXCLUDED_OPS or any(t not in TYPE_SLOT for t in _types_of(node)):
            portable = False
        if op in ("call", "call_indirect"):
            has_call = True
        if op == "select_t" and any(t not in TYPE_SLOT for t in node.instruction.immediates[0]):
            portable = False
        escape_arity = _escape_arity(node, nest)
        if escape_arity is not None:
            escapes = True
            # A conditional escape with values cannot be rerouted to a void wrapper.
            if escape_arity > 0 and op in ("br_if", "br_table"):
                portable = False
        for i, c in enumerate(node.children):
            work.append((c, nest + (1 if i >= node.n_operands else 0)))
    if escapes and root.context.stackType.results:
        portable = False
    return RootProfile(portable, has_call, escapes)


def _escape_arity(node: AstNode, nest: int) -> int | None:
    """Label arity if ``node`` branches outside the root it belongs to."""
    op = node.instruction.opcode
    imm = node.instruction.immediates
    if op == "return":
        targets = [nest]
    elif op in ("br", "br_if"):
        targets = [imm[0]]
    elif op == "br_table":
        targets = list(imm[0]) + [imm[1]]
    else:
        return None
    if not any(t >= nest for t in targets):
        return None
    return len(node.context.constraint(K.BLOCK_SIG).signature.params)


class RootPool:
    """Corpus entries split by transplantability, profiled once."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self.any: list[int] = []
        self.call_free: list[int] = []
        for i, root in enumerate(corpus.entries):
            prof = profile_root(root)
            if not prof.portable:
                continue
            self.any.append(i)
            if not prof.has_call:
                self.call_free.append(i)

    def sample(self, rng: random.Random, leaf: bool) -> int | None:
        pool = self.call_free if leaf else self.any
        return rng.choice(pool) if pool else None


# -- function bodies ---------------------------------------------------------------------------


def clone(node: AstNode) -> AstNode:
    return AstNode(node.instruction, node.context, [clone(c) for c in node.children],
                   node.n_operands, node.else_at)


def _blocktype_for(sig: FuncType, types: list[FuncType]):
    if not sig.params and not sig.results:
        return None
    if not sig.params and len(sig.results) == 1:
        return sig.results[0]
    return _blocktype_index(sig, types)


def _rewrite_indices(root: AstNode, nparams: int, types: list[FuncType]) -> None:
    """Point variable accesses at the flattened typed slots; re-home block types."""
    for node in root.walk():
        ins = node.instruction
        op = ins.opcode
        if op.startswith("local."):
            t = node.context.constraint(K.LOCAL_REF).valueType
            node.instruction = ins.with_imm(nparams + TYPE_SLOT[t])
        elif op.startswith("global."):
            t = node.context.constraint(K.GLOBAL_REF).valueType
            node.instruction = ins.with_imm(TYPE_SLOT[t])
        elif op in BLOCK_OPENERS:
            sig = node.context.constraint(K.BLOCK_SIG).signature
            node.instruction = ins.with_imm(_blocktype_for(sig, types))
        elif op == "call_indirect":
            sig = node.context.constraint(K.INDIRECT_CALL).signature
            tidx = _blocktype_index(sig, types)
            node.instruction = ins.with_imm(tidx, 0)


def _blocktype_index(sig: FuncType, types: list[FuncType]) -> int:
    for i, t in enumerate(types):
        if t == sig:
            return i
    types.append(StackType(tuple(sig.params), tuple(sig.results)))
    return len(types) - 1


@dataclass
class FunctionDraft:
    """A generated function whose body is still a list of AST roots."""

    sig: FuncType
    roots: list[AstNode]
    fingerprints: list[str]
    depth: int = 0
    escaping: list[bool] = field(default_factory=list)
    # id(call node) -> callee function index, id(call_indirect node) -> slot
    callees: dict[int, int] = field(default_factory=dict)
    slots: dict[int, int] = field(default_factory=dict)
    fuel_global: int | None = None

    @property
    def nparams(self) -> int:
        return len(self.sig.params)

    def local_decls(self) -> tuple[tuple[int, ValType], ...]:
        return tuple((1, t) for t in PRIMARY_TYPES)

    def body(self) -> list[Instruction]:
        out: list[Instruction] = []
        base = self.nparams
        # Arguments flow into the typed slots so callers influence callees.
        for i, t in enumerate(self.sig.params):
            out += [Instruction("local.get", (i,)), Instruction("local.set", (base + TYPE_SLOT[t],))]
        for root, escaping in zip(self.roots, self.escaping):
            if escaping:
                out.append(Instruction("block", (None,)))
                self._emit(root, out, 0, True)
                out.append(Instruction("end"))
            else:
                self._emit(root, out, 0, False)
            out.extend([Instruction("drop")] * len(root.context.stackType.results))
        return out + self._results()

    def code(self) -> Code:
        return Code(self.local_decls(), tuple(self.body()))

    def _results(self) -> list[Instruction]:
        return [Instruction("local.get", (self.nparams + TYPE_SLOT[t],)) for t in self.sig.results]

    def _fuel_check(self) -> list[Instruction]:
        """Return early once the shared iteration budget is spent, else decrement it."""
        g = self.fuel_global
        return [
            Instruction("global.get", (g,)), Instruction("i32.eqz"), Instruction("if", (None,)),
            *self._results(), Instruction("return"), Instruction("end"),
            Instruction("global.get", (g,)), Instruction("i32.const", (1,)), Instruction("i32.sub"),
            Instruction("global.set", (g,)),
        ]

    def _emit(self, node: AstNode, out: list[Instruction], nest: int, wrapped: bool) -> None:
        for c in node.operands:
            self._emit(c, out, nest, wrapped)
        ins = node.instruction
        op = ins.opcode
        if op == "call":
            out.append(ins.with_imm(self.callees[id(node)]))
            return
        if op == "call_indirect":
            out += [Instruction("drop"), Instruction("i32.const", (self.slots[id(node)],)), ins]
            return
        if wrapped and op in ("br", "br_if", "br_table", "return"):
            out.extend(_reroute(node, nest))
            return
        out.append(ins)
        if op not in BLOCK_OPENERS:
            return
        if op == "loop" and self.fuel_global is not None:
            out.extend(self._fuel_check())
        for c in node.then_body:
            self._emit(c, out, nest + 1, wrapped)
        if node.else_at is not None:
            out.append(Instruction("else"))
            for c in node.else_body:
                self._emit(c, out, nest + 1, wrapped)
        out.append(Instruction("end"))


def _reroute(node: AstNode, nest: int) -> list[Instruction]:
    """Redirect a branch leaving its root to the void wrapper block around it."""
    ins = node.instruction
    op, imm = ins.opcode, ins.immediates
    if op == "br_table":
        labels = tuple(min(d, nest) for d in imm[0])
        return [ins.with_imm(labels, min(imm[1], nest))]
    if op == "br_if":
        return [ins.with_imm(min(imm[0], nest))]
    if op == "br" and imm[0] < nest:
        return [ins]
    sig = node.context.constraint(K.BLOCK_SIG).signature
    return [Instruction("drop")] * len(sig.params) + [Instruction("br", (nest,))]


def build_entry_function(corpus: Corpus, cfg: GenConfig, rng: random.Random,
                         sig: FuncType | None = None, types: list[FuncType] | None = None,
                         pool: RootPool | None = None, leaf: bool = False,
                         mutation_log: list | None = None) -> FunctionDraft:
    """Sample roots into a body over five typed locals (after any params).

    ``sig`` defaults to a zero-parameter entry returning ``cfg.entryResultTypes``.
    ``leaf`` restricts sampling to call-free roots.
    """
    if not len(corpus):
        raise EmptyCorpus("corpus has no entries")
    pool = pool or RootPool(corpus)
    types = types if types is not None else []
    if sig is None:
        results = cfg.entryResultTypes
        if results is None:
            results = [rng.choice(PRIMARY_TYPES)]
        sig = StackType((), tuple(results))
    roots, fps, escaping = [], [], []
    for _ in range(cfg.subtreesPerFunction):
        idx = pool.sample(rng, leaf)
        if idx is None:
            break
        root = clone(corpus.entries[idx])
        fps.append(corpus.fingerprints[idx])
        roots.append(root)
    if cfg.mutation is not None and roots:
        from .mutator import mutate_ast

        roots = mutate_ast(roots, cfg.mutation, rng, mutation_log)
    for root in roots:
        _rewrite_indices(root, len(sig.params), types)
        escaping.append(profile_root(root).escapes)
    fuel = len(PRIMARY_TYPES) if cfg.loopFuel is not None else None
    return FunctionDraft(sig, roots, fps, escaping=escaping, fuel_global=fuel)


# -- call tree ------------------------------------------------------------------------------


@dataclass
class ModuleDraft:
    functions: list[FunctionDraft]
    types: list[FuncType]
    table: list[int] = field(default_factory=list)  # slot -> function index
    mutation_log: list = field(default_factory=list)


def maintain_invocations(draft: ModuleDraft, corpus: Corpus, cfg: GenConfig,
                         rng: random.Random, pool: RootPool | None = None) -> ModuleDraft:
    """Give every call site its own freshly synthesized callee.

    Callees are built like the entry function, one level deeper; at
    ``maxCallDepth`` (or once ``maxFunctions`` is reached) they are built
    from call-free roots only. Indirect callees also get a table slot.
    """
    pool = pool or RootPool(corpus)
    queue = list(range(len(draft.functions)))
    while queue:
        fidx = queue.pop(0)
        fn = draft.functions[fidx]
        for root in fn.roots:
            for node in root.walk():
                op = node.instruction.opcode
                if op not in ("call", "call_indirect") or id(node) in fn.callees \
                        or id(node) in fn.slots:
                    continue
                kind = K.DIRECT_CALL if op == "call" else K.INDIRECT_CALL
                sig = node.context.constraint(kind).signature
                depth = fn.depth + 1
                leaf = depth >= cfg.maxCallDepth or len(draft.functions) >= cfg.maxFunctions
                callee = build_entry_function(corpus, cfg, rng, sig, draft.types, pool, leaf,
                                              draft.mutation_log)
                callee.depth = depth
                draft.functions.append(callee)
                new_idx = len(draft.functions) - 1
                queue.append(new_idx)
                if op == "call":
                    fn.callees[id(node)] = new_idx
                else:
                    fn.slots[id(node)] = len(draft.table)
                    draft.table.append(new_idx)
    return draft


# -- module sections ---------------------------------------------------------------------------


def static_address_bound(draft: ModuleDraft) -> tuple[bool, int]:
    """(uses memory, highest byte end reachable from constant addresses)."""
    uses, bound = False, 0
    for fn in draft.functions:
        for root in fn.roots:
            for node in root.walk():
                meta = instruction_meta(node.instruction.opcode)
                if node.context.constraint(K.MEMORY_RANGE) is None:
                    continue
                uses = True
                if meta.imm not in ("memarg", "memarg_lane") or not node.n_operands:
                    continue
                addr = node.operands[0]
                if addr.instruction.opcode != "i32.const" or addr.children:
                    continue
                base = addr.instruction.immediates[0] & 0xFFFFFFFF
                end = base + node.instruction.immediates[1] + meta.mem_bytes
                bound = max(bound, end)
    return uses, bound


def _random_const(t: ValType, rng: random.Random) -> Instruction:
    if t is ValType.I32:
        return Instruction("i32.const", (rng.randrange(-(1 << 31), 1 << 31),))
    if t is ValType.I64:
        return Instruction("i64.const", (rng.randrange(-(1 << 63), 1 << 63),))
    if t is ValType.F32:
        return Instruction("f32.const", (struct.unpack("<I", struct.pack("<f", rng.uniform(-1e3, 1e3)))[0],))
    if t is ValType.F64:
        return Instruction("f64.const", (struct.unpack("<Q", struct.pack("<d", rng.uniform(-1e6, 1e6)))[0],))
    return Instruction("v128.const", (rng.randbytes(16),))


def supplement_sections(draft: ModuleDraft, cfg: GenConfig, rng: random.Random) -> WasmModule:
    """Lower the draft into a module with memory, data, table, globals and export."""
    m = WasmModule(types=draft.types)
    for fn in draft.functions:
        m.functions.append(_blocktype_index(fn.sig, m.types))
        m.codes.append(fn.code())

    uses_memory, bound = static_address_bound(draft)
    if uses_memory:
        cap_bytes = cfg.memoryPageCap * PAGE
        pages = min(max(1, -(-bound // PAGE)), cfg.memoryPageCap)
        m.memories.append(Limits(pages, cfg.memoryPageCap))
        size = min(max(bound, 256), pages * PAGE, cap_bytes)
        m.datas.append(DataSegment(0, "active", rng.randbytes(size), 0,
                                   (Instruction("i32.const", (0,)),)))

    if draft.table:
        n = len(draft.table)
        m.tables.append(TableType(ValType.FUNCREF, Limits(n, n)))
        m.elements.append(ElementSegment(0, "active", ValType.FUNCREF, tuple(draft.table), 0,
                                         (Instruction("i32.const", (0,)),)))

    for t in PRIMARY_TYPES:
        init = _random_const(t, rng)
        if t is ValType.I32 and uses_memory:
            # Compiled code treats the first i32 global as a stack pointer.
            init = Instruction("i32.const", (m.memories[0].min * PAGE // 2,))
        m.globals.append(Global(GlobalType(t, True), (init,)))
    if cfg.loopFuel is not None:
        m.globals.append(Global(GlobalType(ValType.I32, True),
                                (Instruction("i32.const", (cfg.loopFuel,)),)))

    m.exports.append(Export(ENTRY_EXPORT, "func", 0))
    return m


# -- end to end --------------------------------------------------------------------------


def generate_binary(corpus: Corpus, cfg: GenConfig, pool: RootPool | None = None) -> GeneratedBinary:
    """Build bodies, call tree and sections (plus optional mutation) for ``cfg.seed``."""
    if not len(corpus):
        raise EmptyCorpus("corpus has no entries")
    rng = random.Random(cfg.seed)
    pool = pool or RootPool(corpus)
    draft = ModuleDraft([], [])
    entry = build_entry_function(corpus, cfg, rng, types=draft.types, pool=pool,
                                 mutation_log=draft.mutation_log)
    draft.functions.append(entry)
    maintain_invocations(draft, corpus, cfg, rng, pool)
    module = supplement_sections(draft, cfg, rng)
    if cfg.mutation is not None:
        from .mutator import mutate_module

        module = mutate_module(module, cfg.mutation, rng, draft.mutation_log)

    diagnostics: list[str] = []
    verdict = validate_module(module)
    if not verdict.ok:
        diagnostics += [str(v) for v in verdict.violations]
    data = encode_module(module)
    ok, msg = independent_validate(data)
    if not ok:
        diagnostics.append(f"independent validator: {msg}")
    if diagnostics:
        raise GenerationFailed(diagnostics)
    lineage = {
        "seed": cfg.seed,
        "functions": [fn.fingerprints for fn in draft.functions],
        "fingerprints": [fp for fn in draft.functions for fp in fn.fingerprints],
        "mutations": draft.mutation_log,
    }
    return GeneratedBinary(data, module, ENTRY_EXPORT, lineage)
