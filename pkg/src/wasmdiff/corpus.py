"""Corpus of context-annotated AST sub-trees harvested from real binaries.

Each function body is split into root sub-trees: every instruction adopts the
preceding roots that produce its operands, and block/loop/if nodes carry
their nested bodies. Roots are deduplicated by an opcode-only structural hash.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .wasm.binary import Reader, decode_module, encode_instruction, read_instruction
from .wasm.errors import WasmError
from .wasm.opcodes import BLOCK_OPENERS, ConstraintKind, Group, instruction_meta
from .wasm.types import Instruction, StackType, ValType, WasmModule
from .wasm.validate import InstrTyping, ValidationError, module_context, type_function, validate_module

log = logging.getLogger(__name__)

MAX_DEPTH = 64
MAX_WIDTH = 4096
MAX_NESTING = 400
CORPUS_FORMAT = "wasmdiff-corpus"
CORPUS_VERSION = 1


class UnresolvableContext(Exception):
    pass


class StackUnderflow(Exception):
    pass


@dataclass(frozen=True)
class SemanticConstraint:
    kind: ConstraintKind
    index: int = 0
    valueType: ValType | None = None  # noqa: N815
    pageMin: int | None = None  # noqa: N815
    pageMax: int | None = None  # noqa: N815
    signature: StackType | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "index": self.index}
        if self.valueType is not None:
            out["valueType"] = self.valueType.value
        if self.pageMin is not None:
            out["pageMin"] = self.pageMin
        if self.pageMax is not None:
            out["pageMax"] = self.pageMax
        if self.signature is not None:
            out["signature"] = _stack_to_json(self.signature)
        return out

    @classmethod
    def from_json(cls, d: dict) -> SemanticConstraint:
        return cls(
            ConstraintKind(d["kind"]),
            d.get("index", 0),
            ValType(d["valueType"]) if "valueType" in d else None,
            d.get("pageMin"),
            d.get("pageMax"),
            _stack_from_json(d["signature"]) if "signature" in d else None,
        )


@dataclass(frozen=True)
class ConcreteContext:
    stackType: StackType  # noqa: N815
    constraints: tuple[SemanticConstraint, ...] = ()

    def constraint(self, kind: ConstraintKind) -> SemanticConstraint | None:
        for c in self.constraints:
            if c.kind is kind:
                return c
        return None


@dataclass
class AstNode:
    """One instruction plus the sub-trees it consumes or encloses.

    ``children`` lists operand sub-trees first, then (for block/loop/if) the
    nested body roots. ``n_operands`` splits the two; ``else_at`` is the
    index in ``children`` where an if's else arm starts.
    """

    instruction: Instruction
    context: ConcreteContext
    children: list[AstNode] = field(default_factory=list)
    n_operands: int = -1
    else_at: int | None = None

    def __post_init__(self) -> None:
        if self.n_operands < 0:
            self.n_operands = len(self.children)

    @property
    def opcode(self) -> str:
        return self.instruction.opcode

    @property
    def is_block(self) -> bool:
        return self.instruction.opcode in BLOCK_OPENERS

    @property
    def operands(self) -> list[AstNode]:
        return self.children[: self.n_operands]

    @property
    def then_body(self) -> list[AstNode]:
        stop = self.else_at if self.else_at is not None else len(self.children)
        return self.children[self.n_operands: stop]

    @property
    def else_body(self) -> list[AstNode] | None:
        return None if self.else_at is None else self.children[self.else_at:]

    def serialize(self) -> list[Instruction]:
        out: list[Instruction] = []
        self._emit(out)
        return out

    def _emit(self, out: list[Instruction]) -> None:
        # Explicit stack: operand chains in real code run thousands deep.
        work: list[AstNode | Instruction] = [self]
        while work:
            item = work.pop()
            if isinstance(item, Instruction):
                out.append(item)
                continue
            tail: list[AstNode | Instruction] = list(item.operands) + [item.instruction]
            if item.is_block:
                tail.extend(item.then_body)
                if item.else_at is not None:
                    tail.append(_ELSE)
                    tail.extend(item.else_body)
                tail.append(_END)
            work.extend(reversed(tail))

    def walk(self) -> Iterable[AstNode]:
        work = [self]
        while work:
            node = work.pop()
            yield node
            work.extend(reversed(node.children))

    def depth(self) -> int:
        best = 0
        work = [(self, 1)]
        while work:
            node, d = work.pop()
            best = max(best, d)
            work.extend((c, d + 1) for c in node.children)
        return best

    def size(self) -> int:
        return sum(1 for _ in self.walk())


_ELSE = Instruction("else")
_END = Instruction("end")


def serialize_roots(roots: Iterable[AstNode]) -> list[Instruction]:
    out: list[Instruction] = []
    for r in roots:
        r._emit(out)
    return out


# -- context extraction -----------------------------------------------------------


def _stack_to_json(st: StackType) -> dict:
    return {"params": [t.value for t in st.params], "results": [t.value for t in st.results]}


def _stack_from_json(d: dict) -> StackType:
    return StackType(tuple(ValType(t) for t in d["params"]), tuple(ValType(t) for t in d["results"]))


def _concretize(meta_stack: StackType, typing: InstrTyping | None) -> StackType:
    if meta_stack.concrete:
        return meta_stack
    if typing is None or typing.stack_type is None:
        raise UnresolvableContext("operand types unknown (unreachable code)")
    return typing.stack_type


def _memory_constraint(module: WasmModule, index: int = 0) -> SemanticConstraint:
    mems = module.all_memories()
    if not mems:
        raise UnresolvableContext("memory instruction without a memory")
    lim = mems[0]
    return SemanticConstraint(ConstraintKind.MEMORY_RANGE, index, pageMin=lim.min, pageMax=lim.max)


def extract_context(
    instr: Instruction,
    module: WasmModule,
    func: int | None = None,
    typing: InstrTyping | None = None,
) -> ConcreteContext:
    """Concretize ``instr``'s stack type and bind its semantic constraints.

    ``func`` is the defined-function index (into ``module.codes``) the
    instruction belongs to; it is needed for local variables and for
    instructions whose type depends on the operand stack. ``typing`` is the
    validator's record for the instruction and is computed on demand.
    """
    meta = instruction_meta(instr.opcode)
    op, imm = instr.opcode, instr.immediates
    if typing is None and func is not None and not meta.stack.concrete:
        typing = _lookup_typing(module, func, instr)
    K = ConstraintKind

    if meta.group is Group.VARIABLE:
        if op.startswith("local."):
            if func is None:
                raise UnresolvableContext("local access outside a known function")
            sig = module.types[module.functions[func]]
            locals_ = list(sig.params) + module.codes[func].local_types()
            if imm[0] >= len(locals_):
                raise UnresolvableContext(f"dangling local index {imm[0]}")
            t = locals_[imm[0]]
        else:
            globals_ = module.all_global_types()
            if imm[0] >= len(globals_):
                raise UnresolvableContext(f"dangling global index {imm[0]}")
            t = globals_[imm[0]].valtype
        st = StackType(*(tuple(t if x is ValType.WILDCARD else x for x in side)
                         for side in (meta.stack.params, meta.stack.results)))
        kind = K.LOCAL_REF if op.startswith("local.") else K.GLOBAL_REF
        return ConcreteContext(st, (SemanticConstraint(kind, imm[0], t),))

    if op in ("call", "ref.func"):
        try:
            sig = module.func_type(imm[0])
        except IndexError:
            raise UnresolvableContext(f"dangling function index {imm[0]}") from None
        st = sig if op == "call" else meta.stack
        return ConcreteContext(st, (SemanticConstraint(K.DIRECT_CALL, imm[0], signature=sig),))

    if op == "call_indirect":
        if imm[0] >= len(module.types):
            raise UnresolvableContext(f"dangling type index {imm[0]}")
        sig = module.types[imm[0]]
        st = StackType(tuple(sig.params) + (ValType.I32,), tuple(sig.results))
        tables = module.all_tables()
        if imm[1] >= len(tables):
            raise UnresolvableContext(f"dangling table index {imm[1]}")
        return ConcreteContext(st, (
            SemanticConstraint(K.INDIRECT_CALL, imm[0], signature=sig),
            SemanticConstraint(K.TABLE_REF, imm[1], tables[imm[1]].elem_type),
        ))

    if op in BLOCK_OPENERS:
        bt = imm[0]
        if bt is None:
            sig = StackType()
        elif isinstance(bt, ValType):
            sig = StackType((), (bt,))
        elif bt < len(module.types):
            sig = module.types[bt]
        else:
            raise UnresolvableContext(f"dangling block type index {bt}")
        params = tuple(sig.params) + ((ValType.I32,) if op == "if" else ())
        return ConcreteContext(StackType(params, tuple(sig.results)),
                               (SemanticConstraint(K.BLOCK_SIG, 0, signature=sig),))

    st = _concretize(meta.stack, typing)

    if op in ("br", "br_if", "br_table", "return"):
        if typing is None or typing.sig is None:
            raise UnresolvableContext("branch target types unknown")
        depth = imm[1] if op == "br_table" else (imm[0] if op != "return" else 0)
        return ConcreteContext(st, (SemanticConstraint(K.BLOCK_SIG, depth, signature=typing.sig),))

    if meta.group is Group.MEMORY:
        index = imm[0] if op in ("memory.init", "data.drop") else 0
        return ConcreteContext(st, (_memory_constraint(module, index),))

    if meta.group is Group.TABLE:
        table = imm[1] if op == "table.init" else imm[0]
        if op == "elem.drop":
            return ConcreteContext(st, (SemanticConstraint(K.TABLE_REF, imm[0]),))
        tables = module.all_tables()
        if table >= len(tables):
            raise UnresolvableContext(f"dangling table index {table}")
        elem = tables[table].elem_type
        st = StackType(*(tuple(elem if x is ValType.WILDCARD else x for x in side)
                         for side in (meta.stack.params, meta.stack.results)))
        return ConcreteContext(st, (SemanticConstraint(K.TABLE_REF, table, elem),))

    if meta.group is Group.CONTROL:
        # nop / unreachable: no cross-section requirement, kept explicit.
        return ConcreteContext(st, (SemanticConstraint(K.NONE),))

    return ConcreteContext(st)


def _lookup_typing(module: WasmModule, func: int, instr: Instruction) -> InstrTyping | None:
    body = module.codes[func].body
    typings = type_function(module, func)
    for ins, t in zip(body, typings):
        if ins is instr or (instr.offset >= 0 and ins.offset == instr.offset and ins == instr):
            return t
    return None


# -- AST parsing ------------------------------------------------------------------------


def _results(node: AstNode) -> int:
    return len(node.context.stackType.results)


def _adopt(roots: list[AstNode], need: int, at: Instruction) -> list[AstNode]:
    """Pop the shortest suffix of ``roots`` whose results add up to ``need``.

    Void roots interleaved between operand producers travel with them so the
    serialization order is preserved.
    """
    if need == 0:
        return []
    total = 0
    i = len(roots)
    while i > 0 and total < need:
        i -= 1
        total += _results(roots[i])
    if total != need:
        raise StackUnderflow(
            f"{at.opcode}@{at.offset} needs {need} operand(s); preceding roots supply {total}"
        )
    taken = roots[i:]
    del roots[i:]
    return taken


def parse_asts(instrs, module: WasmModule, func: int | None = None,
               typings: list[InstrTyping] | None = None) -> list[AstNode]:
    """Split a validated function body into root sub-trees.

    ``func`` is the defined-function index owning ``instrs``; when omitted it
    is looked up by body equality.
    """
    instrs = list(instrs)
    if func is None:
        func = _find_function(module, instrs)
    if typings is None:
        try:
            typings = type_function(module, func)
        except ValidationError as e:
            raise UnresolvableContext(str(e)) from None
    pos = 0
    nesting = 0

    def parse_seq() -> tuple[list[AstNode], str | None]:
        nonlocal pos, nesting
        roots: list[AstNode] = []
        while pos < len(instrs):
            ins, typing = instrs[pos], typings[pos]
            pos += 1
            if ins.opcode in ("else", "end"):
                return roots, ins.opcode
            ctx = extract_context(ins, module, func, typing)
            operands = _adopt(roots, len(ctx.stackType.params), ins)
            node = AstNode(ins, ctx, operands, len(operands))
            if ins.opcode in BLOCK_OPENERS:
                nesting += 1
                if nesting > MAX_NESTING:
                    raise UnresolvableContext(f"block nesting deeper than {MAX_NESTING}")
                body, stop = parse_seq()
                node.children.extend(body)
                if stop == "else":
                    node.else_at = len(node.children)
                    body, stop = parse_seq()
                    node.children.extend(body)
                if stop != "end":
                    raise StackUnderflow(f"unterminated {ins.opcode} at {ins.offset}")
                nesting -= 1
            roots.append(node)
        return roots, None

    roots, stop = parse_seq()
    if stop is not None:
        raise StackUnderflow(f"stray {stop} in function body")
    return roots


def _find_function(module: WasmModule, instrs: list[Instruction]) -> int:
    target = tuple(instrs)
    for i, code in enumerate(module.codes):
        if code.body == target:
            return i
    raise UnresolvableContext("instruction list is not a function body of this module")


# -- fingerprints ------------------------------------------------------------------------


def structure_string(node: AstNode) -> str:
    """Opcode-only DFS rendering, e.g. ``local.set(i32.const)``."""
    parts: list[str] = []
    _structure(node, parts)
    return "".join(parts)


def _structure(node: AstNode, out: list[str]) -> None:
    out.append(node.instruction.opcode)
    if not node.children and not node.is_block:
        return
    out.append("(")
    for i, c in enumerate(node.operands):
        if i:
            out.append(",")
        _structure(c, out)
    if node.is_block:
        out.append("|")
        for i, c in enumerate(node.then_body):
            if i:
                out.append(",")
            _structure(c, out)
        if node.else_at is not None:
            out.append("|else|")
            for i, c in enumerate(node.else_body):
                if i:
                    out.append(",")
                _structure(c, out)
    out.append(")")


def fingerprint(node: AstNode) -> str:
    """64-bit structural hash (hex) over the opcode DFS with immediates stripped."""
    return hashlib.blake2b(structure_string(node).encode(), digest_size=8).hexdigest()


# -- corpus ---------------------------------------------------------------------


@dataclass
class Corpus:
    entries: list[AstNode] = field(default_factory=list)
    fingerprints: list[str] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    binaries_seen: int = 0
    binaries_skipped: int = 0

    def __post_init__(self) -> None:
        self._index = {fp: i for i, fp in enumerate(self.fingerprints)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, fp: str) -> bool:
        return fp in self._index

    @property
    def fingerprint_set(self) -> frozenset[str]:
        return frozenset(self._index)

    def admit(self, node: AstNode, source: str) -> bool:
        fp = fingerprint(node)
        if fp in self._index:
            return False
        self._index[fp] = len(self.entries)
        self.entries.append(node)
        self.fingerprints.append(fp)
        self.provenance.append(source)
        return True

    def by_fingerprint(self, fp: str) -> AstNode:
        return self.entries[self._index[fp]]


def binary_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def roots_of_module(module: WasmModule, diagnostics: list[str] | None = None,
                    label: str = "") -> list[tuple[int, list[AstNode]]]:
    """Parse every defined function; functions that cannot be parsed are skipped."""
    ctx = module_context(module)
    out = []
    base = module.num_imported_funcs
    for i, code in enumerate(module.codes):
        try:
            typings = type_function(module, i, ctx)
            out.append((i, parse_asts(code.body, module, i, typings)))
        except (UnresolvableContext, StackUnderflow, ValidationError) as e:
            if diagnostics is not None:
                diagnostics.append(f"{label}: func {base + i} skipped: {e}")
    return out


def build_corpus(binaries: Iterable[bytes], max_depth: int = MAX_DEPTH,
                 max_width: int = MAX_WIDTH, corpus: Corpus | None = None) -> Corpus:
    """Parse each decodable, validating binary and admit unseen root sub-trees."""
    corpus = corpus if corpus is not None else Corpus()
    for data in binaries:
        corpus.binaries_seen += 1
        bid = binary_id(data)
        try:
            module = decode_module(data)
        except WasmError as e:
            corpus.binaries_skipped += 1
            corpus.diagnostics.append(f"{bid}: {e}")
            continue
        verdict = validate_module(module)
        if not verdict.ok:
            corpus.binaries_skipped += 1
            corpus.diagnostics.append(f"{bid}: invalid: {verdict.violations[0]}")
            continue
        base = module.num_imported_funcs
        for i, roots in roots_of_module(module, corpus.diagnostics, bid):
            for root in roots:
                if root.depth() > max_depth or root.size() > max_width:
                    continue
                corpus.admit(root, f"{bid}:{base + i}")
    return corpus


# -- persistence ---------------------------------------------------------------------------


def _node_to_json(node: AstNode) -> dict:
    ins = node.instruction
    out: dict = {
        "op": ins.opcode,
        "bin": encode_instruction(ins).hex(),
        "stack": _stack_to_json(node.context.stackType),
    }
    if node.context.constraints:
        out["constraints"] = [c.to_json() for c in node.context.constraints]
    if node.children:
        out["children"] = [_node_to_json(c) for c in node.children]
        out["operands"] = node.n_operands
    if node.else_at is not None:
        out["else_at"] = node.else_at
    return out


def _node_from_json(d: dict) -> AstNode:
    raw = bytes.fromhex(d["bin"])
    ins = read_instruction(Reader(raw))
    ctx = ConcreteContext(
        _stack_from_json(d["stack"]),
        tuple(SemanticConstraint.from_json(c) for c in d.get("constraints", ())),
    )
    children = [_node_from_json(c) for c in d.get("children", ())]
    return AstNode(ins, ctx, children, d.get("operands", len(children)), d.get("else_at"))


def save_corpus(corpus: Corpus, directory: str | Path) -> Path:
    """Write one record per entry plus an index; re-saving is idempotent."""
    directory = Path(directory)
    (directory / "entries").mkdir(parents=True, exist_ok=True)
    index = []
    for node, fp, src in zip(corpus.entries, corpus.fingerprints, corpus.provenance):
        rel = f"entries/{fp}.json"
        path = directory / rel
        if not path.exists():
            record = {"format": CORPUS_FORMAT, "version": CORPUS_VERSION, "fingerprint": fp,
                      "node": _node_to_json(node)}
            path.write_text(json.dumps(record, separators=(",", ":")))
        index.append({"fingerprint": fp, "path": rel, "provenance": src})
    meta = {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "binaries_seen": corpus.binaries_seen,
        "binaries_skipped": corpus.binaries_skipped,
        "diagnostics": corpus.diagnostics,
        "entries": index,
    }
    (directory / "index.json").write_text(json.dumps(meta, indent=1))
    return directory


def load_corpus(directory: str | Path) -> Corpus:
    directory = Path(directory)
    meta = json.loads((directory / "index.json").read_text())
    if meta.get("format") != CORPUS_FORMAT or meta.get("version") != CORPUS_VERSION:
        raise ValueError(f"unsupported corpus format in {directory}")
    entries, fps, prov = [], [], []
    for item in meta["entries"]:
        record = json.loads((directory / item["path"]).read_text())
        entries.append(_node_from_json(record["node"]))
        fps.append(item["fingerprint"])
        prov.append(item["provenance"])
    return Corpus(entries, fps, prov, list(meta.get("diagnostics", [])),
                  meta.get("binaries_seen", 0), meta.get("binaries_skipped", 0))
