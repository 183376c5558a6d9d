"""Module validation: stack balance per function plus cross-section index checks.

The per-function checker follows the reference validation algorithm (operand
stack + control frames with a polymorphic "unreachable" state). When asked,
it records the concrete stack type each instruction consumed and produced,
which is what context extraction builds on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .opcodes import Group, instruction_meta
from .types import FuncType, GlobalType, Instruction, StackType, ValType, WasmModule

MAX_PAGES = 65536
I32, I64, F32, F64, V128 = ValType.I32, ValType.I64, ValType.F32, ValType.F64, ValType.V128
UNKNOWN = None  # operand of unknown type in unreachable code


@dataclass(frozen=True)
class Violation:
    message: str
    func: int | None = None
    offset: int = -1

    def __str__(self) -> str:
        where = "" if self.func is None else f"func {self.func}"
        if self.offset >= 0:
            where += f" @0x{self.offset:x}"
        return f"{where}: {self.message}" if where else self.message


@dataclass
class Verdict:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]


@dataclass(frozen=True)
class InstrTyping:
    """Concrete operand types an instruction consumed and produced.

    ``None`` entries mark operands in unreachable code. ``sig`` carries the
    block or label signature for control instructions.
    """

    params: tuple[ValType | None, ...]
    results: tuple[ValType | None, ...]
    sig: FuncType | None = None
    reachable: bool = True

    @property
    def stack_type(self) -> StackType | None:
        if None in self.params or None in self.results:
            return None
        return StackType(tuple(self.params), tuple(self.results))


class ValidationError(Exception):
    pass


@dataclass
class _Frame:
    opcode: str
    start: tuple[ValType, ...]
    end: tuple[ValType, ...]
    height: int
    unreachable: bool = False

    @property
    def labels(self) -> tuple[ValType, ...]:
        return self.start if self.opcode == "loop" else self.end


class _Ctx:
    """Module-level lookups shared by all function checks."""

    def __init__(self, m: WasmModule):
        self.m = m
        self.types = m.types
        self.funcs = m.func_type_indices()
        self.tables = m.all_tables()
        self.mems = m.all_memories()
        self.globals = m.all_global_types()
        self.num_imported_globals = len(m.imported("global"))
        self.elem_types = [e.elem_type for e in m.elements]
        self.data_count = m.data_count
        self.refs = _declared_refs(m)

    def func_sig(self, idx: int) -> FuncType:
        if idx >= len(self.funcs):
            raise ValidationError(f"unresolved function index {idx}")
        tidx = self.funcs[idx]
        if tidx >= len(self.types):
            raise ValidationError(f"unresolved type index {tidx}")
        return self.types[tidx]

    def block_sig(self, bt) -> FuncType:
        if bt is None:
            return FuncType((), ())
        if isinstance(bt, ValType):
            return FuncType((), (bt,))
        if bt >= len(self.types):
            raise ValidationError(f"unresolved type index {bt}")
        return self.types[bt]


def _declared_refs(m: WasmModule) -> set[int]:
    refs: set[int] = set()
    for seg in m.elements:
        if seg.uses_exprs:
            for expr in seg.init:
                refs.update(i.immediates[0] for i in expr if i.opcode == "ref.func")
        else:
            refs.update(seg.init)
    for g in m.globals:
        refs.update(i.immediates[0] for i in g.init if i.opcode == "ref.func")
    refs.update(e.index for e in m.exports if e.kind == "func")
    return refs


class FunctionChecker:
    def __init__(self, ctx: _Ctx, sig: FuncType, local_types: list[ValType], record: bool = False):
        self.ctx = ctx
        self.sig = sig
        self.locals = list(sig.params) + list(local_types)
        self.vals: list[ValType | None] = []
        self.ctrls: list[_Frame] = []
        self.record = record
        self.typings: list[InstrTyping] = []
        self._popped: list[ValType | None] = []
        self._pushed = 0
        self.offset = -1

    # -- stack primitives -----------------------------------------------------

    def push(self, t: ValType | None) -> None:
        self.vals.append(t)

    def pop(self, expect: ValType | None = UNKNOWN) -> ValType | None:
        frame = self.ctrls[-1]
        if len(self.vals) == frame.height:
            if frame.unreachable:
                got = expect
                self._popped.append(got)
                return got
            if expect is None:
                raise ValidationError("type mismatch: operand stack underflow")
            raise ValidationError(f"type mismatch: expected {expect.value} but nothing on stack")
        actual = self.vals.pop()
        if expect is not None and actual is not None and actual != expect:
            raise ValidationError(
                f"type mismatch: expected {expect.value}, found {actual.value}"
            )
        got = actual if actual is not None else expect
        self._popped.append(got)
        return got

    def pop_many(self, types) -> list[ValType | None]:
        out = [self.pop(t) for t in reversed(types)]
        out.reverse()
        return out

    def push_ctrl(self, opcode: str, start, end) -> None:
        self.ctrls.append(_Frame(opcode, tuple(start), tuple(end), len(self.vals)))
        for t in start:
            self.push(t)

    def pop_ctrl(self) -> _Frame:
        if not self.ctrls:
            raise ValidationError("unbalanced end")
        frame = self.ctrls[-1]
        self.pop_many(frame.end)
        if len(self.vals) != frame.height:
            raise ValidationError("type mismatch: values remaining on stack at end of block")
        self.ctrls.pop()
        return frame

    def set_unreachable(self) -> None:
        frame = self.ctrls[-1]
        del self.vals[frame.height:]
        frame.unreachable = True

    def label(self, depth: int) -> tuple[ValType, ...]:
        if depth >= len(self.ctrls):
            raise ValidationError(f"unknown label {depth}")
        return self.ctrls[-1 - depth].labels

    # -- checking -------------------------------------------------------------

    def check(self, body) -> None:
        self.push_ctrl("func", (), self.sig.results)
        self.ctrls[0].height = 0
        for ins in body:
            if not self.ctrls:
                raise ValidationError("instructions after final end")
            reachable = not self.ctrls[-1].unreachable
            self.offset = ins.offset
            self._popped = []
            before = len(self.vals)
            sig = self.step(ins)
            if self.record:
                self.typings.append(self._typing(ins, before, sig, reachable))
        if len(self.ctrls) != 1:
            raise ValidationError("unclosed block: missing end")
        frame = self.ctrls[-1]
        if len(self.vals) - frame.height < len(frame.end) and not frame.unreachable:
            raise ValidationError("type mismatch: missing result")
        self.pop_ctrl()

    def _typing(self, ins: Instruction, before: int, sig, reachable: bool) -> InstrTyping:
        op = ins.opcode
        popped = tuple(reversed(self._popped))
        if op in ("block", "loop", "if"):
            params = tuple(sig.params) + ((I32,) if op == "if" else ())
            return InstrTyping(params, tuple(sig.results), sig, reachable)
        if op in ("else", "end"):
            return InstrTyping((), (), sig, reachable)
        if op in ("br", "br_table", "return", "unreachable"):
            return InstrTyping(popped, (), sig, reachable)
        pushed = tuple(self.vals[len(self.vals) - self._pushed:]) if self._pushed else ()
        return InstrTyping(popped, pushed, sig, reachable)

    def step(self, ins: Instruction):
        op = ins.opcode
        imm = ins.immediates
        ctx = self.ctx
        self._pushed = 0
        meta = instruction_meta(op)
        st = meta.stack

        if meta.group in (Group.NUMERIC, Group.VECTOR, Group.MEMORY) and not st.variadic \
                and ValType.WILDCARD not in st.params + st.results:
            if meta.group is Group.MEMORY:
                self._check_memory(meta, imm)
            elif meta.imm == "lane" and imm[0] >= meta.lanes:
                raise ValidationError("invalid lane index")
            elif meta.imm == "shuffle" and any(x >= 32 for x in imm[0]):
                raise ValidationError("invalid lane index")
            self.pop_many(st.params)
            for t in st.results:
                self.push(t)
            self._pushed = len(st.results)
            return None

        if op == "local.get":
            self.push(self._local(imm[0]))
            self._pushed = 1
        elif op == "local.set":
            self.pop(self._local(imm[0]))
        elif op == "local.tee":
            t = self._local(imm[0])
            self.pop(t)
            self.push(t)
            self._pushed = 1
        elif op == "global.get":
            self.push(self._global(imm[0]).valtype)
            self._pushed = 1
        elif op == "global.set":
            g = self._global(imm[0])
            if not g.mutable:
                raise ValidationError(f"global {imm[0]} is immutable")
            self.pop(g.valtype)
        elif op == "drop":
            self.pop()
        elif op == "select":
            self.pop(I32)
            t1 = self.pop()
            t2 = self.pop(t1)
            t = t1 if t1 is not None else t2
            if t is not None and t.is_ref:
                raise ValidationError("type mismatch: select without type on reference")
            self.push(t)
            self._pushed = 1
        elif op == "select_t":
            if len(imm[0]) != 1:
                raise ValidationError("invalid result arity for select")
            t = imm[0][0]
            self.pop(I32)
            self.pop(t)
            self.pop(t)
            self.push(t)
            self._pushed = 1
        elif op in ("block", "loop", "if"):
            sig = ctx.block_sig(imm[0])
            if op == "if":
                self.pop(I32)
            self.pop_many(sig.params)
            self.push_ctrl(op, sig.params, sig.results)
            return sig
        elif op == "else":
            frame = self.pop_ctrl()
            if frame.opcode != "if":
                raise ValidationError("else without matching if")
            self.push_ctrl("else", frame.start, frame.end)
            return FuncType(frame.start, frame.end)
        elif op == "end":
            if len(self.ctrls) <= 1:
                raise ValidationError("unbalanced end")
            frame = self.pop_ctrl()
            if frame.opcode == "if" and frame.start != frame.end:
                raise ValidationError("type mismatch: if without else must not change stack")
            for t in frame.end:
                self.push(t)
            return FuncType(frame.start, frame.end)
        elif op == "br":
            labels = self.label(imm[0])
            self.pop_many(labels)
            self.set_unreachable()
            return FuncType(labels, ())
        elif op == "br_if":
            labels = self.label(imm[0])
            self.pop(I32)
            got = self.pop_many(labels)
            for t in got:
                self.push(t)
            self._pushed = len(got)
            return FuncType(labels, labels)
        elif op == "br_table":
            self.pop(I32)
            default = self.label(imm[1])
            for depth in imm[0]:
                labels = self.label(depth)
                if len(labels) != len(default):
                    raise ValidationError("type mismatch: br_table target arity differs")
                saved = list(self.vals)
                popped = list(self._popped)
                self.pop_many(labels)
                self.vals = saved
                self._popped = popped
            self.pop_many(default)
            self.set_unreachable()
            return FuncType(default, ())
        elif op == "return":
            self.pop_many(self.sig.results)
            self.set_unreachable()
            return FuncType(self.sig.results, ())
        elif op == "unreachable":
            self.set_unreachable()
        elif op == "nop":
            pass
        elif op == "call":
            sig = ctx.func_sig(imm[0])
            self.pop_many(sig.params)
            for t in sig.results:
                self.push(t)
            self._pushed = len(sig.results)
            return sig
        elif op == "call_indirect":
            self._table(imm[1], need=ValType.FUNCREF)
            if imm[0] >= len(ctx.types):
                raise ValidationError(f"unresolved type index {imm[0]}")
            sig = ctx.types[imm[0]]
            self.pop(I32)
            self.pop_many(sig.params)
            for t in sig.results:
                self.push(t)
            self._pushed = len(sig.results)
            return sig
        elif op == "ref.null":
            self.push(imm[0])
            self._pushed = 1
        elif op == "ref.is_null":
            t = self.pop()
            if t is not None and not t.is_ref:
                raise ValidationError("type mismatch: ref.is_null on non-reference")
            self.push(I32)
            self._pushed = 1
        elif op == "ref.func":
            ctx.func_sig(imm[0])
            if imm[0] not in ctx.refs:
                raise ValidationError(f"undeclared function reference {imm[0]}")
            self.push(ValType.FUNCREF)
            self._pushed = 1
        elif op == "table.get":
            t = self._table(imm[0])
            self.pop(I32)
            self.push(t)
            self._pushed = 1
        elif op == "table.set":
            t = self._table(imm[0])
            self.pop(t)
            self.pop(I32)
        elif op == "table.size":
            self._table(imm[0])
            self.push(I32)
            self._pushed = 1
        elif op == "table.grow":
            t = self._table(imm[0])
            self.pop(I32)
            self.pop(t)
            self.push(I32)
            self._pushed = 1
        elif op == "table.fill":
            t = self._table(imm[0])
            self.pop(I32)
            self.pop(t)
            self.pop(I32)
        elif op == "table.copy":
            if self._table(imm[0]) != self._table(imm[1]):
                raise ValidationError("type mismatch: table.copy element types differ")
            self.pop_many((I32, I32, I32))
        elif op == "table.init":
            t = self._table(imm[1])
            if imm[0] >= len(ctx.elem_types):
                raise ValidationError(f"unresolved element segment {imm[0]}")
            if ctx.elem_types[imm[0]] != t:
                raise ValidationError("type mismatch: table.init element type")
            self.pop_many((I32, I32, I32))
        elif op == "elem.drop":
            if imm[0] >= len(ctx.elem_types):
                raise ValidationError(f"unresolved element segment {imm[0]}")
        else:
            raise ValidationError(f"unhandled instruction {op}")
        return None

    def _check_memory(self, meta, imm) -> None:
        if not self.ctx.mems:
            raise ValidationError("unknown memory 0")
        op = meta.opcode
        if meta.imm in ("memarg", "memarg_lane"):
            if imm[0] > meta.natural_align:
                raise ValidationError("alignment must not be larger than natural")
            if imm[1] > 0xFFFFFFFF:
                raise ValidationError("offset out of range")
            if meta.imm == "memarg_lane" and imm[2] >= meta.lanes:
                raise ValidationError("invalid lane index")
        elif op in ("memory.init", "data.drop"):
            if self.ctx.data_count is None:
                raise ValidationError("data count section required")
            if imm[0] >= self.ctx.data_count:
                raise ValidationError(f"unresolved data segment {imm[0]}")

    def _local(self, idx: int) -> ValType:
        if idx >= len(self.locals):
            raise ValidationError(f"unresolved local index {idx}")
        return self.locals[idx]

    def _global(self, idx: int) -> GlobalType:
        if idx >= len(self.ctx.globals):
            raise ValidationError(f"unresolved global index {idx}")
        return self.ctx.globals[idx]

    def _table(self, idx: int, need: ValType | None = None) -> ValType:
        if idx >= len(self.ctx.tables):
            raise ValidationError(f"unresolved table index {idx}")
        t = self.ctx.tables[idx].elem_type
        if need is not None and t != need:
            raise ValidationError("type mismatch: table element type")
        return t


# -- module level ---------------------------------------------------------------

_CONST_OPS = {"i32.const": I32, "i64.const": I64, "f32.const": F32, "f64.const": F64,
              "v128.const": V128}


def _check_const_expr(ctx: _Ctx, expr, expect: ValType) -> None:
    stack: list[ValType] = []
    for ins in expr:
        op = ins.opcode
        if op in _CONST_OPS:
            stack.append(_CONST_OPS[op])
        elif op == "ref.null":
            stack.append(ins.immediates[0])
        elif op == "ref.func":
            ctx.func_sig(ins.immediates[0])
            stack.append(ValType.FUNCREF)
        elif op == "global.get":
            idx = ins.immediates[0]
            if idx >= ctx.num_imported_globals:
                raise ValidationError(f"unresolved global index {idx} in constant expression")
            g = ctx.globals[idx]
            if g.mutable:
                raise ValidationError("constant expression required")
            stack.append(g.valtype)
        else:
            raise ValidationError("constant expression required")
    if stack != [expect]:
        raise ValidationError("type mismatch in constant expression")


def _check_limits(lim, bound: int, what: str) -> None:
    if lim.min > bound or (lim.max is not None and lim.max > bound):
        raise ValidationError(f"{what} size must be at most {bound}")
    if lim.max is not None and lim.min > lim.max:
        raise ValidationError(f"{what} size minimum must not be greater than maximum")


def _module_checks(m: WasmModule, ctx: _Ctx) -> list[Violation]:
    out: list[Violation] = []

    def guard(fn, *args):
        try:
            fn(*args)
        except ValidationError as e:
            out.append(Violation(str(e)))

    def check_imports():
        for imp in m.imports:
            if imp.kind == "func" and imp.desc >= len(m.types):
                raise ValidationError(f"unresolved type index {imp.desc}")
            if imp.kind == "memory":
                _check_limits(imp.desc, MAX_PAGES, "memory")
            if imp.kind == "table":
                _check_limits(imp.desc.limits, 0xFFFFFFFF, "table")

    guard(check_imports)
    for tidx in m.functions:
        if tidx >= len(m.types):
            out.append(Violation(f"unresolved type index {tidx}"))
    for t in m.tables:
        guard(_check_limits, t.limits, 0xFFFFFFFF, "table")
    if len(ctx.mems) > 1:
        out.append(Violation("multiple memories"))
    for lim in m.memories:
        guard(_check_limits, lim, MAX_PAGES, "memory")
    for g in m.globals:
        guard(_check_const_expr, ctx, g.init, g.type.valtype)

    seen: set[str] = set()
    sizes = {"func": len(ctx.funcs), "table": len(ctx.tables), "memory": len(ctx.mems),
             "global": len(ctx.globals)}
    for e in m.exports:
        if e.name in seen:
            out.append(Violation(f"duplicate export name {e.name!r}"))
        seen.add(e.name)
        if e.index >= sizes[e.kind]:
            if e.kind == "func":
                out.append(Violation(f"unresolved function index {e.index} in export"))
            else:
                out.append(Violation(f"unresolved {e.kind} index {e.index} in export"))

    if m.start is not None:
        try:
            sig = ctx.func_sig(m.start)
            if sig.params or sig.results:
                out.append(Violation("start function must have type [] -> []"))
        except ValidationError as e:
            out.append(Violation(str(e)))

    def check_elem(seg):
        if seg.mode == "active":
            if seg.table >= len(ctx.tables):
                raise ValidationError(f"unresolved table index {seg.table}")
            if ctx.tables[seg.table].elem_type != seg.elem_type:
                raise ValidationError("type mismatch: element segment type")
            _check_const_expr(ctx, seg.offset or (), I32)
        if seg.uses_exprs:
            for expr in seg.init:
                _check_const_expr(ctx, expr, seg.elem_type)
        else:
            for fidx in seg.init:
                ctx.func_sig(fidx)

    for seg in m.elements:
        guard(check_elem, seg)

    def check_data(seg):
        if seg.mode == "active":
            if seg.memory >= len(ctx.mems):
                raise ValidationError(f"unknown memory {seg.memory}")
            _check_const_expr(ctx, seg.offset or (), I32)

    for seg in m.datas:
        guard(check_data, seg)
    if m.data_count is not None and m.data_count != len(m.datas):
        out.append(Violation("data count and data section have inconsistent lengths"))
    if len(m.codes) != len(m.functions):
        out.append(Violation("function and code section have inconsistent lengths"))
    return out


def check_function(m: WasmModule, defined_idx: int, ctx: _Ctx | None = None,
                   record: bool = False) -> FunctionChecker:
    """Type-check one defined function (index into ``m.codes``).

    Raises :class:`ValidationError`; returns the checker so callers can read
    ``typings`` when ``record`` is set.
    """
    checker = _checker_for(m, defined_idx, ctx or _Ctx(m), record)
    checker.check(m.codes[defined_idx].body)
    return checker


def _checker_for(m: WasmModule, defined_idx: int, ctx: _Ctx, record: bool) -> FunctionChecker:
    tidx = m.functions[defined_idx]
    if tidx >= len(m.types):
        raise ValidationError(f"unresolved type index {tidx}")
    return FunctionChecker(ctx, m.types[tidx], m.codes[defined_idx].local_types(), record)


def type_function(m: WasmModule, defined_idx: int, ctx: _Ctx | None = None) -> list[InstrTyping]:
    return check_function(m, defined_idx, ctx, record=True).typings


def module_context(m: WasmModule) -> _Ctx:
    return _Ctx(m)


def validate_module(m: WasmModule) -> Verdict:
    """Validate ``m``; the verdict is ok iff no violation was found."""
    ctx = _Ctx(m)
    violations = _module_checks(m, ctx)
    base = m.num_imported_funcs
    for i in range(min(len(m.codes), len(m.functions))):
        checker = None
        try:
            checker = _checker_for(m, i, ctx, record=False)
            checker.check(m.codes[i].body)
        except ValidationError as e:
            offset = checker.offset if checker is not None else -1
            violations.append(Violation(str(e), base + i, offset))
    return Verdict(violations)
