"""In-place structural edits on a WasmModule that keep index spaces consistent."""

from __future__ import annotations

from dataclasses import replace

from .types import Code, Export, FuncType, Global, Import, Instruction, WasmModule


def _shift_expr(expr, at: int) -> tuple[Instruction, ...]:
    out = []
    for ins in expr:
        if ins.opcode in ("call", "ref.func") and ins.immediates[0] >= at:
            ins = ins.with_imm(ins.immediates[0] + 1)
        out.append(ins)
    return tuple(out)


def add_function_import(module: WasmModule, mod: str, name: str, sig: FuncType) -> int:
    """Append a function import and shift every reference to defined functions.

    Returns the new import's function index.
    """
    at = module.num_imported_funcs
    tidx = module.type_index(sig)
    # Imports of other kinds may follow; function indices only count functions.
    module.imports.append(Import(mod, name, "func", tidx))
    module.codes = [Code(c.locals, _shift_expr(c.body, at)) for c in module.codes]
    module.globals = [Global(g.type, _shift_expr(g.init, at)) for g in module.globals]
    module.exports = [
        Export(e.name, e.kind, e.index + 1) if e.kind == "func" and e.index >= at else e
        for e in module.exports
    ]
    if module.start is not None and module.start >= at:
        module.start += 1
    elems = []
    for seg in module.elements:
        if seg.uses_exprs:
            init = tuple(_shift_expr(expr, at) for expr in seg.init)
        else:
            init = tuple(i + 1 if i >= at else i for i in seg.init)
        elems.append(replace(seg, init=init))
    module.elements = elems
    return at


def used_export_names(module: WasmModule) -> set[str]:
    return {e.name for e in module.exports}


def copy_module(module: WasmModule) -> WasmModule:
    """Shallow structural copy: lists are fresh, their frozen items shared."""
    return replace(
        module,
        types=list(module.types), imports=list(module.imports), functions=list(module.functions),
        tables=list(module.tables), memories=list(module.memories), globals=list(module.globals),
        exports=list(module.exports), elements=list(module.elements), codes=list(module.codes),
        datas=list(module.datas), customs=list(module.customs),
    )


__all__ = ["add_function_import", "copy_module", "used_export_names"]
