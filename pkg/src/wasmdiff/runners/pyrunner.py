"""Run one export of a WebAssembly binary on an engine reachable from Python.

Usage: python -m wasmdiff.runners.pyrunner ENGINE BINARY EXPORT [--mock-add1]

Each result is printed on its own line as a signed decimal integer. Exit
status 0 means the call returned, 2 means compilation or instantiation was
rejected, 3 means the call trapped. A ``proc_exit`` call prints ``exit N``
and exits 0.
"""

from __future__ import annotations

import argparse
import os
import struct
import sys

EXIT_OK = 0
EXIT_COMPILE = 2
EXIT_TRAP = 3
WASI = "wasi_snapshot_preview1"
ERRNO_BADF = 8


class ProcExit(Exception):
    def __init__(self, code: int):
        super().__init__(code)
        self.code = code


def mock_add1(data: bytes) -> bytes:
    """Rewrite every ``i32.add`` to also add one: a deliberately broken engine."""
    from wasmdiff.wasm import Instruction, decode_module, encode_module
    from wasmdiff.wasm.types import Code

    m = decode_module(data)
    codes = []
    for code in m.codes:
        body = []
        for ins in code.body:
            body.append(ins)
            if ins.opcode == "i32.add":
                body += [Instruction("i32.const", (1,)), Instruction("i32.add")]
        codes.append(Code(code.locals, tuple(body)))
    m.codes = codes
    return encode_module(m)


def fd_write(read, write, fd: int, iovs: int, iovs_len: int, nwritten: int) -> int:
    """WASI ``fd_write`` over raw memory accessors; only stdout and stderr exist."""
    if fd not in (1, 2):
        return ERRNO_BADF
    total = 0
    chunks = []
    for i in range(iovs_len):
        ptr, length = struct.unpack("<II", read(iovs + 8 * i, 8))
        chunks.append(read(ptr, length))
        total += length
    os.write(fd, b"".join(chunks))
    write(nwritten, struct.pack("<I", total))
    return 0


def emit(values) -> None:
    if values is None:
        values = []
    elif not isinstance(values, (list, tuple)):
        values = [values]
    os.write(1, "".join(f"{int(v)}\n" for v in values).encode())


def fail(code: int, kind: str, err: BaseException) -> int:
    msg = " ".join(str(err).split()) or type(err).__name__
    os.write(2, f"{kind}: {msg}\n".encode())
    return code


def run_wasmtime(data: bytes, export: str) -> int:
    import wasmtime

    cfg = wasmtime.Config()
    cfg.wasm_simd = True
    cfg.wasm_multi_value = True
    cfg.wasm_bulk_memory = True
    cfg.wasm_reference_types = True
    engine = wasmtime.Engine(cfg)
    store = wasmtime.Store(engine)
    try:
        module = wasmtime.Module(engine, data)
    except Exception as e:  # noqa: BLE001
        return fail(EXIT_COMPILE, "CompileError", e)

    linker = wasmtime.Linker(engine)
    state: dict = {}

    def mem():
        return state["instance"].exports(store)["memory"]

    def _fd_write(fd, iovs, n, out):
        m = mem()
        return fd_write(
            lambda p, k: bytes(m.read(store, p, p + k)),
            lambda p, b: m.write(store, b, p),
            fd, iovs, n, out,
        )

    def _proc_exit(code):
        raise ProcExit(code)

    i32 = wasmtime.ValType.i32()
    linker.define_func(WASI, "fd_write", wasmtime.FuncType([i32] * 4, [i32]), _fd_write)
    linker.define_func(WASI, "proc_exit", wasmtime.FuncType([i32], []), _proc_exit)
    try:
        state["instance"] = linker.instantiate(store, module)
    except Exception as e:  # noqa: BLE001
        return fail(EXIT_COMPILE, "LinkError", e)
    try:
        emit(state["instance"].exports(store)[export](store))
    except wasmtime.Trap as e:
        return fail(EXIT_TRAP, "Trap", e)
    except wasmtime.WasmtimeError as e:
        if isinstance(e.__cause__, ProcExit) or "ProcExit" in str(e):
            return _exit_from(e)
        return fail(EXIT_TRAP, "Trap", e)
    except ProcExit as e:
        emit_exit(e.code)
    return EXIT_OK


def emit_exit(code: int) -> None:
    os.write(1, f"exit {code}\n".encode())


def _exit_from(e: BaseException) -> int:
    cause = e.__cause__ if isinstance(e.__cause__, ProcExit) else None
    emit_exit(cause.code if cause else 0)
    return EXIT_OK


def run_wasmer(data: bytes, export: str, compiler: str) -> int:
    import wasmer

    if compiler == "singlepass":
        import wasmer_compiler_singlepass as backend
    else:
        import wasmer_compiler_cranelift as backend

    store = wasmer.Store(wasmer.engine.Universal(backend.Compiler))
    try:
        module = wasmer.Module(store, data)
    except Exception as e:  # noqa: BLE001
        return fail(EXIT_COMPILE, "CompileError", e)
    state: dict = {}

    def mem():
        return state["instance"].exports.memory.uint8_view()

    def _fd_write(fd: int, iovs: int, n: int, out: int) -> int:
        view = mem()

        def write(p, b):
            view[p:p + len(b)] = b

        return fd_write(lambda p, k: bytes(view[p:p + k]), write, fd, iovs, n, out)

    def _proc_exit(code: int):
        raise ProcExit(code)

    i32 = wasmer.Type.I32
    imports = wasmer.ImportObject()
    imports.register(WASI, {
        "fd_write": wasmer.Function(store, _fd_write, wasmer.FunctionType([i32] * 4, [i32])),
        "proc_exit": wasmer.Function(store, _proc_exit, wasmer.FunctionType([i32], [])),
    })
    try:
        state["instance"] = wasmer.Instance(module, imports)
    except Exception as e:  # noqa: BLE001
        return fail(EXIT_COMPILE, "LinkError", e)
    try:
        emit(getattr(state["instance"].exports, export)())
    except ProcExit as e:
        emit_exit(e.code)
    except Exception as e:  # noqa: BLE001
        if isinstance(e.__cause__, ProcExit):
            return _exit_from(e)
        return fail(EXIT_TRAP, "Trap", e)
    return EXIT_OK


ENGINES = {
    "wasmtime": run_wasmtime,
    "wasmer-cranelift": lambda d, e: run_wasmer(d, e, "cranelift"),
    "wasmer-singlepass": lambda d, e: run_wasmer(d, e, "singlepass"),
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pyrunner")
    ap.add_argument("engine", choices=sorted(ENGINES))
    ap.add_argument("binary")
    ap.add_argument("export")
    ap.add_argument("--mock-add1", action="store_true")
    args = ap.parse_args(argv)
    with open(args.binary, "rb") as f:
        data = f.read()
    if args.mock_add1:
        data = mock_add1(data)
    return ENGINES[args.engine](data, args.export)


if __name__ == "__main__":
    sys.exit(main())
