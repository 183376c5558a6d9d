"""Regenerate the hand-assembled fixture binaries in this directory.

Run from the repository root: python3 tests/fixtures/build_fixtures.py
"""

from __future__ import annotations

import struct
from pathlib import Path

from wasmdiff.wasm import FuncType, Instruction as I, ValType, WasmModule, encode_module
from wasmdiff.wasm.types import Code, DataSegment, Export, Limits

HERE = Path(__file__).resolve().parent
T = ValType


def factorial() -> WasmModule:
    """n = 5; r = 1; while (n) { r *= n; n--; } return r;"""
    body = (
        I("i32.const", (5,)), I("local.set", (0,)),
        I("i32.const", (1,)), I("local.set", (1,)),
        I("block", (None,)), I("loop", (None,)),
        I("local.get", (0,)), I("i32.eqz"), I("br_if", (1,)),
        I("local.get", (1,)), I("local.get", (0,)), I("i32.mul"), I("local.set", (1,)),
        I("local.get", (0,)), I("i32.const", (1,)), I("i32.sub"), I("local.set", (0,)),
        I("br", (0,)), I("end"), I("end"),
        I("local.get", (1,)),
    )
    return WasmModule(
        types=[FuncType((), (T.I32,))], functions=[0],
        exports=[Export("main", "func", 0)], codes=[Code(((2, T.I32),), body)],
    )


def data_offset_case() -> WasmModule:
    """4 GiB memory whose data segment sits at an offset that only fits when read unsigned."""
    offset = -79158787
    return WasmModule(
        types=[FuncType((), (T.I32,))], functions=[0], memories=[Limits(65536, 65536)],
        exports=[Export("main", "func", 0)],
        codes=[Code((), (I("i32.const", (offset,)), I("i32.load", (2, 0))))],
        datas=[DataSegment(0, "active", b"Bp222N", 0, (I("i32.const", (offset,)),))],
    )


def shift_case() -> WasmModule:
    """i8x16.shl whose shift count is a negative i32."""
    lanes = struct.pack("<4I", 0x3D52AA71, 0xEA2F90B2, 0xB20CDF3D, 0x4D6054BC)
    body = (I("v128.const", (lanes,)), I("i32.const", (-7235,)), I("i8x16.shl"))
    return WasmModule(
        types=[FuncType((), (T.V128,))], functions=[0],
        exports=[Export("main", "func", 0)], codes=[Code((), body)],
    )


def export_name_case() -> WasmModule:
    """Export names that are distinct strings but equal as C strings."""
    return WasmModule(
        types=[FuncType((), (T.I32,))], functions=[0, 0, 0],
        exports=[Export("\x00jCeH", "func", 0), Export("", "func", 1), Export("fj", "func", 2),
                 Export("main", "func", 0)],
        codes=[Code((), (I("i32.const", (k,)),)) for k in (7, 8, 9)],
    )


FIXTURES = {
    "factorial.wasm": factorial,
    "case_data_offset.wasm": data_offset_case,
    "case_i8x16_shl.wasm": shift_case,
    "case_export_names.wasm": export_name_case,
}


def main() -> None:
    for name, build in FIXTURES.items():
        (HERE / name).write_bytes(encode_module(build()))
        print(name)


if __name__ == "__main__":
    main()
