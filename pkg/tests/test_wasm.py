from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wasmdiff.wasm import (
    EncodingOverflow,
    FuncType,
    Instruction as I,
    MalformedBinary,
    ValType as T,
    WasmModule,
    decode_module,
    encode_module,
    validate_module,
)
from wasmdiff.wasm.binary import Reader, sleb, uleb
from wasmdiff.wasm.oracle import independent_validate
from wasmdiff.wasm.types import Code, Export, Limits

from helpers import seed_paths


def single_function(body, results=(T.I32,), locals_=(), memory=False) -> WasmModule:
    return WasmModule(
        types=[FuncType((), tuple(results))], functions=[0],
        memories=[Limits(1, 1)] if memory else [],
        exports=[Export("main", "func", 0)], codes=[Code(tuple(locals_), tuple(body))],
    )


@pytest.mark.parametrize("path", seed_paths(), ids=lambda p: p.name)
def test_seed_decode_encode_is_structurally_stable(path):
    module = decode_module(path.read_bytes())
    again = decode_module(encode_module(module))
    assert again == module
    assert encode_module(again) == encode_module(module)


@pytest.mark.parametrize("path", seed_paths(), ids=lambda p: p.name)
def test_seeds_validate_under_both_validators(path):
    data = path.read_bytes()
    assert validate_module(decode_module(data)).ok
    assert independent_validate(data)[0]


@given(st.integers(0, (1 << 32) - 1))
def test_uleb_roundtrip(v):
    assert Reader(uleb(v)).u32() == v


@given(st.integers(-(1 << 63), (1 << 63) - 1))
def test_i64_const_roundtrip(v):
    m = single_function([I("i64.const", (v,))], results=(T.I64,))
    assert decode_module(encode_module(m)).codes[0].body == (I("i64.const", (v,)),)


@given(st.integers(-(1 << 31), (1 << 31) - 1), st.integers(0, (1 << 32) - 1))
def test_const_immediates_roundtrip(i, bits):
    body = [I("i32.const", (i,)), I("drop"), I("f32.const", (bits,)), I("drop"), I("i32.const", (0,))]
    m = single_function(body)
    assert list(decode_module(encode_module(m)).codes[0].body) == body


def test_out_of_range_immediates_are_rejected():
    with pytest.raises(EncodingOverflow):
        uleb(1 << 32)
    with pytest.raises(EncodingOverflow):
        sleb(1 << 31, 32)


@pytest.mark.parametrize("data", [b"", b"\x00asm", b"\x00asm\x02\x00\x00\x00", b"\x00asm\x01\x00\x00\x00\x01\x05\x01"])
def test_malformed_binaries_raise(data):
    with pytest.raises(MalformedBinary):
        decode_module(data)


# Straight-line programs over a small instruction menu; many are ill-typed on purpose.
_MENU = [
    I("i32.const", (7,)), I("i64.const", (-3,)), I("f32.const", (0x3F800000,)),
    I("f64.const", (0,)), I("i32.add"), I("i64.mul"), I("f32.add"), I("i32.eqz"),
    I("i32.wrap_i64"), I("i64.extend_i32_s"), I("f64.promote_f32"), I("drop"), I("select"),
    I("local.get", (0,)), I("local.set", (0,)), I("local.tee", (0,)), I("local.get", (3,)),
    I("i32.load", (2, 0)), I("i64.store", (3, 8)), I("nop"), I("unreachable"),
    I("global.get", (0,)), I("i32.load", (5, 0)),
]


@given(st.lists(st.sampled_from(_MENU), max_size=12), st.booleans())
def test_validator_agrees_with_independent_validator(body, memory):
    m = single_function(body, locals_=((1, T.I32),), memory=memory)
    ours = validate_module(m).ok
    theirs, msg = independent_validate(encode_module(m))
    assert ours == theirs, (body, validate_module(m).messages(), msg)


@pytest.mark.parametrize("body, memory", [
    ([I("i64.const", (1,))], False),
    ([I("local.get", (5,))], False),
    ([I("i32.const", (0,)), I("i32.load", (2, 0))], False),
    ([I("i32.const", (0,)), I("i32.load", (3, 0))], True),
    ([I("i32.add")], False),
    ([I("i32.const", (1,)), I("br", (1,))], False),
])
def test_validator_rejects(body, memory):
    m = single_function(body, locals_=((1, T.I32),), memory=memory)
    assert not validate_module(m).ok
    assert not independent_validate(encode_module(m))[0]
