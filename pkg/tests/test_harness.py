from __future__ import annotations

import sys

import pytest
from helpers import FIXTURES, needs_default_panel, python_panel, recorded_outcomes, single_function
from hypothesis import given
from hypothesis import strategies as st

from wasmdiff.generator import GeneratedBinary
from wasmdiff.harness import (
    ENTRY_WRAPPER,
    AdapterMisconfigured,
    Consistent,
    InconsistencyRecord,
    InconsistencyType,
    InsufficientPanel,
    Phase,
    ResultLog,
    RuntimeAdapter,
    RuntimeOutcome,
    TrapClass,
    adapters_from_config,
    classify,
    execute,
    interpret,
    load_adapters,
    lower_entry,
    prepare,
    render,
    run_panel,
    verdict_from_json,
)
from wasmdiff.wasm import Instruction as I, ValType as T, encode_module, validate_module


def binary(module) -> GeneratedBinary:
    return GeneratedBinary(encode_module(module), module)


def adapter(name, signed=True, **kw) -> RuntimeAdapter:
    sign = "signed" if signed else "unsigned"
    cfg = {"adapters": [{"name": name, "command": "true {binary}", "signedness": {"i32": sign, "i64": sign}, **kw}]}
    return adapters_from_config(cfg)[0]


def outcome(name, phase=Phase.RUN_OK, trap=None, results="00000000") -> RuntimeOutcome:
    return RuntimeOutcome(name, phase, trap, results if phase is Phase.RUN_OK else None)


I32_MINUS_ONE = prepare(encode_module(single_function([I("i32.const", (-1,))], [T.I32])), "main")


# -- configuration -----------------------------------------------------------------------


@pytest.mark.parametrize("which", ["default", "mock"])
def test_bundled_panels_load(which):
    ads = load_adapters(which)
    assert len(ads) >= 3 and len({a.name for a in ads}) == len(ads)


@pytest.mark.parametrize("cfg", [
    {},
    {"adapters": [{"name": "x"}]},
    {"adapters": [{"name": "x", "command": "run"}]},
    {"adapters": [{"name": "x", "command": "r {binary}"}, {"name": "x", "command": "r {binary}"}]},
    {"adapters": [{"name": "x", "command": "r {binary}", "signedness": {"i32": "sideways"}}]},
    {"adapters": [{"name": "x", "command": "r {binary}", "result_pattern": "\\d+"}]},
    {"adapters": [{"name": "x", "command": "r {binary}", "trap_rules": [{"pattern": "x", "trap": "Bogus"}]}]},
    {"adapters": [{"name": "x", "command": "r {binary}", "timeout": 0}]},
])
def test_bad_configs_are_rejected(cfg):
    with pytest.raises(AdapterMisconfigured):
        adapters_from_config(cfg)


def test_missing_adapter_file_is_misconfiguration(tmp_path):
    with pytest.raises(AdapterMisconfigured):
        load_adapters(str(tmp_path / "nope.yaml"))


def test_missing_executable_is_misconfiguration():
    a = adapters_from_config({"adapters": [{"name": "ghost", "command": "no-such-runtime-xyz {binary}"}]})[0]
    with pytest.raises(AdapterMisconfigured):
        execute(I32_MINUS_ONE, a)


# -- trap classes and result normalization ---------------------------------------------------


@pytest.mark.parametrize("text, trap", [
    ("wasm trap: undefined element", TrapClass.OOB_TABLE),
    ("RuntimeError: table index is out of bounds", TrapClass.OOB_TABLE),
    ("out of bounds table access", TrapClass.OOB_TABLE),
    ("indirect call type mismatch", TrapClass.INDIRECT_CALL_TYPE_MISMATCH),
    ("RuntimeError: null function or function signature mismatch", TrapClass.INDIRECT_CALL_TYPE_MISMATCH),
    ("integer divide by zero", TrapClass.INTEGER_DIVIDE_BY_ZERO),
    ("RuntimeError: remainder by zero", TrapClass.INTEGER_DIVIDE_BY_ZERO),
    ("integer overflow", TrapClass.INTEGER_OVERFLOW),
    ("invalid conversion to integer", TrapClass.INTEGER_OVERFLOW),
    ("RuntimeError: float unrepresentable in integer range", TrapClass.INTEGER_OVERFLOW),
    ("out of bounds memory access", TrapClass.OOB_MEMORY),
    ("RuntimeError: memory access out of bounds", TrapClass.OOB_MEMORY),
    ("call stack exhausted", TrapClass.STACK_EXHAUSTION),
    ("RangeError: Maximum call stack size exceeded", TrapClass.STACK_EXHAUSTION),
    ("wasm trap: wasm `unreachable` instruction executed", TrapClass.UNREACHABLE),
    ("segfault in the JIT", TrapClass.UNKNOWN),
])
def test_trap_wording_maps_to_class(text, trap):
    assert adapter("a").classify_trap(text, "") is trap
    assert adapter("a").classify_trap("", text) is trap


def test_per_adapter_rules_take_precedence():
    a = adapter("a", trap_rules=[{"pattern": "unreachable", "trap": "StackExhaustion"}])
    assert a.classify_trap("unreachable", "") is TrapClass.STACK_EXHAUSTION
    assert TrapClass.parse("UndefinedElement") is TrapClass.OOB_TABLE


def test_signed_and_unsigned_printing_normalize_equally():
    signed = interpret(adapter("s"), I32_MINUS_ONE, "-1\n", "", 0)
    unsigned = interpret(adapter("u", signed=False), I32_MINUS_ONE, "4294967295\n", "", 0)
    assert signed.renderedResults == unsigned.renderedResults == "ffffffff"
    assert isinstance(classify([signed, unsigned, signed]), Consistent)


def test_table_trap_wordings_classify_consistent():
    a, b = adapter("a"), adapter("b")
    outs = [interpret(a, I32_MINUS_ONE, "", "wasm trap: undefined element", 3),
            interpret(b, I32_MINUS_ONE, "", "out of bounds table access", 3),
            interpret(a, I32_MINUS_ONE, "", "undefined element", 3)]
    assert {o.trap for o in outs} == {TrapClass.OOB_TABLE}
    assert isinstance(classify(outs), Consistent)


def test_misdeclared_signedness_is_misconfiguration():
    with pytest.raises(AdapterMisconfigured):
        interpret(adapter("u", signed=False), I32_MINUS_ONE, "-1\n", "", 0)


def test_count_mismatch_renders_malformed():
    o = interpret(adapter("a"), I32_MINUS_ONE, "1\n2\n", "", 0)
    assert o.renderedResults.startswith("malformed:")


def test_hex_result_pattern():
    a = adapter("h", signed=False, result_pattern="(0x[0-9a-f]+):i32")
    assert interpret(a, I32_MINUS_ONE, "0xffffffff:i32\n", "", 0).renderedResults == "ffffffff"


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_v128_renders_high_half_first(hi, lo):
    assert render([T.V128], [hi, lo]) == format(hi << 64 | lo, "032x")
    signed_hi = hi - 2**64 if hi >= 2**63 else hi
    assert render([T.V128], [signed_hi, lo]) == format(hi << 64 | lo, "032x")


@given(st.integers(0, 2**23 - 1).filter(bool), st.booleans())
def test_nan_payloads_canonicalize_only_when_asked(payload, sign):
    bits = (sign << 31) | (0xFF << 23) | payload
    assert render([T.F32], [bits], canonical_nan=True) == "7fc00000"
    assert render([T.F32], [bits], canonical_nan=False) == format(bits, "08x")


def test_lowering_wrapper_is_valid_and_integer_only():
    body = [I("f32.const", (0x3F800000,)), I("v128.const", (bytes(range(16)),)), I("f64.const", (1,))]
    m = single_function(body, [T.F32, T.V128, T.F64])
    lowered, types = lower_entry(m, "main")
    assert types == (T.F32, T.V128, T.F64)
    assert validate_module(lowered).ok
    sig = lowered.func_type(lowered.export_of(ENTRY_WRAPPER).index)
    assert sig.results == (T.I32, T.I64, T.I64, T.I64)
    assert not any(i.opcode == "i32.add" for i in lowered.codes[-1].body)


def test_undecodable_binaries_run_unlowered():
    prep = prepare(b"garbage", "main")
    assert prep.types is None and prep.invoke == "main" and prep.data == b"garbage"


# -- classification ----------------------------------------------------------------------------


_OUTCOME = st.one_of(
    st.just((Phase.COMPILE_FAIL, None, None)),
    st.sampled_from([TrapClass.OOB_MEMORY, TrapClass.UNREACHABLE]).map(lambda t: (Phase.RUN_TRAP, t, None)),
    st.sampled_from(["00000001", "00000002"]).map(lambda r: (Phase.RUN_OK, None, r)),
    st.just((Phase.TIMEOUT, None, None)),
)


def _panel(specs):
    return [RuntimeOutcome(f"rt{i}", p, t, r) for i, (p, t, r) in enumerate(specs)]


@given(st.lists(_OUTCOME, min_size=3, max_size=6), st.randoms())
def test_classification_properties(specs, rnd):
    outs = _panel(specs)
    usable = [o for o in outs if o.phase is not Phase.TIMEOUT]
    if len(usable) < 3:
        with pytest.raises(InsufficientPanel):
            classify(outs)
        return
    v = classify(outs)
    shuffled = list(outs)
    rnd.shuffle(shuffled)
    w = classify(shuffled)
    assert type(v) is type(w)
    if isinstance(v, Consistent):
        return
    assert v.type is w.type and v.suspectRuntimes == w.suspectRuntimes and v.tie == w.tie
    names = {o.runtime for o in usable}
    assert set(v.suspectRuntimes) <= names and v.suspectRuntimes == sorted(v.suspectRuntimes)
    cf = {o.phase is Phase.COMPILE_FAIL for o in usable}
    if len(cf) > 1:
        assert v.type is InconsistencyType.CF
    elif len({(o.phase, o.trap) for o in usable}) > 1:
        assert v.type is InconsistencyType.RF
    else:
        assert v.type is InconsistencyType.UO
    if v.tie:
        assert set(v.suspectRuntimes) == names
    else:
        assert 0 < len(v.suspectRuntimes) < len(usable) / 2 + 0.5


def test_majority_and_tie():
    v = classify([outcome("a"), outcome("b"), outcome("c", results="00000001")])
    assert (v.type, v.suspectRuntimes, v.tie) == (InconsistencyType.UO, ["c"], False)
    v = classify([outcome("a"), outcome("b"), outcome("c", results="1"), outcome("d", results="1")])
    assert v.tie and v.suspectRuntimes == ["a", "b", "c", "d"]
    v = classify([outcome("a"), outcome("b"), outcome("c", Phase.RUN_TRAP, TrapClass.OOB_MEMORY)])
    assert (v.type, v.suspectRuntimes) == (InconsistencyType.RF, ["c"])


def test_compile_fail_everywhere_is_consistent():
    assert isinstance(classify([outcome(n, Phase.COMPILE_FAIL) for n in "abc"]), Consistent)


def test_timeouts_are_excluded():
    outs = [outcome("a"), outcome("b"), outcome("c"), outcome("d", Phase.TIMEOUT)]
    assert isinstance(classify(outs), Consistent)
    with pytest.raises(InsufficientPanel):
        classify(outs[:2] + outs[3:])


@pytest.mark.parametrize("name", ["data_offset", "i8x16_shl", "export_names"])
def test_recorded_fixtures(name):
    outcomes, expected = recorded_outcomes(FIXTURES / "recorded" / f"{name}.json")
    v = classify(outcomes)
    assert isinstance(v, InconsistencyRecord)
    assert v.type.value == expected["type"] and v.suspectRuntimes == expected["suspects"]


def test_verdict_json_roundtrip():
    outcomes, _ = recorded_outcomes(FIXTURES / "recorded" / "i8x16_shl.json")
    v = classify(outcomes, "abc")
    w = verdict_from_json(v.to_json())
    assert w.to_json() == v.to_json()


def test_result_log_skips_torn_lines(tmp_path):
    log = ResultLog(tmp_path / "r.jsonl")
    log.append({"a": 1})
    with open(log.path, "a") as f:
        f.write('{"a": ')
    assert log.read() == [{"a": 1}]


# -- execution -------------------------------------------------------------------------------


def test_runs_are_consistent_and_render_results():
    m = single_function([I("i32.const", (-1,)), I("i64.const", (5,))], [T.I32, T.I64])
    v = run_panel(binary(m), python_panel())
    assert isinstance(v, Consistent)
    assert {o.renderedResults for o in v.outcomes} == {"ffffffff,0000000000000005"}


def test_traps_and_compile_failures_are_observed():
    trap = single_function([I("unreachable")], [T.I32])
    v = run_panel(binary(trap), python_panel())
    assert isinstance(v, Consistent)
    assert {(o.phase, o.trap) for o in v.outcomes} == {(Phase.RUN_TRAP, TrapClass.UNREACHABLE)}
    bad = run_panel(GeneratedBinary(b"\x00asm\x01\x00\x00\x00\x01", None), python_panel())
    assert {o.phase for o in bad.outcomes} == {Phase.COMPILE_FAIL}


def test_mock_add1_is_detected_as_uo():
    m = single_function([I("i32.const", (2,)), I("i32.const", (3,)), I("i32.add")], [T.I32])
    v = run_panel(binary(m), python_panel(mock=True))
    assert isinstance(v, InconsistencyRecord) and v.type is InconsistencyType.UO
    assert v.suspectRuntimes == ["mock-add1"]


def test_timeout_yields_timeout_phase():
    a = adapters_from_config({"adapters": [{
        "name": "sleepy", "timeout": 0.5,
        "command": "{python} -c 'import time; time.sleep(10)' {binary} {invoke}"}]})[0]
    assert execute(I32_MINUS_ONE, a).phase is Phase.TIMEOUT


@needs_default_panel
def test_default_panel_agrees_on_simple_values():
    body = [I("v128.const", (bytes(range(16)),)), I("f64.const", (0x7FF8000000000001,))]
    v = run_panel(binary(single_function(body, [T.V128, T.F64])), load_adapters())
    assert isinstance(v, Consistent), [(o.runtime, o.renderedResults, o.rawStderr) for o in v.outcomes]
    assert v.outcomes[0].renderedResults == "0f0e0d0c0b0a09080706050403020100,7ff8000000000000"


def test_python_used_for_runners_is_current():
    assert "{python}" in load_adapters("default")[0].commandTemplate
    assert sys.executable in load_adapters("default")[0].argv("x.wasm", "main")
