from __future__ import annotations

import pytest
from helpers import python_panel, valid_both_ways
from hypothesis import given, settings
from hypothesis import strategies as st

from wasmdiff.generator import GenConfig, GeneratedBinary, generate_binary
from wasmdiff.harness import (
    Consistent,
    InconsistencyRecord,
    InconsistencyType,
    execute,
    prepare,
    run_panel,
)
from wasmdiff.locator import (
    BlameReport,
    CallEntry,
    CallReturn,
    InstrStep,
    InstrumentationOverflow,
    dedup_reports,
    func_locating,
    instr_locating,
    instrument_functions,
    instrument_instructions,
    parse_probe_log,
)
from wasmdiff.wasm import FuncType, Instruction as I, ValType as T, WasmModule, decode_module, encode_module
from wasmdiff.wasm.types import Code, Export, Limits

MOCK = python_panel(mock=True)


def two_function_module(callee_body, callee_results=(T.I32,), memory=False) -> GeneratedBinary:
    """main() calls f(3) and returns its result."""
    m = WasmModule(
        types=[FuncType((), callee_results), FuncType((T.I32,), callee_results)],
        functions=[0, 1], memories=[Limits(1, 1)] if memory else [],
        exports=[Export("main", "func", 0)],
        codes=[Code((), (I("i32.const", (3,)), I("call", (1,)))), Code((), tuple(callee_body))],
    )
    data = encode_module(m)
    return GeneratedBinary(data, decode_module(data))


ADD_ONE = [I("local.get", (0,)), I("i32.const", (1,)), I("i32.add")]


def offset_of(gb: GeneratedBinary, func: int, opcode: str) -> int:
    return next(i.offset for i in gb.moduleIR.codes[func].body if i.opcode == opcode)


def test_call_probes_report_arguments_and_results():
    gb = two_function_module(ADD_ONE)
    ib = instrument_functions(gb)
    out = execute(prepare(ib.bytes, ib.entryExportName), python_panel()[0])
    log = parse_probe_log("wasmtime", out.rawStdout)
    assert log.entries == [CallEntry(1, ("00000003",)), CallReturn(1, ("00000004",))]
    assert out.renderedResults == "00000004"


def test_step_probes_follow_original_offsets():
    gb = two_function_module(ADD_ONE)
    ib = instrument_instructions(gb, 1)
    out = execute(prepare(ib.bytes, ib.entryExportName), python_panel()[0])
    steps = parse_probe_log("wasmtime", out.rawStdout).entries
    body = gb.moduleIR.codes[1].body
    assert [s.byteOffset for s in steps] == [i.offset for i in body]
    assert [s.opcode for s in steps] == [i.opcode for i in body]
    assert [s.topOfStackBits for s in steps] == ["00000003", "00000001", "00000004"]


def test_parse_probe_log_tolerates_noise():
    text = "\n".join([
        "hello", "##WD|CALL|2|0000000a,ffffffff", "##WD|CALL|T00000001|",
        "##WD|STEP|17|i32.add|00000002", "##WD|RET|2|", "##WD|STEP|1",
    ])
    log = parse_probe_log("x", text)
    assert log.entries == [CallEntry(2, ("0000000a", "ffffffff")), CallEntry("T00000001", ()),
                           InstrStep(17, "i32.add", "00000002"), CallReturn(2, ())]
    assert log.complete


def test_uo_is_blamed_on_the_add_inside_the_callee():
    gb = two_function_module(ADD_ONE)
    v = run_panel(gb, MOCK)
    assert isinstance(v, InconsistencyRecord) and v.type is InconsistencyType.UO
    assert v.suspectRuntimes == ["mock-add1"]
    (report,) = func_locating(gb, v, MOCK)
    assert report.funcIdx == 1 and not report.heisenbug
    assert report.instr == (offset_of(gb, 1, "i32.add"), "i32.add")
    assert report.dedupKey == ("mock-add1", "UO", "i32.add", "[i32,i32]->[i32]")
    assert instr_locating(gb, 1, MOCK, "mock-add1") == report.instr


def test_rf_is_blamed_on_the_trapping_function():
    body = [I("i32.const", (65535,)), I("i32.const", (0,)), I("i32.add"), I("i32.load8_u", (0, 0))]
    gb = two_function_module(body, memory=True)
    v = run_panel(gb, MOCK)
    assert isinstance(v, InconsistencyRecord) and v.type is InconsistencyType.RF
    (report,) = func_locating(gb, v, MOCK)
    assert report.funcIdx == 1 and report.instr is None
    assert report.dedupKey == ("mock-add1", "RF", "OobMemory", "[i32]->[i32]")


def test_add_free_binary_is_consistent_on_mock_panel():
    gb = two_function_module([I("local.get", (0,)), I("i32.const", (1,)), I("i32.sub")])
    assert isinstance(run_panel(gb, MOCK), Consistent)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_instrumented_binaries_validate(corpus, pool, seed):
    gb = generate_binary(corpus, GenConfig(seed=seed), pool)
    assert valid_both_ways(instrument_functions(gb).module)
    for f in range(len(gb.moduleIR.codes)):
        ib = instrument_instructions(gb, f)
        assert valid_both_ways(ib.module)
        assert {p.func for p in ib.probeMap} <= {f}


@pytest.mark.parametrize("seed", range(8))
def test_instrumentation_is_transparent(corpus, pool, seed):
    gb = generate_binary(corpus, GenConfig(seed=seed), pool)
    rt = python_panel()[0]
    plain = execute(prepare(gb.bytes, "main"), rt)
    for ib in (instrument_functions(gb), instrument_instructions(gb, 0)):
        inst = execute(prepare(ib.bytes, ib.entryExportName), rt)
        assert (inst.phase, inst.trap, inst.renderedResults) == \
            (plain.phase, plain.trap, plain.renderedResults)


def test_scratch_cap_raises_overflow(corpus, pool):
    gb = generate_binary(corpus, GenConfig(seed=1), pool)
    with pytest.raises(InstrumentationOverflow):
        instrument_instructions(gb, 0, max_scratch=0)


def _report(bid, key, size):
    return BlameReport(bid, InconsistencyType.UO, key[0], 1, (5, key[2]), key, binarySize=size, members=[bid])


def test_dedup_keeps_smallest_representative_and_counts():
    k1 = ("m", "UO", "i32.add", "[i32,i32]->[i32]")
    k2 = ("m", "UO", "i64.add", "[i64,i64]->[i64]")
    reps = [_report("b", k1, 30), _report("a", k1, 10), _report("c", k2, 5), _report("d", k1, 10)]
    out = dedup_reports(reps)
    assert [(r.binaryId, r.groupSize, r.members) for r in out] == \
        [("a", 3, ["a", "b", "d"]), ("c", 1, ["c"])]
    assert dedup_reports(out + out)[0].groupSize == 2


def test_blame_report_json_roundtrip():
    r = _report("a", ("m", "UO", "i32.add", "x"), 9)
    assert BlameReport.from_json(r.to_json()) == r
