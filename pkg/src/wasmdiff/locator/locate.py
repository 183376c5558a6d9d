"""Blame a divergence on a function, then on an instruction, by diffing probe logs."""

from __future__ import annotations

import hashlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from ..harness.adapters import RuntimeAdapter
from ..harness.lowering import canonical_hex
from ..harness.panel import (
    PROBE_PREFIX,
    InconsistencyRecord,
    InconsistencyType,
    Phase,
    RuntimeOutcome,
    execute,
    prepare,
)
from ..wasm import decode_module
from ..wasm.validate import type_function
from .instrument import instrument_functions, instrument_instructions

INSTRUMENTED_TIMEOUT_FACTOR = 3


class NoDivergenceUnderInstrumentation(Exception):
    """The inconsistency vanished once the binary was instrumented."""


@dataclass(frozen=True)
class CallEntry:
    funcIdx: int | str  # noqa: N815
    argBits: tuple[str, ...]  # noqa: N815


@dataclass(frozen=True)
class CallReturn:
    funcIdx: int | str  # noqa: N815
    resultBits: tuple[str, ...]  # noqa: N815


@dataclass(frozen=True)
class InstrStep:
    byteOffset: int  # noqa: N815
    opcode: str
    topOfStackBits: str  # noqa: N815


@dataclass
class ProbeLog:
    runtime: str
    entries: list
    outcome: RuntimeOutcome | None = None

    @property
    def complete(self) -> bool:
        """False when the run timed out, so the log may stop anywhere."""
        return self.outcome is None or self.outcome.phase is not Phase.TIMEOUT


def _ident(text: str) -> int | str:
    return int(text) if text.isdigit() else text


def _bits(text: str) -> tuple[str, ...]:
    return tuple(text.split(",")) if text else ()


def parse_probe_log(runtime: str, stdout: str) -> ProbeLog:
    """Parse probe lines; a torn trailing line is ignored."""
    entries = []
    for line in stdout.splitlines():
        if not line.startswith(PROBE_PREFIX):
            continue
        parts = line[len(PROBE_PREFIX):].split("|")
        if parts[0] == "CALL" and len(parts) == 3:
            entries.append(CallEntry(_ident(parts[1]), _bits(parts[2])))
        elif parts[0] == "RET" and len(parts) == 3:
            entries.append(CallReturn(_ident(parts[1]), _bits(parts[2])))
        elif parts[0] == "STEP" and len(parts) == 4 and parts[1].isdigit():
            entries.append(InstrStep(int(parts[1]), parts[2], parts[3]))
    return ProbeLog(runtime, entries)


@dataclass
class BlameReport:
    binaryId: str  # noqa: N815
    inconsistencyType: InconsistencyType  # noqa: N815
    suspectRuntime: str  # noqa: N815
    funcIdx: int | None = None  # noqa: N815
    instr: tuple[int, str] | None = None
    dedupKey: tuple = ()  # noqa: N815
    heisenbug: bool = False
    binarySize: int = 0  # noqa: N815
    groupSize: int = 1  # noqa: N815
    members: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "binaryId": self.binaryId, "inconsistencyType": self.inconsistencyType.value,
            "suspectRuntime": self.suspectRuntime, "funcIdx": self.funcIdx,
            "instr": list(self.instr) if self.instr else None, "dedupKey": list(self.dedupKey),
            "heisenbug": self.heisenbug, "binarySize": self.binarySize,
            "groupSize": self.groupSize, "members": self.members,
        }

    @classmethod
    def from_json(cls, d: dict) -> BlameReport:
        return cls(
            binaryId=d["binaryId"], inconsistencyType=InconsistencyType(d["inconsistencyType"]),
            suspectRuntime=d["suspectRuntime"], funcIdx=d.get("funcIdx"),
            instr=tuple(d["instr"]) if d.get("instr") else None,
            dedupKey=tuple(d.get("dedupKey", ())), heisenbug=bool(d.get("heisenbug")),
            binarySize=d.get("binarySize", 0), groupSize=d.get("groupSize", 1),
            members=list(d.get("members", [])),
        )


# -- running and comparing logs ------------------------------------------------------------


def _run_logs(ib, adapters: list[RuntimeAdapter], canonical_nan: bool) -> list[ProbeLog]:
    prep = prepare(ib.bytes, ib.entryExportName)
    # Probes make every run slower; a longer limit keeps them from reading as timeouts.
    adapters = [replace(a, timeout=a.timeout * INSTRUMENTED_TIMEOUT_FACTOR) for a in adapters]
    with ThreadPoolExecutor(max_workers=max(1, len(adapters))) as pool:
        outcomes = list(pool.map(lambda a: execute(prep, a, canonical_nan), adapters))
    logs = []
    for o in outcomes:
        log = parse_probe_log(o.runtime, o.rawStdout)
        log.outcome = o
        logs.append(log)
    return logs


def _canonicalize(log: ProbeLog, module, probe_types: dict) -> list:
    """Collapse NaN payloads in float probe values, mirroring result rendering."""
    out = []
    for e in log.entries:
        if isinstance(e, CallEntry) and isinstance(e.funcIdx, int):
            types = module.func_type(e.funcIdx).params
            e = CallEntry(e.funcIdx, tuple(canonical_hex(t, b, True) for t, b in zip(types, e.argBits)))
        elif isinstance(e, CallReturn) and isinstance(e.funcIdx, int):
            types = module.func_type(e.funcIdx).results
            e = CallReturn(e.funcIdx, tuple(canonical_hex(t, b, True)
                                            for t, b in zip(types, e.resultBits)))
        elif isinstance(e, InstrStep) and e.byteOffset in probe_types:
            types = probe_types[e.byteOffset]
            if types:
                e = InstrStep(e.byteOffset, e.opcode, canonical_hex(types[0], e.topOfStackBits, True))
        out.append(e)
    return out


def _outcome_key(o: RuntimeOutcome):
    return (o.phase.value, o.trap.value if o.trap else None, o.renderedResults)


def _reference(logs: list[ProbeLog], suspects: list[str], suspect: str,
               entries: dict[str, list]) -> ProbeLog | None:
    """The most common log among non-suspects (or among everyone but ``suspect``)."""
    pool = [lg for lg in logs if lg.runtime not in suspects] or [
        lg for lg in logs if lg.runtime != suspect]
    pool = [lg for lg in pool if lg.complete] or pool
    if not pool:
        return None
    counts = Counter((tuple(entries[lg.runtime]), _outcome_key(lg.outcome)) for lg in pool)
    best = max(counts.values())
    for lg in sorted(pool, key=lambda lg: lg.runtime):
        if counts[(tuple(entries[lg.runtime]), _outcome_key(lg.outcome))] == best:
            return lg
    return None


def _first_divergence(sus: list, ref: list, sus_complete: bool = True,
                      ref_complete: bool = True) -> int | None:
    for i in range(min(len(sus), len(ref))):
        if sus[i] != ref[i]:
            return i
    if len(sus) == len(ref):
        return None
    # A shorter log only diverges if it really ended there.
    shorter_complete = sus_complete if len(sus) < len(ref) else ref_complete
    return min(len(sus), len(ref)) if shorter_complete else None


def _blame_call_tree(sus: ProbeLog, ref: ProbeLog, sus_entries: list, ref_entries: list,
                     entry: int) -> int | None:
    """Walk the reference call tree up to the first divergent probe and name a function."""
    stack = [entry]
    sus_e, ref_e = sus_entries, ref_entries
    i = _first_divergence(sus_e, ref_e, sus.complete, ref.complete)
    outcomes_differ = (sus.complete and ref.complete
                       and _outcome_key(sus.outcome) != _outcome_key(ref.outcome))
    if i is None:
        if not outcomes_differ:
            return None
        # Identical logs, different final behaviour: whatever is still open misbehaved.
        for e in ref_e:
            _step_stack(stack, e)
        return stack[-1]
    for e in ref_e[:i]:
        _step_stack(stack, e)
    if i < len(sus_e) and i < len(ref_e):
        s, r = sus_e[i], ref_e[i]
        if isinstance(s, CallReturn) and isinstance(r, CallReturn) and s.funcIdx == r.funcIdx:
            # Same callee returned different values.
            return s.funcIdx if isinstance(s.funcIdx, int) else stack[-1]
    # Different arguments, different calls, or a truncated log: the open function is to blame.
    return stack[-1]


def _step_stack(stack: list, e) -> None:
    if isinstance(e, CallEntry):
        stack.append(e.funcIdx if isinstance(e.funcIdx, int) else stack[-1])
    elif isinstance(e, CallReturn) and len(stack) > 1:
        stack.pop()


def _entry_index(module, export: str) -> int:
    exp = module.export_of(export)
    return exp.index if exp is not None else 0


# -- public operations -----------------------------------------------------------------


def func_locating(binary, record: InconsistencyRecord, adapters: list[RuntimeAdapter],
                  canonical_nan: bool = True) -> list[BlameReport]:
    """Blame one function per suspect runtime; UO records also get an instruction."""
    module = decode_module(binary.bytes)
    binary_id = record.binaryId or hashlib.sha256(binary.bytes).hexdigest()
    if record.type is InconsistencyType.CF:
        return [_report(binary, binary_id, record, s, None, None, module) for s in record.suspectRuntimes]
    ib = instrument_functions(binary)
    logs = _run_logs(ib, adapters, canonical_nan)
    entries = {lg.runtime: (_canonicalize(lg, module, {}) if canonical_nan else lg.entries)
               for lg in logs}
    by_name = {lg.runtime: lg for lg in logs}
    entry = _entry_index(module, binary.entryExportName)
    reports = []
    for suspect in record.suspectRuntimes:
        sus = by_name.get(suspect)
        ref = _reference(logs, record.suspectRuntimes, suspect, entries)
        func = None
        if sus is not None and ref is not None:
            func = _blame_call_tree(sus, ref, entries[suspect], entries[ref.runtime], entry)
        if func is None:
            reports.append(_report(binary, binary_id, record, suspect, None, None, module,
                                   heisenbug=True))
            continue
        instr = None
        if record.type is InconsistencyType.UO:
            try:
                instr = instr_locating(binary, func, adapters, suspect, record.suspectRuntimes,
                                       canonical_nan)
            except NoDivergenceUnderInstrumentation:
                reports.append(_report(binary, binary_id, record, suspect, func, None, module,
                                       heisenbug=True))
                continue
        reports.append(_report(binary, binary_id, record, suspect, func, instr, module))
    return reports


def instr_locating(binary, func_idx: int, adapters: list[RuntimeAdapter], suspect: str,
                   suspects: list[str] | None = None, canonical_nan: bool = True) -> tuple[int, str]:
    """Return (byte offset, opcode) of the first step whose value differs on ``suspect``."""
    ib = instrument_instructions(binary, func_idx)
    module = decode_module(binary.bytes)
    probe_types = {p.site: p.types for p in ib.probeMap}
    logs = _run_logs(ib, adapters, canonical_nan)
    entries = {lg.runtime: (_canonicalize(lg, module, probe_types) if canonical_nan else lg.entries)
               for lg in logs}
    sus = next((lg for lg in logs if lg.runtime == suspect), None)
    ref = _reference(logs, suspects or [suspect], suspect, entries)
    if sus is None or ref is None:
        raise NoDivergenceUnderInstrumentation(f"no usable logs for {suspect}")
    s, r = entries[suspect], entries[ref.runtime]
    i = _first_divergence(s, r, sus.complete, ref.complete)
    if i is None:
        raise NoDivergenceUnderInstrumentation(f"step logs of {suspect} match {ref.runtime}")
    step = s[i] if i < len(s) else r[i]
    return step.byteOffset, step.opcode


def _instr_signature(module, func_idx: int, offset: int) -> str:
    di = func_idx - module.num_imported_funcs
    for ins, typing in zip(module.codes[di].body, type_function(module, di)):
        if ins.offset == offset:
            st = typing.stack_type
            return str(st) if st is not None else ""
    return ""


def _report(binary, binary_id, record, suspect, func, instr, module,
            heisenbug: bool = False) -> BlameReport:
    kind = record.type
    if kind is InconsistencyType.CF:
        key = (suspect, kind.value, Phase.COMPILE_FAIL.value, "")
    elif heisenbug:
        key = (suspect, kind.value, "heisenbug", "")
    elif kind is InconsistencyType.UO:
        key = (suspect, kind.value, instr[1], _instr_signature(module, func, instr[0]))
    else:
        sus = next((o for o in record.outcomes if o.runtime == suspect), None)
        what = (sus.trap.value if sus is not None and sus.trap else
                sus.phase.value if sus is not None else "missing")
        key = (suspect, kind.value, what, str(module.func_type(func)))
    return BlameReport(binary_id, kind, suspect, func, instr, key, heisenbug,
                       binarySize=len(binary.bytes), members=[binary_id])


def dedup_reports(reports: list[BlameReport]) -> list[BlameReport]:
    """One representative per dedup key, the smallest binary; group sizes kept."""
    groups: dict[tuple, list[BlameReport]] = {}
    for r in reports:
        groups.setdefault(tuple(r.dedupKey), []).append(r)
    out = []
    for key in sorted(groups, key=repr):
        members = groups[key]
        rep = min(members, key=lambda r: (r.binarySize, r.binaryId))
        ids = sorted({m for r in members for m in (r.members or [r.binaryId])})
        out.append(replace(rep, groupSize=len(members), members=ids))
    return out
