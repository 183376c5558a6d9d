"""Run a binary on a runtime panel, normalize what each runtime did, and classify."""

from __future__ import annotations

import enum
import hashlib
import json
import os
import shutil
import subprocess
import tempfile
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from ..wasm import WasmError, decode_module, encode_module
from ..wasm.types import ValType
from .adapters import AdapterMisconfigured, RuntimeAdapter, Signedness, TrapClass
from .lowering import ENTRY_WRAPPER, LoweringError, lower_entry, lowered, render

PROBE_PREFIX = "##WD|"
_PKG_ROOT = str(Path(__file__).resolve().parents[2])


class Phase(str, enum.Enum):
    COMPILE_OK = "CompileOk"
    COMPILE_FAIL = "CompileFail"
    RUN_OK = "RunOk"
    RUN_TRAP = "RunTrap"
    TIMEOUT = "Timeout"


class InconsistencyType(str, enum.Enum):
    CF = "CF"
    RF = "RF"
    UO = "UO"


class InsufficientPanel(Exception):
    """Fewer than three outcomes are usable for a majority vote."""


@dataclass
class RuntimeOutcome:
    runtime: str
    phase: Phase
    trap: TrapClass | None = None
    renderedResults: str | None = None  # noqa: N815
    rawStdout: str = ""  # noqa: N815
    rawStderr: str = ""  # noqa: N815
    exitCode: int = 0  # noqa: N815

    @property
    def probes(self) -> list[str]:
        return [ln for ln in self.rawStdout.splitlines() if ln.startswith(PROBE_PREFIX)]

    def to_json(self) -> dict:
        return {
            "runtime": self.runtime, "phase": self.phase.value,
            "trap": self.trap.value if self.trap else None,
            "renderedResults": self.renderedResults, "rawStdout": self.rawStdout,
            "rawStderr": self.rawStderr, "exitCode": self.exitCode,
        }

    @classmethod
    def from_json(cls, d: dict) -> RuntimeOutcome:
        return cls(
            runtime=d["runtime"], phase=Phase(d["phase"]),
            trap=TrapClass.parse(d["trap"]) if d.get("trap") else None,
            renderedResults=d.get("renderedResults"), rawStdout=d.get("rawStdout", ""),
            rawStderr=d.get("rawStderr", ""), exitCode=d.get("exitCode", 0),
        )


@dataclass
class Consistent:
    binaryId: str = ""  # noqa: N815
    outcomes: list[RuntimeOutcome] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"binaryId": self.binaryId, "verdict": "Consistent",
                "outcomes": [o.to_json() for o in self.outcomes]}


@dataclass
class InconsistencyRecord:
    binaryId: str  # noqa: N815
    type: InconsistencyType
    suspectRuntimes: list[str]  # noqa: N815
    outcomes: list[RuntimeOutcome]
    tie: bool = False

    def to_json(self) -> dict:
        return {"binaryId": self.binaryId, "verdict": self.type.value,
                "suspectRuntimes": self.suspectRuntimes, "tie": self.tie,
                "outcomes": [o.to_json() for o in self.outcomes]}


def verdict_from_json(d: dict) -> Consistent | InconsistencyRecord:
    outcomes = [RuntimeOutcome.from_json(o) for o in d.get("outcomes", [])]
    if d["verdict"] == "Consistent":
        return Consistent(d["binaryId"], outcomes)
    return InconsistencyRecord(d["binaryId"], InconsistencyType(d["verdict"]),
                               list(d["suspectRuntimes"]), outcomes, bool(d.get("tie")))


# -- execution --------------------------------------------------------------------------


@dataclass(frozen=True)
class Prepared:
    """The exact bytes handed to runtimes plus what is needed to read results back."""

    data: bytes
    invoke: str
    # Original result types of the entry; None when the binary could not be lowered.
    types: tuple[ValType, ...] | None


def prepare(data: bytes, export: str) -> Prepared:
    try:
        module, types = lower_entry(decode_module(data), export)
        return Prepared(encode_module(module), ENTRY_WRAPPER, types)
    except (WasmError, LoweringError):
        # Undecodable or export-less binaries still run; the compile stage is what matters.
        return Prepared(data, export, None)


@lru_cache(maxsize=None)
def _checked(adapter_name: str, exe: str) -> None:
    if shutil.which(exe) is None:
        raise AdapterMisconfigured(f"{adapter_name}: executable {exe!r} not found")


def _check_signedness(adapter: RuntimeAdapter, types, values: list[int]) -> None:
    widths = [lt for t in types for lt in lowered(t)]
    for t, v in zip(widths, values):
        bits = 64 if t is ValType.I64 else 32
        if adapter.integerRenderSignedness[t.value] is Signedness.SIGNED:
            ok = -(1 << (bits - 1)) <= v < 1 << (bits - 1)
        else:
            ok = 0 <= v < 1 << bits
        if not ok:
            raise AdapterMisconfigured(
                f"{adapter.name}: printed {v} outside the declared "
                f"{adapter.integerRenderSignedness[t.value].value} {t.value} range")


def _render_output(adapter: RuntimeAdapter, prep: Prepared, stdout: str,
                   canonical_nan: bool) -> str:
    lines = [ln for ln in stdout.splitlines() if not ln.startswith(PROBE_PREFIX)]
    for ln in lines:
        if ln.startswith("exit "):
            return "exit:" + ln[5:].strip()
    values = adapter.parse_results(lines)
    if prep.types is None:
        return ",".join(format(v & (2**64 - 1), "x") for v in values)
    _check_signedness(adapter, prep.types, values)
    try:
        return render(prep.types, values, canonical_nan)
    except ValueError:
        return "malformed:" + "|".join(lines)


def _env() -> dict:
    env = dict(os.environ)
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [_PKG_ROOT, env.get("PYTHONPATH")]))
    return env


def execute(prep: Prepared, adapter: RuntimeAdapter, canonical_nan: bool = True) -> RuntimeOutcome:
    """Run prepared bytes on one adapter as an isolated process."""
    with tempfile.TemporaryDirectory(prefix="wasmdiff-") as tmp:
        path = os.path.join(tmp, "input.wasm")
        with open(path, "wb") as f:
            f.write(prep.data)
        argv = adapter.argv(path, prep.invoke)
        _checked(adapter.name, argv[0])
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=adapter.timeout,
                                  env=_env(), cwd=tmp)
        except subprocess.TimeoutExpired as e:
            return RuntimeOutcome(adapter.name, Phase.TIMEOUT,
                                  rawStdout=_text(e.stdout), rawStderr=_text(e.stderr), exitCode=-1)
        except OSError as e:
            raise AdapterMisconfigured(f"{adapter.name}: cannot launch: {e}") from None
    return interpret(adapter, prep, _text(proc.stdout), _text(proc.stderr), proc.returncode,
                     canonical_nan)


def interpret(adapter: RuntimeAdapter, prep: Prepared, out: str, err: str, code: int,
              canonical_nan: bool = True) -> RuntimeOutcome:
    """Turn one finished process (exit code and captured text) into an outcome."""
    if adapter.is_compile_failure(code, err):
        return RuntimeOutcome(adapter.name, Phase.COMPILE_FAIL, rawStdout=out, rawStderr=err,
                              exitCode=code)
    if code == 0:
        return RuntimeOutcome(adapter.name, Phase.RUN_OK,
                              renderedResults=_render_output(adapter, prep, out, canonical_nan),
                              rawStdout=out, rawStderr=err, exitCode=code)
    return RuntimeOutcome(adapter.name, Phase.RUN_TRAP, trap=adapter.classify_trap(err, out),
                          rawStdout=out, rawStderr=err, exitCode=code)


def _text(b) -> str:
    if b is None:
        return ""
    return b.decode("utf-8", "replace") if isinstance(b, bytes) else b


def run_on_runtime(binary, adapter: RuntimeAdapter, canonical_nan: bool = True) -> RuntimeOutcome:
    """Run ``binary`` (anything with ``bytes`` and ``entryExportName``) on one runtime."""
    return execute(prepare(binary.bytes, binary.entryExportName), adapter, canonical_nan)


# -- classification ----------------------------------------------------------------------


def _majority(outcomes: list[RuntimeOutcome], key) -> tuple[list[str], bool]:
    groups = Counter(key(o) for o in outcomes)
    top = max(groups.values())
    winners = [k for k, n in groups.items() if n == top]
    if len(winners) == 1:
        return sorted(o.runtime for o in outcomes if key(o) != winners[0]), False
    # No strict majority: every runtime is a suspect.
    return sorted(o.runtime for o in outcomes), True


def _run_key(o: RuntimeOutcome):
    return (o.phase.value, o.trap.value if o.trap else None)


def classify(outcomes: list[RuntimeOutcome], binary_id: str = "") -> Consistent | InconsistencyRecord:
    usable = [o for o in outcomes if o.phase is not Phase.TIMEOUT]
    if len(usable) < 3:
        raise InsufficientPanel(f"{len(usable)} usable outcomes, need 3")

    def record(kind, key):
        suspects, tie = _majority(usable, key)
        return InconsistencyRecord(binary_id, kind, suspects, list(outcomes), tie)

    failed = {o.phase is Phase.COMPILE_FAIL for o in usable}
    if len(failed) > 1:
        return record(InconsistencyType.CF, lambda o: o.phase is Phase.COMPILE_FAIL)
    if failed == {True}:
        return Consistent(binary_id, list(outcomes))
    if len({_run_key(o) for o in usable}) > 1:
        return record(InconsistencyType.RF, _run_key)
    if len({o.renderedResults for o in usable}) > 1:
        return record(InconsistencyType.UO, lambda o: o.renderedResults)
    return Consistent(binary_id, list(outcomes))


def run_panel(binary, adapters: list[RuntimeAdapter], canonical_nan: bool = True,
              parallel: bool = True) -> Consistent | InconsistencyRecord:
    if len(adapters) < 3:
        raise InsufficientPanel(f"panel has {len(adapters)} adapters, need 3")
    prep = prepare(binary.bytes, binary.entryExportName)
    if parallel:
        with ThreadPoolExecutor(max_workers=len(adapters)) as pool:
            outcomes = list(pool.map(lambda a: execute(prep, a, canonical_nan), adapters))
    else:
        outcomes = [execute(prep, a, canonical_nan) for a in adapters]
    return classify(outcomes, _binary_id(binary))


def _binary_id(binary) -> str:
    return getattr(binary, "binary_id", None) or hashlib.sha256(binary.bytes).hexdigest()


class ResultLog:
    """Append-only JSON-lines log; writes from concurrent workers are serialized."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock, open(self.path, "a") as f:
            f.write(line + "\n")

    def read(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path) as f:
            for line in f:
                line = line.strip()
                if line:
                    try:
                        out.append(json.loads(line))
                    except json.JSONDecodeError:
                        # A torn final line from an interrupted run.
                        continue
        return out
