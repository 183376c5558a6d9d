"""Root-cause localization of divergences through instrumented re-execution."""

from .instrument import (
    InstrumentationOverflow,
    InstrumentedBinary,
    Probe,
    instrument_functions,
    instrument_instructions,
)
from .locate import (
    BlameReport,
    CallEntry,
    CallReturn,
    InstrStep,
    NoDivergenceUnderInstrumentation,
    ProbeLog,
    dedup_reports,
    func_locating,
    instr_locating,
    parse_probe_log,
)

__all__ = [
    "BlameReport",
    "CallEntry",
    "CallReturn",
    "dedup_reports",
    "func_locating",
    "instr_locating",
    "InstrStep",
    "instrument_functions",
    "instrument_instructions",
    "InstrumentationOverflow",
    "InstrumentedBinary",
    "NoDivergenceUnderInstrumentation",
    "parse_probe_log",
    "Probe",
    "ProbeLog",
]
