"""Differential execution across runtimes and classification of divergences."""

from .adapters import (
    AdapterMisconfigured,
    RuntimeAdapter,
    Signedness,
    TrapClass,
    TrapRule,
    adapters_from_config,
    default_trap_rules,
    load_adapters,
)
from .lowering import ENTRY_WRAPPER, lower_entry, render
from .panel import (
    PROBE_PREFIX,
    Consistent,
    InconsistencyRecord,
    InconsistencyType,
    InsufficientPanel,
    Phase,
    Prepared,
    ResultLog,
    RuntimeOutcome,
    classify,
    execute,
    interpret,
    prepare,
    run_on_runtime,
    run_panel,
    verdict_from_json,
)

__all__ = [
    "AdapterMisconfigured",
    "adapters_from_config",
    "classify",
    "Consistent",
    "default_trap_rules",
    "ENTRY_WRAPPER",
    "execute",
    "InconsistencyRecord",
    "InconsistencyType",
    "InsufficientPanel",
    "interpret",
    "load_adapters",
    "lower_entry",
    "Phase",
    "prepare",
    "Prepared",
    "PROBE_PREFIX",
    "render",
    "ResultLog",
    "run_on_runtime",
    "run_panel",
    "RuntimeAdapter",
    "RuntimeOutcome",
    "Signedness",
    "TrapClass",
    "TrapRule",
    "verdict_from_json",
]
