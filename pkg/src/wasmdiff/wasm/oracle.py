"""Independent validation via the wasmtime engine's validator."""

from __future__ import annotations

import functools

import wasmtime


@functools.lru_cache(maxsize=1)
def _engine() -> wasmtime.Engine:
    cfg = wasmtime.Config()
    cfg.wasm_simd = True
    cfg.wasm_reference_types = True
    cfg.wasm_bulk_memory = True
    cfg.wasm_multi_value = True
    return wasmtime.Engine(cfg)


def independent_validate(data: bytes) -> tuple[bool, str]:
    """Return ``(ok, message)`` from a conformant third-party validator."""
    try:
        wasmtime.Module.validate(_engine(), data)
    except wasmtime.WasmtimeError as e:
        return False, str(e).strip().splitlines()[0] if str(e).strip() else "invalid"
    return True, ""
