from __future__ import annotations

import importlib.util
import shutil
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
FIXTURES = Path(__file__).parent / "fixtures"
SEED_DIR = DATA / "seeds"

HAVE_NODE = shutil.which("node") is not None
HAVE_WASMER = importlib.util.find_spec("wasmer") is not None
needs_default_panel = pytest.mark.skipif(
    not (HAVE_NODE and HAVE_WASMER), reason="default panel needs node and wasmer-python"
)


def seed_paths() -> list[Path]:
    return sorted(SEED_DIR.glob("*.wasm"))


def mutate_functions(module, plan, rng, log):
    """Apply ``plan``'s AST strategies to every function of ``module`` in place."""
    import dataclasses

    from wasmdiff.corpus import roots_of_module, serialize_roots
    from wasmdiff.mutator import mutate_ast

    for i, roots in roots_of_module(module):
        new = mutate_ast(roots, plan, rng, log)
        module.codes[i] = dataclasses.replace(module.codes[i], body=tuple(serialize_roots(new)))
    return module


def valid_both_ways(module) -> bool:
    from wasmdiff.wasm import encode_module, validate_module
    from wasmdiff.wasm.oracle import independent_validate

    return validate_module(module).ok and independent_validate(encode_module(module))[0]


def recorded_outcomes(path: Path):
    """Interpret one recorded-outcome fixture; returns (outcomes, expected)."""
    import json

    from wasmdiff.harness import interpret, load_adapters, prepare

    rec = json.loads(path.read_text())
    adapters = {a.name: a for a in load_adapters(str(FIXTURES / rec["panel"]))}
    prep = prepare((FIXTURES / rec["binary"]).read_bytes(), rec["export"])
    outcomes = [interpret(adapters[r["runtime"]], prep, r["stdout"], r["stderr"], r["exitCode"])
                for r in rec["runs"]]
    return outcomes, rec["expected"]


def single_function(body, results, locals_=(), memory=False):
    from wasmdiff.wasm import FuncType, WasmModule
    from wasmdiff.wasm.types import Code, Export, Limits

    return WasmModule(
        types=[FuncType((), tuple(results))], functions=[0],
        memories=[Limits(1, 1)] if memory else [],
        exports=[Export("main", "func", 0)], codes=[Code(tuple(locals_), tuple(body))],
    )


def python_panel_config(mock: bool = False) -> dict:
    """Three in-package runners; with ``mock`` the last one misimplements i32.add."""
    # wasmer's singlepass engine has no multi-value support, so it stays out.
    engines = ["wasmtime", "wasmer-cranelift" if HAVE_WASMER else "wasmtime", "wasmtime"]
    cmd = "{python} -m wasmdiff.runners.pyrunner %s {binary} {invoke}"
    cfg = {"adapters": [{"name": f"{e}-{i}", "command": cmd % e} for i, e in enumerate(engines)]}
    if mock:
        cfg["adapters"][-1] = {"name": "mock-add1", "command": cmd % "wasmtime" + " --mock-add1"}
    return cfg


def python_panel(mock: bool = False):
    from wasmdiff.harness import adapters_from_config

    return adapters_from_config(python_panel_config(mock))


def write_panel(path: Path, mock: bool = False) -> Path:
    import yaml

    path.write_text(yaml.safe_dump(python_panel_config(mock)))
    return path


# Criterion number -> (status, title, detail); printed at the end of the session.
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


class criterion:
    """Record one acceptance criterion as PASS, or FAIL when the block raises."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.detail = ""
        self.warning = False

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            status = "PASS (warning)" if self.warning else "PASS"
        elif exc_type.__name__ in ("Skipped",):
            status = "SKIP"
        else:
            status = "FAIL"
            self.detail = self.detail or f"{exc_type.__name__}: {str(exc)[:300]}"
        ACCEPTANCE[self.number] = (status, self.title, self.detail)
        print(f"criterion {self.number}: {status}: {self.title} [{self.detail}]")
        return False
