"""Runtime adapter configuration: how to launch a runtime and read what it prints."""

from __future__ import annotations

import enum
import re
import shlex
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

DEFAULT_TIMEOUT = 10.0
RUNNERS_DIR = Path(__file__).resolve().parent.parent / "runners"


class AdapterMisconfigured(Exception):
    """An adapter cannot be used as configured; campaigns abort on this."""


class TrapClass(str, enum.Enum):
    OOB_MEMORY = "OobMemory"
    OOB_TABLE = "OobTable"
    INDIRECT_CALL_TYPE_MISMATCH = "IndirectCallTypeMismatch"
    INTEGER_DIVIDE_BY_ZERO = "IntegerDivideByZero"
    INTEGER_OVERFLOW = "IntegerOverflow"
    UNREACHABLE = "Unreachable"
    STACK_EXHAUSTION = "StackExhaustion"
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, name: str) -> TrapClass:
        # "UndefinedElement" is the wording some runtimes use for table misses.
        if name == "UndefinedElement":
            return cls.OOB_TABLE
        try:
            return cls(name)
        except ValueError:
            raise AdapterMisconfigured(f"unknown trap class {name!r}") from None


class Signedness(str, enum.Enum):
    SIGNED = "signed"
    UNSIGNED = "unsigned"


@dataclass(frozen=True)
class TrapRule:
    pattern: re.Pattern
    trap: TrapClass


@dataclass
class RuntimeAdapter:
    name: str
    commandTemplate: str  # noqa: N815
    timeout: float = DEFAULT_TIMEOUT
    trapClassRules: list[TrapRule] = field(default_factory=list)  # noqa: N815
    # Regex searched in each non-probe stdout line; group 1 of every match is one result.
    resultParseRule: str = r"^\s*(-?\d+)\s*$"  # noqa: N815
    integerRenderSignedness: dict[str, Signedness] = field(  # noqa: N815
        default_factory=lambda: {"i32": Signedness.SIGNED, "i64": Signedness.SIGNED})
    compileFailExitCodes: tuple[int, ...] = (2,)  # noqa: N815
    compileFailPatterns: tuple[str, ...] = ()  # noqa: N815

    def __post_init__(self) -> None:
        if "{binary}" not in self.commandTemplate:
            raise AdapterMisconfigured(f"{self.name}: command template lacks {{binary}}")
        if self.timeout <= 0:
            raise AdapterMisconfigured(f"{self.name}: timeout must be positive")
        try:
            self._result_re = re.compile(self.resultParseRule)
            self._compile_res = [re.compile(p, re.I | re.M) for p in self.compileFailPatterns]
        except re.error as e:
            raise AdapterMisconfigured(f"{self.name}: bad pattern: {e}") from None
        if self._result_re.groups < 1:
            raise AdapterMisconfigured(f"{self.name}: result rule needs a capture group")
        for width in ("i32", "i64"):
            self.integerRenderSignedness.setdefault(width, Signedness.SIGNED)

    def argv(self, binary: str, invoke: str) -> list[str]:
        try:
            text = self.commandTemplate.format(
                binary=shlex.quote(binary), invoke=shlex.quote(invoke),
                python=shlex.quote(sys.executable), runners=shlex.quote(str(RUNNERS_DIR)))
        except (KeyError, IndexError, ValueError) as e:
            raise AdapterMisconfigured(f"{self.name}: malformed command template: {e}") from None
        return shlex.split(text)

    def classify_trap(self, stderr: str, stdout: str) -> TrapClass:
        for text in (stderr, stdout):
            for rule in self.trapClassRules:
                if rule.pattern.search(text):
                    return rule.trap
        return TrapClass.UNKNOWN

    def is_compile_failure(self, exit_code: int, stderr: str) -> bool:
        if exit_code in self.compileFailExitCodes:
            return True
        return any(p.search(stderr) for p in self._compile_res)

    def parse_results(self, lines: list[str]) -> list[int]:
        out = []
        for line in lines:
            out += [_int(m.group(1)) for m in self._result_re.finditer(line)]
        return out


def _int(text: str) -> int:
    text = text.strip().lower()
    neg = text.startswith("-")
    body = text.lstrip("+-")
    value = int(body[2:], 16) if body.startswith("0x") else int(body, 10)
    return -value if neg else value


def _rules(raw, where: str) -> list[TrapRule]:
    rules = []
    for item in raw or []:
        try:
            rules.append(TrapRule(re.compile(item["pattern"], re.I), TrapClass.parse(item["trap"])))
        except (KeyError, TypeError):
            raise AdapterMisconfigured(f"{where}: trap rules need 'pattern' and 'trap'") from None
        except re.error as e:
            raise AdapterMisconfigured(f"{where}: bad trap pattern: {e}") from None
    return rules


def adapters_from_config(cfg: dict, shared_rules: list[TrapRule] | None = None) -> list[RuntimeAdapter]:
    if not isinstance(cfg, dict) or not isinstance(cfg.get("adapters"), list):
        raise AdapterMisconfigured("adapter config needs an 'adapters' list")
    shared = _rules(cfg.get("shared_trap_rules"), "shared_trap_rules")
    if not shared:
        shared = shared_rules if shared_rules is not None else default_trap_rules()
    out, names = [], set()
    for entry in cfg["adapters"]:
        try:
            name = str(entry["name"])
            command = str(entry["command"])
        except (KeyError, TypeError):
            raise AdapterMisconfigured("every adapter needs 'name' and 'command'") from None
        if name in names:
            raise AdapterMisconfigured(f"duplicate adapter name {name!r}")
        names.add(name)
        try:
            signedness = {k: Signedness(v) for k, v in (entry.get("signedness") or {}).items()}
        except ValueError as e:
            raise AdapterMisconfigured(f"{name}: {e}") from None
        kwargs = {}
        if "result_pattern" in entry:
            kwargs["resultParseRule"] = entry["result_pattern"]
        out.append(RuntimeAdapter(
            name=name,
            commandTemplate=command,
            timeout=float(entry.get("timeout", DEFAULT_TIMEOUT)),
            trapClassRules=_rules(entry.get("trap_rules"), name) + shared,
            integerRenderSignedness=signedness,
            compileFailExitCodes=tuple(entry.get("compile_fail_exit_codes", (2,))),
            compileFailPatterns=tuple(entry.get("compile_fail_patterns", ())),
            **kwargs,
        ))
    return out


def _packaged(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text()


def default_trap_rules() -> list[TrapRule]:
    return _rules(yaml.safe_load(_packaged("adapters.yaml"))["shared_trap_rules"], "default")


def load_adapters(path: str | Path | None = None) -> list[RuntimeAdapter]:
    """Read an adapter file; ``None`` loads the bundled default panel.

    The names ``default`` and ``mock`` select the bundled panels.
    """
    if path is None or str(path) == "default":
        text = _packaged("adapters.yaml")
    elif str(path) == "mock":
        text = _packaged("mock_panel.yaml")
    else:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise AdapterMisconfigured(f"cannot read adapter file: {e}") from None
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise AdapterMisconfigured(f"adapter file is not valid YAML: {e}") from None
    return adapters_from_config(cfg)
