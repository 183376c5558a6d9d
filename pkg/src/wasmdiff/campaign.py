"""Resumable fuzzing campaigns: generate, mutate, run on a panel, localize, report.

Layout of a campaign directory::

    campaign.json        configuration the campaign was started with
    corpus/              corpus snapshot the binaries were drawn from
    binaries/<sha>.wasm  every divergent binary, plus <sha>.json with its lineage
    results.log          one JSON record per generated binary
    blame/<sha>.json     blame reports of a divergent binary
    state/cursor         index of the next binary to generate
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, build_corpus, load_corpus, save_corpus
from .generator import GenConfig, GeneratedBinary, GenerationFailed, RootPool, generate_binary
from .harness import (
    AdapterMisconfigured,
    InconsistencyRecord,
    InsufficientPanel,
    ResultLog,
    RuntimeAdapter,
    load_adapters,
    run_panel,
)
from .locator import BlameReport, InstrumentationOverflow, dedup_reports, func_locating
from .mutator import MutationPlan
from .wasm import ValType, decode_module


class CampaignError(Exception):
    pass


@dataclass
class CampaignConfig:
    seedCorpusDir: str  # noqa: N815
    outDir: str  # noqa: N815
    adaptersFile: str = "default"  # noqa: N815
    genConfig: GenConfig = field(default_factory=GenConfig)  # noqa: N815
    mutationPlan: MutationPlan | None = None  # noqa: N815
    workerCount: int = 1  # noqa: N815
    # Stop conditions: total binaries and/or wall-clock seconds for this invocation.
    count: int | None = 100
    duration: float | None = None
    locate: bool = True
    canonicalNan: bool = True  # noqa: N815
    keepAll: bool = False  # noqa: N815

    def __post_init__(self) -> None:
        if self.workerCount < 1:
            raise ValueError("workerCount must be positive")
        if self.count is None and self.duration is None:
            raise ValueError("a campaign needs a count or a duration")

    def to_json(self) -> dict:
        gen = dataclasses.asdict(dataclasses.replace(self.genConfig, mutation=None))
        if gen.get("entryResultTypes"):
            gen["entryResultTypes"] = [t.value for t in gen["entryResultTypes"]]
        plan = None
        if self.mutationPlan is not None:
            plan = dataclasses.asdict(self.mutationPlan)
            plan["moduleOps"] = sorted(plan["moduleOps"])
            plan["astOps"] = list(plan["astOps"])
        return {
            "seedCorpusDir": self.seedCorpusDir, "adaptersFile": self.adaptersFile,
            "genConfig": gen, "mutationPlan": plan, "canonicalNan": self.canonicalNan,
        }


def derived_seed(base: int, index: int) -> int:
    """Seed of the ``index``-th binary; independent of worker scheduling."""
    digest = hashlib.sha256(f"{base}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# -- corpus --------------------------------------------------------------------------------


def seed_binaries(seed_dir: str | Path) -> list[tuple[str, bytes]]:
    root = Path(seed_dir)
    if not root.is_dir():
        raise CampaignError(f"seed directory {root} does not exist")
    return [(str(p.relative_to(root)), p.read_bytes()) for p in sorted(root.rglob("*.wasm"))]


def corpus_build(seed_dir: str | Path, out_dir: str | Path) -> dict:
    """Build a corpus from every ``*.wasm`` under ``seed_dir`` and persist it."""
    seeds = seed_binaries(seed_dir)
    corpus = build_corpus(data for _, data in seeds)
    out = Path(out_dir)
    entries = out / "entries"
    if entries.is_dir():
        for stale in entries.glob("*.json"):
            stale.unlink()
    save_corpus(corpus, out)
    return corpus_summary(corpus)


def corpus_summary(corpus: Corpus) -> dict:
    return {
        "entries": len(corpus),
        "binaries_seen": corpus.binaries_seen,
        "binaries_skipped": corpus.binaries_skipped,
        "diagnostics": list(corpus.diagnostics),
    }


def obtain_corpus(seed_dir: str | Path, out_dir: Path) -> Corpus:
    """Load a saved corpus, or build one from raw seeds into ``out_dir/corpus``."""
    snapshot = out_dir / "corpus"
    if (snapshot / "index.json").exists():
        return load_corpus(snapshot)
    if (Path(seed_dir) / "index.json").exists():
        corpus = load_corpus(seed_dir)
    else:
        corpus = build_corpus(data for _, data in seed_binaries(seed_dir))
    save_corpus(corpus, snapshot)
    return corpus


# -- the campaign loop -------------------------------------------------------------------------


class Campaign:
    def __init__(self, cfg: CampaignConfig, adapters: list[RuntimeAdapter] | None = None):
        self.cfg = cfg
        self.out = Path(cfg.outDir)
        for sub in ("binaries", "blame", "state", "corpus"):
            (self.out / sub).mkdir(parents=True, exist_ok=True)
        self.adapters = adapters if adapters is not None else load_adapters(cfg.adaptersFile)
        if len(self.adapters) < 3:
            raise AdapterMisconfigured(f"panel has {len(self.adapters)} adapters, need 3")
        self._check_config()
        self.corpus = obtain_corpus(cfg.seedCorpusDir, self.out)
        self.pool = RootPool(self.corpus) if len(self.corpus) else None
        self.log = ResultLog(self.out / "results.log")

    def _check_config(self) -> None:
        path = self.out / "campaign.json"
        current = self.cfg.to_json()
        if path.exists():
            saved = json.loads(path.read_text())
            if saved != current:
                raise CampaignError(f"{self.out} holds a campaign with a different configuration")
        else:
            path.write_text(json.dumps(current, indent=1, sort_keys=True))

    @property
    def cursor(self) -> int:
        path = self.out / "state" / "cursor"
        return int(path.read_text()) if path.exists() else 0

    def _set_cursor(self, value: int) -> None:
        path = self.out / "state" / "cursor"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(str(value))
        tmp.replace(path)

    def generate(self, index: int) -> GeneratedBinary:
        seed = derived_seed(self.cfg.genConfig.seed, index)
        plan = self.cfg.mutationPlan
        if plan is not None:
            plan = dataclasses.replace(plan, seed=seed)
        gen = dataclasses.replace(self.cfg.genConfig, seed=seed, mutation=plan)
        return generate_binary(self.corpus, gen, self.pool)

    def process(self, index: int) -> dict:
        started = time.monotonic()
        record: dict = {"index": index}
        try:
            binary = self.generate(index)
        except GenerationFailed as e:
            record.update(verdict="GenerationFailed", error=str(e))
            return record
        record["binaryId"] = binary.binary_id
        record["size"] = len(binary.bytes)
        try:
            verdict = run_panel(binary, self.adapters, self.cfg.canonicalNan)
        except InsufficientPanel as e:
            record.update(verdict="InsufficientPanel", error=str(e))
            return record
        record.update(verdict.to_json())
        if isinstance(verdict, InconsistencyRecord) or self.cfg.keepAll:
            self.persist_binary(binary)
        if isinstance(verdict, InconsistencyRecord) and self.cfg.locate:
            self.localize(binary, verdict)
        record["seconds"] = round(time.monotonic() - started, 3)
        return record

    def persist_binary(self, binary: GeneratedBinary) -> Path:
        path = self.out / "binaries" / f"{binary.binary_id}.wasm"
        path.write_bytes(binary.bytes)
        meta = {"entryExportName": binary.entryExportName, "lineage": binary.lineage}
        path.with_suffix(".json").write_text(json.dumps(meta, default=str))
        return path

    def localize(self, binary, record: InconsistencyRecord) -> list[BlameReport]:
        try:
            reports = func_locating(binary, record, self.adapters, self.cfg.canonicalNan)
        except InstrumentationOverflow:
            # Reported without a location, like a divergence that vanished.
            reports = [BlameReport(record.binaryId, record.type, s, heisenbug=True,
                                   dedupKey=(s, record.type.value, "uninstrumentable", ""),
                                   binarySize=len(binary.bytes), members=[record.binaryId])
                       for s in record.suspectRuntimes]
        path = self.out / "blame" / f"{record.binaryId}.json"
        path.write_text(json.dumps([r.to_json() for r in reports], indent=1))
        return reports

    def run(self) -> dict:
        """Generate until the stop condition; returns the campaign report."""
        if self.pool is None:
            raise CampaignError("corpus is empty; nothing to generate from")
        start = self.cursor
        deadline = None if self.cfg.duration is None else time.monotonic() + self.cfg.duration
        stop = None if self.cfg.count is None else self.cfg.count
        batch = max(1, self.cfg.workerCount * 4)
        index = start
        with ThreadPoolExecutor(max_workers=self.cfg.workerCount) as pool:
            while (stop is None or index < stop) and (deadline is None or time.monotonic() < deadline):
                end = index + batch if stop is None else min(index + batch, stop)
                for rec in pool.map(self.process, range(index, end)):
                    self.log.append(rec)
                index = end
                # Only whole batches move the cursor; a torn batch is redone on resume.
                self._set_cursor(index)
        return build_report(self.out)


# -- locate and report ---------------------------------------------------------------------


def load_binary(out_dir: str | Path, binary_id: str) -> GeneratedBinary:
    out = Path(out_dir)
    matches = sorted((out / "binaries").glob(f"{binary_id}*.wasm"))
    if len(matches) != 1:
        raise CampaignError(f"{len(matches)} binaries match {binary_id!r}")
    data = matches[0].read_bytes()
    meta_path = matches[0].with_suffix(".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return GeneratedBinary(data, decode_module(data), meta.get("entryExportName", "main"),
                           meta.get("lineage", {}))


def latest_records(out_dir: str | Path) -> dict[int, dict]:
    """Result records keyed by index; a redone batch overrides earlier lines."""
    records: dict[int, dict] = {}
    for rec in ResultLog(Path(out_dir) / "results.log").read():
        records[rec["index"]] = rec
    return records


def locate_record(out_dir: str | Path, binary_id: str,
                  adapters: list[RuntimeAdapter] | None = None,
                  canonical_nan: bool = True) -> list[BlameReport]:
    """Re-run and localize one persisted divergent binary."""
    out = Path(out_dir)
    binary = load_binary(out, binary_id)
    if adapters is None:
        cfg_path = out / "campaign.json"
        source = json.loads(cfg_path.read_text())["adaptersFile"] if cfg_path.exists() else "default"
        adapters = load_adapters(source)
    verdict = run_panel(binary, adapters, canonical_nan)
    if not isinstance(verdict, InconsistencyRecord):
        # Nothing diverges any more on this panel.
        return []
    reports = func_locating(binary, verdict, adapters, canonical_nan)
    (out / "blame").mkdir(exist_ok=True)
    (out / "blame" / f"{binary.binary_id}.json").write_text(
        json.dumps([r.to_json() for r in reports], indent=1))
    return reports


def load_reports(out_dir: str | Path) -> list[BlameReport]:
    reports = []
    for path in sorted((Path(out_dir) / "blame").glob("*.json")):
        reports += [BlameReport.from_json(d) for d in json.loads(path.read_text())]
    return reports


def build_report(out_dir: str | Path) -> dict:
    """Census of the result log plus deduplicated blame, per runtime and type."""
    out = Path(out_dir)
    records = latest_records(out)
    verdicts = Counter(r["verdict"] for r in records.values())
    per_runtime: dict[str, Counter] = defaultdict(Counter)
    ties = 0
    for r in records.values():
        if r["verdict"] in ("CF", "RF", "UO"):
            ties += bool(r.get("tie"))
            for s in r.get("suspectRuntimes", []):
                per_runtime[s][r["verdict"]] += 1
    divergent = {r["binaryId"] for r in records.values() if r["verdict"] in ("CF", "RF", "UO")}
    reports = [b for b in load_reports(out) if b.binaryId in divergent]
    unique = dedup_reports(reports)
    unique_by_runtime: dict[str, Counter] = defaultdict(Counter)
    for u in unique:
        unique_by_runtime[u.suspectRuntime][u.inconsistencyType.value] += 1
    return {
        "binaries": len(records),
        "verdicts": dict(sorted(verdicts.items())),
        "ties": ties,
        "perRuntime": {k: dict(v) for k, v in sorted(per_runtime.items())},
        "blameReports": len(reports),
        "heisenbugs": sum(r.heisenbug for r in reports),
        "uniqueReports": len(unique),
        "uniqueByRuntime": {k: dict(v) for k, v in sorted(unique_by_runtime.items())},
        "unique": [u.to_json() for u in unique],
    }


def format_report(report: dict) -> str:
    lines = [f"binaries: {report['binaries']}"]
    for k, v in report["verdicts"].items():
        lines.append(f"  {k:<18} {v}")
    if report["perRuntime"] or report["uniqueByRuntime"]:
        lines.append("")
        lines.append(f"{'runtime':<16} {'CF':>6} {'RF':>6} {'UO':>6} {'unique':>7}")
        names = sorted(set(report["perRuntime"]) | set(report["uniqueByRuntime"]))
        for name in names:
            c = report["perRuntime"].get(name, {})
            u = sum(report["uniqueByRuntime"].get(name, {}).values())
            lines.append(f"{name:<16} {c.get('CF', 0):>6} {c.get('RF', 0):>6} {c.get('UO', 0):>6} {u:>7}")
    lines.append("")
    lines.append(f"ties: {report['ties']}  blame reports: {report['blameReports']}  "
                 f"heisenbugs: {report['heisenbugs']}  unique: {report['uniqueReports']}")
    for u in report["unique"]:
        key = " / ".join(str(k) for k in u["dedupKey"])
        where = ""
        if u["funcIdx"] is not None:
            where = f" func {u['funcIdx']}"
        if u["instr"]:
            where += f" @{u['instr'][0]} {u['instr'][1]}"
        lines.append(f"  [{u['groupSize']:>4}x] {key}{where}  e.g. {u['binaryId'][:16]}")
    return "\n".join(lines)


def parse_result_types(text: str | None) -> list[ValType] | None:
    if not text:
        return None
    return [ValType(t.strip()) for t in text.split(",") if t.strip()]
