"""Command-line entry point: corpus-build, fuzz, locate, report."""

from __future__ import annotations

import argparse
import json
import sys

from .campaign import (
    Campaign,
    CampaignConfig,
    CampaignError,
    build_report,
    corpus_build,
    format_report,
    locate_record,
    parse_result_types,
)
from .generator import GenConfig
from .harness import AdapterMisconfigured, InsufficientPanel, load_adapters
from .mutator import AST_STRATEGIES, MODULE_STRATEGIES, MutationPlan

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ADAPTER = 2
EXIT_CAMPAIGN = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wasmdiff", description="Differential fuzzing of WebAssembly runtimes.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cb = sub.add_parser("corpus-build", help="parse seed binaries into a sub-tree corpus")
    cb.add_argument("seed_dir")
    cb.add_argument("out_dir")
    cb.add_argument("--json", action="store_true", help="print the summary as JSON")

    fz = sub.add_parser("fuzz", help="run or resume a campaign")
    fz.add_argument("--seeds", required=True, dest="seed_dir",
                    help="directory of seed .wasm files or a saved corpus")
    fz.add_argument("--out", required=True, dest="out_dir")
    fz.add_argument("--adapters", default="default",
                    help="adapter YAML file, or 'default' / 'mock' for the bundled panels")
    fz.add_argument("--count", type=int, default=None,
                    help="total binaries in the campaign (default 100 when no --duration)")
    fz.add_argument("--duration", type=float, default=None, help="seconds to run this invocation")
    fz.add_argument("--workers", type=int, default=1)
    fz.add_argument("--seed", type=int, default=0, help="campaign base seed")
    fz.add_argument("--subtrees", type=int, default=GenConfig.subtreesPerFunction)
    fz.add_argument("--max-call-depth", type=int, default=GenConfig.maxCallDepth)
    fz.add_argument("--max-functions", type=int, default=GenConfig.maxFunctions)
    fz.add_argument("--memory-page-cap", type=int, default=GenConfig.memoryPageCap)
    fz.add_argument("--loop-fuel", type=int, default=GenConfig.loopFuel,
                    help="loop iterations per run before functions return early; 0 disables")
    fz.add_argument("--entry-results", default=None,
                    help="comma-separated entry result types, e.g. i32,v128")
    fz.add_argument("--no-mutate", action="store_true", help="generate without mutation")
    fz.add_argument("--ast-budget", type=float, default=MutationPlan.astBudget,
                    help="expected mutated sites per function")
    fz.add_argument("--ast-ops", type=_csv, default=list(AST_STRATEGIES))
    fz.add_argument("--module-ops", type=_csv, default=sorted(MODULE_STRATEGIES))
    fz.add_argument("--wasi-imports", action="store_true",
                    help="let module mutation add unused WASI imports")
    fz.add_argument("--no-locate", action="store_true", help="skip localization of divergences")
    fz.add_argument("--exact-nan", action="store_true",
                    help="compare NaN payloads bit-exactly instead of canonicalizing them")
    fz.add_argument("--keep-all", action="store_true", help="persist consistent binaries too")
    fz.add_argument("--json", action="store_true", help="print the report as JSON")

    lc = sub.add_parser("locate", help="re-run and localize one persisted divergent binary")
    lc.add_argument("out_dir")
    lc.add_argument("record_id", help="binary id (content hash or unique prefix)")
    lc.add_argument("--adapters", default=None,
                    help="adapter file; defaults to the one the campaign used")
    lc.add_argument("--exact-nan", action="store_true")

    rp = sub.add_parser("report", help="summarize a campaign directory")
    rp.add_argument("out_dir")
    rp.add_argument("--json", action="store_true")
    return ap


def _campaign_config(args) -> CampaignConfig:
    try:
        gen = GenConfig(
            subtreesPerFunction=args.subtrees,
            maxCallDepth=args.max_call_depth,
            maxFunctions=args.max_functions,
            memoryPageCap=args.memory_page_cap,
            loopFuel=args.loop_fuel or None,
            entryResultTypes=parse_result_types(args.entry_results),
            seed=args.seed,
        )
        plan = None
        if not args.no_mutate:
            plan = MutationPlan(astBudget=args.ast_budget, astOps=tuple(args.ast_ops),
                                moduleOps=frozenset(args.module_ops), wasiImports=args.wasi_imports)
        count = args.count if args.count is not None or args.duration is not None else 100
        return CampaignConfig(
            seedCorpusDir=args.seed_dir, outDir=args.out_dir, adaptersFile=args.adapters,
            genConfig=gen, mutationPlan=plan, workerCount=args.workers, count=count,
            duration=args.duration, locate=not args.no_locate, canonicalNan=not args.exact_nan,
            keepAll=args.keep_all,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_corpus_build(args) -> int:
    summary = corpus_build(args.seed_dir, args.out_dir)
    if args.json:
        print(json.dumps(summary, indent=1))
        return EXIT_OK
    print(f"entries admitted: {summary['entries']}")
    print(f"binaries seen:    {summary['binaries_seen']}")
    print(f"binaries skipped: {summary['binaries_skipped']}")
    for line in summary["diagnostics"]:
        print(f"  {line}")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    cfg = _campaign_config(args)
    report = Campaign(cfg).run()
    print(json.dumps(report, indent=1) if args.json else format_report(report))
    return EXIT_OK


def cmd_locate(args) -> int:
    adapters = load_adapters(args.adapters) if args.adapters else None
    reports = locate_record(args.out_dir, args.record_id, adapters, not args.exact_nan)
    if not reports:
        print("no divergence on this panel")
        return EXIT_OK
    print(json.dumps([r.to_json() for r in reports], indent=1))
    return EXIT_OK


def cmd_report(args) -> int:
    report = build_report(args.out_dir)
    print(json.dumps(report, indent=1) if args.json else format_report(report))
    return EXIT_OK


COMMANDS = {
    "corpus-build": cmd_corpus_build,
    "fuzz": cmd_fuzz,
    "locate": cmd_locate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"wasmdiff: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AdapterMisconfigured as e:
        print(f"wasmdiff: adapter misconfigured: {e}", file=sys.stderr)
        return EXIT_ADAPTER
    except (CampaignError, InsufficientPanel, OSError) as e:
        print(f"wasmdiff: campaign error: {e}", file=sys.stderr)
        return EXIT_CAMPAIGN


if __name__ == "__main__":
    sys.exit(main())
