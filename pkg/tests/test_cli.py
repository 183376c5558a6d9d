from __future__ import annotations

import json

import pytest
from helpers import SEED_DIR, write_panel

from wasmdiff.campaign import CampaignError, derived_seed, latest_records, load_binary
from wasmdiff.cli import EXIT_ADAPTER, EXIT_CAMPAIGN, EXIT_OK, EXIT_USAGE, main
from wasmdiff.corpus import load_corpus


@pytest.fixture(scope="module")
def campaign(tmp_path_factory):
    """A 40-binary campaign on the python-only panel with a mocked i32.add."""
    root = tmp_path_factory.mktemp("camp")
    panel = write_panel(root / "mock.yaml", mock=True)
    out = root / "out"
    args = ["fuzz", "--seeds", str(SEED_DIR), "--out", str(out), "--adapters", str(panel), "--seed", "7"]
    assert main(args + ["--count", "24", "--workers", "2"]) == EXIT_OK
    return out, args


def test_corpus_build(tmp_path, capsys):
    assert main(["corpus-build", str(SEED_DIR), str(tmp_path / "c"), "--json"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["entries"] == len(load_corpus(tmp_path / "c")) > 0
    assert summary["binaries_skipped"] == 0


def test_fuzz_resume_extends_to_total_count(campaign):
    out, args = campaign
    assert len(latest_records(out)) == 24
    assert main(args + ["--count", "32", "--workers", "2"]) == EXIT_OK
    records = latest_records(out)
    assert sorted(records) == list(range(32))
    assert (out / "state" / "cursor").read_text() == "32"
    # Per-index seeds make the campaign reproducible.
    assert derived_seed(7, 3) == derived_seed(7, 3) != derived_seed(7, 4)


def test_records_and_persisted_binaries_agree(campaign):
    out, _ = campaign
    for rec in latest_records(out).values():
        assert rec["verdict"] in ("Consistent", "CF", "RF", "UO")
        if rec["verdict"] != "Consistent":
            assert load_binary(out, rec["binaryId"]).binary_id == rec["binaryId"]
            assert (out / "blame" / f"{rec['binaryId']}.json").exists()
            assert rec["suspectRuntimes"] == ["mock-add1"]


def test_report_recounts_the_log(campaign, capsys):
    out, _ = campaign
    capsys.readouterr()
    assert main(["report", str(out), "--json"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    records = latest_records(out)
    assert report["binaries"] == len(records)
    for verdict, n in report["verdicts"].items():
        assert n == sum(r["verdict"] == verdict for r in records.values())
    assert main(["report", str(out)]) == EXIT_OK
    assert "binaries:" in capsys.readouterr().out


def test_locate_rebuilds_blame(campaign, capsys):
    out, _ = campaign
    divergent = [r for r in latest_records(out).values() if r["verdict"] != "Consistent"]
    if not divergent:
        pytest.skip("campaign produced no divergence")
    rec = divergent[0]
    capsys.readouterr()
    assert main(["locate", str(out), rec["binaryId"][:12]]) == EXIT_OK
    reports = json.loads(capsys.readouterr().out)
    assert reports and all(r["suspectRuntime"] == "mock-add1" for r in reports)
    assert all(r["heisenbug"] or r["funcIdx"] is not None or r["inconsistencyType"] == "CF" for r in reports)


def test_changed_config_on_resume_is_refused(campaign):
    out, args = campaign
    assert main(args + ["--count", "32", "--subtrees", "9"]) == EXIT_CAMPAIGN


def test_usage_errors(tmp_path, capsys):
    for argv in ([], ["fuzz"], ["report"], ["fuzz", "--seeds", "x", "--out", "y", "--count", "many"]):
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == EXIT_USAGE
    args = ["fuzz", "--seeds", str(SEED_DIR), "--out", str(tmp_path / "o")]
    assert main(args + ["--entry-results", "i33"]) == EXIT_USAGE
    assert main(args + ["--ast-ops", "explode"]) == EXIT_USAGE


def test_bad_adapter_file_exits_with_adapter_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("adapters:\n  - name: x\n")
    args = ["fuzz", "--seeds", str(SEED_DIR), "--out", str(tmp_path / "o"), "--count", "1"]
    assert main(args + ["--adapters", str(bad)]) == EXIT_ADAPTER
    assert main(args + ["--adapters", str(tmp_path / "missing.yaml")]) == EXIT_ADAPTER


def test_missing_binary_is_campaign_error(campaign):
    out, _ = campaign
    with pytest.raises(CampaignError):
        load_binary(out, "zzzz")
    assert main(["locate", str(out), "zzzz"]) == EXIT_CAMPAIGN
