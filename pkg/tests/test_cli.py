import json

import pytest

from src.app.main_cli import EXIT_DATA_ERROR, EXIT_OK, EXIT_USAGE_ERROR, main
from tests.conftest import fixture_path

QUIET = ["--log-level", "WARNING"]


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("LOG_FILE", raising=False)
    monkeypatch.setenv("LOG_DIR", str(tmp_path / "logs"))


def run(*argv) -> int:
    return main(QUIET + [str(arg) for arg in argv])


def read_records(path) -> list:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


@pytest.fixture
def parsed(tmp_path):
    outputs = {}
    for name, format_name in [("sw2005.words", "aligned-words"), ("sw2005.pos", "pos"),
                              ("sw2005.dis", "disfluency"), ("sw2005.mrg", "treebank")]:
        output = tmp_path / f"{name}.xml"
        assert run("parse", "--format", format_name, "--timeline", "sw2005",
                   fixture_path(name), "-o", output) == EXIT_OK
        outputs[format_name] = output
    return outputs


@pytest.fixture
def merged(tmp_path, parsed):
    output = tmp_path / "sw2005.xml"
    assert run("merge", *parsed.values(), "-o", output) == EXIT_OK
    return output


def test_usage_errors_and_help():
    assert main(["frobnicate"]) == EXIT_USAGE_ERROR
    assert main(["parse", "--format", "klingon", "x.txt"]) == EXIT_USAGE_ERROR
    assert main(["--help"]) == EXIT_OK


def test_missing_input_is_a_data_error(capsys):
    assert run("parse", "--format", "pos", "missing.pos") == EXIT_DATA_ERROR
    assert "not-found" in capsys.readouterr().err


def test_malformed_input_reports_position(tmp_path, capsys):
    broken = tmp_path / "broken.words"
    broken.write_text("B 19.44 0.16 Yeah,\nB nineteen 0.10 no\n", encoding="utf-8")
    assert run("parse", "--format", "aligned-words", broken) == EXIT_DATA_ERROR
    assert "broken.words:2:" in capsys.readouterr().err


def test_merge_and_query(tmp_path, merged):
    output = tmp_path / "words.tsv"
    assert run("query", merged, "21.86", "26.10", "--type", "W/", "-o", output) == EXIT_OK
    lines = output.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 14
    assert lines[0].split("\t")[2] == "Metric"
    assert lines[-1].split("\t")[2:] == ["like.", "aligned-words", "25.88", "26.10"]


def test_merge_without_anchoring_keeps_streams_floating(tmp_path, parsed):
    output = tmp_path / "loose.xml"
    assert run("merge", "--no-anchor", *parsed.values(), "-o", output) == EXIT_OK
    table = tmp_path / "pos.tsv"
    assert run("export", output, "--layer", "Pos/", "-o", table) == EXIT_OK
    assert all(line.split("\t")[4] == "-" for line in table.read_text(encoding="utf-8").splitlines())


def test_score_text_files(tmp_path, capsys):
    ref = tmp_path / "sw2005.txt"
    hyp = tmp_path / "sw2005.hyp"
    ref.write_text("yeah no one seems\nto be adopting it\n", encoding="utf-8")
    hyp.write_text("yeah no one seem to\nbe really adopting it\n", encoding="utf-8")
    records = tmp_path / "records.jsonl"
    assert run("score", "--ref", ref, "--hyp", hyp, "--segments", "--records", records) == EXIT_OK
    table = capsys.readouterr().out
    assert "phrases" in table and "substit." in table
    rows = read_records(records)
    assert rows[-1]["record"] == "aggregate"
    assert (rows[-1]["substitutions"], rows[-1]["insertions"]) == (1, 1)
    assert rows[-1]["phrases_with_errors"] == 2


def test_score_reports_fragment_and_nonlexical_shares(tmp_path, capsys):
    ref = tmp_path / "sw2005.txt"
    hyp = tmp_path / "sw2005.hyp"
    ref.write_text("th- the dog\nuh-huh yes\n", encoding="utf-8")
    hyp.write_text("the dog\nyes\n", encoding="utf-8")
    records = tmp_path / "records.jsonl"
    assert run("score", "--ref", ref, "--hyp", hyp, "--records", records) == EXIT_OK
    assert "in ins/del" in capsys.readouterr().out
    aggregate = read_records(records)[-1]
    assert aggregate["deletions"] == 2
    assert aggregate["insertions_deletions_special"] == 2
    assert aggregate["insdel_special_share_pct"] == 100.0
    assert aggregate["substitution_special_share_pct"] == 0.0


def test_score_requires_matching_file_lists(tmp_path):
    ref = tmp_path / "a.txt"
    ref.write_text("x\n", encoding="utf-8")
    assert run("score", "--ref", ref, "--hyp", ref, ref) == EXIT_DATA_ERROR


def test_repair_writes_impact_and_export(tmp_path, parsed):
    ledger = tmp_path / "fixes.tsv"
    ledger.write_text("CHANNEL_SWAP\t21.86-26.10\n", encoding="utf-8")
    repaired = tmp_path / "fixed.xml"
    impact = tmp_path / "impact.jsonl"
    assert run("repair", parsed["aligned-words"], ledger, "-o", repaired, "--impact", impact) == EXIT_OK
    records = read_records(impact)
    assert [(r["arc_type"], r["provenance"], len(r["arc_ids"])) for r in records] == [("W/", "aligned-words", 14)]

    words = tmp_path / "fixed.words"
    assert run("export", repaired, "--format", "words", "-o", words) == EXIT_OK
    lines = words.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 71
    assert "A 21.86 0.26 Metric" in lines
    assert "B 20.68 0.16 it." in lines


def test_repair_rejects_bad_ledger(tmp_path, parsed):
    ledger = tmp_path / "fixes.tsv"
    ledger.write_text("SHUFFLE\t21.86-26.10\n", encoding="utf-8")
    assert run("repair", parsed["aligned-words"], ledger) == EXIT_DATA_ERROR


def test_catalog_flow(tmp_path, capsys):
    ledger = tmp_path / "tdt.ledger"
    snapshot = tmp_path / "tdt.snapshot"
    assert run("catalog", ledger, "register", "ABC", "1998-03-01", "18:30", "30") == EXIT_OK
    assert capsys.readouterr().out == "ABC_19980301_1830\tSCHEDULED\n"
    assert run("catalog", ledger, "advance", "ABC_19980301_1830", "inspected") == EXIT_DATA_ERROR
    for stage in ("recorded", "inspected"):
        assert run("catalog", ledger, "advance", "ABC_19980301_1830", stage) == EXIT_OK
    assert run("catalog", ledger, "segment", "ABC_19980301_1830", "0", "600:NON_NEWS", "900") == EXIT_OK
    assert run("catalog", ledger, "annotate", "link", "STORY_LINK",
               "ABC_19980301_1830_0", "ABC_19980301_1830_600") == EXIT_OK
    assert run("catalog", ledger, "flaw", "ABC_19980301_1830_600", "F1") == EXIT_OK
    assert run("catalog", ledger, "snapshot", "-o", snapshot) == EXIT_OK
    capsys.readouterr()

    assert run("catalog", ledger, "reseg", "ABC_19980301_1830", "0", "900") == EXIT_OK
    assert "invalidated=1" in capsys.readouterr().out
    assert run("catalog", ledger, "check") == EXIT_OK
    assert "dangling_valid=0" in capsys.readouterr().out
    assert run("catalog", ledger, "check", "--snapshot", snapshot) == EXIT_OK
    report = capsys.readouterr().out
    assert "dangling_valid=1" in report and "diverged_stories=2" in report
