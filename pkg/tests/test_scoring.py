import random

import pytest

from src.aligner.alignment import EditScript, OpKind, align
from src.aligner.normalizer import NormPolicy
from src.aligner.report_templates import render_table, report_records
from src.aligner.scoring import (
    ErrorCounts,
    coverage,
    error_class_breakdown,
    percent_tenths,
    score,
    segment_score,
)
from src.aligner.segments import Segment, project_phrase_times, segments_from_lines, segments_from_turns
from src.utils.errors import InvalidArgumentError

POLICY = NormPolicy()


def _plant(rng: random.Random, ref_length: int, subs: int, dels: int, ins: int):
    """在互不相邻的位置上埋入指定数量的错误，返回 (ref, hyp)"""
    ref = [f"w{i}" for i in range(ref_length)]
    slots = rng.sample(range(1, ref_length // 3), subs + dels + ins)
    positions = sorted(slot * 3 for slot in slots)
    kinds = ["sub"] * subs + ["del"] * dels + ["ins"] * ins
    rng.shuffle(kinds)
    plan = dict(zip(positions, kinds))
    hyp = []
    for index, word in enumerate(ref):
        kind = plan.get(index)
        if kind == "sub":
            hyp.append(f"x{index}")
        elif kind == "del":
            continue
        elif kind == "ins":
            hyp.extend([f"extra{index}", word])
        else:
            hyp.append(word)
    return ref, hyp


def test_percent_tenths_rounds_half_up():
    assert percent_tenths(21, 1000) == 21
    assert percent_tenths(1, 8) == 125
    assert percent_tenths(1, 16) == 63
    assert percent_tenths(0, 0) == 0


def test_planted_error_proportions():
    ref, hyp = _plant(random.Random(7), 1000, subs=21, dels=31, ins=20)
    report = score({"corpus": align(ref, hyp, policy=POLICY)})
    totals = report.totals
    assert (totals.substitutions, totals.deletions, totals.insertions) == (21, 31, 20)
    assert totals.substitution_pct == pytest.approx(2.1)
    assert totals.deletion_pct == pytest.approx(3.1)
    assert totals.insertion_pct == pytest.approx(2.0)
    assert totals.correct_pct == pytest.approx(94.8)
    assert totals.accuracy_pct == pytest.approx(92.8)
    assert totals.all_errors_pct == pytest.approx(7.2)


@pytest.mark.parametrize("seed", range(4))
def test_count_identities_hold_on_random_corpora(seed):
    rng = random.Random(seed)
    for _ in range(250):
        vocabulary = ["uh", "the", "a", "one's", "th-", "yeah"][:rng.randint(1, 6)]
        ref = [rng.choice(vocabulary) for _ in range(rng.randint(0, 25))]
        hyp = [rng.choice(vocabulary) for _ in range(rng.randint(0, 25))]
        counts = ErrorCounts.from_script(align(ref, hyp, policy=POLICY))
        assert counts.identity_problems() == []
        assert counts.ref_words == len(ref) and counts.hyp_words == len(hyp)


def test_score_excludes_files_and_reports_ranges():
    scripts = {
        "f1": EditScript.from_kinds([OpKind.COR] * 9 + [OpKind.SUB]),
        "f2": EditScript.from_kinds([OpKind.COR] * 10),
        "bad": EditScript.from_kinds([OpKind.DEL] * 10),
    }
    report = score(scripts, exclude=["bad", "unknown"])
    assert [f.file_id for f in report.files] == ["f1", "f2"]
    assert report.excluded == ["bad"]
    assert report.words_correct == 19
    assert (report.ranges["correct"].low, report.ranges["correct"].high) == (90.0, 100.0)
    with pytest.raises(InvalidArgumentError):
        score({"bad": scripts["bad"]}, exclude=["bad"])


def test_segment_score_recovers_planted_partition():
    rng = random.Random(11)
    for _ in range(50):
        segment_count = rng.randint(1, 12)
        ref, hyp, segments, planted_bad = [], [], [], 0
        for s in range(segment_count):
            words = [f"s{s}w{i}" for i in range(rng.randint(3, 6))]
            segments.append(Segment(id=f"seg{s}", start_index=len(ref), end_index=len(ref) + len(words)))
            ref.extend(words)
            error = rng.choice([None, None, "sub", "del", "ins"])
            out = list(words)
            if error == "sub":
                out[1] = "wrong"
            elif error == "del":
                del out[1]
            elif error == "ins":
                out.insert(1, "extra")
            planted_bad += error is not None
            if rng.random() < 0.3:
                # 落在短语边界上的插入不计入任何短语
                out.append(f"boundary{s}")
            hyp.extend(out)
        phrases = segment_score(segments, align(ref, hyp, policy=POLICY))
        assert phrases.phrases_with_errors == planted_bad
        assert phrases.phrases_correct == segment_count - planted_bad


def test_segment_score_requires_tiling():
    script = EditScript.from_kinds([OpKind.COR] * 4)
    with pytest.raises(InvalidArgumentError):
        segment_score([Segment(id="s0", start_index=0, end_index=3)], script)
    with pytest.raises(InvalidArgumentError):
        segment_score([Segment(id="s0", start_index=0, end_index=2),
                       Segment(id="s1", start_index=1, end_index=4)], script)


def test_phrase_time_projection(word_tokens):
    start = next(i for i, t in enumerate(word_tokens) if t.text == "Metric")
    end = next(i for i, t in enumerate(word_tokens) if t.text == "like.") + 1
    segment = Segment(id="utt", start_index=start, end_index=end)
    projected = project_phrase_times(word_tokens, [segment])[0]
    assert (projected.start, projected.end) == (2186, 2610)
    assert projected.time_label() == "[21.86, 26.10]"


def test_projection_of_untimed_segment(word_tokens):
    index = next(i for i, t in enumerate(word_tokens) if not t.timed)
    projected = project_phrase_times(word_tokens, [Segment(id="x", start_index=index, end_index=index + 1)])[0]
    assert projected.start is None and projected.time_label() == "*"


def test_segments_from_turns_and_lines(word_tokens):
    turns = segments_from_turns(word_tokens)
    assert [s.channel for s in turns[:3]] == ["B", "A", "B"]
    assert turns[-1].end_index == len(word_tokens)
    lines = segments_from_lines([["a", "b"], [], ["c"]])
    assert [(s.start_index, s.end_index) for s in lines] == [(0, 2), (2, 3)]


def test_coverage_planted_proportions():
    ref = [f"w{i}" for i in range(100)]
    hyp = []
    for index, word in enumerate(ref):
        if index in (10, 50):
            continue
        hyp.append(f"other{index}" if index in (30, 70) else word)
    result = coverage(ref, hyp, policy=POLICY)
    assert (result.contained_pct, result.omissions_pct, result.substitutions_pct) == (96.0, 2.0, 2.0)
    with pytest.raises(InvalidArgumentError):
        coverage([], ["x"])


def test_error_class_breakdown():
    ref = ["the", "th-", "uh-huh", "dog"]
    hyp = ["the", "that", "cat"]
    script = align(ref, hyp, policy=POLICY)
    breakdown = error_class_breakdown(ref, hyp, script, POLICY)
    assert breakdown.substitutions + breakdown.insertions_deletions == script.substitutions + \
        script.deletions + script.insertions
    assert breakdown.substitutions_special + breakdown.insertions_deletions_special >= 2
    assert breakdown.substitution_share_pct == pytest.approx(50.0)
    assert breakdown.insdel_share_pct == pytest.approx(100.0)


def test_render_table_and_records():
    ref, hyp = ["a", "b", "c"], ["a", "x", "c", "d"]
    scripts = {"sw2005": align(ref, hyp, policy=POLICY)}
    phrases = {"sw2005": segment_score([Segment(id="s0", start_index=0, end_index=3)], scripts["sw2005"])}
    report = score(scripts, phrases)
    table = render_table(report)
    assert "phrases" in table and "accuracy" in table and "inserted" in table
    assert "fragment" not in table
    records = list(report_records(report))
    assert records[0]["record"] == "file" and records[0]["file_id"] == "sw2005"
    aggregate = records[-1]
    assert aggregate["record"] == "aggregate"
    assert (aggregate["substitutions"], aggregate["insertions"]) == (1, 1)
    assert aggregate["correct_pct"] == pytest.approx(66.7)
    assert aggregate["accuracy_pct"] == pytest.approx(33.4)
    assert "substitution_special_share_pct" not in aggregate


def test_report_carries_fragment_shares():
    pairs = {
        "sw2005": (["the", "th-", "uh-huh", "dog"], ["the", "that", "cat"]),
        "sw2010": (["um", "yes"], ["yes", "no"]),
    }
    scripts = {file_id: align(ref, hyp, policy=POLICY) for file_id, (ref, hyp) in pairs.items()}
    breakdowns = {file_id: error_class_breakdown(ref, hyp, scripts[file_id], POLICY)
                  for file_id, (ref, hyp) in pairs.items()}
    report = score(scripts, breakdowns=breakdowns)
    assert report.breakdown == breakdowns["sw2005"] + breakdowns["sw2010"]
    assert [f.breakdown for f in report.files] == [breakdowns["sw2005"], breakdowns["sw2010"]]

    table = render_table(report)
    assert "fragment" in table and "in ins/del" in table
    records = list(report_records(report))
    assert records[0]["substitution_special_share_pct"] == pytest.approx(50.0)
    assert records[0]["insdel_special_share_pct"] == pytest.approx(100.0)
    aggregate = records[-1]
    assert aggregate["insertions_deletions_special"] == report.breakdown.insertions_deletions_special
    assert aggregate["insdel_special_share_pct"] == report.breakdown.insdel_share_pct
