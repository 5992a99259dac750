"""
错误统计报告模板
集中管理纯文本表格的版式，便于统一维护
"""

from typing import Dict, Iterator, List, Optional, Tuple

from src.aligner.scoring import ErrorClassBreakdown, ErrorCounts, FileScore, WerReport, round_thousands, tenths_to_float

REPORT_TEMPLATES = {
    "TABLE_HEADER": "{units:>8} | {status:<10} | {k:>6} | {pct:>5} | {range}",
    "TABLE_ROW": "{units:>8} | {status:<10} | {k:>6} | {pct:>5} | {range}",
    "TABLE_RULE": "-" * 58,
    "EXCLUDED_NOTE": "未参与统计的文件（{count}）: {files}",
}


def _pct(tenths: int) -> str:
    return f"{tenths_to_float(tenths):.1f}"


class ReportTemplates:
    """报告模板类"""

    @classmethod
    def format_row(cls, units: str, status: str, k: Optional[int], tenths: int, value_range: str = "") -> str:
        return REPORT_TEMPLATES["TABLE_ROW"].format(
            units=units, status=status, k="" if k is None else str(k), pct=_pct(tenths), range=value_range,
        ).rstrip()

    @classmethod
    def format_header(cls) -> str:
        return REPORT_TEMPLATES["TABLE_HEADER"].format(
            units="Units", status="Status", k="K", pct="%", range="Per-file % range").rstrip()


def _range(report: WerReport, key: str) -> str:
    found = report.ranges.get(key)
    return str(found) if found is not None else ""


def table_rows(report: WerReport) -> List[Tuple[str, str, Optional[int], int, str]]:
    """表格的行：(单位, 状态, K, 百分比千分位, 按文件范围)"""
    rows: List[Tuple[str, str, Optional[int], int, str]] = []
    if report.phrases is not None:
        phrases = report.phrases
        rows.append(("phrases", "correct", round_thousands(phrases.phrases_correct),
                     phrases.correct_tenths, _range(report, "phrases_correct")))
        rows.append(("", "w/errors", round_thousands(phrases.phrases_with_errors),
                     phrases.with_errors_tenths, _range(report, "phrases_with_errors")))
    totals = report.totals
    rows.extend([
        ("words", "correct", round_thousands(totals.correct), totals.correct_tenths, _range(report, "correct")),
        ("", "accuracy", None, totals.accuracy_tenths, _range(report, "accuracy")),
        ("", "all errors", round_thousands(totals.all_errors), totals.all_errors_tenths,
         _range(report, "all_errors")),
        ("", "substit.", round_thousands(totals.substitutions), totals.sub_tenths,
         _range(report, "substitutions")),
        ("", "deleted", round_thousands(totals.deletions), totals.del_tenths, _range(report, "deletions")),
        ("", "inserted", round_thousands(totals.insertions), totals.ins_tenths, _range(report, "insertions")),
    ])
    if report.breakdown is not None:
        # 片段词与非词汇性标记在各类错误中所占比例
        breakdown = report.breakdown
        rows.append(("fragment", "in substit", round_thousands(breakdown.substitutions_special),
                     breakdown.substitution_share_tenths, ""))
        rows.append(("", "in ins/del", round_thousands(breakdown.insertions_deletions_special),
                     breakdown.insdel_share_tenths, ""))
    return rows


def render_table(report: WerReport) -> str:
    """
    渲染按单位/状态排列的纯文本汇总表

    Args:
        report: 统计报告

    Returns:
        str: 表格文本，以换行结尾
    """
    lines = [REPORT_TEMPLATES["TABLE_RULE"], ReportTemplates.format_header(), REPORT_TEMPLATES["TABLE_RULE"]]
    previous_units = None
    for units, status, k, tenths, value_range in table_rows(report):
        if units and previous_units is not None:
            lines.append(REPORT_TEMPLATES["TABLE_RULE"])
        previous_units = units or previous_units
        lines.append(ReportTemplates.format_row(units, status, k, tenths, value_range))
    lines.append(REPORT_TEMPLATES["TABLE_RULE"])
    if report.excluded:
        lines.append(REPORT_TEMPLATES["EXCLUDED_NOTE"].format(
            count=len(report.excluded), files=", ".join(report.excluded)))
    return "\n".join(lines) + "\n"


def _counts_record(counts: ErrorCounts) -> Dict[str, object]:
    return {
        "ref_words": counts.ref_words,
        "hyp_words": counts.hyp_words,
        "words_correct": counts.correct,
        "substitutions": counts.substitutions,
        "deletions": counts.deletions,
        "insertions": counts.insertions,
        "correct_pct": counts.correct_pct,
        "accuracy_pct": counts.accuracy_pct,
        "all_errors_pct": counts.all_errors_pct,
        "substitution_pct": counts.substitution_pct,
        "deletion_pct": counts.deletion_pct,
        "insertion_pct": counts.insertion_pct,
    }


def _breakdown_record(breakdown: ErrorClassBreakdown) -> Dict[str, object]:
    return {
        "substitutions_special": breakdown.substitutions_special,
        "insertions_deletions_special": breakdown.insertions_deletions_special,
        "substitution_special_share_pct": breakdown.substitution_share_pct,
        "insdel_special_share_pct": breakdown.insdel_share_pct,
    }


def _file_record(score: FileScore) -> Dict[str, object]:
    record: Dict[str, object] = {"record": "file", "file_id": score.file_id}
    record.update(_counts_record(score.counts))
    if score.phrases is not None:
        record.update({
            "phrases_correct": score.phrases.phrases_correct,
            "phrases_with_errors": score.phrases.phrases_with_errors,
            "phrases_correct_pct": score.phrases.correct_pct,
        })
    if score.breakdown is not None:
        record.update(_breakdown_record(score.breakdown))
    return record


def report_records(report: WerReport) -> Iterator[Dict[str, object]]:
    """每个文件一条记录，最后一条为汇总记录"""
    for score in report.files:
        yield _file_record(score)
    aggregate: Dict[str, object] = {"record": "aggregate", "files": len(report.files),
                                    "excluded": list(report.excluded)}
    aggregate.update(_counts_record(report.totals))
    if report.phrases is not None:
        aggregate.update({
            "phrases_correct": report.phrases.phrases_correct,
            "phrases_with_errors": report.phrases.phrases_with_errors,
            "phrases_correct_pct": report.phrases.correct_pct,
            "phrases_with_errors_pct": report.phrases.with_errors_pct,
        })
    if report.breakdown is not None:
        aggregate.update(_breakdown_record(report.breakdown))
    aggregate["ranges"] = {key: [value.low, value.high] for key, value in sorted(report.ranges.items())}
    yield aggregate
