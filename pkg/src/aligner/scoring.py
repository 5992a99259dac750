"""
词错误率与短语正确率统计

百分比全部用整数运算得到，以 0.1 为单位四舍五入（half-up）；
正确率 = 100 - 替换率 - 删除率，准确率 = 正确率 - 插入率。
"""

import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from src.aligner.alignment import AlignCosts, EditScript, OpKind, align
from src.aligner.normalizer import NormPolicy, TokenClass, normalize
from src.aligner.segments import Segment, check_tiling
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def percent_tenths(count: int, total: int) -> int:
    """count/total 的百分比，单位 0.1%，half-up 取整"""
    if total <= 0:
        return 0
    return (count * 2000 + total) // (2 * total)


def tenths_to_float(tenths: int) -> float:
    return tenths / 10


def round_thousands(count: int) -> int:
    """按千取整，对应报告中的 K 列"""
    return (count + 500) // 1000


class ErrorCounts(BaseModel):
    """一组词级计数及其派生百分比"""
    model_config = ConfigDict(frozen=True)

    ref_words: int = 0
    hyp_words: int = 0
    correct: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @classmethod
    def from_script(cls, script: EditScript) -> "ErrorCounts":
        return cls(ref_words=script.ref_length, hyp_words=script.hyp_length, correct=script.correct,
                   substitutions=script.substitutions, deletions=script.deletions,
                   insertions=script.insertions)

    def __add__(self, other: "ErrorCounts") -> "ErrorCounts":
        return ErrorCounts(
            ref_words=self.ref_words + other.ref_words,
            hyp_words=self.hyp_words + other.hyp_words,
            correct=self.correct + other.correct,
            substitutions=self.substitutions + other.substitutions,
            deletions=self.deletions + other.deletions,
            insertions=self.insertions + other.insertions,
        )

    @property
    def all_errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def sub_tenths(self) -> int:
        return percent_tenths(self.substitutions, self.ref_words)

    @property
    def del_tenths(self) -> int:
        return percent_tenths(self.deletions, self.ref_words)

    @property
    def ins_tenths(self) -> int:
        return percent_tenths(self.insertions, self.ref_words)

    @property
    def correct_tenths(self) -> int:
        """
        由取整后的替换率和删除率相减得到，保证 正确率 + 替换率 + 删除率 = 100.0；
        与直接对 正确词数/参考词数 取整相比可能相差 0.1
        """
        return 1000 - self.sub_tenths - self.del_tenths

    @property
    def accuracy_tenths(self) -> int:
        return self.correct_tenths - self.ins_tenths

    @property
    def all_errors_tenths(self) -> int:
        return self.sub_tenths + self.del_tenths + self.ins_tenths

    @property
    def correct_pct(self) -> float:
        return tenths_to_float(self.correct_tenths)

    @property
    def accuracy_pct(self) -> float:
        return tenths_to_float(self.accuracy_tenths)

    @property
    def substitution_pct(self) -> float:
        return tenths_to_float(self.sub_tenths)

    @property
    def deletion_pct(self) -> float:
        return tenths_to_float(self.del_tenths)

    @property
    def insertion_pct(self) -> float:
        return tenths_to_float(self.ins_tenths)

    @property
    def all_errors_pct(self) -> float:
        return tenths_to_float(self.all_errors_tenths)

    def identity_problems(self) -> List[str]:
        """检查 正确+替换+删除=参考词数、正确+替换+插入=假设词数"""
        problems = []
        if self.correct + self.substitutions + self.deletions != self.ref_words:
            problems.append("correct + substitutions + deletions != ref_words")
        if self.correct + self.substitutions + self.insertions != self.hyp_words:
            problems.append("correct + substitutions + insertions != hyp_words")
        return problems


class PhraseScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    phrases_correct: int = 0
    phrases_with_errors: int = 0

    @property
    def total(self) -> int:
        return self.phrases_correct + self.phrases_with_errors

    @property
    def correct_tenths(self) -> int:
        return percent_tenths(self.phrases_correct, self.total)

    @property
    def with_errors_tenths(self) -> int:
        return 1000 - self.correct_tenths if self.total else 0

    @property
    def correct_pct(self) -> float:
        return tenths_to_float(self.correct_tenths)

    @property
    def with_errors_pct(self) -> float:
        return tenths_to_float(self.with_errors_tenths)

    def __add__(self, other: "PhraseScore") -> "PhraseScore":
        return PhraseScore(phrases_correct=self.phrases_correct + other.phrases_correct,
                           phrases_with_errors=self.phrases_with_errors + other.phrases_with_errors)


class PercentRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    low: float
    high: float

    def __str__(self) -> str:
        return f"{self.low:.1f} - {self.high:.1f}"


class ErrorClassBreakdown(BaseModel):
    """错误中涉及片段词和非词汇性标记的部分"""
    model_config = ConfigDict(frozen=True)

    substitutions: int = 0
    substitutions_special: int = 0
    insertions_deletions: int = 0
    insertions_deletions_special: int = 0

    @property
    def substitution_share_tenths(self) -> int:
        return percent_tenths(self.substitutions_special, self.substitutions)

    @property
    def insdel_share_tenths(self) -> int:
        return percent_tenths(self.insertions_deletions_special, self.insertions_deletions)

    @property
    def substitution_share_pct(self) -> float:
        return tenths_to_float(self.substitution_share_tenths)

    @property
    def insdel_share_pct(self) -> float:
        return tenths_to_float(self.insdel_share_tenths)

    def __add__(self, other: "ErrorClassBreakdown") -> "ErrorClassBreakdown":
        return ErrorClassBreakdown(
            substitutions=self.substitutions + other.substitutions,
            substitutions_special=self.substitutions_special + other.substitutions_special,
            insertions_deletions=self.insertions_deletions + other.insertions_deletions,
            insertions_deletions_special=self.insertions_deletions_special + other.insertions_deletions_special,
        )


class FileScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    file_id: str
    counts: ErrorCounts
    phrases: Optional[PhraseScore] = None
    breakdown: Optional[ErrorClassBreakdown] = None


class WerReport(BaseModel):
    """按文件和汇总的错误统计"""
    model_config = ConfigDict(frozen=True)

    files: List[FileScore] = Field(default_factory=list)
    totals: ErrorCounts = Field(default_factory=ErrorCounts)
    phrases: Optional[PhraseScore] = None
    breakdown: Optional[ErrorClassBreakdown] = None
    ranges: Dict[str, PercentRange] = Field(default_factory=dict)
    excluded: List[str] = Field(default_factory=list)

    @property
    def words_correct(self) -> int:
        return self.totals.correct

    @property
    def accuracy(self) -> float:
        return self.totals.accuracy_pct


def _file_tenths(score: FileScore) -> Dict[str, int]:
    counts = score.counts
    values = {}
    if counts.ref_words:
        values.update({
            "correct": counts.correct_tenths,
            "accuracy": counts.accuracy_tenths,
            "all_errors": counts.all_errors_tenths,
            "substitutions": counts.sub_tenths,
            "deletions": counts.del_tenths,
            "insertions": counts.ins_tenths,
        })
    if score.phrases is not None and score.phrases.total:
        values["phrases_correct"] = score.phrases.correct_tenths
        values["phrases_with_errors"] = score.phrases.with_errors_tenths
    return values


def score(scripts: Mapping[str, EditScript], phrases: Optional[Mapping[str, PhraseScore]] = None,
          exclude: Iterable[str] = (),
          breakdowns: Optional[Mapping[str, ErrorClassBreakdown]] = None) -> WerReport:
    """
    汇总各文件的编辑脚本

    Args:
        scripts: 文件ID到编辑脚本的映射
        phrases: 文件ID到短语统计的映射（可选）
        exclude: 不参与统计的文件ID，例如说话人标签仍有错误的文件
        breakdowns: 文件ID到片段词/非词汇性错误分类的映射（可选）

    Returns:
        WerReport: 统计报告，文件按ID排序

    Raises:
        InvalidArgumentError: 没有可统计的文件
    """
    excluded = sorted(set(exclude) & set(scripts))
    kept = sorted(file_id for file_id in scripts if file_id not in set(excluded))
    if not kept:
        raise InvalidArgumentError("至少需要一个参与统计的文件")

    files: List[FileScore] = []
    totals = ErrorCounts()
    phrase_totals: Optional[PhraseScore] = None
    breakdown_totals: Optional[ErrorClassBreakdown] = None
    for file_id in kept:
        counts = ErrorCounts.from_script(scripts[file_id])
        phrase = (phrases or {}).get(file_id)
        breakdown = (breakdowns or {}).get(file_id)
        files.append(FileScore(file_id=file_id, counts=counts, phrases=phrase, breakdown=breakdown))
        if breakdown is not None:
            breakdown_totals = breakdown if breakdown_totals is None else breakdown_totals + breakdown
        totals = totals + counts
        if phrase is not None:
            phrase_totals = phrase if phrase_totals is None else phrase_totals + phrase

    ranges: Dict[str, PercentRange] = {}
    per_file = [_file_tenths(f) for f in files]
    for key in ("correct", "accuracy", "all_errors", "substitutions", "deletions", "insertions",
                "phrases_correct", "phrases_with_errors"):
        values = [v[key] for v in per_file if key in v]
        if values:
            ranges[key] = PercentRange(low=tenths_to_float(min(values)), high=tenths_to_float(max(values)))

    if excluded:
        logger.info(f"统计时排除 {len(excluded)} 个文件: {', '.join(excluded)}")
    return WerReport(files=files, totals=totals, phrases=phrase_totals, breakdown=breakdown_totals,
                     ranges=ranges, excluded=excluded)


def segment_score(segments: Sequence[Segment], script: EditScript) -> PhraseScore:
    """
    短语级统计

    一个短语正确当且仅当其中每个参考词都是 COR，且没有插入落在短语内部；
    恰好落在短语边界上的插入不计入任何短语

    Raises:
        InvalidArgumentError: 短语段没有按顺序铺满参考序列
    """
    check_tiling(segments, script.ref_length)
    bad_ref = [False] * script.ref_length
    inside_insertions: List[int] = []
    consumed = 0
    for op in script.ops:
        if op.ref_index is not None:
            consumed = op.ref_index + 1
            if op.kind != OpKind.COR:
                bad_ref[op.ref_index] = True
        elif op.kind == OpKind.INS:
            inside_insertions.append(consumed)

    correct = 0
    for segment in segments:
        clean = not any(bad_ref[segment.start_index:segment.end_index])
        clean = clean and not any(segment.start_index < p < segment.end_index for p in inside_insertions)
        correct += 1 if clean else 0
    return PhraseScore(phrases_correct=correct, phrases_with_errors=len(segments) - correct)


class Coverage(BaseModel):
    model_config = ConfigDict(frozen=True)

    ref_words: int
    contained: int
    omissions: int
    substitutions: int

    @property
    def contained_pct(self) -> float:
        return tenths_to_float(percent_tenths(self.contained, self.ref_words))

    @property
    def omissions_pct(self) -> float:
        return tenths_to_float(percent_tenths(self.omissions, self.ref_words))

    @property
    def substitutions_pct(self) -> float:
        return tenths_to_float(percent_tenths(self.substitutions, self.ref_words))


def coverage(ref: Sequence[str], hyp: Sequence[str], costs: Optional[AlignCosts] = None,
             policy: Optional[NormPolicy] = None) -> Coverage:
    """
    假设转写覆盖了参考转写中多少词

    Raises:
        InvalidArgumentError: 参考为空
    """
    if not ref:
        raise InvalidArgumentError("参考词序列为空")
    script = align(ref, hyp, costs, policy)
    return Coverage(ref_words=len(ref), contained=script.correct,
                    omissions=script.deletions, substitutions=script.substitutions)


_SPECIAL = (TokenClass.FRAGMENT, TokenClass.NONLEXICAL)


def _is_special(token: str, policy: NormPolicy) -> bool:
    return any(piece.token_class in _SPECIAL for piece in normalize(token, policy))


def error_class_breakdown(ref: Sequence[str], hyp: Sequence[str], script: EditScript,
                          policy: Optional[NormPolicy] = None) -> ErrorClassBreakdown:
    """统计替换、插入和删除错误中有多少涉及片段词或非词汇性标记"""
    policy = policy or NormPolicy()
    subs = subs_special = insdel = insdel_special = 0
    for op in script.ops:
        if op.kind == OpKind.SUB:
            subs += 1
            if _is_special(ref[op.ref_index], policy) or _is_special(hyp[op.hyp_index], policy):
                subs_special += 1
        elif op.kind == OpKind.DEL:
            insdel += 1
            insdel_special += 1 if _is_special(ref[op.ref_index], policy) else 0
        elif op.kind == OpKind.INS:
            insdel += 1
            insdel_special += 1 if _is_special(hyp[op.hyp_index], policy) else 0
    return ErrorClassBreakdown(substitutions=subs, substitutions_special=subs_special,
                               insertions_deletions=insdel, insertions_deletions_special=insdel_special)
