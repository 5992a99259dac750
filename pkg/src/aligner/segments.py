"""
短语段（phrase segment）及短语时间投影
"""

import logging
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.graph.models import format_seconds
from src.parsers.aligned_words import Token
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


class Segment(BaseModel):
    """
    词流中的一个短语段

    token 区间为左闭右开 [start_index, end_index)；
    start / end 为厘秒时间，未知时为None
    """
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    start_index: int = Field(ge=0)
    end_index: int = Field(ge=0)
    channel: Optional[str] = None
    start: Optional[int] = None
    end: Optional[int] = None

    @model_validator(mode="after")
    def _check_span(self) -> "Segment":
        if self.end_index < self.start_index:
            raise ValueError(f"短语段 {self.id} 的区间倒置: [{self.start_index}, {self.end_index})")
        return self

    @property
    def length(self) -> int:
        return self.end_index - self.start_index

    def time_label(self) -> str:
        if self.start is None or self.end is None:
            return "*"
        return f"[{format_seconds(self.start)}, {format_seconds(self.end)}]"


def check_tiling(segments: Sequence[Segment], length: int):
    """
    检查短语段按顺序无重叠地铺满 [0, length)

    Raises:
        InvalidArgumentError: 出现空段、缺口、重叠或越界
    """
    cursor = 0
    seen = set()
    for segment in segments:
        if segment.id in seen:
            raise InvalidArgumentError(f"短语段ID重复: {segment.id}")
        seen.add(segment.id)
        if segment.length == 0:
            raise InvalidArgumentError(f"短语段 {segment.id} 为空")
        if segment.start_index != cursor:
            raise InvalidArgumentError(
                f"短语段 {segment.id} 起点 {segment.start_index} 与上一段终点 {cursor} 不衔接")
        cursor = segment.end_index
    if cursor != length:
        raise InvalidArgumentError(f"短语段覆盖到 {cursor}，参考长度为 {length}")


def project_phrase_times(word_tokens: Sequence[Token], segments: Sequence[Segment]) -> List[Segment]:
    """
    把词级时间投影到短语段上

    Args:
        word_tokens: 按顺序排列的带时间词
        segments: 指向 word_tokens 下标区间的短语段

    Returns:
        List[Segment]: 填好 start/end 的短语段；只含无时间词的段时间为None
    """
    projected = []
    for segment in segments:
        if segment.end_index > len(word_tokens):
            raise InvalidArgumentError(
                f"短语段 {segment.id} 超出词序列范围: {segment.end_index} > {len(word_tokens)}")
        timed = [t for t in word_tokens[segment.start_index:segment.end_index] if t.timed]
        if timed:
            start, end = timed[0].start_cs, timed[-1].end_cs
        else:
            start = end = None
        projected.append(segment.model_copy(update={"start": start, "end": end}))
    return projected


def segments_from_turns(tokens: Sequence[Token], prefix: str = "seg") -> List[Segment]:
    """按声道连续段切分，声道切换处开始新的短语段"""
    segments: List[Segment] = []
    start = 0
    for index in range(1, len(tokens) + 1):
        if index == len(tokens) or tokens[index].channel != tokens[start].channel:
            segments.append(Segment(id=f"{prefix}{len(segments)}", start_index=start,
                                    end_index=index, channel=tokens[start].channel))
            start = index
    return segments


def segments_from_lines(lines: Sequence[Sequence[str]], prefix: str = "seg") -> List[Segment]:
    """每行一个短语段，空行跳过"""
    segments: List[Segment] = []
    start = 0
    for words in lines:
        if not words:
            continue
        segments.append(Segment(id=f"{prefix}{len(segments)}", start_index=start, end_index=start + len(words)))
        start += len(words)
    return segments
