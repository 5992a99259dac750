"""
对齐词文件读取

每行一个词：`声道 起始时间 时长 文本`，时间为秒，无时间标记的词两个时间字段都是 `*`。
"""

import logging
from enum import Enum
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.graph.models import format_seconds, to_centiseconds
from src.utils.errors import InvalidArgumentError, ParseError

logger = logging.getLogger(__name__)

UNTIMED = "*"


class Channel(str, Enum):
    A = "A"
    B = "B"


class Token(BaseModel):
    """对齐词文件中的一个词，时间以厘秒保存"""
    model_config = ConfigDict(frozen=True)

    channel: Channel
    text: str = Field(min_length=1)
    start_cs: Optional[int] = Field(default=None, ge=0)
    duration_cs: Optional[int] = Field(default=None, ge=0)
    line: Optional[int] = None

    @model_validator(mode="after")
    def _both_or_neither(self) -> "Token":
        if (self.start_cs is None) != (self.duration_cs is None):
            raise ValueError("起始时间和时长必须同时存在或同时缺省")
        return self

    @property
    def timed(self) -> bool:
        return self.start_cs is not None

    @property
    def end_cs(self) -> Optional[int]:
        if self.start_cs is None:
            return None
        return self.start_cs + self.duration_cs

    @property
    def start(self) -> Optional[float]:
        return None if self.start_cs is None else self.start_cs / 100

    @property
    def duration(self) -> Optional[float]:
        return None if self.duration_cs is None else self.duration_cs / 100


def _time_field(value: str, line_no: int, column: int, source: Optional[str]) -> int:
    try:
        return to_centiseconds(value)
    except InvalidArgumentError as e:
        raise ParseError(f"无法解析的时间字段 {value!r}: {e.message}", line_no, column, source)


def parse_aligned_words(text: str, source: Optional[str] = None) -> List[Token]:
    """
    解析对齐词文件

    Args:
        text: 文件内容
        source: 来源文件名，用于错误定位

    Returns:
        List[Token]: 按源顺序排列的词，每个非空行一个

    Raises:
        ParseError: 字段数不对、声道非法或时间无法解析
    """
    tokens: List[Token] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split(None, 3)
        if len(fields) != 4:
            raise ParseError(f"需要4个字段，实际 {len(fields)} 个", line_no, 1, source)
        channel, start, duration, word = fields
        columns = _field_columns(raw, fields)
        if channel not in Channel.__members__:
            raise ParseError(f"未知声道 {channel!r}", line_no, columns[0], source)
        if (start == UNTIMED) != (duration == UNTIMED):
            raise ParseError("起始时间和时长必须同时为 '*'", line_no, columns[1], source)
        if start == UNTIMED:
            start_cs = duration_cs = None
        else:
            start_cs = _time_field(start, line_no, columns[1], source)
            duration_cs = _time_field(duration, line_no, columns[2], source)
            if start_cs < 0 or duration_cs < 0:
                raise ParseError("时间不能为负", line_no, columns[1], source)
        tokens.append(Token(channel=Channel(channel), text=word.strip(),
                            start_cs=start_cs, duration_cs=duration_cs, line=line_no))
    logger.debug(f"读取对齐词 {len(tokens)} 个: {source or '<input>'}")
    return tokens


def _field_columns(raw: str, fields: Sequence[str]) -> List[int]:
    columns, cursor = [], 0
    for field in fields:
        cursor = raw.index(field, cursor)
        columns.append(cursor + 1)
        cursor += len(field)
    return columns


def format_aligned_words(tokens: Sequence[Token]) -> str:
    """序列化为对齐词文件"""
    lines = []
    for token in tokens:
        if token.timed:
            lines.append(f"{token.channel.value} {format_seconds(token.start_cs)} "
                         f"{format_seconds(token.duration_cs)} {token.text}")
        else:
            lines.append(f"{token.channel.value}     {UNTIMED}    {UNTIMED} {token.text}")
    return "\n".join(lines) + ("\n" if lines else "")
