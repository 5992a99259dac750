"""
词性标注文件读取

每个说话轮次以 `====` 行包围的标题块开始，标题块内是 `[ SpeakerB22/SYM ]` 和 `./.`；
正文为 `word/TAG` 序列，`[ ... ]` 标出名词短语块，块可以跨行。
"""

import logging
import re
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.utils.errors import ParseError

logger = logging.getLogger(__name__)

_SEPARATOR = re.compile(r"^=+$")
SPEAKER_PATTERN = re.compile(r"^Speaker[AB][0-9]+$")
SPEAKER_TAG = "SYM"


class PosToken(BaseModel):
    model_config = ConfigDict(frozen=True)

    word: str = Field(min_length=1)
    tag: str = Field(min_length=1)
    chunk_member: bool = False
    chunk_index: Optional[int] = None
    line: Optional[int] = None

    @property
    def source_text(self) -> str:
        return f"{self.word}/{self.tag}"

    @property
    def is_punctuation(self) -> bool:
        return not any(ch.isalnum() for ch in self.word)


class PosTurn(BaseModel):
    model_config = ConfigDict(frozen=True)

    speaker_code: str
    tokens: List[PosToken] = Field(default_factory=list)
    header_tokens: List[PosToken] = Field(default_factory=list)

    @field_validator("speaker_code")
    @classmethod
    def _check_speaker(cls, value: str) -> str:
        if not SPEAKER_PATTERN.match(value):
            raise ValueError(f"说话人代码格式错误: {value!r}")
        return value

    @property
    def channel(self) -> str:
        return self.speaker_code[len("Speaker")]

    def chunks(self) -> List[List[PosToken]]:
        grouped = {}
        for token in self.tokens:
            if token.chunk_index is not None:
                grouped.setdefault(token.chunk_index, []).append(token)
        return [grouped[k] for k in sorted(grouped)]


class _Block:
    """解析中的一个区块（标题或正文）"""

    def __init__(self):
        self.tokens: List[PosToken] = []
        self.open_chunk: Optional[int] = None
        self.open_line = 0
        self.open_column = 0
        self.chunk_count = 0


def _read_line(block: _Block, raw: str, line_no: int, source: Optional[str]):
    for match in re.finditer(r"\S+", raw):
        item, column = match.group(0), match.start() + 1
        if item == "[":
            if block.open_chunk is not None:
                raise ParseError("名词块不能嵌套", line_no, column, source)
            block.open_chunk = block.chunk_count
            block.chunk_count += 1
            block.open_line, block.open_column = line_no, column
        elif item == "]":
            if block.open_chunk is None:
                raise ParseError("多余的 ']'", line_no, column, source)
            block.open_chunk = None
        else:
            word, slash, tag = item.rpartition("/")
            if not slash or not word or not tag:
                raise ParseError(f"词性标记缺少 '/': {item!r}", line_no, column, source)
            block.tokens.append(PosToken(word=word, tag=tag, chunk_member=block.open_chunk is not None,
                                         chunk_index=block.open_chunk, line=line_no))


def _close(block: _Block, source: Optional[str]):
    if block.open_chunk is not None:
        raise ParseError("名词块缺少 ']'", block.open_line, block.open_column, source)


def parse_pos(text: str, source: Optional[str] = None) -> List[PosTurn]:
    """
    解析词性标注文件

    Args:
        text: 文件内容
        source: 来源文件名

    Returns:
        List[PosTurn]: 说话轮次列表

    Raises:
        ParseError: 名词块括号不配对、词缺少 '/' 或标题格式错误
    """
    turns: List[PosTurn] = []
    header: Optional[_Block] = None
    body: Optional[_Block] = None
    in_header = False
    header_line = 0

    def finish():
        if header is None:
            return
        _close(body, source)
        speaker = [t for t in header.tokens if t.tag == SPEAKER_TAG]
        if len(speaker) != 1 or not SPEAKER_PATTERN.match(speaker[0].word):
            raise ParseError("标题块中缺少说话人代码", header_line, 1, source)
        turns.append(PosTurn(speaker_code=speaker[0].word, tokens=body.tokens, header_tokens=header.tokens))

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if _SEPARATOR.match(raw.strip()):
            if in_header:
                _close(header, source)
                in_header = False
            else:
                finish()
                header, body = _Block(), _Block()
                in_header = True
                header_line = line_no
            continue
        if not raw.strip():
            continue
        if in_header:
            _read_line(header, raw, line_no, source)
        elif body is None:
            raise ParseError("正文出现在说话人标题块之前", line_no, 1, source)
        else:
            _read_line(body, raw, line_no, source)

    if in_header:
        raise ParseError("标题块没有结束", header_line, 1, source)
    finish()
    logger.debug(f"读取词性轮次 {len(turns)} 个: {source or '<input>'}")
    return turns


def _format_tokens(tokens: Sequence[PosToken]) -> str:
    parts = []
    current = None
    for token in tokens:
        if token.chunk_index != current:
            if current is not None:
                parts.append("]")
            if token.chunk_index is not None:
                parts.append("[")
            current = token.chunk_index
        parts.append(token.source_text)
    if current is not None:
        parts.append("]")
    return " ".join(parts)


def format_pos(turns: Sequence[PosTurn]) -> str:
    """序列化为词性标注文件"""
    rule = "=" * 20
    blocks = []
    for turn in turns:
        blocks.append(f"{rule}\n{_format_tokens(turn.header_tokens)}\n{rule}\n\n{_format_tokens(turn.tokens)}\n")
    return "\n".join(blocks)
