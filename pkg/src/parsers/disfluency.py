"""
不流利标注文件读取

轮次以 `B.22:` 开头；`[ 被修正部分 + 修正部分 ]` 表示重启，`{F ...}` 为填充停顿，
`{C ...}` 为连接词，其他 `{X ...}` 记录原始代码；`<...>` 为非语音事件，`/` 为句段结束。
"""

import logging
import re
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from src.utils.errors import ParseError

logger = logging.getLogger(__name__)

_HEADER = re.compile(r"([AB])\.(\d+):")
_MARKUP = set("[]{}<>")
INTERRUPTION_POINT = "+"
BOUNDARY_MARKERS = ("/", "-/")


class ElementKind(str, Enum):
    WORD = "WORD"
    RESTART = "RESTART"
    FILLER_F = "FILLER_F"
    COORD_C = "COORD_C"
    BRACE = "BRACE"
    NONSPEECH = "NONSPEECH"
    SENT_BOUNDARY = "SENT_BOUNDARY"


BRACE_KINDS = {"F": ElementKind.FILLER_F, "C": ElementKind.COORD_C}


class DisfluencyElement(BaseModel):
    """
    不流利标注元素

    RESTART 的 children 在 ip_index 处被中断点 `+` 分为被修正部分和修正部分；
    大括号元素的 code 为原始代码字母
    """
    model_config = ConfigDict(frozen=True)

    kind: ElementKind
    text: str = ""
    code: Optional[str] = None
    children: List["DisfluencyElement"] = Field(default_factory=list)
    ip_index: Optional[int] = None
    line: Optional[int] = None
    column: Optional[int] = None

    @property
    def reparandum(self) -> List["DisfluencyElement"]:
        return self.children[:self.ip_index] if self.kind == ElementKind.RESTART else []

    @property
    def repair(self) -> List["DisfluencyElement"]:
        return self.children[self.ip_index:] if self.kind == ElementKind.RESTART else []

    def leaves(self) -> Iterator["DisfluencyElement"]:
        if self.kind in (ElementKind.WORD, ElementKind.NONSPEECH, ElementKind.SENT_BOUNDARY):
            yield self
            return
        for child in self.children:
            yield from child.leaves()


DisfluencyElement.model_rebuild()


class DisfluencyTurn(BaseModel):
    model_config = ConfigDict(frozen=True)

    speaker: str = Field(pattern=r"^[AB]$")
    turn_index: int = Field(ge=0)
    elements: List[DisfluencyElement] = Field(default_factory=list)
    line: Optional[int] = None

    @property
    def header(self) -> str:
        return f"{self.speaker}.{self.turn_index}:"

    def leaves(self) -> Iterator[DisfluencyElement]:
        for element in self.elements:
            yield from element.leaves()


class _Frame:
    def __init__(self, kind: ElementKind, line: int, column: int, code: Optional[str] = None):
        self.kind = kind
        self.code = code
        self.line = line
        self.column = column
        self.children: List[DisfluencyElement] = []
        self.ip_index: Optional[int] = None


class _Scanner:
    """带行列号的逐字符扫描器"""

    def __init__(self, text: str, source: Optional[str]):
        self.text = text
        self.source = source
        self.pos = 0
        self.line = 1
        self.column = 1
        self.at_line_start = True

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos]

    def advance(self, count: int = 1) -> str:
        chunk = self.text[self.pos:self.pos + count]
        for ch in chunk:
            if ch == "\n":
                self.line += 1
                self.column = 1
                self.at_line_start = True
            else:
                self.column += 1
                if not ch.isspace():
                    self.at_line_start = False
        self.pos += len(chunk)
        return chunk

    def error(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> ParseError:
        return ParseError(message, line or self.line, column or self.column, self.source)


def parse_disfluency(text: str, source: Optional[str] = None) -> List[DisfluencyTurn]:
    """
    解析不流利标注文件

    Args:
        text: 文件内容
        source: 来源文件名

    Returns:
        List[DisfluencyTurn]: 说话轮次列表，元素树保留任意深度的嵌套

    Raises:
        ParseError: 括号不配对、重启缺少或多出 `+`、轮次编号不递增
    """
    scanner = _Scanner(text, source)
    turns: List[DisfluencyTurn] = []
    current: Optional[Tuple[str, int, int]] = None
    stack: List[_Frame] = []
    elements: List[DisfluencyElement] = []

    def emit(element: DisfluencyElement):
        (stack[-1].children if stack else elements).append(element)

    def finish_turn():
        if current is None:
            return
        if stack:
            frame = stack[-1]
            raise scanner.error(f"{_opening(frame)} 没有闭合", frame.line, frame.column)
        speaker, index, line = current
        turns.append(DisfluencyTurn(speaker=speaker, turn_index=index, elements=list(elements), line=line))
        elements.clear()

    while not scanner.eof():
        ch = scanner.peek()
        if ch.isspace():
            scanner.advance()
            continue
        line, column = scanner.line, scanner.column

        if scanner.at_line_start:
            header = _HEADER.match(scanner.text, scanner.pos)
            if header:
                finish_turn()
                index = int(header.group(2))
                if turns and index <= turns[-1].turn_index:
                    raise scanner.error(f"轮次编号没有递增: {index} <= {turns[-1].turn_index}")
                current = (header.group(1), index, line)
                scanner.advance(header.end() - scanner.pos)
                continue
        if current is None:
            raise scanner.error("内容出现在第一个轮次标题之前")

        if ch == "[":
            scanner.advance()
            stack.append(_Frame(ElementKind.RESTART, line, column))
        elif ch == "]":
            scanner.advance()
            if not stack or stack[-1].kind != ElementKind.RESTART:
                raise scanner.error("多余的 ']'", line, column)
            frame = stack.pop()
            if frame.ip_index is None:
                raise scanner.error("重启缺少中断点 '+'", frame.line, frame.column)
            emit(DisfluencyElement(kind=ElementKind.RESTART, children=frame.children,
                                   ip_index=frame.ip_index, line=frame.line, column=frame.column))
        elif ch == "{":
            scanner.advance()
            code = ""
            while not scanner.eof() and not scanner.peek().isspace() and scanner.peek() not in _MARKUP:
                code += scanner.advance()
            if not code:
                raise scanner.error("大括号缺少代码字母", line, column)
            stack.append(_Frame(BRACE_KINDS.get(code, ElementKind.BRACE), line, column, code))
        elif ch == "}":
            scanner.advance()
            if not stack or stack[-1].kind == ElementKind.RESTART:
                raise scanner.error("多余的 '}'", line, column)
            frame = stack.pop()
            emit(DisfluencyElement(kind=frame.kind, code=frame.code, children=frame.children,
                                   line=frame.line, column=frame.column))
        elif ch == "<":
            scanner.advance()
            content = ""
            while not scanner.eof() and scanner.peek() != ">":
                if scanner.peek() in "<\n":
                    break
                content += scanner.advance()
            if scanner.eof() or scanner.peek() != ">":
                raise scanner.error("'<' 没有闭合", line, column)
            scanner.advance()
            emit(DisfluencyElement(kind=ElementKind.NONSPEECH, text=content, line=line, column=column))
        elif ch in ">":
            raise scanner.error("多余的 '>'", line, column)
        else:
            word = ""
            while not scanner.eof() and not scanner.peek().isspace() and scanner.peek() not in _MARKUP:
                word += scanner.advance()
            if word == INTERRUPTION_POINT:
                if not stack or stack[-1].kind != ElementKind.RESTART:
                    raise scanner.error("中断点 '+' 不在重启括号内", line, column)
                if stack[-1].ip_index is not None:
                    raise scanner.error("重启中出现多个中断点 '+'", line, column)
                stack[-1].ip_index = len(stack[-1].children)
            elif word in BOUNDARY_MARKERS:
                emit(DisfluencyElement(kind=ElementKind.SENT_BOUNDARY, text=word, line=line, column=column))
            else:
                emit(DisfluencyElement(kind=ElementKind.WORD, text=word, line=line, column=column))

    finish_turn()
    logger.debug(f"读取不流利标注轮次 {len(turns)} 个: {source or '<input>'}")
    return turns


def _opening(frame: _Frame) -> str:
    return "'['" if frame.kind == ElementKind.RESTART else f"'{{{frame.code}'"


def _format_element(element: DisfluencyElement) -> str:
    if element.kind == ElementKind.WORD:
        return element.text
    if element.kind == ElementKind.SENT_BOUNDARY:
        return element.text or "/"
    if element.kind == ElementKind.NONSPEECH:
        return f"<{element.text}>"
    if element.kind == ElementKind.RESTART:
        before = " ".join(_format_element(c) for c in element.reparandum)
        after = " ".join(_format_element(c) for c in element.repair)
        return " ".join(part for part in ("[", before, INTERRUPTION_POINT, after, "]") if part)
    inner = " ".join(_format_element(c) for c in element.children)
    return " ".join(part for part in ("{" + (element.code or ""), inner, "}") if part)


def format_disfluency(turns: Sequence[DisfluencyTurn]) -> str:
    """序列化为不流利标注文件"""
    lines = []
    for turn in turns:
        body = " ".join(_format_element(e) for e in turn.elements)
        lines.append(f"{turn.header}   {body}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")
