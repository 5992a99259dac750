"""
Treebank 句法树读取

每棵树写成 `(( ... ))` 形式的 S 表达式；叶子是裸词，包括语迹（`*-1`、`*T*-1`）、
句段结束标记 `E_S` 以及编辑区标记 `(RM [)`、`(IP +)`、`(RS ])` 的内容。
"""

import logging
import re
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.utils.errors import ParseError

logger = logging.getLogger(__name__)

EDIT_MARKER_LABELS = {"RM": "[", "IP": "+", "RS": "]"}
BOUNDARY_LEAVES = ("E_S", "N_S")
CODE_LABEL = "CODE"
EDITED_LABEL = "EDITED"


class LeafKind(str, Enum):
    SURFACE = "SURFACE"
    PUNCT = "PUNCT"
    TRACE = "TRACE"
    BOUNDARY = "BOUNDARY"
    EDIT_MARKER = "EDIT_MARKER"
    CODE = "CODE"


class ParseTree(BaseModel):
    """
    句法树节点

    内部节点有 label 和至少一个子节点；叶子只有 leaf_text，label 为空
    """
    model_config = ConfigDict(frozen=True)

    label: str = ""
    children: List["ParseTree"] = Field(default_factory=list)
    leaf_text: Optional[str] = None
    leaf_kind: Optional[LeafKind] = None
    wrapped: bool = False
    line: Optional[int] = None
    column: Optional[int] = None

    @model_validator(mode="after")
    def _leaf_or_internal(self) -> "ParseTree":
        if self.leaf_text is None:
            if not self.children or not self.label:
                raise ValueError("内部节点需要标签和至少一个子节点")
        elif self.children:
            raise ValueError("叶子不能有子节点")
        return self

    @property
    def is_leaf(self) -> bool:
        return self.leaf_text is not None

    def leaves(self) -> Iterator["ParseTree"]:
        if self.is_leaf:
            yield self
            return
        for child in self.children:
            yield from child.leaves()

    def subtrees(self) -> Iterator["ParseTree"]:
        """先序遍历全部内部节点"""
        if self.is_leaf:
            return
        yield self
        for child in self.children:
            yield from child.subtrees()

    def linearize(self) -> str:
        if self.is_leaf:
            return self.leaf_text
        return "({} {})".format(self.label, " ".join(child.linearize() for child in self.children))


ParseTree.model_rebuild()


def classify_leaf(text: str, parent_label: str, in_code: bool) -> LeafKind:
    if in_code:
        return LeafKind.CODE
    if parent_label in EDIT_MARKER_LABELS:
        return LeafKind.EDIT_MARKER
    if text in BOUNDARY_LEAVES:
        return LeafKind.BOUNDARY
    if text.startswith("*"):
        return LeafKind.TRACE
    if not any(ch.isalnum() for ch in text):
        return LeafKind.PUNCT
    return LeafKind.SURFACE


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _tokenize(text: str) -> List[Tuple[str, int, int]]:
    tokens = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        for match in _TOKEN.finditer(raw):
            tokens.append((match.group(0), line_no, match.start() + 1))
    return tokens


class _Reader:
    def __init__(self, tokens: List[Tuple[str, int, int]], source: Optional[str]):
        self.tokens = tokens
        self.index = 0
        self.source = source

    def error(self, message: str, token: Optional[Tuple[str, int, int]] = None) -> ParseError:
        if token is None:
            token = self.tokens[-1] if self.tokens else ("", 1, 1)
        return ParseError(message, token[1], token[2], self.source)

    def peek(self) -> Optional[Tuple[str, int, int]]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def take(self) -> Tuple[str, int, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def read_tree(self, opening: Tuple[str, int, int], in_code: bool) -> ParseTree:
        """读取 '(' 之后的 `LABEL child ...)`"""
        label_token = self.peek()
        if label_token is None:
            raise self.error("括号没有闭合", opening)
        if label_token[0] in "()":
            raise self.error("缺少成分标签", label_token)
        label = self.take()[0]
        in_code = in_code or label == CODE_LABEL
        children: List[ParseTree] = []
        while True:
            token = self.peek()
            if token is None:
                raise self.error("括号没有闭合", opening)
            if token[0] == ")":
                self.take()
                break
            if token[0] == "(":
                children.append(self.read_tree(self.take(), in_code))
            else:
                text, line, column = self.take()
                children.append(ParseTree(leaf_text=text, leaf_kind=classify_leaf(text, label, in_code),
                                          line=line, column=column))
        if not children:
            raise self.error(f"成分 {label} 没有子节点", label_token)
        return ParseTree(label=label, children=children, line=opening[1], column=opening[2])


def parse_treebank(text: str, source: Optional[str] = None) -> List[ParseTree]:
    """
    解析 Treebank 文件

    Args:
        text: 文件内容
        source: 来源文件名

    Returns:
        List[ParseTree]: 每个顶层 `(( ... ))` 一棵树，外层无标签括号已去掉

    Raises:
        ParseError: 括号不配对或结构非法，带行列号
    """
    reader = _Reader(_tokenize(text), source)
    trees: List[ParseTree] = []
    while reader.peek() is not None:
        opening = reader.take()
        if opening[0] != "(":
            raise reader.error(f"顶层出现了括号外的内容 {opening[0]!r}", opening)
        inner = reader.peek()
        if inner is None:
            raise reader.error("括号没有闭合", opening)
        if inner[0] == "(":
            tree = reader.read_tree(reader.take(), False)
            closing = reader.peek()
            if closing is None:
                raise reader.error("括号没有闭合", opening)
            if closing[0] != ")":
                raise reader.error("外层括号内只能有一棵树", closing)
            reader.take()
            trees.append(tree.model_copy(update={"wrapped": True}))
        elif inner[0] == ")":
            raise reader.error("空括号", opening)
        else:
            trees.append(reader.read_tree(opening, False))
    logger.debug(f"读取句法树 {len(trees)} 棵: {source or '<input>'}")
    return trees


def format_treebank(trees: Sequence[ParseTree]) -> str:
    """序列化为 Treebank 文件，每棵树一行"""
    lines = []
    for tree in trees:
        body = tree.linearize()
        lines.append(f"({body})" if tree.wrapped else body)
    return "\n".join(lines) + ("\n" if lines else "")


def edit_marker_problems(tree: ParseTree) -> List[str]:
    """
    检查编辑区标记

    每个 EDITED 子树的直接子节点中要有 (RM [) 和 (IP +)；
    先序遍历中 RS 的数量不能超过之前出现的 RM，整棵树里两者数量相等
    """
    problems = []
    for subtree in tree.subtrees():
        if subtree.label != EDITED_LABEL:
            continue
        direct = {child.label for child in subtree.children if not child.is_leaf}
        for marker in ("RM", "IP"):
            if marker not in direct:
                problems.append(f"EDITED (第{subtree.line}行) 缺少 ({marker} {EDIT_MARKER_LABELS[marker]})")
    for subtree in tree.subtrees():
        expected = EDIT_MARKER_LABELS.get(subtree.label)
        if expected is None:
            continue
        texts = [leaf.leaf_text for leaf in subtree.children if leaf.is_leaf]
        if texts != [expected]:
            problems.append(f"({subtree.label} ...) 的内容应为 {expected!r}")
    balance = 0
    for subtree in tree.subtrees():
        if subtree.label == "RM":
            balance += 1
        elif subtree.label == "RS":
            balance -= 1
            if balance < 0:
                problems.append(f"(RS ]) (第{subtree.line}行) 之前没有对应的 (RM [)")
                balance = 0
    if balance > 0:
        problems.append(f"{balance} 个 (RM [) 没有对应的 (RS ])")
    return problems
