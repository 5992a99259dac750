"""
词形规范化

把不同转写中的同一个词统一成可比较的形式：去掉附着标点、大小写折叠、
非词汇性标记（如 uh-hum / uh-huh）归并、缩略形式拆分、片段词识别。
规范化是幂等的，对结果再规范化一次不会变化。
"""

import logging
import re
from enum import Enum
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

# 只去掉这些附着在词首尾的标点，撇号和连字符属于词本身
ATTACHED_PUNCTUATION = ".,?!;:\""

_NONSPEECH_PATTERN = re.compile(r"^(\[[^\[\]]+\]|<[^<>]+>)$")


class TokenClass(str, Enum):
    LEXICAL = "lexical"
    FRAGMENT = "fragment"
    NONLEXICAL = "nonlexical"
    NONSPEECH = "nonspeech"


class NormToken(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    token_class: TokenClass = TokenClass.LEXICAL

    @property
    def surface(self) -> bool:
        """非语音标记不参与词序列比较"""
        return self.token_class != TokenClass.NONSPEECH


class NormPolicy(BaseModel):
    """
    规范化策略

    nonlexical_classes 中每个集合的第一个元素是该类的规范代表；
    contraction_splits 的显式条目优先于按 clitic_suffixes 的通用拆分
    """
    model_config = ConfigDict(frozen=True)

    case_fold: bool = True
    strip_attached_punct: bool = True
    fragment_suffixes: List[str] = Field(default_factory=lambda: ["-"])
    nonlexical_classes: List[List[str]] = Field(
        default_factory=lambda: [["uh-huh", "uh-hum"], ["mm-hmm", "um-hum", "mhm"]])
    contraction_splits: Dict[str, List[str]] = Field(default_factory=dict)
    split_clitics: bool = True
    clitic_suffixes: List[str] = Field(
        default_factory=lambda: ["n't", "'s", "'re", "'ve", "'ll", "'d", "'m"])

    @field_validator("fragment_suffixes", "clitic_suffixes")
    @classmethod
    def _non_empty_markers(cls, value: List[str]) -> List[str]:
        if any(not marker for marker in value):
            raise ValueError("标记不能为空字符串")
        return value

    @model_validator(mode="after")
    def _disjoint_classes(self) -> "NormPolicy":
        seen: Dict[str, int] = {}
        for index, members in enumerate(self.nonlexical_classes):
            if not members:
                raise ValueError(f"第 {index} 个非词汇等价类为空")
            for member in members:
                key = self._fold(member)
                if key in seen and seen[key] != index:
                    raise ValueError(f"非词汇等价类不相交: {member!r} 同时属于两个类")
                seen[key] = index
        for word, pieces in self.contraction_splits.items():
            if not pieces or any(not p for p in pieces):
                raise ValueError(f"缩略拆分不能为空: {word!r}")
        return self

    def _fold(self, text: str) -> str:
        return text.lower() if self.case_fold else text

    def nonlexical_representative(self, text: str) -> Optional[str]:
        for members in self.nonlexical_classes:
            if text in (self._fold(m) for m in members):
                return self._fold(members[0])
        return None


def _strip(text: str, policy: NormPolicy) -> str:
    if not policy.strip_attached_punct:
        return text
    return text.strip(ATTACHED_PUNCTUATION)


def _split(text: str, policy: NormPolicy) -> List[str]:
    for word, pieces in policy.contraction_splits.items():
        if policy._fold(word) == text:
            return [policy._fold(p) for p in pieces]
    if policy.split_clitics:
        for suffix in policy.clitic_suffixes:
            suffix = policy._fold(suffix)
            if text.endswith(suffix) and len(text) > len(suffix):
                return [text[:-len(suffix)], suffix]
    return [text]


def _classify(text: str, policy: NormPolicy) -> NormToken:
    if _NONSPEECH_PATTERN.match(text):
        return NormToken(text=text, token_class=TokenClass.NONSPEECH)
    representative = policy.nonlexical_representative(text)
    if representative is not None:
        return NormToken(text=representative, token_class=TokenClass.NONLEXICAL)
    for suffix in policy.fragment_suffixes:
        if text.endswith(suffix) and len(text) > len(suffix):
            return NormToken(text=text, token_class=TokenClass.FRAGMENT)
    return NormToken(text=text, token_class=TokenClass.LEXICAL)


def normalize(token: str, policy: Optional[NormPolicy] = None) -> List[NormToken]:
    """
    规范化单个词

    Args:
        token: 原始词文本，标点按源文件附着
        policy: 规范化策略，默认使用内置策略

    Returns:
        List[NormToken]: 规范化后的词；缩略拆分时多于一个，纯标点时为空
    """
    policy = policy or NormPolicy()
    text = _strip(policy._fold(token.strip()), policy)
    if not text:
        return []
    if _NONSPEECH_PATTERN.match(text):
        return [NormToken(text=text, token_class=TokenClass.NONSPEECH)]
    # 拆分后的片段可能重新露出附着标点，如 "one's," 先去标点再拆
    pieces = [p for p in (_strip(piece, policy) for piece in _split(text, policy)) if p]
    return [_classify(piece, policy) for piece in pieces]


def normalize_text(token: str, policy: Optional[NormPolicy] = None) -> List[str]:
    return [item.text for item in normalize(token, policy)]


def comparison_key(token: str, policy: Optional[NormPolicy] = None) -> str:
    """对齐时用于判等的键，拆分后的片段以空格连接"""
    return " ".join(normalize_text(token, policy))


def surface_pieces(tokens: Sequence[str], policy: Optional[NormPolicy] = None) -> List[str]:
    """把一串词规范化并展开为可比较的片段，去掉非语音标记"""
    pieces: List[str] = []
    for token in tokens:
        pieces.extend(item.text for item in normalize(token, policy) if item.surface)
    return pieces
