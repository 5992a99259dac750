"""
各标注流的表层词抽取及词序列一致性检查
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from src.aligner.normalizer import NormPolicy, surface_pieces
from src.parsers.aligned_words import Token
from src.parsers.disfluency import DisfluencyTurn, ElementKind
from src.parsers.pos_tags import PosTurn
from src.parsers.treebank import LeafKind, ParseTree

logger = logging.getLogger(__name__)


def surface_words_aligned(tokens: Sequence[Token]) -> List[str]:
    return [token.text for token in tokens]


def surface_words_pos(turns: Sequence[PosTurn]) -> List[str]:
    """正文中的词，去掉独立标点；标题块里的说话人代码不算"""
    return [token.word for turn in turns for token in turn.tokens if not token.is_punctuation]


def surface_words_disfluency(turns: Sequence[DisfluencyTurn]) -> List[str]:
    """去掉标记后的词，非语音事件和句段结束符不算"""
    return [leaf.text for turn in turns for leaf in turn.leaves() if leaf.kind == ElementKind.WORD]


def surface_words_treebank(trees: Sequence[ParseTree]) -> List[str]:
    """去掉语迹、E_S、编辑标记、标点和 CODE 单元后的叶子"""
    return [leaf.leaf_text for tree in trees for leaf in tree.leaves() if leaf.leaf_kind == LeafKind.SURFACE]


class AgreementReport(BaseModel):
    agrees: bool
    pieces: Dict[str, List[str]] = Field(default_factory=dict)
    mismatch_index: Optional[int] = None
    mismatch: Dict[str, Optional[str]] = Field(default_factory=dict)

    def describe(self) -> str:
        if self.agrees:
            counts = {name: len(p) for name, p in self.pieces.items()}
            return f"词序列一致: {counts}"
        shown = ", ".join(f"{name}={piece!r}" for name, piece in self.mismatch.items())
        return f"第 {self.mismatch_index} 个词不一致: {shown}"


def lexical_agreement(streams: Mapping[str, Sequence[str]], policy: Optional[NormPolicy] = None) -> AgreementReport:
    """
    检查多个标注流在规范化之后是否是同一个词序列

    Args:
        streams: 流名称到表层词列表的映射
        policy: 规范化策略

    Returns:
        AgreementReport: 一致性报告，不一致时给出第一个不同的位置
    """
    pieces = {name: surface_pieces(words, policy) for name, words in streams.items()}
    names = list(pieces)
    longest = max((len(p) for p in pieces.values()), default=0)
    for index in range(longest):
        column = {name: (pieces[name][index] if index < len(pieces[name]) else None) for name in names}
        if len(set(column.values())) > 1:
            logger.warning(f"标注流词序列在第 {index} 个词处不一致: {column}")
            return AgreementReport(agrees=False, pieces=pieces, mismatch_index=index, mismatch=column)
    return AgreementReport(agrees=True, pieces=pieces)
