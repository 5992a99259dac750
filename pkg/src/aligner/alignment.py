"""
参考转写与假设转写的动态规划对齐

代价最小的编辑脚本；同代价时每个格子按 COR > SUB > DEL > INS 的顺序回溯，
结果完全确定。
"""

import logging
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.aligner.normalizer import NormPolicy, TokenClass, normalize
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


class OpKind(str, Enum):
    COR = "COR"
    SUB = "SUB"
    INS = "INS"
    DEL = "DEL"


class FragmentMode(str, Enum):
    STRICT = "strict"
    LENIENT = "lenient"


class AlignCosts(BaseModel):
    """编辑代价，默认 sub=4 / ins=3 / del=3"""
    model_config = ConfigDict(frozen=True)

    substitution: int = Field(default=4, gt=0)
    insertion: int = Field(default=3, gt=0)
    deletion: int = Field(default=3, gt=0)

    @classmethod
    def unit(cls) -> "AlignCosts":
        return cls(substitution=1, insertion=1, deletion=1)


class EditOp(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: OpKind
    ref_index: Optional[int] = None
    hyp_index: Optional[int] = None

    @model_validator(mode="after")
    def _check_indices(self) -> "EditOp":
        has_ref = self.ref_index is not None
        has_hyp = self.hyp_index is not None
        expected = {
            OpKind.COR: (True, True),
            OpKind.SUB: (True, True),
            OpKind.INS: (False, True),
            OpKind.DEL: (True, False),
        }[self.kind]
        if (has_ref, has_hyp) != expected:
            raise ValueError(f"{self.kind.value} 操作的下标不合法: ref={self.ref_index}, hyp={self.hyp_index}")
        return self


class EditScript(BaseModel):
    """有序编辑操作序列及其总代价"""
    model_config = ConfigDict(frozen=True)

    ops: List[EditOp] = Field(default_factory=list)
    cost: int = 0
    ref_length: int = 0
    hyp_length: int = 0

    def count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind == kind)

    @property
    def correct(self) -> int:
        return self.count(OpKind.COR)

    @property
    def substitutions(self) -> int:
        return self.count(OpKind.SUB)

    @property
    def insertions(self) -> int:
        return self.count(OpKind.INS)

    @property
    def deletions(self) -> int:
        return self.count(OpKind.DEL)

    def kinds(self) -> List[OpKind]:
        return [op.kind for op in self.ops]

    def coverage_problems(self) -> List[str]:
        """检查参考和假设下标是否各自按顺序恰好覆盖一次"""
        problems = []
        refs = [op.ref_index for op in self.ops if op.ref_index is not None]
        hyps = [op.hyp_index for op in self.ops if op.hyp_index is not None]
        if refs != list(range(self.ref_length)):
            problems.append(f"参考下标未按顺序覆盖 0..{self.ref_length - 1}")
        if hyps != list(range(self.hyp_length)):
            problems.append(f"假设下标未按顺序覆盖 0..{self.hyp_length - 1}")
        return problems

    def ref_alignment(self) -> List[Optional[int]]:
        """每个参考下标对应的假设下标（COR/SUB），删除时为None"""
        mapping: List[Optional[int]] = [None] * self.ref_length
        for op in self.ops:
            if op.ref_index is not None:
                mapping[op.ref_index] = op.hyp_index
        return mapping

    @classmethod
    def from_kinds(cls, kinds: Sequence[OpKind], costs: Optional[AlignCosts] = None) -> "EditScript":
        """按操作类型序列构造脚本，下标依次分配"""
        costs = costs or AlignCosts()
        ops, cost, i, j = [], 0, 0, 0
        for kind in kinds:
            kind = OpKind(kind)
            if kind in (OpKind.COR, OpKind.SUB):
                ops.append(EditOp(kind=kind, ref_index=i, hyp_index=j))
                i, j = i + 1, j + 1
                cost += costs.substitution if kind == OpKind.SUB else 0
            elif kind == OpKind.DEL:
                ops.append(EditOp(kind=kind, ref_index=i))
                i += 1
                cost += costs.deletion
            else:
                ops.append(EditOp(kind=kind, hyp_index=j))
                j += 1
                cost += costs.insertion
        return cls(ops=ops, cost=cost, ref_length=i, hyp_length=j)


def _keys(tokens: Sequence[str], policy: NormPolicy) -> List[Tuple[str, Optional[str]]]:
    """返回 (比较键, 片段词干)；非片段词的词干为None"""
    keys = []
    for token in tokens:
        pieces = normalize(token, policy)
        key = " ".join(p.text for p in pieces)
        stem = None
        if len(pieces) == 1 and pieces[0].token_class == TokenClass.FRAGMENT:
            for suffix in policy.fragment_suffixes:
                if key.endswith(suffix):
                    stem = key[:-len(suffix)]
                    break
        keys.append((key, stem))
    return keys


def align(ref: Sequence[str], hyp: Sequence[str], costs: Optional[AlignCosts] = None,
          policy: Optional[NormPolicy] = None,
          fragment_mode: FragmentMode = FragmentMode.STRICT) -> EditScript:
    """
    计算参考序列到假设序列的最小代价编辑脚本

    Args:
        ref: 参考词序列
        hyp: 假设词序列
        costs: 编辑代价，默认 sub=4 / ins=3 / del=3
        policy: 判等前使用的规范化策略
        fragment_mode: strict 时片段词按普通词比较；lenient 时与同前缀的假设词算正确

    Returns:
        EditScript: 编辑脚本
    """
    costs = costs or AlignCosts()
    policy = policy or NormPolicy()
    if isinstance(ref, str) or isinstance(hyp, str):
        raise InvalidArgumentError("ref 和 hyp 必须是词序列而不是字符串")
    ref_keys = _keys(ref, policy)
    hyp_keys = [key for key, _ in _keys(hyp, policy)]
    lenient = FragmentMode(fragment_mode) == FragmentMode.LENIENT

    def matches(i: int, j: int) -> bool:
        key, stem = ref_keys[i]
        if key == hyp_keys[j]:
            return True
        return lenient and stem is not None and hyp_keys[j].startswith(stem)

    m, n = len(ref_keys), len(hyp_keys)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        table[i][0] = table[i - 1][0] + costs.deletion
    for j in range(1, n + 1):
        table[0][j] = table[0][j - 1] + costs.insertion
    for i in range(1, m + 1):
        row, prev = table[i], table[i - 1]
        for j in range(1, n + 1):
            diagonal = prev[j - 1] + (0 if matches(i - 1, j - 1) else costs.substitution)
            row[j] = min(diagonal, prev[j] + costs.deletion, row[j - 1] + costs.insertion)

    ops: List[EditOp] = []
    i, j = m, n
    while i > 0 or j > 0:
        here = table[i][j]
        if i > 0 and j > 0:
            same = matches(i - 1, j - 1)
            step = 0 if same else costs.substitution
            if table[i - 1][j - 1] + step == here:
                ops.append(EditOp(kind=OpKind.COR if same else OpKind.SUB, ref_index=i - 1, hyp_index=j - 1))
                i, j = i - 1, j - 1
                continue
        if i > 0 and table[i - 1][j] + costs.deletion == here:
            ops.append(EditOp(kind=OpKind.DEL, ref_index=i - 1))
            i -= 1
            continue
        ops.append(EditOp(kind=OpKind.INS, hyp_index=j - 1))
        j -= 1
    ops.reverse()
    return EditScript(ops=ops, cost=table[m][n], ref_length=m, hyp_length=n)


def script_cost(kinds: Sequence[OpKind], costs: Optional[AlignCosts] = None) -> int:
    """给定操作类型序列的总代价"""
    costs = costs or AlignCosts()
    price = {OpKind.COR: 0, OpKind.SUB: costs.substitution,
             OpKind.INS: costs.insertion, OpKind.DEL: costs.deletion}
    return sum(price[OpKind(kind)] for kind in kinds)
