"""
标注图数据模型
时间统一以整数厘秒（0.01秒）存储，避免浮点数的相等比较问题
"""

import math
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.utils.errors import InvalidArgumentError

# 标准弧类型命名空间
WORD_TYPE = "W/"
POS_TYPE = "Pos/"
DISFLUENCY_TYPE = "DISF/"
TREEBANK_TYPE = "T/"
STANDARD_NAMESPACES = (WORD_TYPE, POS_TYPE, DISFLUENCY_TYPE, TREEBANK_TYPE)

SecondsLike = Union[str, int, float, Decimal]


def to_centiseconds(value: SecondsLike) -> int:
    """
    把秒数精确转换为厘秒

    Args:
        value: 秒数，可以是字符串、整数、浮点数或Decimal

    Returns:
        int: 厘秒数

    Raises:
        InvalidArgumentError: 数值无法解析或不能在0.01秒精度下精确表示
    """
    try:
        # 浮点数先转字符串，"21.86" 而不是 21.859999...
        amount = Decimal(str(value)) if isinstance(value, float) else Decimal(value)
    except (InvalidOperation, ValueError, TypeError):
        raise InvalidArgumentError(f"无法解析的时间值: {value!r}")
    if not amount.is_finite():
        raise InvalidArgumentError(f"时间值必须是有限数: {value!r}")
    scaled = amount * 100
    if scaled != scaled.to_integral_value():
        raise InvalidArgumentError(f"时间值超出0.01秒精度: {value!r}")
    return int(scaled)


def query_bound(value: SecondsLike, upper: bool) -> float:
    """区间查询边界转换为厘秒，允许无穷大；非整厘秒值向区间内侧取整"""
    if isinstance(value, float) and math.isinf(value):
        return value
    amount = Decimal(str(value)) if isinstance(value, float) else Decimal(value)
    if amount.is_infinite():
        return math.inf if amount > 0 else -math.inf
    scaled = amount * 100
    rounded = scaled.to_integral_value(rounding="ROUND_FLOOR" if upper else "ROUND_CEILING")
    return int(rounded)


def format_seconds(centiseconds: int) -> str:
    """厘秒格式化为两位小数的秒数字符串"""
    sign = "-" if centiseconds < 0 else ""
    whole, frac = divmod(abs(centiseconds), 100)
    return f"{sign}{whole}.{frac:02d}"


class TimeAnchor(BaseModel):
    """信号时间线上的锚点"""
    model_config = ConfigDict(frozen=True)

    offset: int = Field(ge=0, description="距信号起点的厘秒数")

    @classmethod
    def from_seconds(cls, value: SecondsLike) -> "TimeAnchor":
        offset = to_centiseconds(value)
        if offset < 0:
            raise InvalidArgumentError(f"时间锚点不能为负: {value!r}")
        return cls(offset=offset)

    @property
    def seconds(self) -> float:
        return self.offset / 100

    def __str__(self) -> str:
        return format_seconds(self.offset)


class Node(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    anchor: Optional[TimeAnchor] = None

    @property
    def offset(self) -> Optional[int]:
        return self.anchor.offset if self.anchor is not None else None


class Arc(BaseModel):
    """
    带类型和标签的弧

    arc_type 是以 "/" 结尾的命名空间，例如 "W/"、"Pos/"；
    attributes 保存声道、序号等附加信息
    """
    model_config = ConfigDict(frozen=True)

    id: str
    from_node: str
    to_node: str
    arc_type: str
    label: str
    provenance: str
    attributes: Dict[str, str] = Field(default_factory=dict)

    @field_validator("arc_type")
    @classmethod
    def _check_arc_type(cls, value: str) -> str:
        if not value or not value.endswith("/") or value == "/":
            raise ValueError(f"弧类型必须是以 '/' 结尾的非空命名空间: {value!r}")
        return value

    @field_validator("provenance")
    @classmethod
    def _check_provenance(cls, value: str) -> str:
        if not value or not value.strip():
            raise ValueError("弧必须标明来源标注流")
        return value

    @property
    def qualified_label(self) -> str:
        return f"{self.arc_type}{self.label}"


class ViolationKind(str, Enum):
    CYCLE = "cycle"
    TIME_ORDER = "time-order"
    DANGLING = "dangling-reference"


class Violation(BaseModel):
    """校验报告中的一条违规记录"""
    model_config = ConfigDict(frozen=True)

    kind: ViolationKind
    arc_ids: List[str] = Field(default_factory=list)
    node_ids: List[str] = Field(default_factory=list)
    message: str = ""

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.message} (arcs={','.join(self.arc_ids)})"
