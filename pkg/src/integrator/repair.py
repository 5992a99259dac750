"""
时间线修复及其影响分析

修复采用写时复制：输入图不变，返回新图和影响报告。影响报告列出所有与修复时间范围
相交的弧（引用输入图中的弧ID），按命名空间和来源分组，供下游标注流重新核对。
"""

import logging
import re
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.graph.annotation_graph import AnnotationGraph, id_sort_key
from src.graph.models import WORD_TYPE, TimeAnchor, format_seconds, to_centiseconds
from src.graph.queries import ArcIntervalIndex, validate
from src.utils.errors import InvalidArgumentError, RepairRejectedError

logger = logging.getLogger(__name__)

CHANNEL_SWAP_PATTERN = re.compile(r"^\s*([A-Za-z0-9]+)\s*<->\s*([A-Za-z0-9]+)\s*$")


class RepairKind(str, Enum):
    CHANNEL_SWAP = "CHANNEL_SWAP"
    TOKEN_CORRECTION = "TOKEN_CORRECTION"
    RESEGMENTATION = "RESEGMENTATION"


class RepairEvent(BaseModel):
    """
    一次修复

    span_start/span_end 为厘秒；payload 的格式取决于修复类型：
    CHANNEL_SWAP 为空或 "A<->B"，TOKEN_CORRECTION 为 "NEW" 或 "OLD=>NEW"，
    RESEGMENTATION 为逗号分隔的 "旧秒数=新秒数"
    """
    model_config = ConfigDict(frozen=True)

    kind: RepairKind
    span_start: int = Field(ge=0)
    span_end: int = Field(ge=0)
    payload: str = ""

    @model_validator(mode="after")
    def _check_span(self) -> "RepairEvent":
        if self.span_start > self.span_end:
            raise ValueError(f"修复范围起点大于终点: {self.span_start} > {self.span_end}")
        return self

    @property
    def is_empty(self) -> bool:
        return self.span_start == self.span_end

    def span_label(self) -> str:
        return f"{format_seconds(self.span_start)}-{format_seconds(self.span_end)}"


class ImpactReport(BaseModel):
    """修复影响报告；groups 为 命名空间 -> 来源 -> 弧ID列表"""
    model_config = ConfigDict(frozen=True)

    repair: RepairEvent
    affected: List[str] = Field(default_factory=list)
    groups: Dict[str, Dict[str, List[str]]] = Field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.affected)

    def records(self) -> Iterator[Dict[str, object]]:
        """每个 (命名空间, 来源) 分组一条记录"""
        for arc_type in sorted(self.groups):
            for provenance in sorted(self.groups[arc_type]):
                yield {
                    "repair": self.repair.kind.value,
                    "span": self.repair.span_label(),
                    "arc_type": arc_type,
                    "provenance": provenance,
                    "arc_ids": self.groups[arc_type][provenance],
                }


def _group(graph: AnnotationGraph, arc_ids: Sequence[str]) -> Dict[str, Dict[str, List[str]]]:
    groups: Dict[str, Dict[str, List[str]]] = {}
    for arc_id in arc_ids:
        arc = graph.arc(arc_id)
        groups.setdefault(arc.arc_type, {}).setdefault(arc.provenance, []).append(arc_id)
    return groups


def impact_of(graph: AnnotationGraph, t0: int, t1: int) -> List[str]:
    """与 [t0, t1]（厘秒）相交的弧ID"""
    return ArcIntervalIndex(graph).overlapping(t0, t1)


def apply_repair(graph: AnnotationGraph, repair: RepairEvent) -> Tuple[AnnotationGraph, ImpactReport]:
    """
    对图施加一次修复

    Args:
        graph: 合法的标注图
        repair: 修复事件，范围必须落在图的时间范围内

    Returns:
        Tuple[AnnotationGraph, ImpactReport]: 修复后的新图和影响报告

    Raises:
        InvalidArgumentError: 范围超出图的时间范围或 payload 不合法
        RepairRejectedError: 修复后的图不合法
    """
    if repair.is_empty:
        logger.info(f"修复范围为空，图保持不变: {repair.kind.value} {repair.span_label()}")
        return graph.copy(), ImpactReport(repair=repair)

    extent = graph.time_extent()
    if extent is None or repair.span_start < extent[0] or repair.span_end > extent[1]:
        shown = "无锚点" if extent is None else f"{format_seconds(extent[0])}-{format_seconds(extent[1])}"
        raise InvalidArgumentError(f"修复范围 {repair.span_label()} 超出图的时间范围 {shown}")

    affected = impact_of(graph, repair.span_start, repair.span_end)
    result = graph.copy()
    if repair.kind == RepairKind.CHANNEL_SWAP:
        _swap_channels(result, affected, repair.payload)
    elif repair.kind == RepairKind.TOKEN_CORRECTION:
        _correct_token(result, affected, repair.payload)
    else:
        _resegment(result, repair)

    violations = validate(result)
    if violations:
        raise RepairRejectedError(
            f"{repair.kind.value} {repair.span_label()} 修复后图不合法: {violations[0]}", violations)

    report = ImpactReport(repair=repair, affected=affected, groups=_group(graph, affected))
    logger.info(f"修复 {repair.kind.value} {repair.span_label()}: 影响 {report.count} 条弧")
    return result, report


def apply_repairs(graph: AnnotationGraph,
                  repairs: Sequence[RepairEvent]) -> Tuple[AnnotationGraph, List[ImpactReport]]:
    """按顺序施加多个修复；任一修复失败则整体失败"""
    reports: List[ImpactReport] = []
    current = graph
    for repair in repairs:
        current, report = apply_repair(current, repair)
        reports.append(report)
    return current, reports


def _swap_channels(graph: AnnotationGraph, affected: Sequence[str], payload: str):
    first, second = "A", "B"
    if payload.strip():
        match = CHANNEL_SWAP_PATTERN.match(payload)
        if not match:
            raise InvalidArgumentError(f"声道交换格式应为 'A<->B': {payload!r}")
        first, second = match.group(1), match.group(2)
    swap = {first: second, second: first}
    for arc_id in affected:
        arc = graph.arc(arc_id)
        channel = arc.attributes.get("channel")
        if arc.arc_type != WORD_TYPE or channel not in swap:
            continue
        attributes = dict(arc.attributes)
        attributes["channel"] = swap[channel]
        graph.replace_arc(arc_id, attributes=attributes)


def _correct_token(graph: AnnotationGraph, affected: Sequence[str], payload: str):
    old: Optional[str] = None
    new = payload
    if "=>" in payload:
        old, new = (part.strip() for part in payload.split("=>", 1))
    new = new.strip()
    if not new:
        raise InvalidArgumentError("词更正缺少新词")
    words = [arc_id for arc_id in affected if graph.arc(arc_id).arc_type == WORD_TYPE]
    if old is None:
        if len(words) != 1:
            raise InvalidArgumentError(f"词更正范围内应恰好有一个词，实际 {len(words)} 个；请用 'OLD=>NEW' 指明")
        targets = words
    else:
        targets = [arc_id for arc_id in words if graph.arc(arc_id).label == old]
        if not targets:
            raise InvalidArgumentError(f"词更正范围内没有词 {old!r}")
    for arc_id in targets:
        graph.replace_arc(arc_id, label=new)


def parse_resegmentation(payload: str) -> List[Tuple[int, int]]:
    """解析 "旧秒数=新秒数,..." 为厘秒对"""
    moves: List[Tuple[int, int]] = []
    for item in payload.split(","):
        if not item.strip():
            continue
        old, sep, new = item.partition("=")
        if not sep:
            raise InvalidArgumentError(f"重新切分格式应为 '旧=新': {item.strip()!r}")
        moves.append((to_centiseconds(old.strip()), to_centiseconds(new.strip())))
    if not moves:
        raise InvalidArgumentError("重新切分没有给出任何锚点移动")
    return moves


def _resegment(graph: AnnotationGraph, repair: RepairEvent):
    moves = parse_resegmentation(repair.payload)
    by_offset: Dict[int, List[str]] = {}
    for node in graph.nodes():
        if node.offset is not None:
            by_offset.setdefault(node.offset, []).append(node.id)
    for old, new in moves:
        for value in (old, new):
            if not repair.span_start <= value <= repair.span_end:
                raise InvalidArgumentError(f"锚点 {format_seconds(value)} 不在修复范围 {repair.span_label()} 内")
        if old not in by_offset:
            raise InvalidArgumentError(f"没有锚定在 {format_seconds(old)} 的节点")
    for old, new in moves:
        for node_id in sorted(by_offset[old], key=id_sort_key):
            graph.set_anchor(node_id, TimeAnchor(offset=new))
