"""
标注图合并

同一时间线上的两张图合并为一张：偏移相差不超过容差的锚定节点被统一，
未锚定节点从不跨图统一，所有弧连同来源原样保留。
"""

import bisect
import logging
from typing import Dict, List, Tuple

from src.graph.annotation_graph import AnnotationGraph, id_sort_key
from src.graph.models import SecondsLike, to_centiseconds
from src.graph.queries import validate
from src.utils.errors import (
    CycleError,
    InvalidArgumentError,
    MergeConflictError,
    TimelineError,
    TimeOrderError,
)

logger = logging.getLogger(__name__)


def merge_graphs(g1: AnnotationGraph, g2: AnnotationGraph,
                 tolerance: SecondsLike = 0) -> AnnotationGraph:
    """
    合并两张标注图

    Args:
        g1: 第一张图，其节点和弧ID在结果中保留
        g2: 第二张图
        tolerance: 锚点统一容差（秒），默认0即厘秒级精确匹配

    Returns:
        AnnotationGraph: 新的合并图，输入不会被修改

    Raises:
        TimelineError: 时间线不一致
        InvalidArgumentError: 容差为负
        MergeConflictError: 合并会引入环或时间倒退
    """
    if g1.timeline_id != g2.timeline_id:
        raise TimelineError(f"时间线不一致: {g1.timeline_id} != {g2.timeline_id}")
    slack = to_centiseconds(tolerance)
    if slack < 0:
        raise InvalidArgumentError(f"合并容差不能为负: {tolerance}")

    result = g1.copy()
    anchored: List[Tuple[int, Tuple, str]] = sorted(
        (node.offset, id_sort_key(node.id), node.id) for node in g1.nodes() if node.offset is not None)
    offsets = [item[0] for item in anchored]

    mapping: Dict[str, str] = {}
    unified = 0
    for node in g2.nodes():
        if node.offset is None:
            mapping[node.id] = result.add_node(None)
            continue
        lo = bisect.bisect_left(offsets, node.offset - slack)
        hi = bisect.bisect_right(offsets, node.offset + slack)
        if lo < hi:
            # 按 (偏移, 自然ID) 排序，第一个候选即偏移最小者
            target_offset, key, target = anchored[lo]
            if node.offset < target_offset:
                result.set_anchor(target, node.anchor)
                # 锚点提前后重新放入有序表
                del anchored[lo], offsets[lo]
                at = bisect.bisect_left(anchored, (node.offset, key, target))
                anchored.insert(at, (node.offset, key, target))
                offsets.insert(at, node.offset)
            mapping[node.id] = target
            unified += 1
        else:
            mapping[node.id] = result.add_node(node.anchor)

    conflicts: List[str] = []
    for arc in g2.arcs():
        try:
            result.add_arc(mapping[arc.from_node], mapping[arc.to_node], arc.arc_type,
                           arc.label, arc.provenance, arc.attributes)
        except (InvalidArgumentError, CycleError, TimeOrderError) as e:
            logger.debug(f"弧 {arc.id} 无法并入: {str(e)}")
            conflicts.append(arc.id)
        except KeyError:
            # g2 自身含悬空引用
            conflicts.append(arc.id)

    if conflicts:
        raise MergeConflictError(f"合并冲突，{len(conflicts)} 条弧无法并入", conflicts)

    if slack > 0:
        # 容差统一改写了锚点，需要整体复查
        violations = validate(result)
        if violations:
            arc_ids = sorted({a for v in violations for a in v.arc_ids}, key=id_sort_key)
            raise MergeConflictError(f"锚点统一后出现 {len(violations)} 处违规", arc_ids)

    logger.debug(f"合并 {g1.timeline_id}: 统一锚点 {unified} 个，结果 {result.node_count} 节点 / {result.arc_count} 弧")
    return result
