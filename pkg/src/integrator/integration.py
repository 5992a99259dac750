"""
多个已锚定标注图的整合
"""

import logging
from typing import List, Sequence

from src.graph.annotation_graph import AnnotationGraph
from src.graph.isomorphism import canonical_signature
from src.graph.merge import merge_graphs
from src.graph.models import SecondsLike
from src.graph.queries import validate
from src.utils.errors import InvalidArgumentError, TimelineError, ValidationFailedError

logger = logging.getLogger(__name__)


def _order_key(graph: AnnotationGraph):
    return sorted(graph.streams), graph.arc_count, graph.node_count, canonical_signature(graph)


def integrate(graphs: Sequence[AnnotationGraph], tolerance: SecondsLike = 0) -> AnnotationGraph:
    """
    把同一时间线上的多张图整合为一张

    输入先按内容排序再依次合并，结果与调用方给出的顺序无关（同构意义下）

    Args:
        graphs: 已锚定的图，每张单独合法
        tolerance: 锚点统一容差（秒）

    Returns:
        AnnotationGraph: 整合后的图，已冻结

    Raises:
        InvalidArgumentError: 输入为空
        TimelineError: 时间线不一致
        ValidationFailedError: 某张输入图本身不合法
        MergeConflictError: 合并冲突
    """
    if not graphs:
        raise InvalidArgumentError("没有可整合的图")
    timelines = {graph.timeline_id for graph in graphs}
    if len(timelines) > 1:
        raise TimelineError(f"时间线不一致: {sorted(timelines)}")
    for graph in graphs:
        violations = validate(graph)
        if violations:
            raise ValidationFailedError(
                f"输入图 {','.join(graph.streams) or graph.timeline_id} 不合法: {violations[0]}", violations)

    ordered: List[AnnotationGraph] = sorted(graphs, key=_order_key)
    result = ordered[0].copy()
    for graph in ordered[1:]:
        result = merge_graphs(result, graph, tolerance)
    logger.info(f"整合 {len(graphs)} 张图 ({next(iter(timelines))}): "
                f"{result.node_count} 节点 / {result.arc_count} 弧, 标注流 {result.streams}")
    return result.freeze()
