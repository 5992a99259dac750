"""
标注图的校验与时间区间查询

未锚定节点继承区间 [最大锚定祖先偏移, 最小锚定后代偏移]；
只有一侧存在时退化为该侧的单点，两侧都不存在时为 (-inf, +inf)。
"""

import bisect
import logging
import math
from typing import Dict, Iterable, List, Optional, Set, Tuple

import networkx as nx

from src.graph.annotation_graph import AnnotationGraph, id_sort_key
from src.graph.models import Arc, SecondsLike, Violation, ViolationKind, query_bound
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

Bracket = Tuple[float, float]


def validate(graph: AnnotationGraph) -> List[Violation]:
    """
    检查图的结构约束

    Args:
        graph: 待检查的图

    Returns:
        List[Violation]: 违规列表，按弧ID排序；图合法时为空
    """
    violations: List[Violation] = []
    structure = nx.MultiDiGraph()
    structure.add_nodes_from(node.id for node in graph.nodes())

    for arc in graph.arcs():
        missing = [n for n in (arc.from_node, arc.to_node) if not graph.has_node(n)]
        if missing:
            violations.append(Violation(
                kind=ViolationKind.DANGLING, arc_ids=[arc.id], node_ids=sorted(missing),
                message=f"弧 {arc.id} 引用了不存在的节点 {', '.join(sorted(missing))}"))
        elif arc.from_node == arc.to_node:
            violations.append(Violation(
                kind=ViolationKind.CYCLE, arc_ids=[arc.id], node_ids=[arc.from_node],
                message=f"弧 {arc.id} 是自环"))
        else:
            structure.add_edge(arc.from_node, arc.to_node, key=arc.id)

    cyclic_arcs: Set[str] = set()
    for component in nx.strongly_connected_components(structure):
        if len(component) < 2:
            continue
        arc_ids = sorted((key for u, v, key in structure.edges(component, keys=True)
                          if u in component and v in component), key=id_sort_key)
        cyclic_arcs.update(arc_ids)
        violations.append(Violation(
            kind=ViolationKind.CYCLE, arc_ids=arc_ids,
            node_ids=sorted(component, key=id_sort_key),
            message=f"环涉及 {len(component)} 个节点"))

    # 去掉环内的弧之后剩余部分是无环的，再检查时间单调
    acyclic = nx.MultiDiGraph()
    acyclic.add_nodes_from(structure.nodes)
    acyclic.add_edges_from((u, v, k) for u, v, k in structure.edges(keys=True) if k not in cyclic_arcs)
    lower = _propagate(graph, acyclic, forward=True)
    for u, v, key in acyclic.edges(keys=True):
        end = graph.offset(v)
        if end is None:
            continue
        start = graph.offset(u)
        bound = start if start is not None else lower.get(u)
        if bound is not None and bound > end:
            violations.append(Violation(
                kind=ViolationKind.TIME_ORDER, arc_ids=[key], node_ids=[u, v],
                message=f"弧 {key} 的时间倒退: {bound} > {end}"))

    violations.sort(key=lambda item: (id_sort_key(item.arc_ids[0]) if item.arc_ids else ("", -1, ""),
                                      item.kind.value))
    return violations


def _propagate(graph: AnnotationGraph, structure: nx.MultiDiGraph, forward: bool) -> Dict[str, int]:
    """
    沿拓扑序传播最近锚点

    forward=True 时得到每个节点的最大锚定祖先偏移，否则得到最小锚定后代偏移
    """
    order = list(nx.topological_sort(structure))
    if not forward:
        order.reverse()
    neighbours = structure.predecessors if forward else structure.successors
    pick = max if forward else min
    inherited: Dict[str, int] = {}
    for node_id in order:
        candidates = []
        for other in neighbours(node_id):
            offset = graph.offset(other)
            if offset is None:
                offset = inherited.get(other)
            if offset is not None:
                candidates.append(offset)
        if candidates:
            inherited[node_id] = pick(candidates)
    return inherited


def node_brackets(graph: AnnotationGraph) -> Dict[str, Bracket]:
    """计算所有节点的时间区间（厘秒）"""
    structure = graph.structure()
    if not nx.is_directed_acyclic_graph(structure):
        # 非法图上逐点做受限搜索
        return {node.id: _bracket_by_search(graph, node.id) for node in graph.nodes()}
    lower = _propagate(graph, structure, forward=True)
    upper = _propagate(graph, structure, forward=False)
    brackets: Dict[str, Bracket] = {}
    for node in graph.nodes():
        if node.offset is not None:
            brackets[node.id] = (node.offset, node.offset)
        else:
            brackets[node.id] = _close(lower.get(node.id), upper.get(node.id))
    return brackets


def _close(low: Optional[int], high: Optional[int]) -> Bracket:
    if low is None and high is None:
        return -math.inf, math.inf
    if low is None:
        return high, high
    if high is None:
        return low, low
    return low, high


def _bracket_by_search(graph: AnnotationGraph, node_id: str) -> Bracket:
    offset = graph.offset(node_id)
    if offset is not None:
        return offset, offset
    return _close(graph._max_anchored_ancestor(node_id), graph._min_anchored_descendant(node_id))


def node_bracket(graph: AnnotationGraph, node_id: str) -> Bracket:
    graph.node(node_id)
    return _bracket_by_search(graph, node_id)


def arc_extent(graph: AnnotationGraph, arc_id: str,
               brackets: Optional[Dict[str, Bracket]] = None) -> Bracket:
    """弧覆盖的时间范围：起点区间下界到终点区间上界"""
    arc = graph.arc(arc_id)
    if brackets is None:
        return node_bracket(graph, arc.from_node)[0], node_bracket(graph, arc.to_node)[1]
    return brackets[arc.from_node][0], brackets[arc.to_node][1]


def _intersects(bracket: Bracket, t0: float, t1: float) -> bool:
    return bracket[0] <= t1 and bracket[1] >= t0


def arcs_in_interval(graph: AnnotationGraph, t0: SecondsLike, t1: SecondsLike,
                     type_filter: Optional[str] = None) -> List[Arc]:
    """
    查询两端都落在时间区间内的弧

    Args:
        graph: 标注图
        t0: 区间起点（秒）
        t1: 区间终点（秒），可以是 math.inf
        type_filter: 只返回该命名空间的弧

    Returns:
        List[Arc]: 按 (起点偏移, 类型, 标签) 排序的弧
    """
    low = query_bound(t0, upper=False)
    high = query_bound(t1, upper=True)
    if query_bound(t0, upper=True) > query_bound(t1, upper=False):
        raise InvalidArgumentError(f"区间起点大于终点: [{t0}, {t1}]")
    brackets = node_brackets(graph)
    selected = []
    for arc in graph.arcs():
        if type_filter is not None and arc.arc_type != type_filter:
            continue
        if arc.from_node not in brackets or arc.to_node not in brackets:
            continue
        if _intersects(brackets[arc.from_node], low, high) and _intersects(brackets[arc.to_node], low, high):
            selected.append(arc)
    selected.sort(key=lambda arc: (brackets[arc.from_node][0], arc.arc_type, arc.label, id_sort_key(arc.id)))
    return selected


class ArcIntervalIndex:
    """
    弧时间范围的区间索引，用于找出与修复范围相交的弧

    正宽度的弧要求开区间重叠；零宽度的弧只要落在闭区间内即算相交
    """

    def __init__(self, graph: AnnotationGraph):
        brackets = node_brackets(graph)
        entries = []
        for arc in graph.arcs():
            if arc.from_node not in brackets or arc.to_node not in brackets:
                continue
            start, end = arc_extent(graph, arc.id, brackets)
            entries.append((start, end, arc.id))
        entries.sort(key=lambda item: (item[0], id_sort_key(item[2])))
        self._entries = entries
        self._starts = [item[0] for item in entries]
        self._max_width = max((item[1] - item[0] for item in entries), default=0)

    def overlapping(self, t0: int, t1: int) -> List[str]:
        if t0 >= t1:
            return []
        hits = []
        # 起点不晚于 t1 的弧才可能相交
        upper = bisect.bisect_right(self._starts, t1)
        lower = 0
        if not math.isinf(self._max_width):
            lower = bisect.bisect_left(self._starts, t0 - self._max_width)
        for start, end, arc_id in self._entries[lower:upper]:
            if arcs_overlap(start, end, t0, t1):
                hits.append(arc_id)
        return sorted(hits, key=id_sort_key)


def arcs_overlap(start: float, end: float, t0: float, t1: float) -> bool:
    """判断弧范围 [start, end] 是否与修复范围 [t0, t1] 相交"""
    if t0 >= t1:
        return False
    if start == end:
        return t0 <= start <= t1
    return start < t1 and end > t0


def arcs_intersecting(graph: AnnotationGraph, t0: SecondsLike, t1: SecondsLike) -> List[str]:
    """返回与时间范围相交的全部弧ID"""
    low = query_bound(t0, upper=False)
    high = query_bound(t1, upper=True)
    return ArcIntervalIndex(graph).overlapping(low, high)
