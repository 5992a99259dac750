"""
标注图（Annotation Graph）核心结构

节点可选地锚定在信号时间线上，弧带有类型命名空间、标签和来源。
内部用 networkx.MultiDiGraph 保存结构，同一对节点之间允许多条弧
（例如词弧和词性弧共享端点）。
"""

import logging
import re
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

import networkx as nx
from pydantic import ValidationError

from src.graph.models import Arc, Node, SecondsLike, TimeAnchor
from src.utils.errors import (
    CycleError,
    InvalidArgumentError,
    NotFoundError,
    TimeOrderError,
)

logger = logging.getLogger(__name__)

_ID_PATTERN = re.compile(r"^([^\d]*)(\d+)$")

AnchorLike = Union[TimeAnchor, SecondsLike, None]


def id_sort_key(identifier: str) -> Tuple[str, int, str]:
    """按 "前缀+数字" 的自然顺序排序，a2 排在 a10 之前"""
    match = _ID_PATTERN.match(identifier)
    if match:
        return match.group(1), int(match.group(2)), ""
    return identifier, -1, identifier


def _coerce_anchor(anchor: AnchorLike) -> Optional[TimeAnchor]:
    if anchor is None or isinstance(anchor, TimeAnchor):
        return anchor
    return TimeAnchor.from_seconds(anchor)


class AnnotationGraph:
    """
    单个录音（时间线）上的标注图

    构建阶段由单一写者调用 add_node / add_arc；每次添加都保持无环、
    时间单调和无悬空引用。freeze() 之后图不可再修改，可被并发读取。
    """

    def __init__(self, timeline_id: str):
        if not timeline_id or not timeline_id.strip():
            raise InvalidArgumentError("timeline_id 不能为空")
        self._timeline_id = timeline_id
        self._nodes: Dict[str, Node] = {}
        self._arcs: Dict[str, Arc] = {}
        self._graph = nx.MultiDiGraph()
        self._next_node = 0
        self._next_arc = 0
        self._frozen = False

    # ------------------------------------------------------------------
    # 基本属性
    # ------------------------------------------------------------------

    @property
    def timeline_id(self) -> str:
        return self._timeline_id

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def arc_count(self) -> int:
        return len(self._arcs)

    @property
    def streams(self) -> List[str]:
        """图中登记过的全部来源标注流"""
        return sorted({arc.provenance for arc in self._arcs.values()})

    def nodes(self) -> List[Node]:
        return [self._nodes[k] for k in sorted(self._nodes, key=id_sort_key)]

    def arcs(self) -> List[Arc]:
        return [self._arcs[k] for k in sorted(self._arcs, key=id_sort_key)]

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NotFoundError(f"节点不存在: {node_id}")

    def arc(self, arc_id: str) -> Arc:
        try:
            return self._arcs[arc_id]
        except KeyError:
            raise NotFoundError(f"弧不存在: {arc_id}")

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def has_arc(self, arc_id: str) -> bool:
        return arc_id in self._arcs

    def offset(self, node_id: str) -> Optional[int]:
        return self.node(node_id).offset

    def out_arcs(self, node_id: str) -> List[Arc]:
        if node_id not in self._graph:
            return []
        keys = [key for _, _, key in self._graph.out_edges(node_id, keys=True)]
        return [self._arcs[k] for k in sorted(keys, key=id_sort_key)]

    def in_arcs(self, node_id: str) -> List[Arc]:
        if node_id not in self._graph:
            return []
        keys = [key for _, _, key in self._graph.in_edges(node_id, keys=True)]
        return [self._arcs[k] for k in sorted(keys, key=id_sort_key)]

    def arcs_of_type(self, arc_type: str) -> List[Arc]:
        return [arc for arc in self.arcs() if arc.arc_type == arc_type]

    def structure(self) -> nx.MultiDiGraph:
        """返回结构的只读视图，供图算法使用"""
        return self._graph.copy(as_view=True)

    def time_extent(self) -> Optional[Tuple[int, int]]:
        """图中锚点的最小和最大偏移（厘秒），没有锚点时返回None"""
        offsets = [n.offset for n in self._nodes.values() if n.offset is not None]
        if not offsets:
            return None
        return min(offsets), max(offsets)

    def __iter__(self) -> Iterator[Arc]:
        return iter(self.arcs())

    def __len__(self) -> int:
        return len(self._arcs)

    def __repr__(self) -> str:
        return (f"AnnotationGraph(timeline_id={self._timeline_id!r}, "
                f"nodes={len(self._nodes)}, arcs={len(self._arcs)})")

    # ------------------------------------------------------------------
    # 构建
    # ------------------------------------------------------------------

    def _check_mutable(self):
        if self._frozen:
            raise InvalidArgumentError(f"图已冻结，不能修改: {self._timeline_id}")

    def _fresh_node_id(self) -> str:
        while f"n{self._next_node}" in self._nodes:
            self._next_node += 1
        node_id = f"n{self._next_node}"
        self._next_node += 1
        return node_id

    def _fresh_arc_id(self) -> str:
        while f"a{self._next_arc}" in self._arcs:
            self._next_arc += 1
        arc_id = f"a{self._next_arc}"
        self._next_arc += 1
        return arc_id

    def add_node(self, anchor: AnchorLike = None) -> str:
        """
        添加节点

        Args:
            anchor: 时间锚点，可以是TimeAnchor或秒数；None表示不锚定

        Returns:
            str: 新节点ID
        """
        self._check_mutable()
        node = Node(id=self._fresh_node_id(), anchor=_coerce_anchor(anchor))
        self._nodes[node.id] = node
        self._graph.add_node(node.id)
        return node.id

    def add_arc(self, from_node: str, to_node: str, arc_type: str, label: str,
                provenance: str, attributes: Optional[Mapping[str, str]] = None) -> str:
        """
        添加弧，并保持无环和时间单调

        Args:
            from_node: 起点节点ID
            to_node: 终点节点ID
            arc_type: 类型命名空间，如 "W/"
            label: 标签文本
            provenance: 来源标注流
            attributes: 附加属性

        Returns:
            str: 新弧ID

        Raises:
            NotFoundError: 节点不存在
            InvalidArgumentError: 自环或字段非法
            CycleError: 会引入环
            TimeOrderError: 锚定时间倒退
        """
        self._check_mutable()
        for node_id in (from_node, to_node):
            if node_id not in self._nodes:
                raise NotFoundError(f"节点不存在: {node_id}")
        if from_node == to_node:
            raise InvalidArgumentError(f"弧的起点和终点不能相同: {from_node}")
        try:
            arc = Arc(id="pending", from_node=from_node, to_node=to_node, arc_type=arc_type,
                      label=label, provenance=provenance, attributes=dict(attributes or {}))
        except ValidationError as e:
            raise InvalidArgumentError(str(e))

        self._check_order(from_node, to_node)
        arc = arc.model_copy(update={"id": self._fresh_arc_id()})
        self._arcs[arc.id] = arc
        self._graph.add_edge(from_node, to_node, key=arc.id)
        return arc.id

    def _check_order(self, from_node: str, to_node: str):
        start = self._nodes[from_node].offset
        end = self._nodes[to_node].offset
        if start is not None and end is not None:
            if start > end:
                raise TimeOrderError(
                    f"时间倒退: {from_node}@{start} -> {to_node}@{end}")
            # 两端严格递增时，现有图中不可能存在 to -> from 的路径
            if start == end and nx.has_path(self._graph, to_node, from_node):
                raise CycleError(f"添加 {from_node}->{to_node} 会形成环")
            return
        if nx.has_path(self._graph, to_node, from_node):
            raise CycleError(f"添加 {from_node}->{to_node} 会形成环")
        lower = start if start is not None else self._max_anchored_ancestor(from_node)
        upper = end if end is not None else self._min_anchored_descendant(to_node)
        if lower is not None and upper is not None and lower > upper:
            raise TimeOrderError(
                f"经过未锚定节点的路径时间倒退: {lower} -> {upper}")

    def _max_anchored_ancestor(self, node_id: str) -> Optional[int]:
        return self._nearest_anchor(node_id, self._graph.predecessors, max)

    def _min_anchored_descendant(self, node_id: str) -> Optional[int]:
        return self._nearest_anchor(node_id, self._graph.successors, min)

    def _nearest_anchor(self, node_id, neighbours, pick) -> Optional[int]:
        # 遇到锚定节点即停止扩展，其更远的祖先/后代不会更紧
        found: List[int] = []
        seen = {node_id}
        stack = [node_id]
        while stack:
            current = stack.pop()
            for nxt in neighbours(current):
                if nxt in seen:
                    continue
                seen.add(nxt)
                offset = self._nodes[nxt].offset if nxt in self._nodes else None
                if offset is not None:
                    found.append(offset)
                else:
                    stack.append(nxt)
        return pick(found) if found else None

    def replace_arc(self, arc_id: str, label: Optional[str] = None,
                    attributes: Optional[Mapping[str, str]] = None) -> Arc:
        """替换弧的标签或属性，端点不变"""
        self._check_mutable()
        arc = self.arc(arc_id)
        update = {}
        if label is not None:
            update["label"] = label
        if attributes is not None:
            update["attributes"] = dict(attributes)
        new_arc = arc.model_copy(update=update)
        self._arcs[arc_id] = new_arc
        return new_arc

    def set_anchor(self, node_id: str, anchor: AnchorLike) -> Node:
        """直接改写节点锚点，不做校验；调用方负责之后执行 validate"""
        self._check_mutable()
        node = self.node(node_id)
        new_node = node.model_copy(update={"anchor": _coerce_anchor(anchor)})
        self._nodes[node_id] = new_node
        return new_node

    def copy(self) -> "AnnotationGraph":
        """复制出一个可修改的新图（写时复制）"""
        clone = AnnotationGraph(self._timeline_id)
        clone._nodes = dict(self._nodes)
        clone._arcs = dict(self._arcs)
        clone._graph = self._graph.copy()
        clone._next_node = self._next_node
        clone._next_arc = self._next_arc
        return clone

    def freeze(self) -> "AnnotationGraph":
        self._frozen = True
        return self

    @classmethod
    def from_raw(cls, timeline_id: str, nodes: Iterable[Node], arcs: Iterable[Arc]) -> "AnnotationGraph":
        """
        不经检查地构建图，供反序列化使用

        结果可能包含环、时间倒退或悬空引用，需要再调用 validate
        """
        graph = cls(timeline_id)
        for node in nodes:
            if node.id in graph._nodes:
                raise InvalidArgumentError(f"重复的节点ID: {node.id}")
            graph._nodes[node.id] = node
            graph._graph.add_node(node.id)
        for arc in arcs:
            if arc.id in graph._arcs:
                raise InvalidArgumentError(f"重复的弧ID: {arc.id}")
            graph._arcs[arc.id] = arc
            if arc.from_node in graph._nodes and arc.to_node in graph._nodes:
                graph._graph.add_edge(arc.from_node, arc.to_node, key=arc.id)
        graph._next_node = _next_counter(graph._nodes, "n")
        graph._next_arc = _next_counter(graph._arcs, "a")
        return graph


def _next_counter(ids: Iterable[str], prefix: str) -> int:
    highest = -1
    for identifier in ids:
        match = _ID_PATTERN.match(identifier)
        if match and match.group(1) == prefix:
            highest = max(highest, int(match.group(2)))
    return highest + 1


def new_graph(timeline_id: str) -> AnnotationGraph:
    """创建空图"""
    return AnnotationGraph(timeline_id)


def add_node(graph: AnnotationGraph, anchor: AnchorLike = None) -> str:
    return graph.add_node(anchor)


def add_arc(graph: AnnotationGraph, from_node: str, to_node: str, arc_type: str,
            label: str, provenance: str, attributes: Optional[Mapping[str, str]] = None) -> str:
    return graph.add_arc(from_node, to_node, arc_type, label, provenance, attributes)
