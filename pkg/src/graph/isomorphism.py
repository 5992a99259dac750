"""
图同构判断与规范化

节点和弧的ID是不透明的，比较两张图时只看结构、锚点和弧内容。
"""

import math
from typing import Dict, List, Tuple

import networkx as nx

from src.graph.annotation_graph import AnnotationGraph, id_sort_key
from src.graph.models import Arc, Node


def _arc_signature(arc: Arc) -> Tuple:
    return arc.arc_type, arc.label, arc.provenance, tuple(sorted(arc.attributes.items()))


def _labelled(graph: AnnotationGraph) -> nx.MultiDiGraph:
    labelled = nx.MultiDiGraph()
    for node in graph.nodes():
        labelled.add_node(node.id, offset=node.offset)
    for arc in graph.arcs():
        if graph.has_node(arc.from_node) and graph.has_node(arc.to_node):
            labelled.add_edge(arc.from_node, arc.to_node, key=arc.id, sig=_arc_signature(arc))
    return labelled


def _multiset_match(edges1: Dict, edges2: Dict) -> bool:
    return sorted(d["sig"] for d in edges1.values()) == sorted(d["sig"] for d in edges2.values())


def is_isomorphic(g1: AnnotationGraph, g2: AnnotationGraph) -> bool:
    """
    判断两张图是否同构（时间线、锚点、弧类型/标签/来源/属性都一致）

    Args:
        g1: 第一张图
        g2: 第二张图

    Returns:
        bool: 同构时为True
    """
    if g1.timeline_id != g2.timeline_id:
        return False
    if g1.node_count != g2.node_count or g1.arc_count != g2.arc_count:
        return False
    if sorted(_arc_signature(a) for a in g1.arcs()) != sorted(_arc_signature(a) for a in g2.arcs()):
        return False
    if _offsets(g1) != _offsets(g2):
        return False
    return nx.is_isomorphic(
        _labelled(g1), _labelled(g2),
        node_match=lambda a, b: a["offset"] == b["offset"],
        edge_match=_multiset_match,
    )


def _offsets(graph: AnnotationGraph) -> List[int]:
    return sorted(-1 if n.offset is None else n.offset for n in graph.nodes())


def _node_key(graph: AnnotationGraph, node: Node) -> Tuple:
    outgoing = sorted(arc.qualified_label for arc in graph.out_arcs(node.id))
    incoming = sorted(arc.qualified_label for arc in graph.in_arcs(node.id))
    offset = node.offset if node.offset is not None else math.inf
    return (offset, len(outgoing), outgoing[0] if outgoing else "",
            len(incoming), outgoing, incoming, id_sort_key(node.id))


def canonicalize(graph: AnnotationGraph) -> AnnotationGraph:
    """
    按规范顺序重新编号节点和弧

    节点按 (偏移, 出度, 字典序最小的出弧标签) 排序，其余字段只用于打破平局；
    弧按 (起点序号, 终点序号, 类型, 标签, 来源, 属性) 排序
    """
    ordered = sorted(graph.nodes(), key=lambda node: _node_key(graph, node))
    renumber = {node.id: f"n{i}" for i, node in enumerate(ordered)}
    nodes = [Node(id=renumber[node.id], anchor=node.anchor) for node in ordered]

    def arc_key(arc: Arc):
        return (_position(renumber, arc.from_node), _position(renumber, arc.to_node),
                _arc_signature(arc), id_sort_key(arc.id))

    arcs: List[Arc] = []
    for i, arc in enumerate(sorted(graph.arcs(), key=arc_key)):
        arcs.append(arc.model_copy(update={
            "id": f"a{i}",
            "from_node": renumber.get(arc.from_node, arc.from_node),
            "to_node": renumber.get(arc.to_node, arc.to_node),
        }))
    return AnnotationGraph.from_raw(graph.timeline_id, nodes, arcs)


def _position(renumber: Dict[str, str], node_id: str) -> Tuple:
    if node_id in renumber:
        return 0, id_sort_key(renumber[node_id])[1], ""
    return 1, -1, node_id


def canonical_signature(graph: AnnotationGraph) -> Tuple:
    """规范化后的可比较签名，用于给输入图排出确定顺序"""
    canonical = canonicalize(graph)
    nodes = tuple((n.id, n.offset if n.offset is not None else -1) for n in canonical.nodes())
    arcs = tuple((a.from_node, a.to_node) + _arc_signature(a) for a in canonical.arcs())
    return canonical.timeline_id, nodes, arcs
