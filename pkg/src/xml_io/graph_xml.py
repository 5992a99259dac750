"""
标注图的 XML 读写

文档结构：

    <annotationGraph timeline="sw2005">
      <node id="n0" t="2186"/>
      <node id="n1"/>
      <arc id="a0" from="n0" to="n1" type="W/" label="Metric" provenance="aligned-words">
        <feature name="channel" value="B"/>
      </arc>
    </annotationGraph>

时间为整数厘秒；节点和弧的ID在读入时重新生成，往返保证的是同构而不是ID相等。
"""

import logging
import xml.etree.ElementTree as ET
from typing import Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from src.graph.annotation_graph import AnnotationGraph, id_sort_key
from src.graph.models import Arc, Node, TimeAnchor
from src.graph.queries import validate
from src.utils.errors import GraphReferenceError, ParseError, ValidationFailedError

logger = logging.getLogger(__name__)

ROOT_TAG = "annotationGraph"
NODE_TAG = "node"
ARC_TAG = "arc"
FEATURE_TAG = "feature"


def _node_order(node: Node) -> Tuple:
    return (0 if node.offset is not None else 1, node.offset or 0, id_sort_key(node.id))


def write_xml(graph: AnnotationGraph) -> bytes:
    """
    把合法的图写成 UTF-8 编码的 XML

    节点按 (锚点, ID) 排序，未锚定节点排在最后；弧按ID排序；属性顺序固定

    Raises:
        ValidationFailedError: 图不合法，拒绝写出
    """
    violations = validate(graph)
    if violations:
        raise ValidationFailedError(f"图 {graph.timeline_id} 不合法，拒绝写出: {violations[0]}", violations)

    root = ET.Element(ROOT_TAG, {"timeline": graph.timeline_id})
    for node in sorted(graph.nodes(), key=_node_order):
        attrs = {"id": node.id}
        if node.offset is not None:
            attrs["t"] = str(node.offset)
        ET.SubElement(root, NODE_TAG, attrs)
    for arc in sorted(graph.arcs(), key=lambda a: id_sort_key(a.id)):
        element = ET.SubElement(root, ARC_TAG, {
            "id": arc.id,
            "from": arc.from_node,
            "to": arc.to_node,
            "type": arc.arc_type,
            "label": arc.label,
            "provenance": arc.provenance,
        })
        for name in sorted(arc.attributes):
            ET.SubElement(element, FEATURE_TAG, {"name": name, "value": arc.attributes[name]})
    ET.indent(root, space="  ")
    body = ET.tostring(root, encoding="unicode")
    return ('<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n").encode("utf-8")


def read_xml(data: Union[bytes, str], source: Optional[str] = None) -> AnnotationGraph:
    """读取 XML 文档为标注图"""
    return read_xml_with_mapping(data, source)[0]


def _required(element: ET.Element, name: str, source: Optional[str]) -> str:
    value = element.get(name)
    if value is None:
        raise ParseError(f"<{element.tag}> 缺少属性 {name}", None, None, source)
    return value


def read_xml_with_mapping(data: Union[bytes, str],
                          source: Optional[str] = None) -> Tuple[AnnotationGraph, Dict[str, str]]:
    """
    读取 XML 文档，同时返回 文档ID -> 图ID 的映射（节点和弧共用一个映射，弧ID加 "arc:" 前缀）；返回的图已冻结

    Raises:
        ParseError: XML 格式错误，带行列位置
        GraphReferenceError: 弧引用了不存在的节点，或ID重复
        ValidationFailedError: 图含环或时间倒退
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        line, column = e.position
        raise ParseError(f"XML 格式错误: {str(e)}", line, column + 1, source)
    if root.tag != ROOT_TAG:
        raise ParseError(f"根元素应为 <{ROOT_TAG}>，实际 <{root.tag}>", None, None, source)
    timeline = _required(root, "timeline", source)

    node_map: Dict[str, str] = {}
    arc_map: Dict[str, str] = {}
    nodes: List[Node] = []
    for element in root.iter(NODE_TAG):
        doc_id = _required(element, "id", source)
        if doc_id in node_map:
            raise GraphReferenceError(f"重复的节点ID: {doc_id}")
        anchor = None
        raw = element.get("t")
        if raw is not None:
            if not raw.strip().isdigit():
                raise ParseError(f"节点 {doc_id} 的时间应为非负整数厘秒: {raw!r}", None, None, source)
            anchor = TimeAnchor(offset=int(raw))
        node_map[doc_id] = f"n{len(nodes)}"
        nodes.append(Node(id=node_map[doc_id], anchor=anchor))

    arcs: List[Arc] = []
    for element in root.iter(ARC_TAG):
        doc_id = _required(element, "id", source)
        if doc_id in arc_map:
            raise GraphReferenceError(f"重复的弧ID: {doc_id}")
        ends = []
        for name in ("from", "to"):
            target = _required(element, name, source)
            if target not in node_map:
                raise GraphReferenceError(f"弧 {doc_id} 引用了不存在的节点 {target}")
            ends.append(node_map[target])
        features = {}
        for feature in element.iter(FEATURE_TAG):
            features[_required(feature, "name", source)] = feature.get("value", "")
        arc_map[doc_id] = f"a{len(arcs)}"
        try:
            arcs.append(Arc(id=arc_map[doc_id], from_node=ends[0], to_node=ends[1],
                            arc_type=_required(element, "type", source), label=element.get("label", ""),
                            provenance=_required(element, "provenance", source), attributes=features))
        except ValidationError as e:
            raise ParseError(f"弧 {doc_id} 不合法: {str(e)}", None, None, source)

    graph = AnnotationGraph.from_raw(timeline, nodes, arcs)
    violations = validate(graph)
    if violations:
        raise ValidationFailedError(f"文档 {source or timeline} 中的图不合法，拒绝载入: {violations[0]}", violations)
    graph.freeze()
    logger.debug(f"读入图 {timeline}: {graph.node_count} 节点 / {graph.arc_count} 弧")
    mapping = dict(node_map)
    mapping.update((f"arc:{doc_id}", arc_id) for doc_id, arc_id in arc_map.items())
    return graph, mapping
