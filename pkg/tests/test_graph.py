import math
import random

import pytest

from src.graph.annotation_graph import AnnotationGraph, id_sort_key
from src.graph.isomorphism import canonicalize, is_isomorphic
from src.graph.merge import merge_graphs
from src.graph.models import Arc, Node, TimeAnchor, ViolationKind, format_seconds, to_centiseconds
from src.graph.queries import arc_extent, arcs_in_interval, arcs_intersecting, node_bracket, validate
from src.utils.errors import (
    CycleError,
    InvalidArgumentError,
    MergeConflictError,
    NotFoundError,
    TimelineError,
    TimeOrderError,
)


def _chain(timeline="t1"):
    graph = AnnotationGraph(timeline)
    a = graph.add_node("1.00")
    u = graph.add_node(None)
    b = graph.add_node("2.50")
    graph.add_arc(a, u, "W/", "hello", "aligned-words")
    graph.add_arc(u, b, "W/", "world", "aligned-words")
    return graph, a, u, b


def test_to_centiseconds_exact():
    assert to_centiseconds("21.86") == 2186
    assert to_centiseconds(21.86) == 2186
    assert to_centiseconds(3) == 300
    assert format_seconds(2186) == "21.86"
    assert format_seconds(5) == "0.05"
    with pytest.raises(InvalidArgumentError):
        to_centiseconds("1.005")
    with pytest.raises(InvalidArgumentError):
        to_centiseconds("abc")


def test_add_arc_keeps_graph_acyclic():
    graph, a, u, b = _chain()
    with pytest.raises(CycleError):
        graph.add_arc(u, a, "T/", "S", "treebank")
    with pytest.raises(InvalidArgumentError):
        graph.add_arc(a, a, "T/", "S", "treebank")
    assert graph.arc_count == 2


def test_add_arc_rejects_time_reversal():
    graph, a, u, b = _chain()
    with pytest.raises(TimeOrderError):
        graph.add_arc(b, a, "T/", "S", "treebank")
    # 经过未锚定节点的路径同样检查
    early = graph.add_node("0.50")
    with pytest.raises(TimeOrderError):
        graph.add_arc(u, early, "T/", "S", "treebank")


def test_add_arc_validates_fields():
    graph, a, u, b = _chain()
    with pytest.raises(InvalidArgumentError):
        graph.add_arc(a, b, "W", "x", "aligned-words")
    with pytest.raises(InvalidArgumentError):
        graph.add_arc(a, b, "W/", "x", " ")
    with pytest.raises(NotFoundError):
        graph.add_arc(a, "n99", "W/", "x", "aligned-words")


def test_parallel_arcs_between_same_nodes():
    graph, a, u, b = _chain()
    graph.add_arc(a, b, "T/", "NP", "treebank")
    chunk = graph.add_arc(a, b, "Pos/", "NP-chunk", "pos")
    assert graph.has_arc(chunk) and not graph.has_arc("a99")
    assert graph.arc_count == 4
    assert [arc.label for arc in graph.out_arcs(a)] == ["hello", "NP", "NP-chunk"]
    assert graph.streams == ["aligned-words", "pos", "treebank"]


def test_frozen_graph_refuses_mutation():
    graph, a, u, b = _chain()
    graph.freeze()
    with pytest.raises(InvalidArgumentError):
        graph.add_node(None)
    assert graph.copy().add_node(None)


def test_unanchored_node_bracket():
    graph, a, u, b = _chain()
    assert node_bracket(graph, u) == (100, 250)
    tail = graph.add_node(None)
    graph.add_arc(b, tail, "W/", "tail", "aligned-words")
    assert node_bracket(graph, tail) == (250, 250)
    lonely = graph.add_node(None)
    assert node_bracket(graph, lonely) == (-math.inf, math.inf)
    assert arc_extent(graph, graph.out_arcs(a)[0].id) == (100, 250)


def test_arcs_in_interval_uses_brackets():
    graph, a, u, b = _chain()
    c = graph.add_node("4.00")
    graph.add_arc(b, c, "W/", "later", "aligned-words")
    labels = [arc.label for arc in arcs_in_interval(graph, "1.00", "2.50")]
    assert labels == ["hello", "world"]
    assert [arc.label for arc in arcs_in_interval(graph, 0, math.inf, "W/")] == ["hello", "world", "later"]
    assert arcs_in_interval(graph, "5", "6") == []
    with pytest.raises(InvalidArgumentError):
        arcs_in_interval(graph, "3", "2")


def test_arcs_intersecting_open_overlap():
    graph, a, u, b = _chain()
    c = graph.add_node("4.00")
    later = graph.add_arc(b, c, "W/", "later", "aligned-words")
    # [2.50, 3.00] 只在端点碰到前两条弧
    assert arcs_intersecting(graph, "2.50", "3.00") == [later]


def test_validate_reports_cycles_and_dangling():
    nodes = [Node(id="n0", anchor=TimeAnchor(offset=10)), Node(id="n1"), Node(id="n2", anchor=TimeAnchor(offset=5))]
    arcs = [
        Arc(id="a0", from_node="n0", to_node="n1", arc_type="W/", label="x", provenance="p"),
        Arc(id="a1", from_node="n1", to_node="n0", arc_type="W/", label="y", provenance="p"),
        Arc(id="a2", from_node="n0", to_node="n9", arc_type="W/", label="z", provenance="p"),
    ]
    graph = AnnotationGraph.from_raw("raw", nodes, arcs)
    kinds = {violation.kind for violation in validate(graph)}
    assert kinds == {ViolationKind.CYCLE, ViolationKind.DANGLING}

    reversed_graph = AnnotationGraph.from_raw("raw", nodes, [
        Arc(id="a0", from_node="n0", to_node="n2", arc_type="W/", label="x", provenance="p")])
    violations = validate(reversed_graph)
    assert [v.kind for v in violations] == [ViolationKind.TIME_ORDER]
    assert violations[0].arc_ids == ["a0"]


def test_valid_graph_has_no_violations(random_graph):
    for seed in range(20):
        assert validate(random_graph(random.Random(seed))) == []


def test_id_sort_key_natural_order():
    assert sorted(["a10", "a2", "a1"], key=id_sort_key) == ["a1", "a2", "a10"]


def test_merge_unifies_equal_offsets():
    g1, *_ = _chain()
    g2 = AnnotationGraph("t1")
    x = g2.add_node("1.00")
    y = g2.add_node("2.50")
    g2.add_arc(x, y, "T/", "S", "treebank")
    merged = merge_graphs(g1, g2)
    assert merged.node_count == 3
    assert merged.arc_count == 3
    span = merged.arcs_of_type("T/")[0]
    assert merged.offset(span.from_node) == 100 and merged.offset(span.to_node) == 250
    # 输入不被修改
    assert g1.arc_count == 2 and g2.arc_count == 1


def test_merge_never_unifies_unanchored_nodes():
    g1, *_ = _chain()
    g2, *_ = _chain()
    merged = merge_graphs(g1, g2)
    assert merged.node_count == 4
    assert merged.arc_count == 4


def test_merge_tolerance():
    g1 = AnnotationGraph("t1")
    g1.add_arc(g1.add_node("1.00"), g1.add_node("2.00"), "W/", "a", "aligned-words")
    g2 = AnnotationGraph("t1")
    g2.add_arc(g2.add_node("1.01"), g2.add_node("2.00"), "T/", "A", "treebank")
    assert merge_graphs(g1, g2).node_count == 3
    merged = merge_graphs(g1, g2, tolerance="0.01")
    assert merged.node_count == 2
    assert sorted(n.offset for n in merged.nodes()) == [100, 200]


def test_merge_tolerance_uses_moved_anchor():
    g1 = AnnotationGraph("t1")
    g1.add_arc(g1.add_node("1.00"), g1.add_node("2.00"), "W/", "a", "aligned-words")
    g2 = AnnotationGraph("t1")
    early, late, end = g2.add_node("0.96"), g2.add_node("1.02"), g2.add_node("3.00")
    g2.add_arc(early, late, "T/", "A", "treebank")
    g2.add_arc(late, end, "T/", "B", "treebank")
    merged = merge_graphs(g1, g2, tolerance="0.05")
    # 1.00 被提前到 0.96 之后，1.02 与它相差超过容差
    assert sorted(n.offset for n in merged.nodes()) == [96, 102, 200, 300]
    assert validate(merged) == []


def test_merge_conflict_reports_arcs():
    g1 = AnnotationGraph("t1")
    g1.add_arc(g1.add_node("1.00"), g1.add_node("1.00"), "W/", "a", "aligned-words")
    g2 = AnnotationGraph("t1")
    conflicting = g2.add_arc(g2.add_node("1.00"), g2.add_node("1.00"), "T/", "A", "treebank")
    with pytest.raises(MergeConflictError) as info:
        merge_graphs(g1, g2)
    assert info.value.arc_ids == [conflicting]


def test_merge_requires_same_timeline():
    with pytest.raises(TimelineError):
        merge_graphs(AnnotationGraph("t1"), AnnotationGraph("t2"))


def test_canonicalize_preserves_isomorphism():
    graph, a, u, b = _chain()
    graph.add_arc(a, b, "T/", "S", "treebank", {"depth": "0"})
    canonical = canonicalize(graph)
    assert is_isomorphic(graph, canonical)
    assert [n.id for n in canonical.nodes()] == ["n0", "n1", "n2"]
    assert canonical.offset("n0") == 100

    changed = graph.copy()
    changed.replace_arc(changed.arcs_of_type("T/")[0].id, label="VP")
    assert not is_isomorphic(graph, changed)
