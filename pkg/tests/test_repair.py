import math
import random

import networkx as nx
import pytest

from src.graph.annotation_graph import id_sort_key
from src.graph.isomorphism import is_isomorphic
from src.graph.models import WORD_TYPE
from src.graph.queries import validate
from src.integrator.repair import (
    RepairEvent,
    RepairKind,
    apply_repair,
    apply_repairs,
    impact_of,
    parse_resegmentation,
)
from src.integrator.repair_ledger import parse_repair_ledger
from src.utils.errors import InvalidArgumentError, ParseError, RepairRejectedError
from tests.conftest import build_random_graph


def _repair(kind: RepairKind, start: int, end: int, payload: str = "") -> RepairEvent:
    return RepairEvent(kind=kind, span_start=start, span_end=end, payload=payload)


def _words(graph, channel=None):
    arcs = sorted(graph.arcs_of_type(WORD_TYPE), key=lambda a: int(a.attributes["seq"]))
    return [a for a in arcs if channel is None or a.attributes.get("channel") == channel]


def test_channel_swap_relabels_only_words_in_span(word_graph):
    before = word_graph.copy()
    repaired, report = apply_repair(word_graph, _repair(RepairKind.CHANNEL_SWAP, 2186, 2610))
    swapped = [a.label for a in _words(repaired, "A") if 2186 <= repaired.offset(a.from_node) < 2610]
    assert swapped[0] == "Metric" and swapped[-1] == "like." and len(swapped) == 14
    assert report.count == 14
    assert list(report.groups) == [WORD_TYPE]
    assert is_isomorphic(word_graph, before)
    assert validate(repaired) == []


def test_token_correction(word_graph):
    repaired, _ = apply_repair(word_graph, _repair(RepairKind.TOKEN_CORRECTION, 2186, 2610, "Metric=>metric"))
    labels = [a.label for a in _words(repaired)]
    assert "metric" in labels and "Metric" not in labels
    with pytest.raises(InvalidArgumentError):
        apply_repair(word_graph, _repair(RepairKind.TOKEN_CORRECTION, 2186, 2610, "metric"))
    with pytest.raises(InvalidArgumentError):
        apply_repair(word_graph, _repair(RepairKind.TOKEN_CORRECTION, 2186, 2610, "Imperial=>metric"))


def test_token_correction_reports_every_layer_over_the_word(integrated_graph):
    repaired, report = apply_repair(integrated_graph,
                                    _repair(RepairKind.TOKEN_CORRECTION, 2186, 2212, "Metric=>metric"))
    assert set(report.groups) == {"W/", "Pos/", "DISF/", "T/"}
    assert list(report.groups[WORD_TYPE]) == ["aligned-words"]
    (word_id,) = report.groups[WORD_TYPE]["aligned-words"]
    assert integrated_graph.arc(word_id).label == "Metric"
    assert repaired.arc(word_id).label == "metric"

    labels = {arc_type: {integrated_graph.arc(arc_id).label for ids in by_source.values() for arc_id in ids}
              for arc_type, by_source in report.groups.items()}
    assert "Metric/JJ" in labels["Pos/"]
    assert "Metric" in labels["DISF/"]
    assert {"Metric", "NP-TPC"} <= labels["T/"]
    for arc_id in report.affected:
        if arc_id != word_id:
            assert repaired.arc(arc_id) == integrated_graph.arc(arc_id)
    assert validate(repaired) == []


def test_resegmentation_moves_shared_anchor(word_graph):
    repaired, _ = apply_repair(word_graph, _repair(RepairKind.RESEGMENTATION, 2186, 2238, "22.12=22.10"))
    metric, system = _words(repaired)[8:10]
    assert repaired.offset(metric.to_node) == 2210
    assert repaired.offset(system.from_node) == 2210
    assert metric.to_node == system.from_node


def test_resegmentation_that_reverses_time_is_rejected(word_graph):
    with pytest.raises(RepairRejectedError) as error:
        apply_repair(word_graph, _repair(RepairKind.RESEGMENTATION, 2186, 2260, "22.12=22.50"))
    assert error.value.violations
    with pytest.raises(InvalidArgumentError):
        apply_repair(word_graph, _repair(RepairKind.RESEGMENTATION, 2186, 2238, "22.12=22.50"))


def test_span_outside_graph_and_empty_span(word_graph):
    with pytest.raises(InvalidArgumentError):
        apply_repair(word_graph, _repair(RepairKind.CHANNEL_SWAP, 0, 2000))
    repaired, report = apply_repair(word_graph, _repair(RepairKind.CHANNEL_SWAP, 2186, 2186))
    assert report.count == 0 and report.affected == []
    assert repaired is not word_graph
    assert is_isomorphic(repaired, word_graph)


def test_apply_repairs_in_sequence(word_graph):
    repairs = [
        _repair(RepairKind.TOKEN_CORRECTION, 2186, 2610, "Metric=>metric"),
        _repair(RepairKind.CHANNEL_SWAP, 2186, 2610, "A<->B"),
    ]
    repaired, reports = apply_repairs(word_graph, repairs)
    assert [r.count for r in reports] == [14, 14]
    corrected = [a for a in _words(repaired) if a.label == "metric"]
    assert len(corrected) == 1 and corrected[0].attributes["channel"] == "A"


def test_parse_resegmentation():
    assert parse_resegmentation("22.12=22.10, 23.00=23.05") == [(2212, 2210), (2300, 2305)]
    with pytest.raises(InvalidArgumentError):
        parse_resegmentation("22.12")
    with pytest.raises(InvalidArgumentError):
        parse_resegmentation(" , ")


def test_parse_repair_ledger():
    text = ("# fixes for sw2005\n"
            "CHANNEL_SWAP\t21.86-26.10\n"
            "TOKEN_CORRECTION\t21.86-22.12\tMetric=>metric\n"
            "\n"
            "RESEGMENTATION\t21.86-22.38\t22.12=22.10\n")
    repairs = parse_repair_ledger(text, "fixes.tsv")
    assert [r.kind for r in repairs] == [RepairKind.CHANNEL_SWAP, RepairKind.TOKEN_CORRECTION,
                                         RepairKind.RESEGMENTATION]
    assert (repairs[0].span_start, repairs[0].span_end) == (2186, 2610)
    assert repairs[1].payload == "Metric=>metric"


@pytest.mark.parametrize("text, line", [
    ("CHANNEL_SWAP\n", 1),
    ("# ok\nMOVE_IT\t1-2\n", 2),
    ("CHANNEL_SWAP\t5.00\n", 1),
    ("CHANNEL_SWAP\t5-4\n", 1),
])
def test_repair_ledger_errors(text, line):
    with pytest.raises(ParseError) as error:
        parse_repair_ledger(text, "fixes.tsv")
    assert error.value.line == line


def _close(low, high):
    if low is None and high is None:
        return -math.inf, math.inf
    if low is None:
        return high, high
    if high is None:
        return low, low
    return low, high


def _brute_force_impact(graph, t0: int, t1: int):
    structure = nx.DiGraph()
    structure.add_nodes_from(node.id for node in graph.nodes())
    structure.add_edges_from((arc.from_node, arc.to_node) for arc in graph.arcs())

    def bracket(node_id):
        offset = graph.offset(node_id)
        if offset is not None:
            return offset, offset
        before = [graph.offset(n) for n in nx.ancestors(structure, node_id) if graph.offset(n) is not None]
        after = [graph.offset(n) for n in nx.descendants(structure, node_id) if graph.offset(n) is not None]
        return _close(max(before, default=None), min(after, default=None))

    hits = set()
    for arc in graph.arcs():
        start, end = bracket(arc.from_node)[0], bracket(arc.to_node)[1]
        if start == end:
            if t0 <= start <= t1:
                hits.add(arc.id)
        elif start < t1 and end > t0:
            hits.add(arc.id)
    return hits


@pytest.mark.parametrize("seed", range(5))
def test_impact_matches_brute_force(seed):
    rng = random.Random(seed)
    checked = 0
    while checked < 100:
        graph = build_random_graph(rng, max_arcs=200, channels=["A", "B"])
        low, high = graph.time_extent()
        if low == high:
            continue
        t0 = rng.randint(low, high - 1)
        t1 = rng.randint(t0 + 1, high)
        repaired, report = apply_repair(graph, _repair(RepairKind.CHANNEL_SWAP, t0, t1))
        assert set(report.affected) == _brute_force_impact(graph, t0, t1)
        assert report.affected == sorted(report.affected, key=id_sort_key)
        assert validate(repaired) == []
        for arc_id in report.affected:
            arc = graph.arc(arc_id)
            if arc.arc_type == WORD_TYPE:
                assert repaired.arc(arc_id).attributes["channel"] != arc.attributes["channel"]
        assert set(impact_of(graph, t0, t1)) == set(report.affected)
        checked += 1
