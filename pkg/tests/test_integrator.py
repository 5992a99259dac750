import itertools

import networkx as nx
import pytest

from src.graph.models import WORD_TYPE
from src.graph.queries import arcs_in_interval, validate
from src.integrator.anchoring import anchor_by_alignment, anchor_with_report
from src.integrator.integration import integrate
from src.parsers.graph_builders import pos_to_graph
from src.parsers.pos_tags import parse_pos
from src.utils.errors import AlignmentFailureError, InvalidArgumentError, TimelineError
from src.xml_io.graph_xml import write_xml
from tests.conftest import TIMELINE

UNRELATED_POS = """====================
[ SpeakerB22/SYM ]
./.
====================

zebra/NN quantum/NN giraffe/NN tuba/NN
[ marmalade/NN ] ./.
"""

INTERVAL_WORDS = ["Metric", "system,", "no", "one's", "very,", "uh,", "no", "one", "wants", "it", "at",
                "all", "seems", "like."]


def test_streams_anchor_to_word_times(word_graph, stream_graphs):
    for stream in stream_graphs:
        result = anchor_with_report(word_graph, stream)
        assert result.match_rate >= 0.9
        assert result.matched_tokens > result.unmatched_tokens
        assert validate(result.graph) == []
        assert result.graph.time_extent() is not None
        assert result.graph.streams == stream.streams


def test_unrelated_stream_is_rejected(word_graph):
    stream = pos_to_graph(parse_pos(UNRELATED_POS, "zoo.pos"), TIMELINE)
    with pytest.raises(AlignmentFailureError) as error:
        anchor_by_alignment(word_graph, stream)
    assert error.value.match_rate < 0.5


def test_anchoring_checks_timeline_and_threshold(word_graph, pos_text):
    other = pos_to_graph(parse_pos(pos_text, "sw2005.pos"), "sw4019")
    with pytest.raises(TimelineError):
        anchor_by_alignment(word_graph, other)
    same = pos_to_graph(parse_pos(pos_text, "sw2005.pos"), TIMELINE)
    with pytest.raises(InvalidArgumentError):
        anchor_by_alignment(word_graph, same, min_match_rate=1.5)
    with pytest.raises(InvalidArgumentError):
        anchor_by_alignment(word_graph, word_graph)


def test_interval_query_spans_all_layers(integrated_graph):
    arcs = arcs_in_interval(integrated_graph, "21.86", "26.10")
    types = {arc.arc_type for arc in arcs}
    assert {"W/", "Pos/", "DISF/", "T/"} <= types
    words = [arc.label for arc in arcs if arc.arc_type == WORD_TYPE]
    assert sorted(words) == sorted(INTERVAL_WORDS)

    structure = nx.Graph()
    structure.add_edges_from((arc.from_node, arc.to_node) for arc in arcs)
    assert nx.is_connected(structure)


def test_interval_query_with_type_filter(integrated_graph):
    words = arcs_in_interval(integrated_graph, "21.86", "26.10", type_filter=WORD_TYPE)
    assert [arc.label for arc in words] == INTERVAL_WORDS


def test_integrated_graph_is_valid(integrated_graph, anchored_graphs):
    assert validate(integrated_graph) == []
    assert integrated_graph.frozen
    assert integrated_graph.streams == ["aligned-words", "disfluency", "pos", "treebank"]
    assert integrated_graph.arc_count == sum(graph.arc_count for graph in anchored_graphs)


def test_integration_is_order_independent(anchored_graphs):
    expected = write_xml(integrate(anchored_graphs))
    for permutation in itertools.permutations(anchored_graphs):
        assert write_xml(integrate(list(permutation))) == expected


def test_integrate_rejects_bad_input(word_graph, pos_text):
    with pytest.raises(InvalidArgumentError):
        integrate([])
    other = pos_to_graph(parse_pos(pos_text, "sw2005.pos"), "sw4019")
    with pytest.raises(TimelineError):
        integrate([word_graph, other])
