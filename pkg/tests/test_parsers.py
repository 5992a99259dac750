import pytest

from src.aligner.normalizer import NormPolicy
from src.graph.models import DISFLUENCY_TYPE, POS_TYPE, TREEBANK_TYPE, WORD_TYPE
from src.graph.queries import validate
from src.parsers.aligned_words import Channel, format_aligned_words, parse_aligned_words
from src.parsers.disfluency import ElementKind, format_disfluency, parse_disfluency
from src.parsers.graph_builders import (
    disfluency_to_graph,
    graph_to_tokens,
    pos_to_graph,
    tokens_to_graph,
    treebank_to_graph,
)
from src.parsers.lexical import (
    lexical_agreement,
    surface_words_aligned,
    surface_words_disfluency,
    surface_words_pos,
    surface_words_treebank,
)
from src.parsers.pos_tags import format_pos, parse_pos
from src.parsers.treebank import LeafKind, edit_marker_problems, format_treebank, parse_treebank
from src.utils.errors import ParseError, TimeOrderError


# ----------------------------------------------------------------------
# 对齐词
# ----------------------------------------------------------------------

def test_aligned_words_one_token_per_line(words_text, word_tokens):
    lines = [line for line in words_text.splitlines() if line.strip()]
    assert len(word_tokens) == len(lines) == 71
    first = word_tokens[0]
    assert (first.channel, first.text, first.start_cs, first.duration_cs) == (Channel.B, "Yeah,", 1944, 16)
    untimed = [t.text for t in word_tokens if not t.timed]
    assert untimed == ["[laughter].", "[breathing],"]


def test_aligned_words_errors_carry_position():
    with pytest.raises(ParseError) as info:
        parse_aligned_words("B 1.00 0.10 ok\nC 1.10 0.10 bad\n", "x.words")
    assert (info.value.line, info.value.column, info.value.source) == (2, 1, "x.words")
    with pytest.raises(ParseError):
        parse_aligned_words("A 1.005 0.10 word\n")
    with pytest.raises(ParseError):
        parse_aligned_words("A * 0.10 word\n")
    with pytest.raises(ParseError):
        parse_aligned_words("A 1.00\n")


def test_aligned_words_format_round_trip(word_tokens):
    again = parse_aligned_words(format_aligned_words(word_tokens))
    assert [(t.channel, t.text, t.start_cs, t.duration_cs) for t in again] == \
        [(t.channel, t.text, t.start_cs, t.duration_cs) for t in word_tokens]


def test_word_graph_structure(word_tokens):
    graph = tokens_to_graph(word_tokens, "sw2005")
    assert validate(graph) == []
    words = graph.arcs_of_type(WORD_TYPE)
    assert len(words) == 71
    metric = next(a for a in words if a.label == "Metric")
    system = next(a for a in words if a.label == "system,")
    # 首尾相接的词共享节点
    assert metric.to_node == system.from_node
    assert graph.offset(metric.from_node) == 2186
    laughter = next(a for a in words if a.label == "[laughter].")
    assert laughter.attributes["timed"] == "no"
    assert graph.offset(laughter.to_node) is None


def test_untimed_run_links_to_next_timed_token():
    tokens = parse_aligned_words("A 1.00 0.50 one\nA * * [noise]\nA 2.00 0.50 two\n")
    graph = tokens_to_graph(tokens, "t")
    noise = next(a for a in graph.arcs() if a.label == "[noise]")
    two = next(a for a in graph.arcs() if a.label == "two")
    assert noise.to_node == two.from_node
    assert graph.offset(noise.from_node) == 150


def test_word_graph_rejects_time_reversal():
    tokens = parse_aligned_words("A 2.00 0.50 one\nA 1.00 0.50 two\n")
    with pytest.raises(TimeOrderError):
        tokens_to_graph(tokens, "t")


def test_graph_to_tokens_restores_stream(word_tokens):
    restored = graph_to_tokens(tokens_to_graph(word_tokens, "sw2005"))
    assert format_aligned_words(restored) == format_aligned_words(word_tokens)


# ----------------------------------------------------------------------
# 词性
# ----------------------------------------------------------------------

def test_pos_turns(pos_text):
    turns = parse_pos(pos_text, "sw2005.pos")
    assert [t.speaker_code for t in turns] == ["SpeakerB22", "SpeakerA23", "SpeakerB24", "SpeakerA25"]
    assert turns[0].channel == "B"
    first = turns[0]
    assert [t.source_text for t in first.tokens[:3]] == ["Yeah/UH", ",/,", "no/DT"]
    assert len(first.chunks()) == 8
    assert [t.word for t in turns[1].chunks()[5]] == ["measurement", "systems"]


def test_pos_errors():
    header = "====================\n[ SpeakerA1/SYM ]\n./.\n====================\n"
    with pytest.raises(ParseError) as info:
        parse_pos(header + "[ the/DT dog/NN\n", "x.pos")
    assert info.value.line == 5
    with pytest.raises(ParseError):
        parse_pos(header + "word\n")
    with pytest.raises(ParseError):
        parse_pos("hello/UH\n")


def test_pos_format_round_trip(pos_text):
    turns = parse_pos(pos_text)
    assert [t.source_text for turn in parse_pos(format_pos(turns)) for t in turn.tokens] == \
        [t.source_text for turn in turns for t in turn.tokens]


# ----------------------------------------------------------------------
# 不流利标注
# ----------------------------------------------------------------------

def test_disfluency_turns(disfluency_text):
    turns = parse_disfluency(disfluency_text, "sw2005.dis")
    assert [t.header for t in turns] == ["B.22:", "A.23:", "B.24:", "A.25:"]
    restart = next(e for e in turns[0].elements if e.kind == ElementKind.RESTART)
    assert [leaf.text for c in restart.reparandum for leaf in c.leaves()] == ["no", "one's", "very,"]
    assert restart.repair[0].kind == ElementKind.FILLER_F
    nested = next(e for e in turns[1].elements if e.kind == ElementKind.RESTART)
    assert nested.reparandum[0].kind == ElementKind.RESTART
    assert [leaf.text for leaf in nested.repair[0].leaves()] == ["the"]
    nonspeech = [leaf.text for leaf in turns[2].leaves() if leaf.kind == ElementKind.NONSPEECH]
    assert nonspeech == ["laughter"]


def test_disfluency_errors():
    with pytest.raises(ParseError) as info:
        parse_disfluency("A.1:   [ we went ] /\n", "x.dis")
    assert (info.value.line, info.value.column) == (1, 8)
    with pytest.raises(ParseError):
        parse_disfluency("A.1:   [ a + b + c ] /\n")
    with pytest.raises(ParseError):
        parse_disfluency("A.1:   {F uh, /\n")
    with pytest.raises(ParseError):
        parse_disfluency("A.2:   a /\nB.1:   b /\n")


def test_disfluency_format_round_trip(disfluency_text):
    turns = parse_disfluency(disfluency_text)
    again = parse_disfluency(format_disfluency(turns))
    assert surface_words_disfluency(again) == surface_words_disfluency(turns)
    assert format_disfluency(again) == format_disfluency(turns)


# ----------------------------------------------------------------------
# Treebank
# ----------------------------------------------------------------------

def test_treebank_trees(treebank_text):
    trees = parse_treebank(treebank_text, "sw2005.mrg")
    assert len(trees) == 10
    assert all(tree.wrapped for tree in trees)
    assert [tree.label for tree in trees[:4]] == ["CODE", "INTJ", "S", "S"]
    kinds = {leaf.leaf_text: leaf.leaf_kind for leaf in trees[2].leaves()}
    assert kinds["*-1"] == LeafKind.TRACE
    assert kinds["E_S"] == LeafKind.BOUNDARY
    assert kinds["adopting"] == LeafKind.SURFACE
    assert all(leaf.leaf_kind == LeafKind.CODE for leaf in trees[0].leaves())
    assert all(edit_marker_problems(tree) == [] for tree in trees)


def test_treebank_errors():
    with pytest.raises(ParseError) as info:
        parse_treebank("((S (NP a)\n", "x.mrg")
    assert (info.value.line, info.value.column) == (1, 2)
    with pytest.raises(ParseError):
        parse_treebank("((S a) extra)")
    with pytest.raises(ParseError):
        parse_treebank("word")


def test_edit_marker_problems_detects_missing_ip():
    tree = parse_treebank("((S (EDITED (RM [) (NP the)) (NP the) (RS ])))")[0]
    assert any("IP" in problem for problem in edit_marker_problems(tree))


def test_treebank_format_round_trip(treebank_text):
    trees = parse_treebank(treebank_text)
    assert [t.linearize() for t in parse_treebank(format_treebank(trees))] == [t.linearize() for t in trees]


# ----------------------------------------------------------------------
# 跨标注流
# ----------------------------------------------------------------------

def test_four_streams_agree_lexically(word_tokens, pos_text, disfluency_text, treebank_text):
    report = lexical_agreement({
        "aligned-words": surface_words_aligned(word_tokens),
        "pos": surface_words_pos(parse_pos(pos_text)),
        "disfluency": surface_words_disfluency(parse_disfluency(disfluency_text)),
        "treebank": surface_words_treebank(parse_treebank(treebank_text)),
    }, NormPolicy())
    assert report.agrees, report.describe()
    assert len(report.pieces["treebank"]) == len(report.pieces["aligned-words"]) == 71


def test_agreement_reports_first_mismatch():
    report = lexical_agreement({"a": ["no", "one's"], "b": ["no", "ones"]})
    assert not report.agrees
    assert report.mismatch_index == 1
    assert report.mismatch == {"a": "one", "b": "ones"}


def test_stream_graphs_are_valid_and_unanchored(stream_graphs):
    for graph, arc_type in zip(stream_graphs, (POS_TYPE, DISFLUENCY_TYPE, TREEBANK_TYPE)):
        assert validate(graph) == []
        assert all(node.anchor is None for node in graph.nodes())
        assert {arc.arc_type for arc in graph.arcs()} == {arc_type}


def test_span_arcs_cover_their_tokens():
    graph = treebank_to_graph(parse_treebank("((S (NP-SBJ no one) (VP seems)))"), "t")
    spans = {a.label: a for a in graph.arcs() if a.attributes["role"] == "span"}
    tokens = [a for a in graph.arcs() if a.attributes["role"] == "token"]
    assert spans["S"].from_node == tokens[0].from_node
    assert spans["S"].to_node == tokens[-1].to_node
    assert spans["NP-SBJ"].to_node == tokens[1].to_node
    assert spans["S"].attributes["depth"] == "0"
