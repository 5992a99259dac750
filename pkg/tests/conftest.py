"""
测试共用的夹具：四种格式的总机对话样例、已整合的图、固定时钟和随机图生成器
"""

import random
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import pytest

from src.graph.annotation_graph import AnnotationGraph
from src.graph.models import TimeAnchor
from src.integrator.anchoring import anchor_by_alignment
from src.integrator.integration import integrate
from src.parsers.aligned_words import parse_aligned_words
from src.parsers.disfluency import parse_disfluency
from src.parsers.graph_builders import disfluency_to_graph, pos_to_graph, tokens_to_graph, treebank_to_graph
from src.parsers.pos_tags import parse_pos
from src.parsers.treebank import parse_treebank

FIXTURES = Path(__file__).parent / "fixtures"
TIMELINE = "sw2005"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def read_fixture(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def words_text() -> str:
    return read_fixture("sw2005.words")


@pytest.fixture(scope="session")
def pos_text() -> str:
    return read_fixture("sw2005.pos")


@pytest.fixture(scope="session")
def disfluency_text() -> str:
    return read_fixture("sw2005.dis")


@pytest.fixture(scope="session")
def treebank_text() -> str:
    return read_fixture("sw2005.mrg")


@pytest.fixture(scope="session")
def word_tokens(words_text):
    return parse_aligned_words(words_text, "sw2005.words")


@pytest.fixture
def word_graph(word_tokens) -> AnnotationGraph:
    return tokens_to_graph(word_tokens, TIMELINE)


@pytest.fixture
def stream_graphs(pos_text, disfluency_text, treebank_text):
    """三个无时间的标注流图"""
    return [
        pos_to_graph(parse_pos(pos_text, "sw2005.pos"), TIMELINE),
        disfluency_to_graph(parse_disfluency(disfluency_text, "sw2005.dis"), TIMELINE),
        treebank_to_graph(parse_treebank(treebank_text, "sw2005.mrg"), TIMELINE),
    ]


@pytest.fixture
def anchored_graphs(word_graph, stream_graphs):
    return [word_graph] + [anchor_by_alignment(word_graph, stream) for stream in stream_graphs]


@pytest.fixture
def integrated_graph(anchored_graphs) -> AnnotationGraph:
    return integrate(anchored_graphs)


@pytest.fixture
def fixed_clock() -> Callable[[], datetime]:
    moment = datetime(1998, 3, 2, 9, 0, tzinfo=timezone.utc)
    return lambda: moment


LABELS = ["uh", "the", "one's", "<laughter>", "a & b", 'say "hi"', "系统", "NP-chunk", "x"]
TYPES = ["W/", "Pos/", "DISF/", "T/"]


def build_random_graph(rng: random.Random, max_arcs: int = 200, timeline: str = "rand",
                       unanchored_share: float = 0.3, channels: Optional[list] = None) -> AnnotationGraph:
    """
    随机生成合法的图

    节点按一个随机拓扑序排列，锚定节点的偏移沿该顺序不减，弧只从前面的节点连到后面的节点
    """
    graph = AnnotationGraph(timeline)
    node_count = rng.randint(2, 40)
    offset = rng.randint(0, 100)
    nodes = []
    for index in range(node_count):
        if index == 0 or rng.random() >= unanchored_share:
            offset += rng.choice([0, 0, 1, 5, 17, 120])
            nodes.append(graph.add_node(TimeAnchor(offset=offset)))
        else:
            nodes.append(graph.add_node(None))
    for _ in range(rng.randint(1, max_arcs)):
        i = rng.randrange(node_count - 1)
        j = rng.randrange(i + 1, node_count)
        attributes = {"seq": str(graph.arc_count)}
        if channels:
            attributes["channel"] = rng.choice(channels)
        if rng.random() < 0.3:
            attributes["note"] = rng.choice(LABELS)
        graph.add_arc(nodes[i], nodes[j], rng.choice(TYPES), rng.choice(LABELS),
                      rng.choice(["aligned-words", "pos", "treebank"]), attributes)
    return graph


@pytest.fixture
def random_graph() -> Callable[..., AnnotationGraph]:
    return build_random_graph
