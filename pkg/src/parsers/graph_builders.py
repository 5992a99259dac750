"""
把解析后的标注流提升为标注图片段

对齐词流按声道建立带时间锚点的链；词性、不流利和句法流没有时间，
各自建立一条未锚定节点的链，跨度类标注（名词块、重启、成分）作为并行弧。
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from src.graph.annotation_graph import AnnotationGraph
from src.graph.models import DISFLUENCY_TYPE, POS_TYPE, TREEBANK_TYPE, WORD_TYPE, TimeAnchor, format_seconds
from src.parsers.aligned_words import Channel, Token
from src.parsers.disfluency import DisfluencyElement, DisfluencyTurn, ElementKind
from src.parsers.pos_tags import PosTurn
from src.parsers.treebank import LeafKind, ParseTree
from src.utils.errors import TimeOrderError

logger = logging.getLogger(__name__)

WORDS_PROVENANCE = "aligned-words"
POS_PROVENANCE = "pos"
DISFLUENCY_PROVENANCE = "disfluency"
TREEBANK_PROVENANCE = "treebank"

ROLE_TOKEN = "token"
ROLE_SPAN = "span"
CHUNK_LABEL = "NP-chunk"
RESTART_LABEL = "restart"

SPAN_LABELS = {
    ElementKind.RESTART: RESTART_LABEL,
    ElementKind.FILLER_F: "F",
    ElementKind.COORD_C: "C",
}


def _yes_no(flag: bool) -> str:
    return "yes" if flag else "no"


def tokens_to_graph(tokens: Sequence[Token], timeline_id: str,
                    provenance: str = WORDS_PROVENANCE) -> AnnotationGraph:
    """
    对齐词流转为 `W/` 弧构成的图

    每个声道一条链；前一个词的结束时间等于下一个词的开始时间时共享节点，
    否则用两个不同的锚定节点表示间隔。无时间的 `*` 词在时间邻居之间串成链：
    从前一个锚定节点出发，连到下一个有时间的词的起点；后面没有有时间的词时
    终止于未锚定节点。

    Args:
        tokens: 源顺序的词
        timeline_id: 时间线ID
        provenance: 来源标注流名称

    Returns:
        AnnotationGraph: 图

    Raises:
        TimeOrderError: 同一声道内的时间倒退
    """
    graph = AnnotationGraph(timeline_id)
    cursors: Dict[str, Optional[str]] = {}
    pending: Dict[str, List[Tuple[int, Token]]] = {}

    def add_word(seq: int, token: Token, from_node: str, to_node: str):
        graph.add_arc(from_node, to_node, WORD_TYPE, token.text, provenance,
                      {"channel": token.channel.value, "seq": str(seq), "line": str(token.line or ""),
                       "timed": _yes_no(token.timed)})

    def flush(channel: str, end_node: Optional[str]) -> Optional[str]:
        run = pending.pop(channel, [])
        current = cursors.get(channel)
        if not run:
            return current
        if current is None:
            current = graph.add_node(None)
        for position, (seq, token) in enumerate(run):
            last = position == len(run) - 1
            target = end_node if last and end_node is not None else graph.add_node(None)
            add_word(seq, token, current, target)
            current = target
        return current

    for seq, token in enumerate(tokens):
        channel = token.channel.value
        if not token.timed:
            pending.setdefault(channel, []).append((seq, token))
            continue
        cursor = cursors.get(channel)
        cursor_offset = graph.offset(cursor) if cursor is not None else None
        if cursor_offset is not None and token.start_cs < cursor_offset:
            raise TimeOrderError(
                f"声道 {channel} 第{token.line}行时间倒退: {format_seconds(token.start_cs)} < "
                f"{format_seconds(cursor_offset)}")
        if channel in pending:
            start = graph.add_node(TimeAnchor(offset=token.start_cs))
            flush(channel, start)
        elif cursor is not None and cursor_offset == token.start_cs:
            start = cursor
        else:
            start = graph.add_node(TimeAnchor(offset=token.start_cs))
        end = graph.add_node(TimeAnchor(offset=token.end_cs))
        add_word(seq, token, start, end)
        cursors[channel] = end

    for channel in sorted(pending):
        cursors[channel] = flush(channel, None)
    logger.debug(f"对齐词图 {timeline_id}: {graph.node_count} 节点 / {graph.arc_count} 弧")
    return graph


def graph_to_tokens(graph: AnnotationGraph) -> List[Token]:
    """把图中的 `W/` 弧还原为对齐词流，按 seq 属性排序；两端都锚定的词恢复时间"""
    words = sorted(graph.arcs_of_type(WORD_TYPE),
                   key=lambda arc: (int(arc.attributes.get("seq", "0") or 0), arc.id))
    tokens: List[Token] = []
    for arc in words:
        start, end = graph.offset(arc.from_node), graph.offset(arc.to_node)
        timed = arc.attributes.get("timed", "yes") == "yes" and start is not None and end is not None
        tokens.append(Token(
            channel=Channel(arc.attributes.get("channel", Channel.A.value)),
            text=arc.label,
            start_cs=start if timed else None,
            duration_cs=end - start if timed else None,
        ))
    return tokens


class _Chain:
    """在一条未锚定节点链上依次追加词弧，并记录跨度弧"""

    def __init__(self, graph: AnnotationGraph, arc_type: str, provenance: str):
        self.graph = graph
        self.arc_type = arc_type
        self.provenance = provenance
        self.cursor: Optional[str] = None
        self.seq = 0

    def token(self, label: str, surface: bool, **attributes: str) -> Tuple[str, str]:
        if self.cursor is None:
            self.cursor = self.graph.add_node(None)
        start, end = self.cursor, self.graph.add_node(None)
        attrs = {"role": ROLE_TOKEN, "surface": _yes_no(surface), "seq": str(self.seq)}
        attrs.update(attributes)
        self.graph.add_arc(start, end, self.arc_type, label, self.provenance, attrs)
        self.seq += 1
        self.cursor = end
        return start, end

    def span(self, start: str, end: str, label: str, **attributes: str) -> str:
        attrs = {"role": ROLE_SPAN}
        attrs.update(attributes)
        return self.graph.add_arc(start, end, self.arc_type, label, self.provenance, attrs)

    def empty_span(self, label: str, **attributes: str) -> Tuple[str, str]:
        """没有词的跨度作为链上的一步"""
        if self.cursor is None:
            self.cursor = self.graph.add_node(None)
        start, end = self.cursor, self.graph.add_node(None)
        self.span(start, end, label, **attributes)
        self.cursor = end
        return start, end


def pos_to_graph(turns: Sequence[PosTurn], timeline_id: str, provenance: str = POS_PROVENANCE) -> AnnotationGraph:
    """词性流转为 `Pos/` 弧：每个词一条 "word/TAG" 弧，每个名词块一条 "NP-chunk" 跨度弧"""
    graph = AnnotationGraph(timeline_id)
    chain = _Chain(graph, POS_TYPE, provenance)
    for turn in turns:
        for token in turn.header_tokens:
            chain.token(token.source_text, False, speaker=turn.speaker_code, part="header")
        chunks: Dict[int, List[str]] = {}
        for token in turn.tokens:
            start, end = chain.token(token.source_text, not token.is_punctuation,
                                     speaker=turn.speaker_code, part="body")
            if token.chunk_index is not None:
                bounds = chunks.setdefault(token.chunk_index, [start, end])
                bounds[1] = end
        for index in sorted(chunks):
            start, end = chunks[index]
            chain.span(start, end, CHUNK_LABEL, speaker=turn.speaker_code, chunk=str(index))
    logger.debug(f"词性图 {timeline_id}: {graph.node_count} 节点 / {graph.arc_count} 弧")
    return graph


def _disfluency_label(element: DisfluencyElement) -> str:
    return SPAN_LABELS.get(element.kind, element.code or element.kind.value)


def _leaf_label(element: DisfluencyElement) -> str:
    if element.kind == ElementKind.NONSPEECH:
        return f"<{element.text}>"
    return element.text


def disfluency_to_graph(turns: Sequence[DisfluencyTurn], timeline_id: str,
                        provenance: str = DISFLUENCY_PROVENANCE) -> AnnotationGraph:
    """
    不流利流转为 `DISF/` 弧

    每个词、非语音事件、句段结束符和中断点各一条词弧；
    每个重启、填充停顿、连接词及其他大括号元素一条跨度弧
    """
    graph = AnnotationGraph(timeline_id)
    chain = _Chain(graph, DISFLUENCY_TYPE, provenance)

    def walk(element: DisfluencyElement, speaker: str) -> Optional[Tuple[str, str]]:
        if element.kind in (ElementKind.WORD, ElementKind.NONSPEECH, ElementKind.SENT_BOUNDARY):
            surface = element.kind == ElementKind.WORD and any(ch.isalnum() for ch in element.text)
            return chain.token(_leaf_label(element), surface, kind=element.kind.value, speaker=speaker)
        first: Optional[str] = None
        last: Optional[str] = None
        for index, child in enumerate(element.children):
            if element.kind == ElementKind.RESTART and index == element.ip_index:
                start, last = chain.token("+", False, kind="IP", speaker=speaker)
                first = first or start
            bounds = walk(child, speaker)
            if bounds is not None:
                first = first or bounds[0]
                last = bounds[1]
        if element.kind == ElementKind.RESTART and element.ip_index == len(element.children):
            start, last = chain.token("+", False, kind="IP", speaker=speaker)
            first = first or start
        label = _disfluency_label(element)
        if first is None:
            return chain.empty_span(label, kind=element.kind.value, speaker=speaker)
        chain.span(first, last, label, kind=element.kind.value, speaker=speaker)
        return first, last

    for turn in turns:
        for element in turn.elements:
            walk(element, turn.header)
    logger.debug(f"不流利图 {timeline_id}: {graph.node_count} 节点 / {graph.arc_count} 弧")
    return graph


def treebank_to_graph(trees: Sequence[ParseTree], timeline_id: str,
                      provenance: str = TREEBANK_PROVENANCE) -> AnnotationGraph:
    """句法流转为 `T/` 弧：叶子为词弧，每个内部节点一条以成分标签命名的跨度弧"""
    graph = AnnotationGraph(timeline_id)
    chain = _Chain(graph, TREEBANK_TYPE, provenance)

    def walk(tree: ParseTree, depth: int) -> Tuple[str, str]:
        if tree.is_leaf:
            kind = tree.leaf_kind or LeafKind.SURFACE
            return chain.token(tree.leaf_text, kind == LeafKind.SURFACE, leaf_kind=kind.value)
        bounds = [walk(child, depth + 1) for child in tree.children]
        first, last = bounds[0][0], bounds[-1][1]
        chain.span(first, last, tree.label, depth=str(depth))
        return first, last

    for tree in trees:
        walk(tree, 0)
    logger.debug(f"句法图 {timeline_id}: {graph.node_count} 节点 / {graph.arc_count} 弧")
    return graph
