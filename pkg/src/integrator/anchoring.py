"""
通过对齐把无时间的标注流锚定到时间线上

以带时间的 `W/` 词弧为参考、标注流的表层词为假设做对齐；对齐上的词继承词弧的
起止时间，没对齐上的词串在前后两个对齐上的词之间（没有间隔时挂在链上），
跨度弧取其两端对齐上的叶子的节点。
参考图的锚点不会被改动。
"""

import logging
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from src.aligner.alignment import AlignCosts, OpKind, align
from src.aligner.normalizer import NormPolicy, surface_pieces
from src.graph.annotation_graph import AnnotationGraph, id_sort_key
from src.graph.models import POS_TYPE, WORD_TYPE, Arc, TimeAnchor
from src.graph.queries import validate
from src.parsers.graph_builders import ROLE_TOKEN
from src.utils.errors import (
    AlignmentFailureError,
    CycleError,
    InvalidArgumentError,
    TimelineError,
    TimeOrderError,
    ValidationFailedError,
)

logger = logging.getLogger(__name__)

DEFAULT_MIN_MATCH_RATE = 0.5


class AnchoringResult(BaseModel):
    """锚定结果及对齐统计"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    graph: AnnotationGraph
    match_rate: float
    matched_tokens: int
    unmatched_tokens: int


def _seq(arc: Arc) -> Tuple[int, Tuple]:
    raw = arc.attributes.get("seq", "")
    return (int(raw) if raw.isdigit() else -1), id_sort_key(arc.id)


def _token_word(arc: Arc) -> str:
    if arc.arc_type == POS_TYPE:
        word, slash, _ = arc.label.rpartition("/")
        return word if slash else arc.label
    return arc.label


class _Piece:
    __slots__ = ("owner", "first", "last")

    def __init__(self, owner: int, first: bool, last: bool):
        self.owner = owner
        self.first = first
        self.last = last


def _explode(texts: List[str], policy: NormPolicy) -> Tuple[List[str], List[_Piece]]:
    pieces: List[str] = []
    owners: List[_Piece] = []
    for index, text in enumerate(texts):
        parts = surface_pieces([text], policy)
        for position, part in enumerate(parts):
            pieces.append(part)
            owners.append(_Piece(index, position == 0, position == len(parts) - 1))
    return pieces, owners


def anchor_by_alignment(timed_graph: AnnotationGraph, stream_graph: AnnotationGraph,
                        policy: Optional[NormPolicy] = None, costs: Optional[AlignCosts] = None,
                        min_match_rate: float = DEFAULT_MIN_MATCH_RATE) -> AnnotationGraph:
    """
    把无时间的标注流锚定到带时间的词图上

    Args:
        timed_graph: 含 `W/` 弧的参考图
        stream_graph: 节点全部未锚定的标注流图
        policy: 比较前使用的规范化策略
        costs: 对齐代价
        min_match_rate: 最低匹配率（COR / 标注流片段数）

    Returns:
        AnnotationGraph: 新图，对齐上的节点带有参考时间

    Raises:
        TimelineError: 时间线不一致
        AlignmentFailureError: 匹配率低于阈值，通常是文件配错了
    """
    return anchor_with_report(timed_graph, stream_graph, policy, costs, min_match_rate).graph


def anchor_with_report(timed_graph: AnnotationGraph, stream_graph: AnnotationGraph,
                       policy: Optional[NormPolicy] = None, costs: Optional[AlignCosts] = None,
                       min_match_rate: float = DEFAULT_MIN_MATCH_RATE) -> AnchoringResult:
    if timed_graph.timeline_id != stream_graph.timeline_id:
        raise TimelineError(f"时间线不一致: {timed_graph.timeline_id} != {stream_graph.timeline_id}")
    if any(node.anchor is not None for node in stream_graph.nodes()):
        raise InvalidArgumentError(f"标注流 {stream_graph.timeline_id} 中已有锚定节点")
    if not 0.0 <= min_match_rate <= 1.0:
        raise InvalidArgumentError(f"最低匹配率必须在 [0, 1] 内: {min_match_rate}")
    policy = policy or NormPolicy()

    words = sorted(timed_graph.arcs_of_type(WORD_TYPE), key=_seq)
    tokens = sorted((a for a in stream_graph.arcs() if a.attributes.get("role") == ROLE_TOKEN), key=_seq)
    spans = [a for a in stream_graph.arcs() if a.attributes.get("role") != ROLE_TOKEN]

    ref_pieces, ref_owners = _explode([w.label for w in words], policy)
    surface = [_token_word(t) if t.attributes.get("surface", "yes") == "yes" else "" for t in tokens]
    hyp_pieces, hyp_owners = _explode(surface, policy)

    script = align(ref_pieces, hyp_pieces, costs, policy)
    match_rate = script.correct / len(hyp_pieces) if hyp_pieces else 0.0
    if match_rate < min_match_rate or not hyp_pieces:
        raise AlignmentFailureError(
            f"{stream_graph.streams} 与参考词流的匹配率 {match_rate:.1%} 低于阈值 {min_match_rate:.0%}",
            match_rate)

    # 每个标注流词的起止锚点
    from_anchor: Dict[int, Optional[int]] = {}
    to_anchor: Dict[int, Optional[int]] = {}
    matched = set()
    for op in script.ops:
        if op.kind != OpKind.COR:
            continue
        hyp, ref = hyp_owners[op.hyp_index], ref_owners[op.ref_index]
        word = words[ref.owner]
        matched.add(hyp.owner)
        if hyp.first and ref.first:
            from_anchor[hyp.owner] = timed_graph.offset(word.from_node)
        if hyp.last and ref.last:
            to_anchor[hyp.owner] = timed_graph.offset(word.to_node)

    graph = AnnotationGraph(stream_graph.timeline_id)
    starts: Dict[int, str] = {}
    ends: Dict[int, str] = {}
    chain: Optional[str] = None
    pending: List[int] = []

    def new_node(offset: Optional[int]) -> str:
        return graph.add_node(TimeAnchor(offset=offset) if offset is not None else None)

    def place(index: int, start: str, end: str):
        token = tokens[index]
        try:
            graph.add_arc(start, end, token.arc_type, token.label, token.provenance, token.attributes)
        except (TimeOrderError, CycleError) as e:
            logger.warning(f"词 {token.label!r} 的锚点与链冲突，改为不锚定的起点: {str(e)}")
            start = new_node(None)
            graph.add_arc(start, end, token.arc_type, token.label, token.provenance, token.attributes)
        starts[index], ends[index] = start, end

    def run(indices: List[int], source: str, target: Optional[str]):
        """没对齐上的一串词从 source 串到 target；target 为None时终止于新的未锚定节点"""
        cursor = source
        for position, index in enumerate(indices):
            last = position == len(indices) - 1
            place(index, cursor, target if last and target is not None else new_node(None))
            cursor = ends[index]

    for index, token in enumerate(tokens):
        if index not in matched:
            pending.append(index)
            continue
        begin = from_anchor.get(index)
        if chain is None:
            start = new_node(begin)
            run(pending, new_node(None), start)
        elif begin is None or graph.offset(chain) == begin:
            start = chain
            run(pending, chain, None)
        else:
            # 间隔中的词把前一个词的终点连到这个词的起点
            start = new_node(begin)
            run(pending, chain, start)
        pending = []
        place(index, start, new_node(to_anchor.get(index)))
        chain = ends[index]

    if pending:
        run(pending, chain if chain is not None else new_node(None), None)

    token_from = {t.from_node: i for i, t in enumerate(tokens)}
    token_to = {t.to_node: i for i, t in enumerate(tokens)}
    for span in spans:
        _place_span(graph, span, token_from, token_to, starts, ends, matched)

    violations = validate(graph)
    if violations:
        raise ValidationFailedError(f"锚定后的图不合法: {violations[0]}", violations)
    logger.info(f"锚定 {','.join(stream_graph.streams)}: 匹配率 {match_rate:.1%}，"
                f"对齐上 {len(matched)} / {len(tokens)} 个词")
    return AnchoringResult(graph=graph, match_rate=match_rate, matched_tokens=len(matched),
                           unmatched_tokens=len(tokens) - len(matched))


def _place_span(graph: AnnotationGraph, span: Arc, token_from: Dict[str, int],
                token_to: Dict[str, int], starts: Dict[int, str], ends: Dict[int, str], matched: set):
    first = token_from.get(span.from_node)
    last = token_to.get(span.to_node)
    if first is None or last is None or last < first:
        # 不覆盖任何词的跨度挂在前一个词的终点上
        before = token_to.get(span.from_node)
        anchor_node = ends[before] if before is not None else graph.add_node(None)
        graph.add_arc(anchor_node, graph.add_node(None), span.arc_type, span.label, span.provenance,
                      span.attributes)
        return
    inside = [i for i in range(first, last + 1) if i in matched]
    if inside:
        start, end = starts[inside[0]], ends[inside[-1]]
    else:
        start, end = starts[first], ends[last]
    try:
        graph.add_arc(start, end, span.arc_type, span.label, span.provenance, span.attributes)
    except (TimeOrderError, CycleError, InvalidArgumentError) as e:
        logger.warning(f"跨度 {span.qualified_label} 两端锚点倒置，改为挂在起点的分支: {str(e)}")
        graph.add_arc(start, graph.add_node(None), span.arc_type, span.label, span.provenance,
                      span.attributes)
