#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
标注图工具包命令行入口

    python -m src.app.main_cli parse --format aligned-words sw2005.words -o sw2005.words.xml
    python -m src.app.main_cli merge *.xml -o sw2005.xml
    python -m src.app.main_cli score --ref a.txt --hyp b.txt --segments
    python -m src.app.main_cli repair sw2005.xml fixes.tsv -o fixed.xml --impact impact.jsonl
    python -m src.app.main_cli query sw2005.xml 21.86 26.10 --type W/
    python -m src.app.main_cli export sw2005.xml --format words
    python -m src.app.main_cli catalog tdt.ledger register ABC 1998-03-01 18:30 30

退出码：0 成功，1 数据错误，2 用法错误。诊断信息写到标准错误。
"""

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import date as Date
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

# 将项目根目录添加到Python路径
ROOT_DIR = Path(__file__).parent.parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.append(str(ROOT_DIR))

from pydantic import ValidationError

from src.aligner.alignment import AlignCosts, FragmentMode, align
from src.aligner.normalizer import NormPolicy
from src.aligner.report_templates import render_table, report_records
from src.aligner.scoring import error_class_breakdown, score, segment_score
from src.aligner.segments import segments_from_lines, segments_from_turns
from src.catalog.catalog_manager import CatalogManager, diff, export_snapshot, import_snapshot
from src.catalog.models import SourceKind
from src.config.app_config import AppConfig, app_config
from src.graph.annotation_graph import AnnotationGraph
from src.graph.models import WORD_TYPE, format_seconds
from src.graph.queries import arcs_in_interval, node_brackets
from src.integrator.anchoring import anchor_by_alignment
from src.integrator.integration import integrate
from src.integrator.repair import apply_repairs
from src.integrator.repair_ledger import parse_repair_ledger
from src.log.logger import get_app_logger
from src.parsers.aligned_words import format_aligned_words, parse_aligned_words
from src.parsers.disfluency import parse_disfluency
from src.parsers.graph_builders import (
    disfluency_to_graph,
    graph_to_tokens,
    pos_to_graph,
    tokens_to_graph,
    treebank_to_graph,
)
from src.parsers.pos_tags import parse_pos
from src.parsers.treebank import parse_treebank
from src.utils.errors import AnnotationToolkitError, InvalidArgumentError
from src.utils.file_utils import read_bytes_file, read_text_file, write_output
from src.utils.json_parser import to_json_lines
from src.xml_io.graph_xml import read_xml, write_xml

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE_ERROR = 2

# 格式名 -> (解析函数, 建图函数)
FORMATS: Dict[str, Tuple[Callable, Callable]] = {
    "aligned-words": (parse_aligned_words, tokens_to_graph),
    "pos": (parse_pos, pos_to_graph),
    "disfluency": (parse_disfluency, disfluency_to_graph),
    "treebank": (parse_treebank, treebank_to_graph),
}


def parse_file(path: str, format_name: str, timeline_id: Optional[str] = None) -> AnnotationGraph:
    """解析一个标注文件并建图；时间线ID缺省为文件名去掉扩展名"""
    parser, builder = FORMATS[format_name]
    parsed = parser(read_text_file(path), path)
    graph = builder(parsed, timeline_id or Path(path).stem)
    logger.info(f"解析 {path} ({format_name}): {graph.arc_count} 条弧")
    return graph


def _parse_job(job: Tuple[str, str, Optional[str]]) -> bytes:
    path, format_name, timeline_id = job
    return write_xml(parse_file(path, format_name, timeline_id))


def _run_jobs(function: Callable, jobs: Sequence, workers: int) -> List:
    """按输入顺序返回结果；workers 为1时不启动子进程"""
    if workers <= 1 or len(jobs) <= 1:
        return [function(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, jobs))


def load_graph(path: str) -> AnnotationGraph:
    return read_xml(read_bytes_file(path), path)


# ----------------------------------------------------------------------
# 子命令
# ----------------------------------------------------------------------

def cmd_parse(args: argparse.Namespace, config: AppConfig) -> int:
    if len(args.inputs) > 1 and args.output:
        raise InvalidArgumentError("多个输入时请用 --out-dir 指定输出目录")
    jobs = [(path, args.format, args.timeline) for path in args.inputs]
    outputs = _run_jobs(_parse_job, jobs, config.jobs)
    for path, data in zip(args.inputs, outputs):
        if args.out_dir:
            write_output(data, Path(args.out_dir) / f"{Path(path).name}.xml")
        else:
            write_output(data, args.output)
    return EXIT_OK


def _anchor_streams(graphs: List[AnnotationGraph], config: AppConfig) -> List[AnnotationGraph]:
    timed = [g for g in graphs if g.arcs_of_type(WORD_TYPE)]
    streams = [g for g in graphs if g.arc_count and all(n.anchor is None for n in g.nodes())]
    if not timed or not streams:
        return graphs
    reference = integrate(timed, config.merge_tolerance)
    anchored = [anchor_by_alignment(reference, stream, config.norm, config.costs, config.min_match_rate)
                for stream in streams]
    stream_ids = {id(stream) for stream in streams}
    return [g for g in graphs if id(g) not in stream_ids] + anchored


def cmd_merge(args: argparse.Namespace, config: AppConfig) -> int:
    graphs = [load_graph(path) for path in args.inputs]
    if not args.no_anchor:
        graphs = _anchor_streams(graphs, config)
    merged = integrate(graphs, config.merge_tolerance)
    write_output(write_xml(merged), args.output)
    return EXIT_OK


def _read_tokens(path: str, format_name: str) -> Tuple[List[str], List[List[str]], list]:
    """返回 (词列表, 按行分组的词, 对齐词)；文本格式下 tokens 为空"""
    text = read_text_file(path)
    if format_name == "aligned-words":
        tokens = parse_aligned_words(text, path)
        return [t.text for t in tokens], [], tokens
    lines = [line.split() for line in text.splitlines()]
    return [word for words in lines for word in words], lines, []


def _score_job(job: Tuple[str, str, str, bool, AlignCosts, NormPolicy, FragmentMode]):
    ref_path, hyp_path, format_name, with_segments, costs, policy, fragment_mode = job
    ref_words, ref_lines, ref_tokens = _read_tokens(ref_path, format_name)
    hyp_words, _, _ = _read_tokens(hyp_path, format_name)
    script = align(ref_words, hyp_words, costs, policy, fragment_mode)
    phrases = None
    if with_segments:
        segments = segments_from_turns(ref_tokens) if ref_tokens else segments_from_lines(ref_lines)
        phrases = segment_score(segments, script)
    return script, phrases, error_class_breakdown(ref_words, hyp_words, script, policy)


def cmd_score(args: argparse.Namespace, config: AppConfig) -> int:
    if len(args.ref) != len(args.hyp):
        raise InvalidArgumentError(f"参考文件 {len(args.ref)} 个，假设文件 {len(args.hyp)} 个，数量必须相同")
    file_ids = [Path(path).stem for path in args.ref]
    if len(set(file_ids)) != len(file_ids):
        raise InvalidArgumentError("参考文件名（去掉扩展名）必须互不相同")
    jobs = [(ref, hyp, args.format, args.segments, config.costs, config.norm, config.fragment_mode)
            for ref, hyp in zip(args.ref, args.hyp)]
    results = _run_jobs(_score_job, jobs, config.jobs)
    scripts = {file_id: result[0] for file_id, result in zip(file_ids, results)}
    phrases = {file_id: result[1] for file_id, result in zip(file_ids, results) if result[1] is not None}
    breakdowns = {file_id: result[2] for file_id, result in zip(file_ids, results)}
    report = score(scripts, phrases or None, args.exclude or (), breakdowns)
    write_output(render_table(report))
    if args.records:
        write_output(to_json_lines(report_records(report)), args.records)
    return EXIT_OK


def cmd_repair(args: argparse.Namespace, config: AppConfig) -> int:
    graph = load_graph(args.graph)
    repairs = parse_repair_ledger(read_text_file(args.ledger), args.ledger)
    repaired, reports = apply_repairs(graph, repairs)
    write_output(write_xml(repaired), args.output)
    records = [record for report in reports for record in report.records()]
    if args.impact:
        write_output(to_json_lines(records), args.impact)
    logger.info(f"施加 {len(repairs)} 个修复，影响 {sum(r.count for r in reports)} 条弧")
    return EXIT_OK


def _format_bound(value: float) -> str:
    return "-" if math.isinf(value) else format_seconds(int(value))


def cmd_query(args: argparse.Namespace, config: AppConfig) -> int:
    graph = load_graph(args.graph)
    arcs = arcs_in_interval(graph, args.t0, args.t1, args.type)
    brackets = node_brackets(graph)
    lines = []
    for arc in arcs:
        lines.append("\t".join([arc.id, arc.arc_type, arc.label, arc.provenance,
                                _format_bound(brackets[arc.from_node][0]),
                                _format_bound(brackets[arc.to_node][1])]))
    write_output("\n".join(lines) + ("\n" if lines else ""), args.output)
    return EXIT_OK


def cmd_export(args: argparse.Namespace, config: AppConfig) -> int:
    graph = load_graph(args.graph)
    if args.format == "words":
        write_output(format_aligned_words(graph_to_tokens(graph)), args.output)
        return EXIT_OK
    brackets = node_brackets(graph)
    lines = []
    for arc in sorted(graph.arcs(), key=lambda a: (brackets[a.from_node][0], a.arc_type, a.label, a.id)):
        if args.layer and arc.arc_type != args.layer:
            continue
        features = ";".join(f"{k}={v}" for k, v in sorted(arc.attributes.items()))
        lines.append("\t".join([arc.id, arc.arc_type, arc.label, arc.provenance,
                                _format_bound(brackets[arc.from_node][0]),
                                _format_bound(brackets[arc.to_node][1]), features]))
    write_output("\n".join(lines) + ("\n" if lines else ""), args.output)
    return EXIT_OK


def cmd_catalog(args: argparse.Namespace, config: AppConfig) -> int:
    manager = CatalogManager.open(args.ledger)
    action = args.action
    if action == "register":
        kind = SourceKind.NEWSWIRE if args.newswire else SourceKind.BROADCAST
        entry = manager.register_recording(args.source, Date.fromisoformat(args.date), args.start,
                                           args.duration, kind)
        write_output(f"{entry.key}\t{entry.stage.value}\n")
    elif action == "advance":
        entry = manager.advance_stage(args.file, args.stage.upper())
        write_output(f"{entry.key}\t{entry.stage.value}\n")
    elif action == "segment":
        units = manager.segment_file(args.file, args.boundaries)
        write_output("".join(f"{u.story_id}\t{u.offset}\t{u.end_offset}\t{u.kind.value}\n" for u in units))
    elif action == "flaw":
        report = manager.report_flaw(args.story, args.flaw, args.reporter)
        write_output(f"{report.story_id}\t{report.flaw_type.value}\n")
    elif action == "annotate":
        annotation = manager.add_annotation(args.id, args.kind, args.stories)
        write_output(f"{annotation.id}\t{annotation.status.value}\n")
    elif action == "reseg":
        report = manager.apply_resegmentation(args.file, args.boundaries)
        write_output(f"removed={len(report.removed_ids)}\tadded={len(report.added_ids)}\t"
                     f"changed={len(report.changed_ids)}\tinvalidated={len(report.invalidated)}\t"
                     f"rate={report.rate:.2%}\n")
    elif action == "snapshot":
        write_output(export_snapshot(manager.snapshot()), args.output)
    elif action == "check":
        snapshot = import_snapshot(read_text_file(args.snapshot), args.snapshot) if args.snapshot else None
        report = manager.check(snapshot)
        lines = [f"total={report.total}\tinvalidated={report.invalidated}\trate={report.rate:.2%}\t"
                 f"dangling_valid={len(report.dangling_valid)}"]
        if snapshot is not None:
            lines.append(f"diverged_stories={len(diff(snapshot, manager))}")
        write_output("\n".join(lines) + "\n")
        # 快照检查中的悬空标注是预期的报告内容，只有现行目录不一致才算失败
        if snapshot is None and not report.consistent:
            return EXIT_DATA_ERROR
    return EXIT_OK


# ----------------------------------------------------------------------
# 参数解析
# ----------------------------------------------------------------------

def _add_output(parser: argparse.ArgumentParser):
    parser.add_argument("-o", "--output", help="输出文件，缺省或 '-' 为标准输出")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annotation-graph",
        description="多层语料标注的标注图工具：解析、整合、评分、修复与语料目录",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--config", help="KEY=VALUE 配置文件，优先于环境变量")
    parser.add_argument("--log-level", help="日志级别，覆盖 LOG_LEVEL")
    parser.add_argument("--log-file", help="日志文件名，覆盖 LOG_FILE")
    parser.add_argument("--jobs", type=int, help="并行处理的文件数，覆盖 JOBS")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="解析标注文件为图 XML")
    p.add_argument("--format", required=True, choices=sorted(FORMATS))
    p.add_argument("--timeline", help="时间线ID，缺省为文件名")
    p.add_argument("--out-dir", help="多个输入时的输出目录")
    p.add_argument("inputs", nargs="+")
    _add_output(p)
    p.set_defaults(handler=cmd_parse)

    p = sub.add_parser("merge", help="锚定并整合多张图")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--tolerance", help="锚点统一容差（秒），覆盖 MERGE_TOLERANCE")
    p.add_argument("--min-match-rate", type=float, help="锚定的最低匹配率，覆盖 MIN_MATCH_RATE")
    p.add_argument("--no-anchor", action="store_true", help="不对未锚定的标注流做对齐锚定")
    _add_output(p)
    p.set_defaults(handler=cmd_merge)

    p = sub.add_parser("score", help="词错误统计")
    p.add_argument("--ref", nargs="+", required=True)
    p.add_argument("--hyp", nargs="+", required=True)
    p.add_argument("--format", choices=["text", "aligned-words"], default="text")
    p.add_argument("--segments", action="store_true",
                   help="按短语统计：文本格式每行一个短语，对齐词格式按说话人轮次")
    p.add_argument("--exclude", nargs="*", help="不参与统计的文件ID")
    p.add_argument("--fragment-mode", choices=[m.value for m in FragmentMode])
    p.add_argument("--records", help="JSON 行格式的逐文件记录输出文件")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("repair", help="按修复清单修复图")
    p.add_argument("graph")
    p.add_argument("ledger")
    p.add_argument("--impact", help="JSON 行格式的影响报告输出文件")
    _add_output(p)
    p.set_defaults(handler=cmd_repair)

    p = sub.add_parser("query", help="查询时间区间内的弧")
    p.add_argument("graph")
    p.add_argument("t0")
    p.add_argument("t1")
    p.add_argument("--type", help="只返回该命名空间，如 W/")
    _add_output(p)
    p.set_defaults(handler=cmd_query)

    p = sub.add_parser("export", help="导出图的某一层")
    p.add_argument("graph")
    p.add_argument("--format", choices=["words", "table"], default="table")
    p.add_argument("--layer", help="只导出该命名空间（table 格式）")
    _add_output(p)
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("catalog", help="语料目录操作")
    p.add_argument("ledger", help="目录账本文件")
    actions = p.add_subparsers(dest="action", required=True)
    a = actions.add_parser("register")
    a.add_argument("source")
    a.add_argument("date", help="YYYY-MM-DD")
    a.add_argument("start", help="HH:MM")
    a.add_argument("duration", type=int, help="分钟，30 或 60")
    a.add_argument("--newswire", action="store_true")
    a = actions.add_parser("advance")
    a.add_argument("file")
    a.add_argument("stage")
    for name in ("segment", "reseg"):
        a = actions.add_parser(name)
        a.add_argument("file")
        a.add_argument("boundaries", nargs="+", help="OFFSET[:NEWS|NON_NEWS]")
    a = actions.add_parser("flaw")
    a.add_argument("story")
    a.add_argument("flaw")
    a.add_argument("--reporter", default="")
    a = actions.add_parser("annotate")
    a.add_argument("id")
    a.add_argument("kind")
    a.add_argument("stories", nargs="*")
    a = actions.add_parser("snapshot")
    _add_output(a)
    a = actions.add_parser("check")
    a.add_argument("--snapshot", help="检查基于该快照的标注")
    p.set_defaults(handler=cmd_catalog)
    return parser


def load_config(args: argparse.Namespace) -> AppConfig:
    """默认值 < 环境变量 < 配置文件 < 命令行参数"""
    config = AppConfig.from_env(args.config) if args.config else app_config
    update = {}
    if args.log_level:
        update["log_level"] = args.log_level
    if args.log_file:
        update["log_file"] = args.log_file
    if args.jobs is not None:
        update["jobs"] = args.jobs
    if getattr(args, "tolerance", None) is not None:
        update["merge_tolerance"] = args.tolerance
    if getattr(args, "min_match_rate", None) is not None:
        update["min_match_rate"] = args.min_match_rate
    if getattr(args, "fragment_mode", None):
        update["fragment_mode"] = FragmentMode(args.fragment_mode)
    try:
        return AppConfig.model_validate({**config.model_dump(), **update})
    except ValidationError as e:
        raise InvalidArgumentError(f"参数不合法: {str(e)}")


def main(argv: Optional[Iterable[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE_ERROR

    try:
        config = load_config(args)
        get_app_logger(config.log_file, config.log_level, config.log_dir)
        return args.handler(args, config)
    except AnnotationToolkitError as e:
        print(str(e), file=sys.stderr)
        logger.debug("命令失败", exc_info=True)
        return EXIT_DATA_ERROR
    except OSError as e:
        print(f"io-error: {str(e)}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except ValueError as e:
        print(f"invalid-argument: {str(e)}", file=sys.stderr)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
