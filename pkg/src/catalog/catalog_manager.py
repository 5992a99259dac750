"""
语料目录管理模块

录音条目的生命周期、故事切分、缺陷报告、重新切分导致的下游标注失效，以及快照。
所有修改都先作为事件写入账本再作用到内存状态；重放账本可以得到完全相同的状态。
"""

import logging
import threading
from datetime import date as Date
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from src.catalog.event_ledger import CatalogEvent, Clock, EventKind, EventLedger, parse_events, render_events
from src.catalog.models import (
    AnnotationKind,
    AnnotationStatus,
    Boundary,
    DependentAnnotation,
    FileEntry,
    FlawReport,
    FlawType,
    InvalidationReport,
    ScanReport,
    SourceKind,
    Stage,
    StageChange,
    StoryKind,
    StoryUnit,
)
from src.utils.errors import (
    ConflictError,
    InvalidArgumentError,
    InvalidTransitionError,
    NotFoundError,
    ParseError,
)

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = "#SNAPSHOT"

BoundaryLike = Union[int, str, Tuple[int, Union[StoryKind, str]], Boundary]


def _coerce_boundaries(boundaries: Sequence[BoundaryLike]) -> List[Boundary]:
    result = []
    try:
        for item in boundaries:
            if isinstance(item, Boundary):
                result.append(item)
            elif isinstance(item, str):
                result.append(Boundary.parse(item))
            elif isinstance(item, tuple):
                result.append(Boundary(offset=item[0], kind=StoryKind(item[1])))
            else:
                result.append(Boundary(offset=item))
    except (ValidationError, ValueError) as e:
        raise InvalidArgumentError(f"故事边界不合法: {str(e)}")
    return result


def _render_boundaries(boundaries: Sequence[Boundary]) -> str:
    return ",".join(boundary.render() for boundary in boundaries)


def _parse_boundaries(text: str) -> List[Boundary]:
    try:
        return [Boundary.parse(part) for part in text.split(",") if part.strip()]
    except (ValidationError, ValueError) as e:
        raise InvalidArgumentError(f"故事边界不合法: {text!r}: {str(e)}")


class CatalogSnapshot(BaseModel):
    """某一时刻目录状态的冻结副本"""
    model_config = ConfigDict(frozen=True)

    taken_at: str
    entries: Tuple[FileEntry, ...]
    stories: Tuple[StoryUnit, ...]
    annotations: Tuple[DependentAnnotation, ...]
    events: Tuple[CatalogEvent, ...]

    @property
    def story_ids(self) -> FrozenSet[str]:
        return frozenset(unit.story_id for unit in self.stories)

    @property
    def event_count(self) -> int:
        return len(self.events)


class CatalogManager:
    """
    语料目录管理类

    Args:
        ledger: 事件账本；已有事件会先被重放
        clock: 没有给出账本时新建内存账本使用的时钟
    """

    def __init__(self, ledger: Optional[EventLedger] = None, clock: Optional[Clock] = None):
        self.ledger = ledger or EventLedger(clock=clock)
        self._lock = threading.RLock()
        self.entries: Dict[str, FileEntry] = {}
        self.units: Dict[str, List[StoryUnit]] = {}
        self.stories: Dict[str, StoryUnit] = {}
        self.flaws: List[FlawReport] = []
        self.pending_repair: Set[str] = set()
        self.annotations: Dict[str, DependentAnnotation] = {}
        self._refs: Dict[str, Set[str]] = {}
        for event in self.ledger.events:
            self._apply(event)
        if len(self.ledger):
            logger.info(f"目录重放完成: {len(self.entries)} 个文件, {len(self.stories)} 个故事, "
                        f"{len(self.annotations)} 个依赖标注")

    @classmethod
    def open(cls, path, clock: Optional[Clock] = None) -> "CatalogManager":
        """打开（或新建）账本文件并重放"""
        return cls(EventLedger(path, clock=clock))

    @classmethod
    def from_events(cls, events: Iterable[CatalogEvent], clock: Optional[Clock] = None) -> "CatalogManager":
        ledger = EventLedger(clock=clock)
        manager = cls(ledger)
        for event in events:
            manager._commit(event.kind, dict(event.fields), event.timestamp)
        return manager

    # ------------------------------------------------------------------
    # 事件提交与重放
    # ------------------------------------------------------------------

    def _commit(self, kind: EventKind, fields: Dict[str, str], timestamp: Optional[str] = None):
        with self._lock:
            event = CatalogEvent(timestamp=timestamp or self.ledger.stamp(), kind=kind, fields=fields)
            # 先校验并作用到状态，成功后才落账
            result = self._apply(event)
            self.ledger.append(kind, fields, event.timestamp)
            return result

    def _apply(self, event: CatalogEvent):
        handlers = {
            EventKind.REGISTER: self._on_register,
            EventKind.ADVANCE: self._on_advance,
            EventKind.SEGMENT: self._on_segment,
            EventKind.FLAW: self._on_flaw,
            EventKind.ANNOTATE: self._on_annotate,
            EventKind.RESEGMENT: self._on_resegment,
        }
        try:
            return handlers[event.kind](event)
        except KeyError as e:
            raise InvalidArgumentError(f"{event.kind.value} 事件缺少字段: {str(e)}")

    def _entry(self, key: str) -> FileEntry:
        entry = self.entries.get(key)
        if entry is None:
            raise NotFoundError(f"目录中没有文件 {key}")
        return entry

    def _on_register(self, event: CatalogEvent) -> FileEntry:
        fields = event.fields
        try:
            entry = FileEntry(
                source=fields["source"],
                date=Date.fromisoformat(fields["date"]),
                broadcast_start=fields["start"],
                duration_minutes=int(fields["duration"]),
                source_kind=SourceKind(fields.get("source_kind", SourceKind.BROADCAST.value)),
                history=(StageChange(stage=Stage.SCHEDULED, timestamp=event.timestamp),),
            )
        except (ValidationError, ValueError) as e:
            raise InvalidArgumentError(f"录音登记不合法: {str(e)}")
        if entry.key in self.entries:
            raise ConflictError(f"录音已登记: {entry.key}")
        self.entries[entry.key] = entry
        logger.info(f"登记录音 {entry.key} ({entry.source_kind.value}, {entry.duration_minutes} 分钟)")
        return entry

    def _advanced(self, entry: FileEntry, stage: Stage, timestamp: str) -> FileEntry:
        advanced = entry.model_copy(update={
            "stage": stage,
            "history": entry.history + (StageChange(stage=stage, timestamp=timestamp),),
        })
        self.entries[entry.key] = advanced
        return advanced

    def _on_advance(self, event: CatalogEvent) -> FileEntry:
        entry = self._entry(event.fields["file"])
        try:
            stage = Stage(event.fields["stage"])
        except ValueError:
            raise InvalidArgumentError(f"未知阶段: {event.fields['stage']!r}")
        expected = entry.next_stage()
        if stage != expected:
            raise InvalidTransitionError(
                f"{entry.key} 不能从 {entry.stage.value} 转到 {stage.value}"
                + (f"，下一阶段应为 {expected.value}" if expected else "，已是最终阶段"))
        if stage == Stage.SEGMENTED:
            raise InvalidTransitionError(f"{entry.key} 进入 SEGMENTED 需要通过故事切分给出边界")
        logger.info(f"{entry.key}: {entry.stage.value} -> {stage.value}")
        return self._advanced(entry, stage, event.timestamp)

    def _build_units(self, entry: FileEntry, boundaries: Sequence[Boundary]) -> List[StoryUnit]:
        if not boundaries:
            raise InvalidArgumentError(f"{entry.key} 没有给出故事边界")
        if boundaries[0].offset != 0:
            raise InvalidArgumentError(f"{entry.key} 的第一个故事必须从 0 秒开始，实际 {boundaries[0].offset}")
        for before, after in zip(boundaries, boundaries[1:]):
            if after.offset <= before.offset:
                raise InvalidArgumentError(f"{entry.key} 的故事边界必须严格递增: {before.offset} >= {after.offset}")
        if boundaries[-1].offset >= entry.duration_seconds:
            raise InvalidArgumentError(
                f"{entry.key} 的故事边界 {boundaries[-1].offset} 超出文件时长 {entry.duration_seconds} 秒")
        ends = [b.offset for b in boundaries[1:]] + [entry.duration_seconds]
        return [StoryUnit(file_key=entry.key, offset=b.offset, end_offset=end, kind=b.kind,
                          story_id=entry.story_id(b.offset))
                for b, end in zip(boundaries, ends)]

    def _install_units(self, entry: FileEntry, units: List[StoryUnit]):
        for unit in self.units.get(entry.key, []):
            self.stories.pop(unit.story_id, None)
        self.units[entry.key] = units
        for unit in units:
            self.stories[unit.story_id] = unit

    def _on_segment(self, event: CatalogEvent) -> List[StoryUnit]:
        entry = self._entry(event.fields["file"])
        if entry.next_stage() != Stage.SEGMENTED:
            raise InvalidTransitionError(f"{entry.key} 处于 {entry.stage.value}，不能切分")
        units = self._build_units(entry, _parse_boundaries(event.fields["boundaries"]))
        self._install_units(entry, units)
        self._advanced(entry, Stage.SEGMENTED, event.timestamp)
        logger.info(f"切分 {entry.key}: {len(units)} 个单元")
        return units

    def _on_flaw(self, event: CatalogEvent) -> FlawReport:
        story_id = event.fields["story"]
        if story_id not in self.stories:
            raise NotFoundError(f"目录中没有故事 {story_id}")
        try:
            flaw_type = FlawType(event.fields["flaw"])
        except ValueError:
            raise InvalidArgumentError(f"缺陷类型只能是 F1-F4: {event.fields['flaw']!r}")
        report = FlawReport(story_id=story_id, flaw_type=flaw_type,
                            reporter=event.fields.get("reporter", ""), timestamp=event.timestamp)
        self.flaws.append(report)
        self.pending_repair.add(story_id)
        logger.info(f"故事 {story_id} 报告缺陷 {flaw_type.value}，等待修复")
        return report

    def _on_annotate(self, event: CatalogEvent) -> DependentAnnotation:
        fields = event.fields
        story_ids = tuple(s for s in fields.get("stories", "").split(",") if s)
        try:
            annotation = DependentAnnotation(id=fields["id"], kind=AnnotationKind(fields["kind"]), story_ids=story_ids)
        except (ValidationError, ValueError) as e:
            raise InvalidArgumentError(f"依赖标注不合法: {str(e)}")
        if annotation.id in self.annotations:
            raise ConflictError(f"依赖标注已存在: {annotation.id}")
        missing = [s for s in story_ids if s not in self.stories]
        if missing:
            raise NotFoundError(f"依赖标注 {annotation.id} 引用了不存在的故事: {', '.join(missing)}")
        self.annotations[annotation.id] = annotation
        for story_id in story_ids:
            self._refs.setdefault(story_id, set()).add(annotation.id)
        return annotation

    def _on_resegment(self, event: CatalogEvent) -> InvalidationReport:
        entry = self._entry(event.fields["file"])
        if entry.stage != Stage.SEGMENTED:
            raise InvalidTransitionError(f"{entry.key} 尚未切分，不能重新切分")
        units = self._build_units(entry, _parse_boundaries(event.fields["boundaries"]))
        old_units = {unit.story_id: unit for unit in self.units.get(entry.key, [])}
        new_units = {unit.story_id: unit for unit in units}
        removed = sorted(set(old_units) - set(new_units))
        added = sorted(set(new_units) - set(old_units))
        # ID 不变但范围或类型变了的单元只报告，不影响依赖标注
        changed = sorted(story_id for story_id in set(old_units) & set(new_units)
                         if old_units[story_id] != new_units[story_id])
        self._install_units(entry, units)

        invalidated: List[str] = []
        for story_id in removed:
            for annotation_id in sorted(self._refs.pop(story_id, set())):
                annotation = self.annotations[annotation_id]
                if annotation.status == AnnotationStatus.INVALIDATED:
                    continue
                # 标记失效而不删除，保留审计记录
                self.annotations[annotation_id] = annotation.model_copy(update={
                    "status": AnnotationStatus.INVALIDATED,
                    "invalidated_at": event.timestamp,
                    "reason": f"故事 {story_id} 在 {entry.key} 重新切分后不再存在",
                })
                invalidated.append(annotation_id)
        self.pending_repair -= set(old_units)
        report = InvalidationReport(file_key=entry.key, units=units, removed_ids=removed, added_ids=added,
                                    changed_ids=changed, invalidated=sorted(invalidated),
                                    total_dependents=len(self.annotations))
        logger.info(f"重新切分 {entry.key}: 移除 {len(removed)} 个故事, 新增 {len(added)} 个, 改变 {len(changed)} 个, "
                    f"失效依赖标注 {len(invalidated)} / {report.total_dependents} ({report.rate:.2%})")
        return report

    # ------------------------------------------------------------------
    # 公共操作
    # ------------------------------------------------------------------

    def register_recording(self, source: str, day: Date, broadcast_start: str, duration_minutes: int,
                           source_kind: SourceKind = SourceKind.BROADCAST) -> FileEntry:
        """
        登记一次计划中的录音

        Raises:
            ConflictError: (来源, 日期, 开始时间) 已登记
            InvalidArgumentError: 时长不是 30 或 60 分钟，或字段格式不对
        """
        return self._commit(EventKind.REGISTER, {
            "source": source,
            "date": day.isoformat(),
            "start": broadcast_start,
            "duration": str(duration_minutes),
            "source_kind": SourceKind(source_kind).value,
        })

    def advance_stage(self, file_key: str, new_stage: Union[Stage, str]) -> FileEntry:
        """推进到紧接着的下一阶段；跳过或回退抛出 InvalidTransitionError"""
        try:
            stage = Stage(new_stage)
        except ValueError:
            raise InvalidArgumentError(f"未知阶段: {new_stage!r}")
        return self._commit(EventKind.ADVANCE, {"file": file_key, "stage": stage.value})

    def segment_file(self, file_key: str, boundaries: Sequence[BoundaryLike]) -> List[StoryUnit]:
        """
        把文件切分为首尾相接的故事单元，条目进入 SEGMENTED

        Args:
            file_key: 文件键，如 "ABC_19980301_1830"
            boundaries: 单元起点（秒），可附带单元类型

        Returns:
            List[StoryUnit]: 按偏移排序的单元
        """
        coerced = _coerce_boundaries(boundaries)
        return self._commit(EventKind.SEGMENT, {"file": file_key, "boundaries": _render_boundaries(coerced)})

    def report_flaw(self, story_id: str, flaw_type: Union[FlawType, str], reporter: str = "") -> FlawReport:
        value = flaw_type.value if isinstance(flaw_type, FlawType) else str(flaw_type)
        return self._commit(EventKind.FLAW, {"story": story_id, "flaw": value, "reporter": reporter})

    def add_annotation(self, annotation_id: str, kind: Union[AnnotationKind, str],
                       story_ids: Sequence[str]) -> DependentAnnotation:
        """登记一个引用故事ID的下游标注"""
        value = kind.value if isinstance(kind, AnnotationKind) else str(kind)
        return self._commit(EventKind.ANNOTATE, {"id": annotation_id, "kind": value, "stories": ",".join(story_ids)})

    def apply_resegmentation(self, file_key: str, boundaries: Sequence[BoundaryLike]) -> InvalidationReport:
        """
        修正已切分文件的故事边界

        故事ID由偏移推导，边界变化后不再存在的ID所对应的依赖标注全部标记为失效

        Returns:
            InvalidationReport: 新单元、移除/新增的故事ID和失效标注
        """
        coerced = _coerce_boundaries(boundaries)
        return self._commit(EventKind.RESEGMENT, {"file": file_key, "boundaries": _render_boundaries(coerced)})

    # ------------------------------------------------------------------
    # 查询、检查与快照
    # ------------------------------------------------------------------

    def story_units(self, file_key: str) -> List[StoryUnit]:
        self._entry(file_key)
        return list(self.units.get(file_key, []))

    def scan(self) -> ScanReport:
        """检查现有依赖标注：VALID 的标注不应引用不存在的故事"""
        with self._lock:
            return _scan(self.annotations.values(), set(self.stories))

    def check(self, snapshot: Optional[CatalogSnapshot] = None) -> ScanReport:
        """
        一致性检查

        给出快照时，检查基于快照所做的标注在当前目录下有多少会失效
        """
        if snapshot is None:
            return self.scan()
        with self._lock:
            return _scan(snapshot.annotations, set(self.stories))

    def snapshot(self) -> CatalogSnapshot:
        with self._lock:
            return CatalogSnapshot(
                taken_at=self.ledger.stamp(),
                entries=tuple(self.entries[key] for key in sorted(self.entries)),
                stories=tuple(self.stories[key] for key in sorted(self.stories)),
                annotations=tuple(self.annotations[key] for key in sorted(self.annotations)),
                events=tuple(self.ledger.events),
            )


def _scan(annotations: Iterable[DependentAnnotation], live: Set[str]) -> ScanReport:
    total = 0
    invalidated = 0
    dangling: List[str] = []
    for annotation in annotations:
        total += 1
        missing = any(story_id not in live for story_id in annotation.story_ids)
        if annotation.status == AnnotationStatus.INVALIDATED:
            invalidated += 1
        elif missing:
            invalidated += 1
            dangling.append(annotation.id)
    return ScanReport(total=total, invalidated=invalidated, dangling_valid=sorted(dangling))


def diff(snapshot: CatalogSnapshot, live: Union[CatalogManager, CatalogSnapshot]) -> List[str]:
    """
    快照与当前目录（或另一个快照）之间不同的故事ID

    包括只在一侧存在的ID，以及ID相同但范围或类型不同的单元
    """
    before = {unit.story_id: unit for unit in snapshot.stories}
    if isinstance(live, CatalogManager):
        with live._lock:
            after = dict(live.stories)
    else:
        after = {unit.story_id: unit for unit in live.stories}
    return sorted(story_id for story_id in set(before) | set(after) if before.get(story_id) != after.get(story_id))


def export_snapshot(snapshot: CatalogSnapshot) -> str:
    """导出为账本格式，首行为快照头"""
    header = f"{SNAPSHOT_HEADER}\ttaken_at={snapshot.taken_at}\tevents={snapshot.event_count}"
    return render_events(snapshot.events, header)


def import_snapshot(text: str, source: Optional[str] = None) -> CatalogSnapshot:
    """从导出文本重放得到快照"""
    lines = text.splitlines()
    if not lines or not lines[0].startswith(SNAPSHOT_HEADER):
        raise ParseError("快照文件缺少 #SNAPSHOT 头", 1, 1, source)
    header = dict(part.partition("=")[::2] for part in lines[0].split("\t")[1:])
    events = parse_events(text, source)
    if "events" in header and header["events"].isdigit() and int(header["events"]) != len(events):
        raise ParseError(f"快照头声明 {header['events']} 个事件，实际 {len(events)} 个", 1, None, source)
    manager = CatalogManager.from_events(events)
    state = manager.snapshot()
    return state.model_copy(update={"taken_at": header.get("taken_at", state.taken_at)})
