"""
语料目录数据模型

录音文件条目、故事单元、缺陷报告和依赖故事ID的下游标注。
故事ID是 (来源, 日期, 播出开始时间, 文件内偏移) 的纯函数。
"""

import re
from datetime import date as Date
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

BROADCAST_START_PATTERN = re.compile(r"^([01]\d|2[0-3]):?([0-5]\d)$")
ALLOWED_DURATIONS = (30, 60)


class SourceKind(str, Enum):
    BROADCAST = "BROADCAST"
    NEWSWIRE = "NEWSWIRE"


class Stage(str, Enum):
    SCHEDULED = "SCHEDULED"
    RECORDED = "RECORDED"
    INSPECTED = "INSPECTED"
    SEGMENTED = "SEGMENTED"


# 新闻专线全自动采集，没有录制和人工检查两个阶段
LIFECYCLES = {
    SourceKind.BROADCAST: (Stage.SCHEDULED, Stage.RECORDED, Stage.INSPECTED, Stage.SEGMENTED),
    SourceKind.NEWSWIRE: (Stage.SCHEDULED, Stage.SEGMENTED),
}


class StoryKind(str, Enum):
    NEWS = "NEWS"
    NON_NEWS = "NON_NEWS"


class FlawType(str, Enum):
    F1 = "F1"
    F2 = "F2"
    F3 = "F3"
    F4 = "F4"


class AnnotationKind(str, Enum):
    STORY_LINK = "STORY_LINK"
    FIRST_STORY = "FIRST_STORY"
    NAMED_ENTITY_SPAN = "NAMED_ENTITY_SPAN"
    GENERIC = "GENERIC"


class AnnotationStatus(str, Enum):
    VALID = "VALID"
    INVALIDATED = "INVALIDATED"


def compact_start(broadcast_start: str) -> str:
    """播出开始时间统一为 HHMM；不解释时区"""
    match = BROADCAST_START_PATTERN.match(broadcast_start.strip())
    if not match:
        raise ValueError(f"播出开始时间应为 HH:MM: {broadcast_start!r}")
    return f"{match.group(1)}{match.group(2)}"


def file_key(source: str, day: Date, broadcast_start: str) -> str:
    return f"{source}_{day:%Y%m%d}_{compact_start(broadcast_start)}"


def derive_story_id(source: str, day: Date, broadcast_start: str, offset: int) -> str:
    """
    推导故事ID

    例如 ("ABC", 1998-03-01, "18:30", 120) -> "ABC_19980301_1830_120"
    """
    return f"{file_key(source, day, broadcast_start)}_{offset}"


class StageChange(BaseModel):
    model_config = ConfigDict(frozen=True)

    stage: Stage
    timestamp: str


class FileEntry(BaseModel):
    """一次录音（或一批新闻专线）的目录条目"""
    model_config = ConfigDict(frozen=True)

    source: str = Field(min_length=1)
    date: Date
    broadcast_start: str
    duration_minutes: int
    source_kind: SourceKind = SourceKind.BROADCAST
    stage: Stage = Stage.SCHEDULED
    history: Tuple[StageChange, ...] = ()

    @field_validator("source")
    @classmethod
    def _check_source(cls, value: str) -> str:
        if not re.fullmatch(r"[A-Za-z0-9]+", value):
            raise ValueError(f"来源名只能包含字母和数字: {value!r}")
        return value

    @field_validator("broadcast_start")
    @classmethod
    def _check_start(cls, value: str) -> str:
        compact = compact_start(value)
        return f"{compact[:2]}:{compact[2:]}"

    @field_validator("duration_minutes")
    @classmethod
    def _check_duration(cls, value: int) -> int:
        if value not in ALLOWED_DURATIONS:
            raise ValueError(f"录音时长只能是 30 或 60 分钟: {value}")
        return value

    @property
    def key(self) -> str:
        return file_key(self.source, self.date, self.broadcast_start)

    @property
    def duration_seconds(self) -> int:
        return self.duration_minutes * 60

    @property
    def lifecycle(self) -> Tuple[Stage, ...]:
        return LIFECYCLES[self.source_kind]

    def next_stage(self) -> Optional[Stage]:
        stages = self.lifecycle
        position = stages.index(self.stage)
        return stages[position + 1] if position + 1 < len(stages) else None

    def story_id(self, offset: int) -> str:
        return derive_story_id(self.source, self.date, self.broadcast_start, offset)


class Boundary(BaseModel):
    """故事边界：从 offset 秒开始的一个单元"""
    model_config = ConfigDict(frozen=True)

    offset: int = Field(ge=0)
    kind: StoryKind = StoryKind.NEWS

    def render(self) -> str:
        return f"{self.offset}:{self.kind.value}"

    @classmethod
    def parse(cls, text: str) -> "Boundary":
        offset, _, kind = text.strip().partition(":")
        return cls(offset=int(offset), kind=StoryKind(kind or StoryKind.NEWS.value))


class StoryUnit(BaseModel):
    model_config = ConfigDict(frozen=True)

    file_key: str
    offset: int = Field(ge=0)
    end_offset: int
    kind: StoryKind
    story_id: str

    @model_validator(mode="after")
    def _check_extent(self) -> "StoryUnit":
        if self.end_offset <= self.offset:
            raise ValueError(f"故事单元 {self.story_id} 的结束不晚于开始")
        return self


class FlawReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    story_id: str
    flaw_type: FlawType
    reporter: str = ""
    timestamp: str


class DependentAnnotation(BaseModel):
    """引用故事ID的下游标注（话题关联、首报故事判断等）"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    kind: AnnotationKind
    story_ids: Tuple[str, ...]
    status: AnnotationStatus = AnnotationStatus.VALID
    invalidated_at: Optional[str] = None
    reason: Optional[str] = None

    @model_validator(mode="after")
    def _check_references(self) -> "DependentAnnotation":
        expected = {AnnotationKind.STORY_LINK: 2, AnnotationKind.FIRST_STORY: 1}.get(self.kind)
        if expected is not None and len(self.story_ids) != expected:
            raise ValueError(f"{self.kind.value} 标注应引用 {expected} 个故事，实际 {len(self.story_ids)} 个")
        if self.kind == AnnotationKind.NAMED_ENTITY_SPAN and not self.story_ids:
            raise ValueError("命名实体标注至少引用一个故事")
        return self


class InvalidationReport(BaseModel):
    """一次重新切分的结果"""
    model_config = ConfigDict(frozen=True)

    file_key: str
    units: List[StoryUnit]
    removed_ids: List[str]
    added_ids: List[str]
    changed_ids: List[str] = Field(default_factory=list)
    invalidated: List[str]
    total_dependents: int

    @property
    def rate(self) -> float:
        return len(self.invalidated) / self.total_dependents if self.total_dependents else 0.0


class ScanReport(BaseModel):
    """依赖标注与现有故事集合的一致性检查结果"""
    model_config = ConfigDict(frozen=True)

    total: int
    invalidated: int
    dangling_valid: List[str]

    @property
    def rate(self) -> float:
        return self.invalidated / self.total if self.total else 0.0

    @property
    def consistent(self) -> bool:
        return not self.dangling_valid
