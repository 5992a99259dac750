"""
目录事件账本

只追加的纯文本账本，每行一个事件：`TIMESTAMP<TAB>KIND<TAB>key=value<TAB>...`。
目录状态完全由按顺序重放事件得到；`#` 开头的行（例如快照头）和空行在读取时忽略。
"""

import logging
import threading
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from src.utils.errors import InvalidArgumentError, ParseError

logger = logging.getLogger(__name__)

Clock = Callable[[], datetime]


class EventKind(str, Enum):
    REGISTER = "REGISTER"
    ADVANCE = "ADVANCE"
    SEGMENT = "SEGMENT"
    FLAW = "FLAW"
    ANNOTATE = "ANNOTATE"
    RESEGMENT = "RESEGMENT"


class CatalogEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    timestamp: str
    kind: EventKind
    fields: Dict[str, str] = Field(default_factory=dict)

    def render(self) -> str:
        parts = [self.timestamp, self.kind.value]
        for key, value in self.fields.items():
            if any(ch in value for ch in "\t\r\n") or any(ch in key for ch in "\t\r\n="):
                raise InvalidArgumentError(f"事件字段不能包含制表符或换行: {key}={value!r}")
            parts.append(f"{key}={value}")
        return "\t".join(parts)

    @classmethod
    def parse(cls, line: str, line_no: Optional[int] = None, source: Optional[str] = None) -> "CatalogEvent":
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) < 2:
            raise ParseError("事件行至少需要时间戳和事件类型", line_no, 1, source)
        try:
            kind = EventKind(parts[1])
        except ValueError:
            raise ParseError(f"未知事件类型: {parts[1]!r}", line_no, len(parts[0]) + 2, source)
        fields: Dict[str, str] = {}
        for part in parts[2:]:
            key, sep, value = part.partition("=")
            if not sep or not key:
                raise ParseError(f"事件字段应为 key=value: {part!r}", line_no, None, source)
            fields[key] = value
        return cls(timestamp=parts[0], kind=kind, fields=fields)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def format_timestamp(moment: datetime) -> str:
    return moment.isoformat(timespec="seconds")


def parse_events(text: str, source: Optional[str] = None) -> List[CatalogEvent]:
    events = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        events.append(CatalogEvent.parse(line, line_no, source))
    return events


class EventLedger:
    """
    目录事件账本

    单写者：追加操作在锁内完成，读者只会看到完整的事件。给出 path 时每个事件
    立即追加写入文件，否则只保存在内存中。

    Args:
        path: 账本文件路径
        clock: 时间来源，测试中可注入固定时钟
    """

    def __init__(self, path: Optional[Union[str, Path]] = None, clock: Optional[Clock] = None):
        self.path = Path(path) if path is not None else None
        self.clock = clock or utc_now
        self._lock = threading.Lock()
        self._events: List[CatalogEvent] = []
        if self.path is not None and self.path.exists():
            self._events = parse_events(self.path.read_text(encoding="utf-8"), str(self.path))
            logger.info(f"载入目录账本 {self.path}: {len(self._events)} 个事件")

    @property
    def events(self) -> List[CatalogEvent]:
        with self._lock:
            return list(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[CatalogEvent]:
        return iter(self.events)

    def stamp(self) -> str:
        return format_timestamp(self.clock())

    def append(self, kind: EventKind, fields: Dict[str, str],
               timestamp: Optional[str] = None) -> CatalogEvent:
        event = CatalogEvent(timestamp=timestamp or self.stamp(), kind=kind, fields=fields)
        line = event.render()
        with self._lock:
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write(line + "\n")
            self._events.append(event)
        logger.debug(f"目录事件: {line}")
        return event


def render_events(events: Iterable[CatalogEvent], header: Optional[str] = None) -> str:
    lines = [header] if header else []
    lines.extend(event.render() for event in events)
    return "\n".join(lines) + ("\n" if lines else "")
