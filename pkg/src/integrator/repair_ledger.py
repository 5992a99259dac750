"""
修复清单文件的读写

每行一个修复：`KIND<TAB>START-END<TAB>PAYLOAD`，时间以秒表示；
空行和 `#` 开头的行忽略。
"""

from typing import List, Optional

from pydantic import ValidationError

from src.graph.models import to_centiseconds
from src.integrator.repair import RepairEvent, RepairKind
from src.utils.errors import InvalidArgumentError, ParseError


def parse_repair_ledger(text: str, source: Optional[str] = None) -> List[RepairEvent]:
    """
    解析修复清单

    Raises:
        ParseError: 行格式不对、类型未知或时间不合法
    """
    repairs: List[RepairEvent] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2 or len(fields) > 3:
            raise ParseError("修复行应为 KIND<TAB>START-END[<TAB>PAYLOAD]", line_no, 1, source)
        kind_text, span_text = fields[0].strip(), fields[1].strip()
        payload = fields[2] if len(fields) == 3 else ""
        try:
            kind = RepairKind(kind_text)
        except ValueError:
            raise ParseError(f"未知修复类型: {kind_text!r}", line_no, 1, source)
        start_text, sep, end_text = span_text.partition("-")
        if not sep:
            raise ParseError(f"修复范围应为 START-END: {span_text!r}", line_no, len(fields[0]) + 2, source)
        try:
            repairs.append(RepairEvent(kind=kind, span_start=to_centiseconds(start_text.strip()),
                                       span_end=to_centiseconds(end_text.strip()), payload=payload.strip()))
        except (InvalidArgumentError, ValidationError) as e:
            raise ParseError(f"修复范围不合法 {span_text!r}: {str(e)}", line_no, len(fields[0]) + 2, source)
    return repairs
