import json
from typing import Any, Dict, Iterable


def to_json_line(record: Dict[str, Any]) -> str:
    """
    记录序列化为一行JSON，键排序保证输出确定

    Args:
        record: 记录

    Returns:
        str: 不含换行的JSON字符串
    """
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def to_json_lines(records: Iterable[Dict[str, Any]]) -> str:
    lines = [to_json_line(record) for record in records]
    return "\n".join(lines) + ("\n" if lines else "")
