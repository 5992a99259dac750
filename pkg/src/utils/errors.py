"""
统一异常定义模块
所有库代码只抛出这里定义的异常，由命令行入口统一转换为诊断信息和退出码
"""

from typing import Any, Iterable, List, Optional


class AnnotationToolkitError(Exception):
    """工具包异常基类"""
    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class InvalidArgumentError(AnnotationToolkitError, ValueError):
    code = "invalid-argument"


class NotFoundError(AnnotationToolkitError, LookupError):
    code = "not-found"


class CycleError(AnnotationToolkitError):
    code = "cycle-error"


class TimeOrderError(AnnotationToolkitError):
    code = "time-order-error"


class TimelineError(AnnotationToolkitError):
    code = "timeline-error"


class ConflictError(AnnotationToolkitError):
    code = "conflict-error"


class InvalidTransitionError(AnnotationToolkitError):
    code = "invalid-transition"


class GraphReferenceError(AnnotationToolkitError):
    code = "reference-error"


class MergeConflictError(AnnotationToolkitError):
    """合并冲突，arc_ids 为无法并入结果图的弧"""
    code = "merge-conflict"

    def __init__(self, message: str, arc_ids: Iterable[str] = ()):
        super().__init__(message)
        self.arc_ids: List[str] = list(arc_ids)


class ParseError(AnnotationToolkitError):
    """
    解析错误，带有出错位置

    Args:
        message: 错误描述
        line: 行号（从1开始）
        column: 列号（从1开始）
        source: 来源文件名
    """
    code = "parse-error"

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, source: Optional[str] = None):
        super().__init__(message)
        self.line = line
        self.column = column
        self.source = source

    def location(self) -> str:
        parts = [self.source or "<input>"]
        if self.line is not None:
            parts.append(str(self.line))
            if self.column is not None:
                parts.append(str(self.column))
        return ":".join(parts)

    def __str__(self) -> str:
        return f"{self.location()}: {self.code}: {self.message}"


class ValidationFailedError(AnnotationToolkitError):
    """图校验失败，violations 为校验报告"""
    code = "validation-error"

    def __init__(self, message: str, violations: Iterable[Any] = ()):
        super().__init__(message)
        self.violations = list(violations)


class RepairRejectedError(ValidationFailedError):
    code = "repair-rejected"


class AlignmentFailureError(AnnotationToolkitError):
    """对齐匹配率低于阈值，通常意味着文件配对错误"""
    code = "alignment-failure"

    def __init__(self, message: str, match_rate: float = 0.0):
        super().__init__(message)
        self.match_rate = match_rate
