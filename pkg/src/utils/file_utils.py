import os
import logging
import sys
from pathlib import Path
from typing import Optional, Union

from src.utils.errors import NotFoundError

logger = logging.getLogger(__name__)

STDIO = "-"


def ensure_app_directories(*directories: str):
    """
    确保应用所需的目录已创建
    """
    for directory in directories:
        os.makedirs(directory, exist_ok=True)
        logger.debug(f"Created directory: {directory}")


def read_text_file(path: Union[str, Path]) -> str:
    """
    读取UTF-8文本文件，"-" 表示标准输入

    Raises:
        NotFoundError: 文件不存在
    """
    if str(path) == STDIO:
        return sys.stdin.read()
    file_path = Path(path)
    if not file_path.is_file():
        raise NotFoundError(f"文件不存在: {path}")
    return file_path.read_text(encoding="utf-8")


def read_bytes_file(path: Union[str, Path]) -> bytes:
    if str(path) == STDIO:
        return sys.stdin.buffer.read()
    file_path = Path(path)
    if not file_path.is_file():
        raise NotFoundError(f"文件不存在: {path}")
    return file_path.read_bytes()


def write_output(data: Union[str, bytes], path: Optional[Union[str, Path]] = None):
    """
    写出结果；没有给出路径或路径为 "-" 时写到标准输出
    """
    if path is None or str(path) == STDIO:
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        else:
            sys.stdout.write(data)
        return
    file_path = Path(path)
    if file_path.parent and not file_path.parent.exists():
        ensure_app_directories(str(file_path.parent))
    if isinstance(data, bytes):
        file_path.write_bytes(data)
    else:
        file_path.write_text(data, encoding="utf-8")
    logger.debug(f"写出 {file_path} ({len(data)})")
