import os
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

# 日志配置
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LOG_DIR = os.environ.get(
    "LOG_DIR",
    os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), "logs"),
)


def setup_logger(name, log_file=None, level=None, log_dir=None):
    """
    配置并返回一个logger实例

    控制台输出写到stderr，保证stdout只承载数据

    Args:
        name: logger名称
        log_file: 日志文件名（可选）
        level: 日志级别（可选）
        log_dir: 日志目录（可选），默认 LOG_DIR

    Returns:
        logging.Logger: 配置好的logger实例
    """
    log_level = (level or LOG_LEVEL).upper()

    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, log_level, logging.INFO))

    # 如果logger已经有处理器，不再添加
    if logger.handlers:
        return logger

    formatter = logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        # 只有需要写文件时才创建日志目录
        directory = log_dir or LOG_DIR
        Path(directory).mkdir(parents=True, exist_ok=True)
        log_path = os.path.join(directory, log_file)

        # 使用RotatingFileHandler限制文件大小和数量
        file_handler = RotatingFileHandler(
            log_path, maxBytes=10*1024*1024, backupCount=5, encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def get_app_logger(log_file=None, level=None, log_dir=None):
    """获取工具包根日志记录器，src.* 模块的日志都会传播到这里"""
    return setup_logger("src", log_file, level, log_dir)
