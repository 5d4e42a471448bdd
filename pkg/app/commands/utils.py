import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Union

import click
import numpy as np

from app.config.settings import PRINT_DIGITS
from app.core.errors import InvalidParameter
from app.models.system_models import AgentModel, CaseSelect, ProtocolGains

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# 命令行的情形写法
CASE_CHOICES = {
    "auto": "auto",
    "i": "case_i",
    "ii": "case_ii",
}


def read_json(path: PathLike) -> dict:
    with open(path, 'r') as f:
        return json.load(f)


def write_json(path: PathLike, data: dict):
    """写入 JSON 文件（全精度）"""
    try:
        with open(path, 'w') as f:
            json.dump(data, f, indent=2)
        logger.info(f"Wrote {path}")
    except OSError as e:
        logger.error(f"Failed to write {path}: {str(e)}")
        raise


def load_model(path: PathLike) -> AgentModel:
    return AgentModel.model_validate(read_json(path))


def load_gains(path: PathLike) -> ProtocolGains:
    """读取增益文件，certificate 等附加字段忽略"""
    return ProtocolGains.model_validate(read_json(path))


def fmt(value: float) -> str:
    return f"{value:.{PRINT_DIGITS}g}"


def fmt_matrix(M: np.ndarray, indent: str = "  ") -> str:
    M = np.atleast_2d(M)
    return "\n".join(indent + "  ".join(f"{fmt(v):>12}" for v in row) for row in M)


def parse_c(text: str) -> Optional[float]:
    """'auto' 返回 None"""
    text = text.strip()
    if text.lower() == "auto":
        return None
    return parse_real(text, "c")


def parse_real(text: str, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InvalidParameter(f"{name} must be a real number, got '{text}'")
    if not np.isfinite(value):
        raise InvalidParameter(f"{name} must be finite, got '{text}'")
    return value


def parse_grid(text: str, name: str, allow_auto: bool = False) -> List[Optional[float]]:
    """逗号分隔的网格，例如 'auto,0.1,0.11'"""
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise InvalidParameter(f"{name} grid is empty")
    if allow_auto:
        return [parse_c(item) for item in items]
    return [parse_real(item, name) for item in items]


def parse_case(text: str) -> CaseSelect:
    return CASE_CHOICES[text]


def show_progress() -> bool:
    """进度条只在 stderr 为终端且未指定 --quiet 时显示"""
    ctx = click.get_current_context(silent=True)
    quiet = bool(ctx and ctx.find_root().obj and ctx.find_root().obj.get("quiet"))
    return sys.stderr.isatty() and not quiet
