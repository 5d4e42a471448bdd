import math
import os
import logging
from pathlib import Path
from typing import Dict, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError

from app.config.settings import NUMERICS_CONFIG_PATH, NUM_TOL_ENV
from app.core.errors import InvalidParameter

logger = logging.getLogger(__name__)


class LinalgSettings(BaseModel):
    lu_pivot_rel: float = Field(1e-13, gt=0)
    symmetry_rel: float = Field(1e-10, gt=0)
    pd_pivot_floor: float = Field(1e-12, ge=0)
    expm_norm_limit: float = Field(1e4, gt=0)


class LyapunovSettings(BaseModel):
    residual_rel: float = Field(1e-9, gt=0)


class RiccatiSettings(BaseModel):
    step_tol: float = Field(1e-11, gt=0)
    residual_tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(60, ge=1)
    bass_retries: int = Field(4, ge=0)


class CertificateSettings(BaseModel):
    strict_margin: float = Field(1e-10, ge=0)
    normalization_tol: float = Field(1e-9, gt=0)


class GraphSettings(BaseModel):
    zero_clamp: float = Field(1e-10, ge=0)
    connectivity_tol: float = Field(1e-9, gt=0)


class SimulationSettings(BaseModel):
    divergence_limit: float = Field(1e9, gt=0)


class NumericSettings(BaseModel):
    """全局数值参数记录"""
    linalg: LinalgSettings = Field(default_factory=LinalgSettings)
    lyapunov: LyapunovSettings = Field(default_factory=LyapunovSettings)
    riccati: RiccatiSettings = Field(default_factory=RiccatiSettings)
    certificates: CertificateSettings = Field(default_factory=CertificateSettings)
    graphs: GraphSettings = Field(default_factory=GraphSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)


def parse_overrides(text: str) -> Dict[str, Dict[str, float]]:
    """
    解析 section.key=value 形式的覆盖串
    Args:
        text: 例如 "riccati.step_tol=1e-12,certificates.strict_margin=1e-9"
    Returns:
        按 section 分组的覆盖字典
    """
    overrides: Dict[str, Dict[str, float]] = {}
    for item in filter(None, (part.strip() for part in text.split(','))):
        key, sep, raw = item.partition('=')
        section, dot, name = key.strip().partition('.')
        if not sep or not dot:
            raise InvalidParameter(f"malformed numeric override '{item}' (expected section.key=value)")
        try:
            value = float(raw)
        except ValueError:
            raise InvalidParameter(f"numeric override '{item}' is not a number")
        if not math.isfinite(value):
            raise InvalidParameter(f"numeric override '{item}' is not finite")
        overrides.setdefault(section, {})[name] = value
    return overrides


def build_settings(base: dict, overrides: Optional[Dict[str, Dict[str, float]]] = None) -> NumericSettings:
    """合并 YAML 配置与覆盖项"""
    merged = {section: dict(values or {}) for section, values in (base or {}).items()}
    for section, values in (overrides or {}).items():
        if section not in NumericSettings.model_fields:
            raise InvalidParameter(f"unknown numeric settings section '{section}'")
        known = NumericSettings.model_fields[section].annotation.model_fields
        for name in values:
            if name not in known:
                raise InvalidParameter(f"unknown numeric setting '{section}.{name}'")
        merged.setdefault(section, {}).update(values)
    try:
        return NumericSettings.model_validate(merged)
    except ValidationError as e:
        raise InvalidParameter(f"invalid numeric settings: {e}")


class NumericSettingsManager:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(NumericSettingsManager, cls).__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self._initialized = True
        self._settings: Optional[NumericSettings] = None

    def _load_config(self, path: Path) -> dict:
        """加载数值参数配置"""
        try:
            with open(path, 'r') as f:
                return yaml.safe_load(f) or {}
        except Exception as e:
            logger.error(f"Failed to load numeric settings from {path}: {e}")
            # 使用默认配置
            return {}

    def load(self, path: Path = NUMERICS_CONFIG_PATH, env_override: Optional[str] = None) -> NumericSettings:
        """从 YAML 与环境变量加载并缓存"""
        raw = env_override if env_override is not None else os.getenv(NUM_TOL_ENV, '')
        self._settings = build_settings(self._load_config(path), parse_overrides(raw))
        if raw:
            logger.info(f"Numeric settings overridden from {NUM_TOL_ENV}: {raw}")
        return self._settings

    @property
    def settings(self) -> NumericSettings:
        if self._settings is None:
            self.load()
        return self._settings

    def resolve(self, settings: Optional[NumericSettings] = None) -> NumericSettings:
        return settings if settings is not None else self.settings

    def reset(self):
        self._settings = None


# 创建全局实例
numerics = NumericSettingsManager()
