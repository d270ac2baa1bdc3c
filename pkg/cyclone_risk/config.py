import json
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import dotenv_values
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="CYCLONE_", env_file=".env", extra="ignore")

    # 数据目录 (命令行相对路径以此为根)
    DATA_ROOT: Path = Path(".")

    # 运行记录库
    DATABASE_URL: str = "sqlite:///./cyclone_runs.db"

    # 训练窗口
    START_SEASON: int = 1960
    END_SEASON: Optional[int] = None

    # MCMC 配置
    SEASONAL_ITERATIONS: int = 200_000
    CYCLONE_ITERATIONS: int = 1_000_000
    BURN_IN_FRACTION: float = 0.2
    SEASONAL_THIN: int = 1
    CYCLONE_THIN: int = 10
    TARGET_ACCEPTANCE: float = 0.20
    ADAPT_WINDOW: int = 50
    MIN_DIAGNOSTIC_SAMPLES: int = 100

    # 预测与评分
    PREDICTIVE_DRAWS: int = 10_000
    DENSITY_BINS: int = 50
    CREDIBLE_LEVEL: float = 0.95
    MAX_RESAMPLE_ATTEMPTS: int = 100

    # MLE
    MLE_STARTS: int = 10
    MLE_JITTER: float = 0.2

    SEED: int = 20190601
    LOG_LEVEL: str = "INFO"

    # Saffir-Simpson 等级下限 (knots)
    SAFFIR_SIMPSON_KNOTS: Dict[str, int] = {
        "1": 64,
        "2": 83,
        "3": 96,
        "4": 113,
        "5": 137,
    }

    # 协变量顺序 (截距项在最前)
    COVARIATE_NAMES: List[str] = ["AMO", "SOI", "NAO", "NINO34", "SST", "SSN"]


def _decode(value: str):
    """字典/列表取值按 JSON 解析, 与环境变量的处理一致"""
    if value[:1] in ("{", "["):
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            return value
    return value


def load_settings(config_path: Optional[Path] = None, **flag_values) -> Settings:
    """
    合并配置: 配置文件 (key=value) > 命令行参数 > 环境变量/默认值
    """
    merged = {key.upper(): value for key, value in flag_values.items() if value is not None}
    if config_path is not None:
        file_values = dotenv_values(config_path)
        merged.update({key.upper(): _decode(value) for key, value in file_values.items() if value is not None})
    return Settings(**merged)


settings = Settings()
