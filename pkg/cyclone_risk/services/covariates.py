"""
气候协变量 - AMO, SOI, NAO, Nino3.4, SST 取当年 5-6 月均值; SSN 取上年 7 月到当年 6 月均值
每个指数一个 CSV 文件 (year,month,value)
"""
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..config import settings
from ..exceptions import InputError, MissingCovariateError
from ..schemas import CovariateRow

logger = logging.getLogger(__name__)

INTERCEPT = "intercept"

# (年份偏移, 月份)
MAY_JUNE: Tuple[Tuple[int, int], ...] = ((0, 5), (0, 6))
JULY_TO_JUNE: Tuple[Tuple[int, int], ...] = tuple((-1, m) for m in range(7, 13)) + tuple(
    (0, m) for m in range(1, 7)
)

AVERAGING_WINDOWS: Dict[str, Tuple[Tuple[int, int], ...]] = {
    "AMO": MAY_JUNE,
    "SOI": MAY_JUNE,
    "NAO": MAY_JUNE,
    "NINO34": MAY_JUNE,
    "SST": MAY_JUNE,
    "SSN": JULY_TO_JUNE,
}


def read_monthly_series(path: Union[str, Path]) -> pd.Series:
    """读取 year,month,value 格式, 返回以 (year, month) 为索引的序列"""
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"{path}: 无法读取协变量文件 ({e})") from e
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    required = ["year", "month", "value"]
    if [c for c in required if c not in frame.columns]:
        raise InputError(f"{path}: 需要表头 year,month,value")
    frame = frame.dropna(subset=["value"])
    try:
        frame = frame.astype({"year": int, "month": int, "value": float})
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: year/month 必须为整数, value 必须为数值 ({e})") from e
    if ((frame["month"] < 1) | (frame["month"] > 12)).any():
        raise InputError(f"{path}: 月份必须在 1-12")
    series = frame.set_index(["year", "month"])["value"].sort_index()
    if series.index.duplicated().any():
        raise InputError(f"{path}: 存在重复的年月")
    return series


def load_covariate_directory(
    directory: Union[str, Path], names: Optional[Sequence[str]] = None
) -> Dict[str, pd.Series]:
    """目录下每个指数一个 <name>.csv (文件名不区分大小写)"""
    names = list(names or settings.COVARIATE_NAMES)
    directory = Path(directory)
    files = {p.stem.upper(): p for p in directory.glob("*.csv")} if directory.is_dir() else {}
    missing = [n for n in names if n.upper() not in files]
    if missing:
        raise MissingCovariateError(f"{directory}: 缺少协变量文件 {missing}")
    series = {name: read_monthly_series(files[name.upper()]) for name in names}
    logger.info(f"协变量载入: {', '.join(names)}")
    return series


def window_mean(series: pd.Series, name: str, season: int) -> float:
    window = AVERAGING_WINDOWS.get(name.upper(), MAY_JUNE)
    values = []
    for year_offset, month in window:
        key = (season + year_offset, month)
        if key not in series.index:
            raise MissingCovariateError(f"{name} 缺少 {key[0]}-{key[1]:02d} 的月值 (季节 {season})")
        values.append(float(series.loc[key]))
    return float(np.mean(values))


def build_covariates(
    monthly_series: Mapping[str, pd.Series],
    season: int,
    names: Optional[Sequence[str]] = None,
) -> CovariateRow:
    names = list(names or settings.COVARIATE_NAMES)
    values = [1.0]
    for name in names:
        if name not in monthly_series:
            raise MissingCovariateError(f"缺少协变量序列 {name}")
        values.append(window_mean(monthly_series[name], name, season))
    return CovariateRow(season=season, names=[INTERCEPT] + names, values=values)


def build_covariate_table(
    monthly_series: Mapping[str, pd.Series],
    seasons: Sequence[int],
    required: Sequence[int] = (),
    names: Optional[Sequence[str]] = None,
) -> Dict[int, CovariateRow]:
    """
    为每个季节构造协变量; required 中的季节缺值时报错, 其余季节跳过
    """
    rows = {}
    required = set(required)
    for season in seasons:
        try:
            rows[season] = build_covariates(monthly_series, season, names)
        except MissingCovariateError:
            if season in required:
                raise
            logger.debug(f"季节 {season} 协变量不完整, 跳过")
    return rows


def covariate_matrix(rows: Sequence[CovariateRow], mask: Optional[Sequence[str]] = None) -> Tuple[np.ndarray, List[str]]:
    """按名称子集取列, 截距始终保留"""
    if not rows:
        raise InputError("没有协变量行")
    names = rows[0].names
    keep = [INTERCEPT] + [n for n in names[1:] if mask is None or n in mask]
    unknown = [m for m in (mask or []) if m not in names]
    if unknown:
        raise InputError(f"未知协变量: {unknown}")
    idx = [names.index(n) for n in keep]
    matrix = np.array([[row.values[i] for i in idx] for row in rows], dtype=float)
    return matrix, keep
