import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import pandas as pd

from ..exceptions import DuplicateDamageError, InputError

logger = logging.getLogger(__name__)

UNNAMED = "UNNAMED"


class DamageTable:
    """
    标准化损失表 (2019 美元)
    主键: (大写风暴名, 年份); UNNAMED 风暴只能通过 storm_id 覆盖文件匹配
    """

    def __init__(self, by_name: Dict[Tuple[str, int], float], by_storm_id: Optional[Dict[str, float]] = None):
        self.by_name = by_name
        self.by_storm_id = by_storm_id or {}

    @classmethod
    def from_csv(cls, path: Union[str, Path], override_path: Optional[Union[str, Path]] = None) -> "DamageTable":
        frame = _read_required(path, ["name", "year", "damage_usd_2019"])
        frame["name"] = frame["name"].astype(str).str.strip().str.upper()
        frame["year"] = frame["year"].astype(int)
        frame["damage_usd_2019"] = frame["damage_usd_2019"].astype(float)

        if (frame["damage_usd_2019"] < 0).any():
            raise InputError(f"{path}: 损失金额不能为负")

        duplicated = frame[frame.duplicated(["name", "year"], keep=False)]
        if not duplicated.empty:
            keys = sorted(set(zip(duplicated["name"], duplicated["year"])))
            raise DuplicateDamageError(f"{path}: 同一风暴有重复损失记录: {keys}")

        unnamed = frame[frame["name"] == UNNAMED]
        if not unnamed.empty:
            logger.warning(f"{path}: {len(unnamed)} 条 UNNAMED 记录需要 storm_id 覆盖文件, 已忽略")
            frame = frame[frame["name"] != UNNAMED]

        by_name = {
            (row.name, int(row.year)): float(row.damage_usd_2019)
            for row in frame.itertuples(index=False)
        }

        by_storm_id = {}
        if override_path is not None:
            overrides = _read_required(override_path, ["storm_id", "damage_usd_2019"])
            overrides["storm_id"] = overrides["storm_id"].astype(str).str.strip().str.upper()
            if overrides["storm_id"].duplicated().any():
                raise DuplicateDamageError(f"{override_path}: storm_id 重复")
            by_storm_id = dict(zip(overrides["storm_id"], overrides["damage_usd_2019"].astype(float)))

        logger.info(f"损失表载入: {len(by_name)} 条按名称, {len(by_storm_id)} 条按编号")
        return cls(by_name, by_storm_id)

    def lookup(self, storm_id: str, name: str, year: int) -> float:
        if storm_id.upper() in self.by_storm_id:
            return self.by_storm_id[storm_id.upper()]
        return self.by_name.get((name.strip().upper(), int(year)), 0.0)


def _read_required(path, columns) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except (OSError, pd.errors.ParserError) as e:
        raise InputError(f"无法读取 {path}: {e}")
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InputError(f"{path}: 缺少表头字段 {missing}, 需要 {','.join(columns)}")
    return frame[columns].copy()
