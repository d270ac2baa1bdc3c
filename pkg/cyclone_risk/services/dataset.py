import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import pandas as pd
from pydantic import TypeAdapter

from ..config import settings
from ..exceptions import InputError, MissingCovariateError, MissingYearError
from ..schemas import (
    CovariateRow,
    DatasetRecord,
    IntensityGroup,
    SeasonObservation,
    StandardizationRecord,
    StormRecord,
)

logger = logging.getLogger(__name__)

_record_adapter = TypeAdapter(DatasetRecord)


def build_season_observations(
    storms: Sequence[StormRecord],
    covariates: Mapping[int, CovariateRow],
    start_season: Optional[int] = None,
    end_season: Optional[int] = None,
) -> List[SeasonObservation]:
    """
    每个 (季节, 分组) 一条观测; 没有风暴的分组 n = 0
    季节范围: start_season 到最后一个有风暴的季节 (或 end_season)
    """
    start_season = settings.START_SEASON if start_season is None else start_season
    kept = [s for s in storms if s.season >= start_season and (end_season is None or s.season <= end_season)]
    if len(kept) != len(storms):
        logger.info(f"季节窗口外的风暴 {len(storms) - len(kept)} 个已排除")
    if not kept and end_season is None:
        return []

    last = end_season if end_season is not None else max(s.season for s in kept)
    observations = []
    for season in range(start_season, last + 1):
        if season not in covariates:
            raise MissingCovariateError(f"季节 {season} 没有协变量")
        for group in IntensityGroup:
            members = [s for s in kept if s.season == season and s.intensity_group == group]
            damaging = [s for s in members if s.is_damaging]
            observations.append(SeasonObservation(
                season=season,
                group=group,
                n_storms=len(members),
                n_damaging=len(damaging),
                total_damage_usd=float(sum(s.damage_usd_2019 for s in damaging)),
                covariates=covariates[season],
            ))
    return observations


@dataclass
class Dataset:
    """规范化数据集: 风暴汇总、季节观测、协变量与标准化参数"""

    storms: List[StormRecord] = field(default_factory=list)
    seasons: List[SeasonObservation] = field(default_factory=list)
    covariates: Dict[int, CovariateRow] = field(default_factory=dict)
    standardizations: Dict[str, StandardizationRecord] = field(default_factory=dict)

    def season_observations(self, group: IntensityGroup) -> List[SeasonObservation]:
        return [s for s in self.seasons if s.group == group]

    def covariates_for(self, season: int) -> CovariateRow:
        if season not in self.covariates:
            raise MissingYearError(f"数据集中没有 {season} 年的协变量")
        return self.covariates[season]

    def storm(self, key: str) -> StormRecord:
        """按 storm_id 或 NAME:YEAR 查找"""
        for s in self.storms:
            if s.storm_id == key.upper() or f"{s.name}:{s.season}" == key.upper():
                return s
        raise InputError(f"数据集中没有风暴 {key}")

    def records(self) -> Iterable[DatasetRecord]:
        yield from self.standardizations.values()
        yield from (self.covariates[k] for k in sorted(self.covariates))
        yield from self.storms
        yield from self.seasons

    def write_jsonl(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for record in self.records():
                f.write(record.model_dump_json() + "\n")
        logger.info(f"数据集写出: {path}")
        return path

    @classmethod
    def read_jsonl(cls, path: Union[str, Path]) -> "Dataset":
        dataset = cls()
        with open(path, "r", encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = _record_adapter.validate_json(line)
                except ValueError as e:
                    raise InputError(f"{path}:{line_number}: 记录无效: {e}")
                if isinstance(record, StormRecord):
                    dataset.storms.append(record)
                elif isinstance(record, SeasonObservation):
                    dataset.seasons.append(record)
                elif isinstance(record, CovariateRow):
                    dataset.covariates[record.season] = record
                else:
                    dataset.standardizations[record.variable] = record
        return dataset

    def summary_frame(self) -> pd.DataFrame:
        """每个季节/分组的风暴数与致损数"""
        if not self.seasons:
            return pd.DataFrame(columns=["season", "group", "n_storms", "n_damaging", "total_damage_usd"])
        frame = pd.DataFrame([
            {
                "season": s.season,
                "group": s.group.value,
                "n_storms": s.n_storms,
                "n_damaging": s.n_damaging,
                "total_damage_usd": s.total_damage_usd,
            }
            for s in self.seasons
        ])
        return frame.pivot_table(
            index="season", columns="group", values=["n_storms", "n_damaging"], aggfunc="sum"
        )
