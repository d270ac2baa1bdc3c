import logging
from typing import Dict, Iterable, List, Optional

import numpy as np

from ..config import settings
from ..exceptions import IncompleteObservationError, InputError
from ..schemas import IntensityGroup, SaffirSimpson, StormRecord
from .damages import DamageTable
from .hurdat2 import StormHeader, StormTrack, TrackPoint

logger = logging.getLogger(__name__)


def classify_saffir_simpson(max_wind_kt: float, thresholds: Optional[Dict[str, int]] = None) -> SaffirSimpson:
    """按生命期最大风速分级; 对风速单调"""
    thresholds = thresholds or settings.SAFFIR_SIMPSON_KNOTS
    category = SaffirSimpson.TS
    for label, lower in sorted(thresholds.items(), key=lambda kv: kv[1]):
        if max_wind_kt >= lower:
            category = SaffirSimpson(label)
    return category


def summarize_storm(
    header: StormHeader,
    track: List[TrackPoint],
    damage_lookup: Optional[DamageTable] = None,
    require_pressure: bool = False,
    thresholds: Optional[Dict[str, int]] = None,
) -> StormRecord:
    """
    生命期汇总: 最大风速、最低气压 (忽略缺测)、全路径平均纬度、Saffir-Simpson 等级、损失
    """
    if not track:
        raise InputError(f"{header.storm_id}: 路径为空")

    winds = [p.max_wind for p in track if p.max_wind is not None]
    if not winds or max(winds) <= 0:
        raise IncompleteObservationError(f"{header.storm_id}: 没有有效风速")
    max_wind = float(max(winds))

    pressures = [p.min_pressure for p in track if p.min_pressure is not None]
    if pressures:
        min_pressure = float(min(pressures))
    elif require_pressure:
        raise IncompleteObservationError(f"{header.storm_id}: 所有气压值缺测")
    else:
        logger.warning(f"{header.storm_id} {header.name}: 所有气压值缺测")
        min_pressure = None

    category = classify_saffir_simpson(max_wind, thresholds)
    damage = damage_lookup.lookup(header.storm_id, header.name, header.year) if damage_lookup else 0.0

    return StormRecord(
        storm_id=header.storm_id,
        name=header.name,
        season=header.year,
        max_wind_speed=max_wind,
        min_central_pressure=min_pressure,
        mean_latitude=float(np.mean([p.latitude for p in track])),
        category=category,
        intensity_group=IntensityGroup.for_category(category),
        damage_usd_2019=damage,
        n_points=len(track),
    )


def summarize_storms(
    storms: Iterable[StormTrack],
    damage_lookup: Optional[DamageTable] = None,
    start_season: Optional[int] = None,
    end_season: Optional[int] = None,
    thresholds: Optional[Dict[str, int]] = None,
) -> List[StormRecord]:
    """汇总并按季节窗口过滤 (默认 1960 年起); thresholds 为 Saffir-Simpson 等级下限"""
    start_season = settings.START_SEASON if start_season is None else start_season
    records = []
    skipped = 0
    for header, track in storms:
        if header.year < start_season or (end_season is not None and header.year > end_season):
            skipped += 1
            continue
        records.append(summarize_storm(header, track, damage_lookup, thresholds=thresholds))
    logger.info(f"风暴汇总: 保留 {len(records)} 个, 窗口外 {skipped} 个")
    return records
