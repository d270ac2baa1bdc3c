"""
ingest 命令 - HURDAT2 + 协变量目录 + 损失表 -> 规范化数据集 (JSON lines)
"""
import argparse
import logging

from ..config import Settings
from ..core.cyclone_gev import build_cyclone_observations
from ..exceptions import InsufficientDataError
from ..services.covariates import build_covariate_table, load_covariate_directory
from ..services.damages import DamageTable
from ..services.dataset import Dataset, build_season_observations
from ..services.hurdat2 import Hurdat2Parser
from ..services.manifest import RunManifest
from ..services.storms import summarize_storms
from .common import finish_manifest, resolve_path

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("ingest", help="解析原始数据, 生成规范化数据集")
    parser.add_argument("--hurdat2", required=True, help="HURDAT2 文本文件")
    parser.add_argument("--covariates", required=True, help="协变量目录 (每个指数一个 CSV)")
    parser.add_argument("--damages", required=True, help="损失表 CSV (name,year,damage_usd_2019)")
    parser.add_argument("--damage-overrides", help="按 storm_id 指定损失的 CSV (用于 UNNAMED 风暴)")
    parser.add_argument("--start-season", dest="start_season", type=int)
    parser.add_argument("--end-season", dest="end_season", type=int)
    parser.add_argument("--out", required=True, help="输出数据集 (.jsonl)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, cfg: Settings) -> int:
    hurdat2_path = resolve_path(cfg, args.hurdat2)
    covariate_dir = resolve_path(cfg, args.covariates)
    damages_path = resolve_path(cfg, args.damages)
    overrides_path = resolve_path(cfg, args.damage_overrides)
    out = resolve_path(cfg, args.out)

    tracks = Hurdat2Parser().parse_file(hurdat2_path)
    damages = DamageTable.from_csv(damages_path, overrides_path)
    storms = summarize_storms(tracks, damages, cfg.START_SEASON, cfg.END_SEASON, cfg.SAFFIR_SIMPSON_KNOTS)

    series = load_covariate_directory(covariate_dir, cfg.COVARIATE_NAMES)
    years = sorted({year for s in series.values() for year in s.index.get_level_values(0)})
    last_storm_season = max((s.season for s in storms), default=cfg.START_SEASON - 1)
    last_season = cfg.END_SEASON if cfg.END_SEASON is not None else last_storm_season
    required = range(cfg.START_SEASON, last_season + 1)
    covariates = build_covariate_table(series, sorted(set(years) | set(required)), required, cfg.COVARIATE_NAMES)

    dataset = Dataset(
        storms=storms,
        seasons=build_season_observations(storms, covariates, cfg.START_SEASON, cfg.END_SEASON),
        covariates=covariates,
    )
    try:
        _, transform = build_cyclone_observations(storms, cfg.START_SEASON, cfg.END_SEASON)
        dataset.standardizations = transform.to_records()
    except InsufficientDataError as e:
        logger.warning(f"不记录气旋标准化参数: {e}")

    dataset.write_jsonl(out)
    summary = dataset.summary_frame()
    print(summary.to_string())

    manifest = RunManifest(command="ingest", config={
        "start_season": cfg.START_SEASON,
        "end_season": cfg.END_SEASON,
        "covariates": cfg.COVARIATE_NAMES,
        "saffir_simpson_knots": cfg.SAFFIR_SIMPSON_KNOTS,
    })
    manifest.add_input("hurdat2", hurdat2_path)
    manifest.add_input("damages", damages_path)
    if overrides_path is not None:
        manifest.add_input("damage_overrides", overrides_path)
    for name in cfg.COVARIATE_NAMES:
        matches = [p for p in covariate_dir.glob("*.csv") if p.stem.upper() == name.upper()]
        manifest.add_input(f"covariate_{name}", matches[0])
    manifest.add_artifact("dataset", out)
    finish_manifest(manifest, cfg, out)
    logger.info(f"数据集: {len(dataset.storms)} 个风暴, {len(dataset.seasons)} 条季节观测")
    return 0
