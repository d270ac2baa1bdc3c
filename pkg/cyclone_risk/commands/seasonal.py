"""
fit-seasonal / predict-season 命令
"""
import argparse
import logging

import numpy as np

from ..config import Settings
from ..core.seasonal import SeasonalModel, predictive_check
from ..exceptions import InputError
from ..schemas import IntensityGroup
from ..services.chain_store import read_chain, write_chain
from ..services.export import season_tables, write_csv, write_predictive_jsonl
from ..services.manifest import RunManifest, check_dataset_hash, file_sha256, stage_rng
from .common import finish_manifest, load_dataset, mcmc_config, resolve_path

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    fit = subparsers.add_parser("fit-seasonal", help="拟合季节模型 (单个强度分组)")
    fit.add_argument("--group", required=True, choices=[g.value for g in IntensityGroup])
    fit.add_argument("--data", required=True, help="数据集 (.jsonl)")
    fit.add_argument("--iters", dest="seasonal_iterations", type=int)
    fit.add_argument("--thin", dest="seasonal_thin", type=int)
    fit.add_argument("--covariate-mask", help="逗号分隔的协变量子集, 截距始终保留")
    fit.add_argument("--start-season", dest="start_season", type=int)
    fit.add_argument("--end-season", dest="end_season", type=int)
    fit.add_argument("--out", required=True, help="输出链 (.csv)")
    fit.set_defaults(handler=run_fit)

    predict = subparsers.add_parser("predict-season", help="季节后验预测")
    predict.add_argument("--chain", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--year", type=int, required=True)
    predict.add_argument("--draws", dest="predictive_draws", type=int)
    predict.add_argument("--out", required=True, help="输出预测结果 (.jsonl)")
    predict.set_defaults(handler=run_predict)


def run_fit(args: argparse.Namespace, cfg: Settings) -> int:
    data_path = resolve_path(cfg, args.data)
    out = resolve_path(cfg, args.out)
    dataset = load_dataset(cfg, data_path)
    group = IntensityGroup(args.group)
    mask = [m.strip() for m in args.covariate_mask.split(",")] if args.covariate_mask else None

    observations = [
        o for o in dataset.season_observations(group)
        if o.season >= cfg.START_SEASON and (cfg.END_SEASON is None or o.season <= cfg.END_SEASON)
    ]
    config = mcmc_config(cfg, cfg.SEASONAL_ITERATIONS, cfg.SEASONAL_THIN, f"fit-seasonal:{group.value}")
    chain = SeasonalModel(group, covariate_mask=mask, covariate_names=cfg.COVARIATE_NAMES).fit(observations, config)
    chain.metadata["dataset_sha256"] = file_sha256(data_path)
    write_chain(chain, out)

    manifest = RunManifest(command="fit-seasonal", seed=cfg.SEED, config={
        "group": group.value,
        "covariate_mask": mask,
        "start_season": cfg.START_SEASON,
        "end_season": cfg.END_SEASON,
        "mcmc": config.describe(),
    })
    manifest.add_input("dataset", data_path)
    manifest.add_artifact("chain", out)
    manifest.add_artifact("chain_metadata", out.with_suffix(".json"))
    finish_manifest(manifest, cfg, out)
    return 0


def run_predict(args: argparse.Namespace, cfg: Settings) -> int:
    chain_path = resolve_path(cfg, args.chain)
    data_path = resolve_path(cfg, args.data)
    out = resolve_path(cfg, args.out)

    chain = read_chain(chain_path)
    if chain.metadata.get("model") != "seasonal":
        raise InputError(f"{chain_path} 不是季节模型的链")
    check_dataset_hash(chain.metadata.get("dataset_sha256"), data_path)
    dataset = load_dataset(cfg, data_path)
    group = IntensityGroup(chain.metadata["group"])
    covariates = dataset.covariates_for(args.year)

    rng = stage_rng(cfg.SEED, f"predict-season:{group.value}:{args.year}")
    predictive = SeasonalModel(group).predict(chain, covariates, cfg.PREDICTIVE_DRAWS, rng)

    summary = {
        "model": "seasonal",
        "group": group.value,
        "season": args.year,
        "n_draws": predictive.n_draws,
        "p_zero_damage": predictive.zero_damage_probability,
        "mean_n": float(np.mean(predictive.n)),
        "mean_l": float(np.mean(predictive.l)),
    }
    observed = [o for o in dataset.season_observations(group) if o.season == args.year]
    if observed:
        check = predictive_check(predictive, observed[0], cfg.CREDIBLE_LEVEL)
        summary["check"] = {
            "observed": check.observed,
            "percentile": check.percentile,
            "inside_interval": check.inside_interval,
            "interval": check.interval,
        }
        logger.info(f"{args.year} 年 {group.value} 观测分位: {check.percentile}")

    tables = season_tables(predictive.n, predictive.l, predictive.d, cfg.DENSITY_BINS)
    write_predictive_jsonl(out, {"n": predictive.n, "l": predictive.l, "d": predictive.d}, tables, summary)

    manifest = RunManifest(command="predict-season", seed=cfg.SEED, config={
        "year": args.year, "draws": cfg.PREDICTIVE_DRAWS, "density_bins": cfg.DENSITY_BINS,
    })
    manifest.add_input("chain", chain_path)
    manifest.add_input("dataset", data_path)
    manifest.add_artifact("predictive", out)
    for name, table in tables.items():
        manifest.add_artifact(name, write_csv(table, out.with_name(f"{out.stem}.{name}.csv")))
    finish_manifest(manifest, cfg, out)
    return 0
