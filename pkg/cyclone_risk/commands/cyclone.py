"""
fit-cyclone / predict-cyclone 命令
"""
import argparse
import json
import logging

import numpy as np

from ..config import Settings
from ..core.cyclone_gev import (
    PARAMETER_NAMES,
    CyclonePrior,
    CycloneTransform,
    MLEConfig,
    build_cyclone_observations,
    fit_bayes,
    fit_mle,
    predict_cyclone,
)
from ..core.mcmc import PosteriorChain
from ..exceptions import InputError
from ..services.chain_store import json_default, read_chain, write_chain
from ..services.export import cyclone_tables, write_csv, write_predictive_jsonl
from ..services.manifest import RunManifest, check_dataset_hash, file_sha256, stage_rng, stage_seed
from .common import finish_manifest, load_dataset, mcmc_config, resolve_path

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    fit = subparsers.add_parser("fit-cyclone", help="拟合单个气旋的层级 GEV 模型")
    fit.add_argument("--data", required=True)
    fit.add_argument("--method", choices=["mle", "bayes"], default="bayes")
    fit.add_argument("--iters", dest="cyclone_iterations", type=int)
    fit.add_argument("--thin", dest="cyclone_thin", type=int)
    fit.add_argument("--starts", dest="mle_starts", type=int)
    fit.add_argument("--start-season", dest="start_season", type=int)
    fit.add_argument("--end-season", dest="end_season", type=int)
    fit.add_argument("--out", required=True, help="输出链 (.csv); MLE 同时写出 <out>.mle.json")
    fit.set_defaults(handler=run_fit)

    predict = subparsers.add_parser("predict-cyclone", help="单个气旋的后验预测")
    predict.add_argument("--chain", required=True)
    target = predict.add_mutually_exclusive_group(required=True)
    target.add_argument("--latitude", type=float, help="平均纬度 (度)")
    target.add_argument("--storm", help="数据集中的风暴 (storm_id 或 NAME:YEAR), 需要 --data")
    predict.add_argument("--data", help="数据集 (.jsonl)")
    predict.add_argument("--draws", dest="predictive_draws", type=int)
    predict.add_argument("--out", required=True)
    predict.set_defaults(handler=run_predict)


def run_fit(args: argparse.Namespace, cfg: Settings) -> int:
    data_path = resolve_path(cfg, args.data)
    out = resolve_path(cfg, args.out)
    dataset = load_dataset(cfg, data_path)
    stored = CycloneTransform.from_records(dataset.standardizations)
    if stored is None:
        logger.warning("数据集中没有气旋标准化参数, 按训练窗口重新估计")
    observations, transform = build_cyclone_observations(
        dataset.storms, cfg.START_SEASON, cfg.END_SEASON, transform=stored,
    )

    mle = fit_mle(observations, MLEConfig(
        n_starts=cfg.MLE_STARTS, jitter=cfg.MLE_JITTER, seed=stage_seed(cfg.SEED, "fit-cyclone:mle"),
    ))
    config = None
    if args.method == "mle":
        chain = PosteriorChain.point_mass(PARAMETER_NAMES, mle.params.to_vector(), model="cyclone", mle=mle.to_dict())
        mle_path = out.with_name(f"{out.stem}.mle.json")
        with open(mle_path, "w", encoding="utf-8") as f:
            json.dump({**mle.to_dict(), "transform": transform.to_dict()}, f,
                      ensure_ascii=False, indent=2, default=json_default)
    else:
        config = mcmc_config(cfg, cfg.CYCLONE_ITERATIONS, cfg.CYCLONE_THIN, "fit-cyclone:bayes")
        chain = fit_bayes(observations, CyclonePrior(), config, mle=mle)

    chain.metadata.update({
        "method": args.method,
        "cyclone_transform": transform.to_dict(),
        "dataset_sha256": file_sha256(data_path),
        "storm_ids": [o.storm_id for o in observations],
    })
    write_chain(chain, out)

    manifest = RunManifest(command="fit-cyclone", seed=cfg.SEED, config={
        "method": args.method,
        "stored_standardization": stored is not None,
        "start_season": cfg.START_SEASON,
        "end_season": cfg.END_SEASON,
        "mle_starts": cfg.MLE_STARTS,
        "mle_jitter": cfg.MLE_JITTER,
        "mcmc": config.describe() if config else None,
    })
    manifest.add_input("dataset", data_path)
    manifest.add_artifact("chain", out)
    if args.method == "mle":
        manifest.add_artifact("mle", mle_path)
    finish_manifest(manifest, cfg, out)
    return 0


def run_predict(args: argparse.Namespace, cfg: Settings) -> int:
    chain_path = resolve_path(cfg, args.chain)
    out = resolve_path(cfg, args.out)
    chain = read_chain(chain_path)
    if chain.metadata.get("model") != "cyclone":
        raise InputError(f"{chain_path} 不是气旋模型的链")
    transform = CycloneTransform.from_dict(chain.metadata["cyclone_transform"])

    summary = {"model": "cyclone"}
    if args.storm:
        if not args.data:
            raise InputError("--storm 需要同时指定 --data")
        data_path = resolve_path(cfg, args.data)
        check_dataset_hash(chain.metadata.get("dataset_sha256"), data_path)
        storm = load_dataset(cfg, data_path).storm(args.storm)
        latitude = storm.mean_latitude
        summary.update({"storm": f"{storm.name}:{storm.season}", "storm_id": storm.storm_id, "truth": {
            "min_pressure": storm.min_central_pressure,
            "max_wind": storm.max_wind_speed,
            "damage": storm.damage_usd_2019,
        }})
    else:
        latitude = args.latitude

    z2 = float(transform.z2(latitude))
    rng = stage_rng(cfg.SEED, f"predict-cyclone:{args.storm or latitude}")
    predictive = predict_cyclone(chain, z2, cfg.PREDICTIVE_DRAWS, rng, transform, cfg.MAX_RESAMPLE_ATTEMPTS)

    natural = predictive.natural_units()
    draws = {"z1": predictive.z1, "x1": predictive.x1, "x2": predictive.x2, **natural}
    summary.update({
        "latitude": latitude,
        "z2": z2,
        "n_draws": predictive.n_draws,
        "rejected": predictive.rejected,
        "median": {k: float(np.median(v)) for k, v in natural.items()},
    })
    tables = cyclone_tables(natural, cfg.DENSITY_BINS)
    write_predictive_jsonl(out, draws, tables, summary)

    manifest = RunManifest(command="predict-cyclone", seed=cfg.SEED, config={
        "latitude": latitude, "storm": args.storm, "draws": cfg.PREDICTIVE_DRAWS,
        "max_resample_attempts": cfg.MAX_RESAMPLE_ATTEMPTS,
    })
    manifest.add_input("chain", chain_path)
    manifest.add_artifact("predictive", out)
    for name, table in tables.items():
        manifest.add_artifact(name, write_csv(table, out.with_name(f"{out.stem}.{name}.csv")))
    finish_manifest(manifest, cfg, out)
    return 0
