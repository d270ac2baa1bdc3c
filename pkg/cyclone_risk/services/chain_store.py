"""
链文件 - 列式 CSV (每个参数一列, 外加 log_posterior) 与同名 .json 元数据
"""
import json
import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..core.mcmc import PosteriorChain
from ..exceptions import ArtifactMismatchError, InputError

logger = logging.getLogger(__name__)

LOG_POSTERIOR_COLUMN = "log_posterior"


def json_default(value):
    """numpy 标量和数组转为 JSON 原生类型"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"无法序列化 {type(value).__name__}")


def sidecar_path(path: Union[str, Path]) -> Path:
    return Path(path).with_suffix(".json")


def write_chain(chain: PosteriorChain, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = chain.as_frame()
    frame[LOG_POSTERIOR_COLUMN] = chain.log_posterior
    # %.17g 保证浮点数往返不丢精度
    frame.to_csv(path, index=False, float_format="%.17g")

    sidecar = {
        "names": chain.names,
        "burn_in": chain.burn_in,
        "thin": chain.thin,
        "seed": chain.seed,
        "accepted": chain.accepted,
        "proposed": chain.proposed,
        "acceptance_rates": chain.acceptance_rates(),
        "step_sizes": chain.step_sizes,
        "config": chain.config,
        "metadata": chain.metadata,
    }
    with open(sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(sidecar, f, ensure_ascii=False, indent=2, sort_keys=True, default=json_default)
    logger.info(f"链写出: {path} ({chain.n_samples} 个样本)")
    return path


def read_chain(path: Union[str, Path]) -> PosteriorChain:
    path = Path(path)
    meta_path = sidecar_path(path)
    if not path.exists() or not meta_path.exists():
        raise InputError(f"找不到链文件或元数据: {path}, {meta_path}")
    with open(meta_path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    frame = pd.read_csv(path, float_precision="round_trip")
    names = meta["names"]
    if list(frame.columns) != names + [LOG_POSTERIOR_COLUMN]:
        raise ArtifactMismatchError(f"{path}: 列名与元数据不一致")
    return PosteriorChain(
        names=names,
        samples=frame[names].to_numpy(dtype=float),
        log_posterior=frame[LOG_POSTERIOR_COLUMN].to_numpy(dtype=float),
        accepted=meta["accepted"],
        proposed=meta["proposed"],
        burn_in=meta["burn_in"],
        thin=meta["thin"],
        seed=meta["seed"],
        step_sizes=meta.get("step_sizes", {}),
        config=meta.get("config", {}),
        metadata=meta.get("metadata", {}),
    )
