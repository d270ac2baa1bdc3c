import json
import sys
from pathlib import Path
from typing import Dict, Optional, Union

from ..config import Settings
from ..core.mcmc import MCMCConfig
from ..services.chain_store import json_default
from ..services.dataset import Dataset
from ..services.manifest import RunManifest, manifest_path, stage_seed


def resolve_path(cfg: Settings, path: Optional[Union[str, Path]]) -> Optional[Path]:
    """相对路径以 DATA_ROOT 为根"""
    if path is None:
        return None
    path = Path(path)
    return path if path.is_absolute() else Path(cfg.DATA_ROOT) / path


def load_dataset(cfg: Settings, path: Union[str, Path]) -> Dataset:
    return Dataset.read_jsonl(resolve_path(cfg, path))


def mcmc_config(cfg: Settings, iterations: int, thin: int, stage: str) -> MCMCConfig:
    return MCMCConfig.from_fraction(
        iterations,
        cfg.BURN_IN_FRACTION,
        thin=thin,
        seed=stage_seed(cfg.SEED, stage),
        target_rate=cfg.TARGET_ACCEPTANCE,
        adapt_window=cfg.ADAPT_WINDOW,
    )


def emit_json(data: Dict) -> None:
    json.dump(data, sys.stdout, ensure_ascii=False, indent=2, default=json_default)
    sys.stdout.write("\n")


def finish_manifest(manifest: RunManifest, cfg: Settings, primary_artifact: Path) -> Path:
    return manifest.finish(manifest_path(primary_artifact), cfg.DATABASE_URL)
