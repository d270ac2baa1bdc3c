"""
运行清单 - 输入哈希、配置和产出哈希; 清单 id 不含时间戳, 相同输入和种子重跑得到相同 id
"""
import hashlib
import json
import logging
import zlib
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from ..database import get_db, init_db
from ..exceptions import ArtifactMismatchError
from ..models import RunRecord
from .chain_store import json_default

logger = logging.getLogger(__name__)


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """每个阶段一个确定性的子随机流"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(stage.encode("utf-8")),)))


class FileRef(BaseModel):
    path: str
    sha256: str

    @classmethod
    def of(cls, path: Union[str, Path]) -> "FileRef":
        return cls(path=str(path), sha256=file_sha256(path))


class RunManifest(BaseModel):
    command: str
    seed: Optional[int] = None
    inputs: Dict[str, FileRef] = Field(default_factory=dict)
    config: Dict = Field(default_factory=dict)
    artifacts: Dict[str, FileRef] = Field(default_factory=dict)
    started_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    finished_at: Optional[datetime] = None

    def add_input(self, name: str, path: Union[str, Path]) -> None:
        self.inputs[name] = FileRef.of(path)

    def add_artifact(self, name: str, path: Union[str, Path]) -> None:
        self.artifacts[name] = FileRef.of(path)

    @property
    def manifest_id(self) -> str:
        payload = {
            "command": self.command,
            "seed": self.seed,
            "inputs": {k: v.sha256 for k, v in sorted(self.inputs.items())},
            "config": self.config,
            "artifacts": {k: v.sha256 for k, v in sorted(self.artifacts.items())},
        }
        text = json.dumps(payload, sort_keys=True, default=json_default)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def finish(self, path: Union[str, Path], database_url: Optional[str] = None) -> Path:
        """写出清单 JSON 并登记到运行记录库"""
        self.finished_at = datetime.now(timezone.utc)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = self.model_dump(mode="json")
        data["manifest_id"] = self.manifest_id
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True, default=json_default)
        record_run(self, database_url)
        logger.info(f"运行清单 {self.manifest_id[:12]} 写出: {path}")
        return path


def manifest_path(artifact: Union[str, Path]) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.stem + ".manifest.json")


def record_run(manifest: RunManifest, database_url: Optional[str] = None) -> None:
    init_db(database_url)
    with get_db(database_url) as db:
        db.add(RunRecord(
            manifest_id=manifest.manifest_id,
            command=manifest.command,
            seed=manifest.seed,
            inputs={k: v.model_dump() for k, v in manifest.inputs.items()},
            config=json.loads(json.dumps(manifest.config, default=json_default)),
            artifacts={k: v.model_dump() for k, v in manifest.artifacts.items()},
            started_at=manifest.started_at,
            finished_at=manifest.finished_at,
        ))
        db.commit()


def check_dataset_hash(expected: Optional[str], dataset_path: Union[str, Path]) -> None:
    """链记录的数据集哈希与当前数据集不一致时拒绝"""
    if expected is None:
        return
    actual = file_sha256(dataset_path)
    if actual != expected:
        raise ArtifactMismatchError(
            f"数据集 {dataset_path} 的哈希 {actual[:12]} 与链记录的 {expected[:12]} 不一致"
        )


def stage_seed(seed: int, stage: str) -> int:
    """阶段子种子 (供需要整数种子的采样器使用)"""
    sequence = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(stage.encode("utf-8")),))
    return int(sequence.generate_state(1)[0])
