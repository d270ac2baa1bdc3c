"""
预测结果导出 - JSON lines (抽样数组与分箱表) 和供外部绘图的 CSV
"""
import json
import logging
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np
import pandas as pd

from ..exceptions import InputError
from .chain_store import json_default

logger = logging.getLogger(__name__)


def mass_frame(values: np.ndarray) -> pd.DataFrame:
    """整数分箱的概率质量"""
    values = np.asarray(values).astype(int)
    counts = np.bincount(values) if values.size else np.zeros(0, dtype=int)
    return pd.DataFrame({"value": np.arange(len(counts)), "probability": counts / max(values.size, 1)})


def density_frame(values: np.ndarray, bins: int, total: int = None) -> pd.DataFrame:
    """
    等宽分箱密度; total 大于样本数时 (例如只对正损失取对数) 密度积分为 len(values)/total
    """
    values = np.asarray(values, dtype=float)
    total = total or values.size
    if values.size == 0:
        return pd.DataFrame(columns=["bin_lower", "bin_upper", "density"])
    counts, edges = np.histogram(values, bins=bins)
    widths = np.diff(edges)
    density = np.divide(counts, total * widths, out=np.zeros(len(counts)), where=widths > 0)
    return pd.DataFrame({"bin_lower": edges[:-1], "bin_upper": edges[1:], "density": density})


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g")
    return path


def write_predictive_jsonl(
    path: Union[str, Path],
    draws: Mapping[str, np.ndarray],
    tables: Mapping[str, pd.DataFrame],
    summary: Dict,
) -> Path:
    """每行一条记录: summary / draws / table"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = [{"kind": "summary", **summary}]
    records += [{"kind": "draws", "variable": k, "values": np.asarray(v).tolist()} for k, v in draws.items()]
    records += [{"kind": "table", "name": k, "rows": t.to_dict(orient="records")} for k, t in tables.items()]
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, default=json_default) + "\n")
    logger.info(f"预测结果写出: {path}")
    return path


def read_predictive_draws(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    draws = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                record = json.loads(line)
                if record.get("kind") == "draws":
                    draws[record["variable"]] = np.asarray(record["values"], dtype=float)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"无法读取预测结果 {path}: {e}")
    if not draws:
        raise InputError(f"{path} 中没有预测抽样")
    return draws


def read_predictive_summary(path: Union[str, Path]) -> Dict:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                record = json.loads(line)
                if record.get("kind") == "summary":
                    return record
    return {}


def season_tables(n: np.ndarray, l: np.ndarray, d: np.ndarray, bins: int) -> Dict[str, pd.DataFrame]:
    """N 与 L 按整数分箱; 正损失的 log D 分箱密度, 积分为 1 - P(D=0)"""
    d = np.asarray(d, dtype=float)
    positive = d[d > 0]
    return {
        "n_mass": mass_frame(n),
        "l_mass": mass_frame(l),
        "log_damage_density": density_frame(np.log(positive), bins, total=d.size),
    }


def cyclone_tables(draws: Mapping[str, np.ndarray], bins: int) -> Dict[str, pd.DataFrame]:
    return {f"{name}_density": density_frame(values, bins) for name, values in draws.items()}
