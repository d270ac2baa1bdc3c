"""
预测评分 - delta = 2 min(alpha, 1 - alpha), alpha 为真值在预测抽样下的经验分位
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..config import settings
from ..exceptions import InsufficientDataError, InvalidParamsError

MIN_SCORE_DRAWS = 1000


def empirical_percentile(draws: np.ndarray, value: float) -> float:
    """中秩经验分位: P(X < v) + P(X = v) / 2"""
    draws = np.asarray(draws, dtype=float)
    below = np.count_nonzero(draws < value)
    ties = np.count_nonzero(draws == value)
    return float((below + 0.5 * ties) / len(draws))


def delta_from_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParamsError(f"alpha 必须在 [0, 1]: {alpha}")
    return 2.0 * min(alpha, 1.0 - alpha)


@dataclass(frozen=True)
class DeltaScore:
    alpha: float
    delta: float
    n_draws: int
    interval: Tuple[float, float]
    inside_interval: bool

    def to_dict(self) -> Dict:
        return asdict(self)


def delta_score(draws: np.ndarray, truth: float, credible_level: float = None) -> DeltaScore:
    draws = np.asarray(draws, dtype=float)
    if draws.size < MIN_SCORE_DRAWS:
        raise InsufficientDataError(f"delta 评分至少需要 {MIN_SCORE_DRAWS} 个抽样, 实际 {draws.size}")
    credible_level = settings.CREDIBLE_LEVEL if credible_level is None else credible_level
    tail = (1 - credible_level) / 2
    lo, hi = np.quantile(draws, [tail, 1 - tail])
    alpha = empirical_percentile(draws, truth)
    return DeltaScore(
        alpha=alpha,
        delta=delta_from_alpha(alpha),
        n_draws=int(draws.size),
        interval=(float(lo), float(hi)),
        inside_interval=bool(lo <= truth <= hi),
    )


@dataclass(frozen=True)
class Rarity:
    """one-in-N 事件描述; 尾部概率为 0 时重现期为无穷, 只给出下界 n_draws"""

    tail: str
    tail_probability: float
    return_period: float
    standard_error: float
    lower_bound: Optional[float] = None

    def statement(self) -> str:
        side = "上尾" if self.tail == "upper" else "下尾"
        if math.isinf(self.return_period):
            return f"{side}: 超过 1/{self.lower_bound:.0f} 的极端事件"
        return f"{side}: 约 {self.return_period:.0f} 年一遇 (MC 标准误 {self.standard_error:.1f})"

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["statement"] = self.statement()
        return data


def rarity(alpha: float, n_draws: int) -> Rarity:
    """重现期 1 / min(alpha, 1 - alpha); 标准误用 delta 方法: se(p) / p^2"""
    if n_draws <= 0:
        raise InvalidParamsError("n_draws 必须为正")
    delta_from_alpha(alpha)
    tail = "upper" if alpha > 0.5 else "lower"
    p = min(alpha, 1.0 - alpha)
    if p == 0:
        return Rarity(tail=tail, tail_probability=0.0, return_period=math.inf,
                      standard_error=math.inf, lower_bound=float(n_draws))
    se_p = math.sqrt(p * (1 - p) / n_draws)
    return Rarity(tail=tail, tail_probability=p, return_period=1.0 / p, standard_error=se_p / p ** 2)


def score_storm(
    predictive_draws: Mapping[str, np.ndarray],
    truth: Mapping[str, float],
    credible_level: float = None,
) -> Dict[str, Dict]:
    """每个变量 (min_pressure, max_wind, damage) 的 delta 与重现期"""
    missing = [k for k in truth if k not in predictive_draws]
    if missing:
        raise InvalidParamsError(f"预测结果中没有变量 {missing}")
    out = {}
    for variable, value in truth.items():
        score = delta_score(predictive_draws[variable], value, credible_level)
        out[variable] = {**score.to_dict(), "rarity": rarity(score.alpha, score.n_draws).to_dict()}
    return out
