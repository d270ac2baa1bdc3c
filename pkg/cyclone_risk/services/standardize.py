from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..exceptions import DegenerateSeriesError
from ..schemas import StandardizationRecord


@dataclass(frozen=True)
class Standardization:
    """(x - mean) / sd, 使用训练集的样本标准差 (ddof=1)"""

    mean: float
    sd: float

    def apply(self, value):
        return (np.asarray(value, dtype=float) - self.mean) / self.sd if np.ndim(value) else (
            (float(value) - self.mean) / self.sd
        )

    def invert(self, value):
        return np.asarray(value, dtype=float) * self.sd + self.mean if np.ndim(value) else (
            float(value) * self.sd + self.mean
        )

    def to_record(self, variable: str) -> StandardizationRecord:
        return StandardizationRecord(variable=variable, mean=self.mean, sd=self.sd)

    @classmethod
    def from_record(cls, record: StandardizationRecord) -> "Standardization":
        return cls(mean=record.mean, sd=record.sd)

    @classmethod
    def fit(cls, series: Sequence[float]) -> "Standardization":
        values = np.asarray(series, dtype=float)
        if len(values) < 2:
            raise DegenerateSeriesError(f"标准化至少需要 2 个值, 实际 {len(values)}")
        sd = float(values.std(ddof=1))
        if not np.isfinite(sd) or sd == 0:
            raise DegenerateSeriesError("序列标准差为 0, 无法标准化")
        return cls(mean=float(values.mean()), sd=sd)


def standardize(series: Sequence[float]) -> Tuple[List[float], float, float]:
    transform = Standardization.fit(series)
    return transform.apply(np.asarray(series, dtype=float)).tolist(), transform.mean, transform.sd
