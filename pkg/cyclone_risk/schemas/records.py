import enum
import math
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SaffirSimpson(str, enum.Enum):
    TS = "TS"
    CAT1 = "1"
    CAT2 = "2"
    CAT3 = "3"
    CAT4 = "4"
    CAT5 = "5"

    @property
    def is_major(self) -> bool:
        return self in (SaffirSimpson.CAT3, SaffirSimpson.CAT4, SaffirSimpson.CAT5)


class IntensityGroup(str, enum.Enum):
    LOW = "low"
    HIGH = "high"

    @classmethod
    def for_category(cls, category: SaffirSimpson) -> "IntensityGroup":
        return cls.HIGH if category.is_major else cls.LOW


class StormRecord(BaseModel):
    """单个风暴的生命期汇总"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["storm"] = "storm"
    storm_id: str
    name: str
    season: int
    max_wind_speed: float = Field(gt=0, description="knots, 生命期最大值")
    min_central_pressure: Optional[float] = Field(default=None, gt=800, lt=1100, description="mb")
    mean_latitude: float = Field(ge=-90, le=90)
    category: SaffirSimpson
    intensity_group: IntensityGroup
    damage_usd_2019: float = Field(default=0.0, ge=0)
    n_points: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_group(self):
        if self.intensity_group != IntensityGroup.for_category(self.category):
            raise ValueError(f"{self.storm_id}: 强度分组与等级 {self.category.value} 不一致")
        return self

    @property
    def is_damaging(self) -> bool:
        return self.damage_usd_2019 > 0


class CovariateRow(BaseModel):
    """一个季节的协变量向量, 第一个元素为截距 1"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["covariates"] = "covariates"
    season: int
    names: List[str]
    values: List[float]

    @model_validator(mode="after")
    def _check_values(self):
        if len(self.names) != len(self.values):
            raise ValueError("协变量名称与取值长度不一致")
        if not self.values or self.values[0] != 1.0:
            raise ValueError("第一个协变量必须是截距 1")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError(f"{self.season} 年协变量含非有限值")
        return self

    @property
    def q(self) -> int:
        return len(self.values)


class SeasonObservation(BaseModel):
    """(季节, 分组) 的 (N, L, D) 观测"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["season"] = "season"
    season: int
    group: IntensityGroup
    n_storms: int = Field(ge=0)
    n_damaging: int = Field(ge=0)
    total_damage_usd: float = Field(ge=0)
    covariates: CovariateRow

    @model_validator(mode="after")
    def _check_counts(self):
        if self.n_damaging > self.n_storms:
            raise ValueError(f"{self.season}/{self.group.value}: n_damaging > n_storms")
        if (self.total_damage_usd > 0) != (self.n_damaging > 0):
            raise ValueError(f"{self.season}/{self.group.value}: 损失总额与致损风暴数不一致")
        return self


class StandardizationRecord(BaseModel):
    """训练集标准化参数, 预测时复用"""

    kind: Literal["standardization"] = "standardization"
    variable: str
    mean: float
    sd: float = Field(gt=0)


DatasetRecord = Union[StormRecord, SeasonObservation, CovariateRow, StandardizationRecord]
