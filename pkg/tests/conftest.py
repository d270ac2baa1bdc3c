import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from cyclone_risk.schemas import CovariateRow, IntensityGroup, SeasonObservation

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"

COVARIATE_NAMES = ["AMO", "SOI", "NAO", "NINO34", "SST", "SSN"]


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """运行记录库写到临时目录"""
    monkeypatch.setenv("CYCLONE_DATABASE_URL", f"sqlite:///{tmp_path / 'runs.db'}")
    monkeypatch.delenv("CYCLONE_SEED", raising=False)


def make_covariate_row(season: int, values=None) -> CovariateRow:
    values = list(values) if values is not None else [0.0] * len(COVARIATE_NAMES)
    return CovariateRow(season=season, names=["intercept"] + COVARIATE_NAMES, values=[1.0] + values)


def random_covariate_rows(rng: np.random.Generator, seasons) -> list:
    return [make_covariate_row(s, rng.normal(size=len(COVARIATE_NAMES)).tolist()) for s in seasons]


def make_season(season: int, group: IntensityGroup, n: int, l: int, d: float, covariates=None) -> SeasonObservation:
    return SeasonObservation(
        season=season,
        group=group,
        n_storms=n,
        n_damaging=l,
        total_damage_usd=d,
        covariates=covariates or make_covariate_row(season),
    )


def write_covariate_directory(directory: Path, first_year: int, last_year: int, names=None) -> Path:
    """每个指数一个 year,month,value CSV; 取值 = year 的小数部分 + month/100, 便于手算窗口均值"""
    directory.mkdir(parents=True, exist_ok=True)
    for k, name in enumerate(names or COVARIATE_NAMES):
        lines = ["year,month,value"]
        for year in range(first_year, last_year + 1):
            for month in range(1, 13):
                lines.append(f"{year},{month},{(year - 2000) * 0.1 + month / 100 + k:.4f}")
        (directory / f"{name.lower()}.csv").write_text("\n".join(lines) + "\n")
    return directory
