"""
季节模型 - 每个强度分组:
  N ~ NegBinom(r, r/(r+lambda)) (低强度) 或 Poisson(lambda) (高强度), log lambda = x beta
  L | N ~ Binomial(N, theta)
  D | L, N ~ (1 - (1-theta)^N) Lognormal(mu, sigma) + (1-theta)^N * 0
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from ..config import settings
from ..exceptions import (
    DimensionMismatchError,
    InconsistentObservationError,
    InsufficientDataError,
    InvalidParamsError,
    TooShortChainError,
)
from ..schemas import CovariateRow, IntensityGroup, SeasonObservation
from ..services.covariates import INTERCEPT, covariate_matrix
from ..services.standardize import Standardization
from .diagnostics import diagnostics
from .distributions import Beta, Gamma, Lognormal, Normal, Uniform, family_logpmf_logpdf
from .mcmc import Block, MCMCConfig, ParameterSpec, PosteriorChain, Support, run_metropolis_within_gibbs
from .scoring import empirical_percentile

logger = logging.getLogger(__name__)

MIN_SEASONS = 10
# exp(40) 已远超任何现实的年频数
MAX_LOG_RATE = 40.0


@dataclass(frozen=True)
class SeasonalModelParams:
    group: IntensityGroup
    beta: tuple
    theta: float
    mu_dam: float
    sigma_dam: float
    r: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if (self.r is not None) != (self.group == IntensityGroup.LOW):
            raise InvalidParamsError("r 仅用于低强度分组, 且低强度分组必须提供 r")
        if self.r is not None and self.r <= 0:
            raise InvalidParamsError(f"r 必须为正: {self.r}")
        if not 0 <= self.theta <= 1:
            raise InvalidParamsError(f"theta 必须在 [0, 1]: {self.theta}")
        if self.sigma_dam <= 0:
            raise InvalidParamsError(f"sigma_dam 必须为正: {self.sigma_dam}")

    def rate(self, x: np.ndarray) -> np.ndarray:
        """lambda(x) = exp(x beta)"""
        return np.exp(np.minimum(np.asarray(x) @ np.asarray(self.beta), MAX_LOG_RATE))


@dataclass(frozen=True)
class SeasonalPrior:
    """beta ~ N(0, 1e5 I); theta ~ Beta(1,1); mu ~ N(0, 1e5); 1/sigma^2 ~ Gamma(1,1); r ~ U(0,70)"""

    beta_var: float = 1e5
    theta_a: float = 1.0
    theta_b: float = 1.0
    mu_mean: float = 0.0
    mu_var: float = 1e5
    precision_shape: float = 1.0
    precision_rate: float = 1.0
    r_upper: float = 70.0


@dataclass
class CovariateScaling:
    """非截距协变量按训练集标准化"""

    names: List[str]
    transforms: Dict[str, Standardization] = field(default_factory=dict)

    @classmethod
    def fit(cls, rows: Sequence[CovariateRow], mask: Optional[Sequence[str]] = None) -> "CovariateScaling":
        matrix, names = covariate_matrix(rows, mask)
        transforms = {
            name: Standardization.fit(matrix[:, j]) for j, name in enumerate(names) if name != INTERCEPT
        }
        return cls(names=names, transforms=transforms)

    @classmethod
    def identity(cls, names: Sequence[str]) -> "CovariateScaling":
        return cls(names=list(names))

    def design(self, rows: Sequence[CovariateRow]) -> np.ndarray:
        if not rows:
            return np.empty((0, len(self.names)))
        out = np.empty((len(rows), len(self.names)))
        for i, row in enumerate(rows):
            missing = [n for n in self.names if n not in row.names]
            if missing:
                raise DimensionMismatchError(f"{row.season} 年协变量缺少 {missing}")
            for j, name in enumerate(self.names):
                value = row.values[row.names.index(name)]
                transform = self.transforms.get(name)
                out[i, j] = transform.apply(value) if transform else value
        return out

    def to_dict(self) -> Dict:
        return {
            "names": self.names,
            "mean": {k: t.mean for k, t in self.transforms.items()},
            "sd": {k: t.sd for k, t in self.transforms.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "CovariateScaling":
        transforms = {k: Standardization(mean=data["mean"][k], sd=data["sd"][k]) for k in data.get("mean", {})}
        return cls(names=list(data["names"]), transforms=transforms)


@dataclass
class SeasonArrays:
    n: np.ndarray
    l: np.ndarray
    d: np.ndarray
    x: np.ndarray

    @classmethod
    def from_observations(cls, data: Sequence[SeasonObservation], scaling: CovariateScaling) -> "SeasonArrays":
        n = np.array([o.n_storms for o in data], dtype=float)
        l = np.array([o.n_damaging for o in data], dtype=float)
        d = np.array([o.total_damage_usd for o in data], dtype=float)
        bad = [o.season for o in data if o.total_damage_usd > 0 and o.n_damaging == 0]
        if bad:
            raise InconsistentObservationError(f"D > 0 但 L = 0 的季节: {bad}")
        return cls(n=n, l=l, d=d, x=scaling.design([o.covariates for o in data]))

    @property
    def damaging(self) -> np.ndarray:
        return self.d > 0


# ---- 三个阶段的对数似然 ----

def frequency_log_likelihood(params: SeasonalModelParams, n: np.ndarray, x: np.ndarray) -> float:
    eta = np.minimum(x @ np.asarray(params.beta), MAX_LOG_RATE)
    if params.group == IntensityGroup.LOW:
        r = params.r
        log_denominator = np.logaddexp(np.log(r), eta)
        log_p = np.log(r) - log_denominator
        log_1mp = eta - log_denominator
        terms = gammaln(n + r) - gammaln(r) - gammaln(n + 1) + r * log_p + n * log_1mp
    else:
        terms = n * eta - np.exp(eta) - gammaln(n + 1)
    return float(np.sum(terms))


def damage_event_log_likelihood(theta: float, n: np.ndarray, l: np.ndarray) -> float:
    """n = 0 的季节贡献 log 1 = 0"""
    terms = gammaln(n + 1) - gammaln(l + 1) - gammaln(n - l + 1) + xlogy(l, theta) + xlog1py(n - l, -theta)
    return float(np.sum(terms))


def damage_value_log_likelihood(params: SeasonalModelParams, n: np.ndarray, l: np.ndarray, d: np.ndarray) -> float:
    """D = 0: n log(1-theta); D > 0: log(1 - (1-theta)^n) + lognormal 对数密度"""
    positive = d > 0
    if np.any(positive & (l == 0)):
        raise InconsistentObservationError("D > 0 但 L = 0")
    zero_part = np.sum(xlog1py(n[~positive], -params.theta))
    if not np.any(positive):
        return float(zero_part)
    with np.errstate(divide="ignore"):
        weight = np.log(-np.expm1(n[positive] * np.log1p(-params.theta)))
    density = family_logpmf_logpdf(d[positive], Lognormal(params.mu_dam, params.sigma_dam))
    return float(zero_part + np.sum(weight + density))


def seasonal_log_likelihood(
    params: SeasonalModelParams,
    data: Sequence[SeasonObservation],
    scaling: Optional[CovariateScaling] = None,
) -> float:
    """三阶段对数似然之和; scaling 为 None 时使用原始协变量"""
    wrong = [o.season for o in data if o.group != params.group]
    if wrong:
        raise InvalidParamsError(f"观测分组与参数分组 {params.group.value} 不一致: {wrong}")
    if not data:
        return 0.0
    scaling = scaling or CovariateScaling.identity(data[0].covariates.names)
    arrays = SeasonArrays.from_observations(data, scaling)
    if arrays.x.shape[1] != len(params.beta):
        raise DimensionMismatchError(f"beta 维度 {len(params.beta)} 与协变量维度 {arrays.x.shape[1]} 不一致")
    return (
        frequency_log_likelihood(params, arrays.n, arrays.x)
        + damage_event_log_likelihood(params.theta, arrays.n, arrays.l)
        + damage_value_log_likelihood(params, arrays.n, arrays.l, arrays.d)
    )


@dataclass
class PredictiveSample:
    """一个季节一个分组的后验预测抽样"""

    group: IntensityGroup
    season: Optional[int]
    n: np.ndarray
    l: np.ndarray
    d: np.ndarray

    @property
    def n_draws(self) -> int:
        return len(self.n)

    @property
    def zero_damage_probability(self) -> float:
        return float(np.mean(self.d == 0))


@dataclass
class PredictiveCheck:
    percentile: Dict[str, float]
    inside_interval: Dict[str, bool]
    interval: Dict[str, tuple]
    p_zero_damage: float
    observed: Dict[str, float]


def predictive_check(
    predictive: PredictiveSample,
    observed: SeasonObservation,
    credible_level: float = None,
) -> PredictiveCheck:
    credible_level = settings.CREDIBLE_LEVEL if credible_level is None else credible_level
    tail = (1 - credible_level) / 2
    observed_values = {"n": observed.n_storms, "l": observed.n_damaging, "d": observed.total_damage_usd}
    draws = {"n": predictive.n, "l": predictive.l, "d": predictive.d}
    percentile, inside, interval = {}, {}, {}
    for key, values in draws.items():
        lo, hi = np.quantile(values, [tail, 1 - tail])
        interval[key] = (float(lo), float(hi))
        percentile[key] = empirical_percentile(values, observed_values[key])
        inside[key] = bool(lo <= observed_values[key] <= hi)
    return PredictiveCheck(
        percentile=percentile,
        inside_interval=inside,
        interval=interval,
        p_zero_damage=predictive.zero_damage_probability,
        observed={k: float(v) for k, v in observed_values.items()},
    )


class SeasonalModel:
    """单个强度分组的季节模型: 拟合与后验预测"""

    def __init__(
        self,
        group: IntensityGroup,
        prior: Optional[SeasonalPrior] = None,
        covariate_mask: Optional[Sequence[str]] = None,
        covariate_names: Optional[Sequence[str]] = None,
    ):
        self.group = IntensityGroup(group)
        self.prior = prior or SeasonalPrior()
        self.covariate_mask = list(covariate_mask) if covariate_mask else None
        self.covariate_names = list(covariate_names or settings.COVARIATE_NAMES)

    @property
    def is_low(self) -> bool:
        return self.group == IntensityGroup.LOW

    def parameter_names(self, scaling: CovariateScaling) -> List[str]:
        names = [f"beta_{n}" for n in scaling.names]
        if self.is_low:
            names.append("r")
        return names + ["theta", "mu_dam", "sigma_dam"]

    def unpack(self, vector: np.ndarray, q: int) -> SeasonalModelParams:
        beta = vector[:q]
        offset = q
        r = None
        if self.is_low:
            r = float(vector[offset])
            offset += 1
        return SeasonalModelParams(
            group=self.group,
            beta=beta,
            r=r,
            theta=float(vector[offset]),
            mu_dam=float(vector[offset + 1]),
            sigma_dam=float(vector[offset + 2]),
        )

    def log_prior(self, params: SeasonalModelParams) -> float:
        p = self.prior
        beta = np.asarray(params.beta)
        lp = float(np.sum(family_logpmf_logpdf(beta, Normal(0.0, p.beta_var))))
        lp += float(family_logpmf_logpdf(params.theta, Beta(p.theta_a, p.theta_b)))
        lp += float(family_logpmf_logpdf(params.mu_dam, Normal(p.mu_mean, p.mu_var)))
        # 1/sigma^2 ~ Gamma 换元到 sigma: |d tau / d sigma| = 2 sigma^-3
        precision = params.sigma_dam ** -2
        lp += float(family_logpmf_logpdf(precision, Gamma(p.precision_shape, p.precision_rate)))
        lp += np.log(2.0) - 3.0 * np.log(params.sigma_dam)
        if self.is_low:
            if not 0 < params.r < p.r_upper:
                return -np.inf
            lp += float(family_logpmf_logpdf(params.r, Uniform(0.0, p.r_upper)))
        return lp

    def _scaling(self, data: Sequence[SeasonObservation]) -> CovariateScaling:
        if data:
            return CovariateScaling.fit([o.covariates for o in data], self.covariate_mask)
        names = [INTERCEPT] + [n for n in self.covariate_names if not self.covariate_mask or n in self.covariate_mask]
        return CovariateScaling.identity(names)

    def fit(self, data: Sequence[SeasonObservation], config: MCMCConfig) -> PosteriorChain:
        """
        beta 与 r 用随机游走 MH; theta 用 Beta 共轭提议加独立 MH 修正;
        mu_dam 与 sigma_dam 用正态/Gamma 共轭精确抽样
        """
        data = list(data)
        wrong = [o.season for o in data if o.group != self.group]
        if wrong:
            raise InvalidParamsError(f"观测分组与模型分组 {self.group.value} 不一致: {wrong}")
        if 0 < len(data) < MIN_SEASONS:
            raise InsufficientDataError(f"季节模型至少需要 {MIN_SEASONS} 个季节, 实际 {len(data)}")
        if not data:
            logger.warning("没有观测数据, 只按先验采样")

        scaling = self._scaling(data)
        arrays = SeasonArrays.from_observations(data, scaling)
        q = len(scaling.names)
        names = self.parameter_names(scaling)
        idx_theta = names.index("theta")
        idx_mu = names.index("mu_dam")
        idx_sigma = names.index("sigma_dam")
        prior = self.prior

        positive = arrays.damaging
        log_d = np.log(arrays.d[positive])
        n_pos = arrays.n[positive]
        zero_n = arrays.n[~positive].sum()

        def logpost(vector: np.ndarray) -> float:
            params = self.unpack(vector, q)
            lp = self.log_prior(params)
            if not np.isfinite(lp):
                return -np.inf
            return lp + (
                frequency_log_likelihood(params, arrays.n, arrays.x)
                + damage_event_log_likelihood(params.theta, arrays.n, arrays.l)
                + damage_value_log_likelihood(params, arrays.n, arrays.l, arrays.d)
            )

        theta_a = prior.theta_a + arrays.l.sum()
        theta_b = prior.theta_b + (arrays.n - arrays.l).sum() + zero_n

        def draw_theta(vector, rng):
            return np.array([rng.beta(theta_a, theta_b)])

        def theta_correction(vector):
            # 正损失季节的混合权重 log(1 - (1-theta)^n) 不是 Beta 共轭部分
            if n_pos.size == 0:
                return 0.0
            with np.errstate(divide="ignore"):
                return float(np.sum(np.log(-np.expm1(n_pos * np.log1p(-vector[idx_theta])))))

        def draw_mu(vector, rng):
            sigma2 = vector[idx_sigma] ** 2
            precision = 1.0 / prior.mu_var + log_d.size / sigma2
            mean = (prior.mu_mean / prior.mu_var + log_d.sum() / sigma2) / precision
            return np.array([rng.normal(mean, np.sqrt(1.0 / precision))])

        def draw_sigma(vector, rng):
            shape = prior.precision_shape + log_d.size / 2.0
            rate = prior.precision_rate + np.sum((log_d - vector[idx_mu]) ** 2) / 2.0
            return np.array([rng.gamma(shape, 1.0 / rate) ** -0.5])

        specs = self._initial_specs(arrays, scaling, names)
        blocks = [Block(name="beta", parameters=[n for n in names if n.startswith("beta_")])]
        if self.is_low:
            blocks.append(Block(name="r", parameters=["r"]))
        blocks += [
            Block(name="theta", parameters=["theta"], conjugate=draw_theta, correction=theta_correction),
            Block(name="mu_dam", parameters=["mu_dam"], conjugate=draw_mu),
            Block(name="sigma_dam", parameters=["sigma_dam"], conjugate=draw_sigma),
        ]
        run_config = MCMCConfig(
            iterations=config.iterations,
            burn_in=config.burn_in,
            thin=config.thin,
            seed=config.seed,
            blocks=blocks,
            target_rate=config.target_rate,
            adapt_window=config.adapt_window,
        )
        logger.info(f"开始拟合季节模型 ({self.group.value}): {len(data)} 个季节, {config.iterations} 次迭代")
        chain = run_metropolis_within_gibbs(logpost, specs, run_config)
        chain.metadata.update({
            "model": "seasonal",
            "group": self.group.value,
            "covariate_scaling": scaling.to_dict(),
            "n_seasons": len(data),
            "seasons": [o.season for o in data],
        })
        try:
            chain.metadata["diagnostics"] = diagnostics(chain).reset_index().to_dict(orient="records")
        except TooShortChainError as e:
            logger.warning(f"跳过诊断: {e}")
        return chain

    def _initial_specs(self, arrays: SeasonArrays, scaling: CovariateScaling, names: List[str]) -> List[ParameterSpec]:
        q = len(scaling.names)
        beta0 = np.zeros(q)
        steps = np.full(q, 0.1)
        if arrays.n.size:
            beta0[0] = np.log(arrays.n.mean() + 0.5)
            # Poisson 信息矩阵给出的初始步长
            info = arrays.x.T @ (arrays.x * np.exp(beta0[0]))
            try:
                steps = np.sqrt(np.clip(np.diag(np.linalg.inv(info)), 1e-8, None))
            except np.linalg.LinAlgError:
                logger.debug("信息矩阵奇异, 使用默认步长")
        else:
            steps = np.full(q, np.sqrt(self.prior.beta_var))

        specs = [
            ParameterSpec(name=names[j], support=Support.REAL, initial=float(beta0[j]), step=float(steps[j]))
            for j in range(q)
        ]
        if self.is_low:
            specs.append(ParameterSpec(
                name="r", support=Support.BOUNDED, lower=0.0, upper=self.prior.r_upper,
                initial=min(10.0, self.prior.r_upper / 2), step=0.5,
            ))
        total_n = arrays.n.sum()
        theta0 = (arrays.l.sum() + 1.0) / (total_n + 2.0)
        log_d = np.log(arrays.d[arrays.damaging])
        mu0 = float(log_d.mean()) if log_d.size else 0.0
        sigma0 = float(log_d.std(ddof=1)) if log_d.size > 1 and log_d.std(ddof=1) > 0 else 1.0
        specs += [
            ParameterSpec(name="theta", support=Support.BOUNDED, lower=0.0, upper=1.0, initial=theta0, step=0.1),
            ParameterSpec(name="mu_dam", support=Support.REAL, initial=mu0, step=0.1),
            ParameterSpec(name="sigma_dam", support=Support.POSITIVE, initial=sigma0, step=0.1),
        ]
        return specs

    def predict(
        self,
        chain: PosteriorChain,
        covariates: CovariateRow,
        n_draws: int,
        rng: np.random.Generator,
    ) -> PredictiveSample:
        """逐次抽样: 从链中抽参数, 再依次抽 N, L | N, D | L"""
        scaling = CovariateScaling.from_dict(chain.metadata["covariate_scaling"])
        x = scaling.design([covariates])[0]
        beta_names = [f"beta_{n}" for n in scaling.names]
        missing = [n for n in beta_names if n not in chain.names]
        if missing:
            raise DimensionMismatchError(f"链中缺少系数 {missing}")

        rows = rng.integers(0, chain.n_samples, size=n_draws)
        beta = np.column_stack([chain.column(n)[rows] for n in beta_names])
        rate = np.exp(np.minimum(beta @ x, MAX_LOG_RATE))
        theta = chain.column("theta")[rows]
        mu = chain.column("mu_dam")[rows]
        sigma = chain.column("sigma_dam")[rows]

        if self.is_low:
            r = chain.column("r")[rows]
            n = rng.negative_binomial(r, r / (r + rate))
        else:
            n = rng.poisson(rate)
        l = rng.binomial(n, theta)
        # D > 0 当且仅当 L > 0, 因此 P(D = 0 | N = n) = (1 - theta)^n
        d = np.where(l > 0, rng.lognormal(mu, sigma), 0.0)
        return PredictiveSample(group=self.group, season=covariates.season, n=n, l=l, d=d)

    def simulate(
        self,
        params: SeasonalModelParams,
        covariates: Sequence[CovariateRow],
        rng: np.random.Generator,
        scaling: Optional[CovariateScaling] = None,
    ) -> List[SeasonObservation]:
        """按给定参数生成合成季节数据"""
        scaling = scaling or CovariateScaling.identity(covariates[0].names)
        x = scaling.design(list(covariates))
        rate = params.rate(x)
        if self.is_low:
            n = rng.negative_binomial(params.r, params.r / (params.r + rate))
        else:
            n = rng.poisson(rate)
        l = rng.binomial(n, params.theta)
        d = np.where(l > 0, rng.lognormal(params.mu_dam, params.sigma_dam, size=len(n)), 0.0)
        return [
            SeasonObservation(
                season=row.season,
                group=self.group,
                n_storms=int(n[i]),
                n_damaging=int(l[i]),
                total_damage_usd=float(d[i]),
                covariates=row,
            )
            for i, row in enumerate(covariates)
        ]


def fit_seasonal(
    data: Sequence[SeasonObservation],
    prior: Optional[SeasonalPrior],
    config: MCMCConfig,
    group: Optional[IntensityGroup] = None,
    covariate_mask: Optional[Sequence[str]] = None,
) -> PosteriorChain:
    if group is None:
        if not data:
            raise InsufficientDataError("没有观测时必须指定分组")
        group = data[0].group
    return SeasonalModel(group, prior, covariate_mask).fit(data, config)


def predict_season(
    chain: PosteriorChain,
    covariates: CovariateRow,
    group: IntensityGroup,
    n_draws: int,
    rng: np.random.Generator,
) -> PredictiveSample:
    return SeasonalModel(group).predict(chain, covariates, n_draws, rng)


def expected_damage_summary(chain: PosteriorChain, credible_level: float = None) -> Dict[str, Dict[str, float]]:
    """
    年损失水平: exp(mu) (对数尺度中位数) 与 exp(mu + sigma^2/2) (均值) 的后验均值和可信区间
    """
    credible_level = settings.CREDIBLE_LEVEL if credible_level is None else credible_level
    tail = (1 - credible_level) / 2
    mu = chain.column("mu_dam")
    sigma = chain.column("sigma_dam")
    summary = {}
    for label, values in (("median_damage", np.exp(mu)), ("mean_damage", np.exp(mu + sigma ** 2 / 2))):
        lo, hi = np.quantile(values, [tail, 1 - tail])
        summary[label] = {"mean": float(values.mean()), "lower": float(lo), "upper": float(hi)}
    summary["log_scale_mu"] = {
        "mean": float(mu.mean()),
        "lower": float(np.quantile(mu, tail)),
        "upper": float(np.quantile(mu, 1 - tail)),
    }
    return summary


def combined_expected_damage(
    chains: Sequence[PosteriorChain],
    credible_level: float = None,
    statistic: str = "median_damage",
) -> Dict[str, float]:
    """各分组年损失逐样本相加 (按最短链尾部对齐); statistic 为 median_damage 或 mean_damage"""
    credible_level = settings.CREDIBLE_LEVEL if credible_level is None else credible_level
    tail = (1 - credible_level) / 2
    length = min(c.n_samples for c in chains)
    if statistic == "median_damage":
        total = sum(np.exp(c.column("mu_dam")[-length:]) for c in chains)
    elif statistic == "mean_damage":
        total = sum(
            np.exp(c.column("mu_dam")[-length:] + c.column("sigma_dam")[-length:] ** 2 / 2) for c in chains
        )
    else:
        raise InvalidParamsError(f"未知统计量: {statistic}")
    return {
        "mean": float(total.mean()),
        "lower": float(np.quantile(total, tail)),
        "upper": float(np.quantile(total, 1 - tail)),
    }


def simulate_seasons(
    params: SeasonalModelParams,
    covariates: Sequence[CovariateRow],
    rng: np.random.Generator,
) -> List[SeasonObservation]:
    """按已知参数生成合成季节 (协变量按原值使用)"""
    return SeasonalModel(params.group).simulate(params, covariates, rng)
