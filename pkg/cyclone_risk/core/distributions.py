"""
概率核心 - GEV 分布族以及模型和先验用到的标准分布族

所有函数都是纯函数; 随机数流由调用方持有 (numpy Generator)。
对数空间计算, 超出支撑集的点返回 -inf 而不是报错, 便于 MCMC 拒绝提议。
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import singledispatch
from typing import Optional, Union

import numpy as np
from scipy import stats
from scipy.special import gammaln

from ..exceptions import DomainError, InvalidParamsError

ArrayLike = Union[float, np.ndarray]

# |xi| 小于该阈值时走 Gumbel 分支
XI_ZERO_TOL = 1e-12


def _scalar_or_array(value: np.ndarray, like) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class GevParams:
    """GEV(mu, sigma, xi)"""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise InvalidParamsError(f"GEV 尺度参数必须为正: sigma={self.sigma}")
        if not (np.isfinite(self.mu) and np.isfinite(self.xi)):
            raise InvalidParamsError(f"GEV 参数必须有限: mu={self.mu}, xi={self.xi}")

    @property
    def is_gumbel(self) -> bool:
        return abs(self.xi) < XI_ZERO_TOL

    @property
    def upper_endpoint(self) -> float:
        """xi < 0 时为有限上端点 mu - sigma/xi"""
        if self.xi < 0 and not self.is_gumbel:
            return self.mu - self.sigma / self.xi
        return np.inf

    @property
    def lower_endpoint(self) -> float:
        if self.xi > 0 and not self.is_gumbel:
            return self.mu - self.sigma / self.xi
        return -np.inf


def _gev_log_t(x: np.ndarray, mu, sigma, xi) -> np.ndarray:
    """
    log t(x); 支撑集外返回 nan
    mu/sigma/xi 可以是与 x 同形状的数组 (层级模型中位置参数逐点不同)
    """
    z = (x - mu) / sigma
    xi = np.asarray(xi, dtype=float)
    gumbel = np.abs(xi) < XI_ZERO_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = xi * z
        safe_xi = np.where(gumbel, 1.0, xi)
        log_t = np.where(
            gumbel,
            -z,
            np.where(arg > -1.0, -np.log1p(np.where(arg > -1.0, arg, 0.0)) / safe_xi, np.nan),
        )
    return log_t


def gev_t(x: float, p: GevParams) -> float:
    """t(x) = (1 + xi (x-mu)/sigma)^(-1/xi), xi = 0 时为 exp(-(x-mu)/sigma)"""
    log_t = _gev_log_t(np.asarray(x, dtype=float), p.mu, p.sigma, p.xi)
    if np.any(np.isnan(log_t)):
        raise DomainError(f"x={x} 不在 GEV 支撑集内 (1 + xi(x-mu)/sigma <= 0)")
    return _scalar_or_array(np.exp(log_t), x)


def gev_logpdf_raw(x, mu, sigma, xi) -> np.ndarray:
    """向量化 logpdf, 参数可以逐点不同; 不做参数校验"""
    x = np.asarray(x, dtype=float)
    log_t = _gev_log_t(x, mu, sigma, xi)
    with np.errstate(over="ignore", invalid="ignore"):
        out = -np.log(sigma) + (np.asarray(xi) + 1.0) * log_t - np.exp(log_t)
    return np.where(np.isnan(log_t), -np.inf, out)


def gev_logpdf(x: ArrayLike, p: GevParams) -> ArrayLike:
    return _scalar_or_array(gev_logpdf_raw(x, p.mu, p.sigma, p.xi), x)


def gev_cdf(x: ArrayLike, p: GevParams) -> ArrayLike:
    """exp(-t(x)); 支撑集外按形状参数符号截断为 0 或 1"""
    xa = np.asarray(x, dtype=float)
    log_t = _gev_log_t(xa, p.mu, p.sigma, p.xi)
    with np.errstate(over="ignore"):
        cdf = np.exp(-np.exp(log_t))
    outside = np.isnan(log_t)
    if np.any(outside):
        # xi > 0: 低于下端点; xi < 0: 高于上端点
        fill = 0.0 if p.xi > 0 else 1.0
        cdf = np.where(outside, fill, cdf)
    return _scalar_or_array(cdf, x)


def gev_quantile_raw(u, mu, sigma, xi) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    log_y = np.log(-np.log(u))
    xi = np.asarray(xi, dtype=float)
    gumbel = np.abs(xi) < XI_ZERO_TOL
    safe_xi = np.where(gumbel, 1.0, xi)
    with np.errstate(over="ignore"):
        general = np.expm1(-safe_xi * log_y) / safe_xi
    return mu + sigma * np.where(gumbel, -log_y, general)


def gev_quantile(u: ArrayLike, p: GevParams) -> ArrayLike:
    ua = np.asarray(u, dtype=float)
    if np.any((ua <= 0) | (ua >= 1)) or np.any(np.isnan(ua)):
        raise DomainError(f"分位点必须在 (0, 1) 内: u={u}")
    return _scalar_or_array(gev_quantile_raw(ua, p.mu, p.sigma, p.xi), u)


def gev_sample(p: GevParams, rng: np.random.Generator, size: Optional[int] = None) -> ArrayLike:
    """逆 CDF 抽样"""
    u = rng.uniform(np.finfo(float).tiny, 1.0, size=size)
    draws = gev_quantile_raw(u, p.mu, p.sigma, p.xi)
    return draws if size is not None else float(draws)


def gev_return_level(return_period: ArrayLike, p: GevParams) -> ArrayLike:
    """T 年一遇水平: 1 - 1/T 分位点"""
    period = np.asarray(return_period, dtype=float)
    if np.any(period <= 1):
        raise DomainError(f"重现期必须大于 1: {return_period}")
    u = 1.0 - 1.0 / period
    return gev_quantile(u if np.ndim(return_period) else float(u), p)


# ---------------------------------------------------------------------------
# 标准分布族
# ---------------------------------------------------------------------------

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParamsError(message)


@dataclass(frozen=True)
class Lognormal:
    mu: float
    sigma: float

    def __post_init__(self):
        _require(self.sigma > 0, f"Lognormal sigma 必须为正: {self.sigma}")


@dataclass(frozen=True)
class NegativeBinomial:
    """均值 r(1-p)/p; r 可取任意正实数"""

    r: float
    p: float

    def __post_init__(self):
        _require(self.r > 0, f"NegativeBinomial r 必须为正: {self.r}")
        _require(0 < self.p <= 1, f"NegativeBinomial p 必须在 (0, 1]: {self.p}")

    @classmethod
    def from_mean(cls, r: float, mean: float) -> "NegativeBinomial":
        """p = r / (r + lambda)"""
        return cls(r=r, p=r / (r + mean))


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        _require(self.lam > 0, f"Poisson lambda 必须为正: {self.lam}")


@dataclass(frozen=True)
class Binomial:
    n: int
    theta: float

    def __post_init__(self):
        _require(self.n >= 0, f"Binomial n 不能为负: {self.n}")
        _require(0 <= self.theta <= 1, f"Binomial theta 必须在 [0, 1]: {self.theta}")


@dataclass(frozen=True)
class Normal:
    """Normal(mu, var) - 第二个参数是方差"""

    mu: float
    var: float

    def __post_init__(self):
        _require(self.var > 0, f"Normal 方差必须为正: {self.var}")


@dataclass(frozen=True)
class Beta:
    a: float
    b: float

    def __post_init__(self):
        _require(self.a > 0 and self.b > 0, f"Beta 参数必须为正: a={self.a}, b={self.b}")


@dataclass(frozen=True)
class Gamma:
    shape: float
    rate: float

    def __post_init__(self):
        _require(self.shape > 0 and self.rate > 0, f"Gamma 参数必须为正: {self.shape}, {self.rate}")


@dataclass(frozen=True)
class InverseGamma:
    alpha: float
    beta: float

    def __post_init__(self):
        _require(self.alpha > 0 and self.beta > 0, f"InverseGamma 参数必须为正: {self.alpha}, {self.beta}")


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        _require(self.lo < self.hi, f"Uniform 需要 lo < hi: {self.lo}, {self.hi}")


StandardFamilyParams = Union[
    Lognormal, NegativeBinomial, Poisson, Binomial, Normal, Beta, Gamma, InverseGamma, Uniform
]


@singledispatch
def family_logpdf(params, x: ArrayLike) -> ArrayLike:
    """对数概率质量/密度; 超出支撑集返回 -inf"""
    raise InvalidParamsError(f"不支持的分布族: {type(params).__name__}")


@family_logpdf.register
def _(params: Lognormal, x):
    return stats.lognorm.logpdf(x, s=params.sigma, scale=np.exp(params.mu))


@family_logpdf.register
def _(params: NegativeBinomial, x):
    # 实数 r 的 gamma 函数形式
    k = np.asarray(x, dtype=float)
    integer = (k >= 0) & (np.floor(k) == k)
    kk = np.where(integer, k, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            gammaln(kk + params.r) - gammaln(params.r) - gammaln(kk + 1.0)
            + params.r * np.log(params.p) + kk * np.log1p(-params.p)
        )
    if params.p == 1.0:
        out = np.where(kk == 0, 0.0, -np.inf)
    out = np.where(integer, out, -np.inf)
    return _scalar_or_array(out, x)


@family_logpdf.register
def _(params: Poisson, x):
    return stats.poisson.logpmf(x, params.lam)


@family_logpdf.register
def _(params: Binomial, x):
    return stats.binom.logpmf(x, params.n, params.theta)


@family_logpdf.register
def _(params: Normal, x):
    return stats.norm.logpdf(x, loc=params.mu, scale=np.sqrt(params.var))


@family_logpdf.register
def _(params: Beta, x):
    return stats.beta.logpdf(x, params.a, params.b)


@family_logpdf.register
def _(params: Gamma, x):
    return stats.gamma.logpdf(x, params.shape, scale=1.0 / params.rate)


@family_logpdf.register
def _(params: InverseGamma, x):
    return stats.invgamma.logpdf(x, params.alpha, scale=params.beta)


@family_logpdf.register
def _(params: Uniform, x):
    return stats.uniform.logpdf(x, loc=params.lo, scale=params.hi - params.lo)


def family_logpmf_logpdf(x: ArrayLike, params: StandardFamilyParams) -> ArrayLike:
    return family_logpdf(params, x)


@singledispatch
def family_sample(params, rng: np.random.Generator, size: Optional[int] = None):
    raise InvalidParamsError(f"不支持的分布族: {type(params).__name__}")


@family_sample.register
def _(params: Lognormal, rng, size=None):
    return rng.lognormal(params.mu, params.sigma, size=size)


@family_sample.register
def _(params: NegativeBinomial, rng, size=None):
    return rng.negative_binomial(params.r, params.p, size=size)


@family_sample.register
def _(params: Poisson, rng, size=None):
    return rng.poisson(params.lam, size=size)


@family_sample.register
def _(params: Binomial, rng, size=None):
    return rng.binomial(params.n, params.theta, size=size)


@family_sample.register
def _(params: Normal, rng, size=None):
    return rng.normal(params.mu, np.sqrt(params.var), size=size)


@family_sample.register
def _(params: Beta, rng, size=None):
    return rng.beta(params.a, params.b, size=size)


@family_sample.register
def _(params: Gamma, rng, size=None):
    return rng.gamma(params.shape, 1.0 / params.rate, size=size)


@family_sample.register
def _(params: InverseGamma, rng, size=None):
    return 1.0 / rng.gamma(params.alpha, 1.0 / params.beta, size=size)


@family_sample.register
def _(params: Uniform, rng, size=None):
    return rng.uniform(params.lo, params.hi, size=size)


def family_mean(params: StandardFamilyParams) -> float:
    if isinstance(params, Lognormal):
        return float(np.exp(params.mu + params.sigma ** 2 / 2))
    if isinstance(params, NegativeBinomial):
        return params.r * (1 - params.p) / params.p
    if isinstance(params, Poisson):
        return params.lam
    if isinstance(params, Binomial):
        return params.n * params.theta
    if isinstance(params, Normal):
        return params.mu
    if isinstance(params, Beta):
        return params.a / (params.a + params.b)
    if isinstance(params, Gamma):
        return params.shape / params.rate
    if isinstance(params, InverseGamma):
        return params.beta / (params.alpha - 1) if params.alpha > 1 else np.inf
    if isinstance(params, Uniform):
        return (params.lo + params.hi) / 2
    raise InvalidParamsError(f"不支持的分布族: {type(params).__name__}")


def family_variance(params: StandardFamilyParams) -> float:
    if isinstance(params, Lognormal):
        s2 = params.sigma ** 2
        return float(np.expm1(s2) * np.exp(2 * params.mu + s2))
    if isinstance(params, NegativeBinomial):
        # 过度离散: lambda (1 + lambda / r)
        return params.r * (1 - params.p) / params.p ** 2
    if isinstance(params, Poisson):
        return params.lam
    if isinstance(params, Binomial):
        return params.n * params.theta * (1 - params.theta)
    if isinstance(params, Normal):
        return params.var
    if isinstance(params, Beta):
        a, b = params.a, params.b
        return a * b / ((a + b) ** 2 * (a + b + 1))
    if isinstance(params, Gamma):
        return params.shape / params.rate ** 2
    if isinstance(params, InverseGamma):
        a, b = params.alpha, params.beta
        return b ** 2 / ((a - 1) ** 2 * (a - 2)) if a > 2 else np.inf
    if isinstance(params, Uniform):
        return (params.hi - params.lo) ** 2 / 12
    raise InvalidParamsError(f"不支持的分布族: {type(params).__name__}")
