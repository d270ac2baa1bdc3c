"""
单个气旋的层级 GEV 模型

层级在位置参数上:
  Z1 | Z2        ~ GEV(alpha0 + alpha1 Z2, sigma_z1, xi_z1)
  X1 | Z1, Z2    ~ GEV(beta0 + beta1 Z1 + beta2 Z2, sigma_x1, xi_x1)
  X2 | X1, Z1, Z2 ~ GEV(gamma0 + gamma1 X1 + gamma2 Z1 + gamma3 Z2, sigma_x2, xi_x2)

Z1 为标准化 log(最低气压), Z2 为标准化平均纬度, X1 = log(最大风速 kt), X2 = log(损失 USD)
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numdifftools as nd
import numpy as np
from scipy import linalg, optimize

from ..config import settings
from ..exceptions import (
    ConvergenceError,
    IncompleteObservationError,
    InsufficientDataError,
    InvalidParamsError,
    TooShortChainError,
)
from ..schemas import StandardizationRecord, StormRecord
from ..services.standardize import Standardization
from .diagnostics import diagnostics
from .distributions import (
    InverseGamma,
    Normal,
    Uniform,
    family_logpmf_logpdf,
    gev_logpdf_raw,
    gev_quantile_raw,
)
from .mcmc import (
    Block,
    MCMCConfig,
    ParameterSpec,
    ParameterTransform,
    PosteriorChain,
    Support,
    run_metropolis_within_gibbs,
)

logger = logging.getLogger(__name__)

PARAMETER_NAMES: Tuple[str, ...] = (
    "alpha0", "alpha1", "sigma_z1", "xi_z1",
    "beta0", "beta1", "beta2", "sigma_x1", "xi_x1",
    "gamma0", "gamma1", "gamma2", "gamma3", "sigma_x2", "xi_x2",
)
SCALE_NAMES = ("sigma_z1", "sigma_x1", "sigma_x2")
SHAPE_BOUNDS: Dict[str, Tuple[float, float]] = {
    "xi_z1": (-1.0, 1.0),
    "xi_x1": (-0.5, 0.5),
    "xi_x2": (-0.5, 0.5),
}
BLOCKS: Dict[str, Tuple[str, ...]] = {
    "alphas": ("alpha0", "alpha1"),
    "betas": ("beta0", "beta1", "beta2"),
    "gammas": ("gamma0", "gamma1", "gamma2", "gamma3"),
    "scales": SCALE_NAMES,
    "shapes": tuple(SHAPE_BOUNDS),
}
MIN_OBSERVATIONS = 30
LOG_PRESSURE = "log_min_pressure"
MEAN_LATITUDE = "mean_latitude"
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class CycloneObservation:
    storm_id: str
    z1: Optional[float]
    z2: float
    x1: float
    x2: Optional[float] = None

    @property
    def complete(self) -> bool:
        return self.z1 is not None and self.x2 is not None


@dataclass(frozen=True)
class CycloneModelParams:
    alpha0: float
    alpha1: float
    sigma_z1: float
    xi_z1: float
    beta0: float
    beta1: float
    beta2: float
    sigma_x1: float
    xi_x1: float
    gamma0: float
    gamma1: float
    gamma2: float
    gamma3: float
    sigma_x2: float
    xi_x2: float

    def __post_init__(self):
        for name in SCALE_NAMES:
            if not getattr(self, name) > 0:
                raise InvalidParamsError(f"{name} 必须为正: {getattr(self, name)}")
        for name, (lo, hi) in SHAPE_BOUNDS.items():
            if not lo < getattr(self, name) < hi:
                raise InvalidParamsError(f"{name} 必须在 ({lo}, {hi}) 内: {getattr(self, name)}")

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> "CycloneModelParams":
        return cls(**dict(zip(PARAMETER_NAMES, (float(v) for v in vector))))

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAMETER_NAMES])

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    def mu_z1(self, z2):
        return self.alpha0 + self.alpha1 * np.asarray(z2)

    def mu_x1(self, z1, z2):
        return self.beta0 + self.beta1 * np.asarray(z1) + self.beta2 * np.asarray(z2)

    def mu_x2(self, x1, z1, z2):
        return self.gamma0 + self.gamma1 * np.asarray(x1) + self.gamma2 * np.asarray(z1) + self.gamma3 * np.asarray(z2)


@dataclass(frozen=True)
class CyclonePrior:
    location_var: float = 1e2
    damage_location_var: float = 1e3
    sigma_z1: Tuple[float, float] = (1.0, 1.0)
    sigma_x1: Tuple[float, float] = (1.0, 1.0)
    sigma_x2: Tuple[float, float] = (2.0, 3.0)

    def log_prior(self, params: CycloneModelParams) -> float:
        alphas_betas = [params.alpha0, params.alpha1, params.beta0, params.beta1, params.beta2]
        gammas = [params.gamma0, params.gamma1, params.gamma2, params.gamma3]
        lp = float(np.sum(family_logpmf_logpdf(np.asarray(alphas_betas), Normal(0.0, self.location_var))))
        lp += float(np.sum(family_logpmf_logpdf(np.asarray(gammas), Normal(0.0, self.damage_location_var))))
        for name in SCALE_NAMES:
            lp += float(family_logpmf_logpdf(getattr(params, name), InverseGamma(*getattr(self, name))))
        for name, (lo, hi) in SHAPE_BOUNDS.items():
            lp += float(family_logpmf_logpdf(getattr(params, name), Uniform(lo, hi)))
        return lp

    def location_sd(self, name: str) -> float:
        return float(np.sqrt(self.damage_location_var if name.startswith("gamma") else self.location_var))


@dataclass
class CycloneTransform:
    """训练集上的 log(最低气压) 与平均纬度标准化"""

    log_pressure: Standardization
    latitude: Standardization

    def observation(self, storm: StormRecord) -> CycloneObservation:
        z1 = None
        if storm.min_central_pressure is not None:
            z1 = float(self.log_pressure.apply(np.log(storm.min_central_pressure)))
        return CycloneObservation(
            storm_id=storm.storm_id,
            z1=z1,
            z2=float(self.latitude.apply(storm.mean_latitude)),
            x1=float(np.log(storm.max_wind_speed)),
            x2=float(np.log(storm.damage_usd_2019)) if storm.is_damaging else None,
        )

    def z2(self, latitude):
        return self.latitude.apply(latitude)

    def pressure(self, z1):
        return np.exp(self.log_pressure.invert(z1))

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {"log_pressure": asdict(self.log_pressure), "latitude": asdict(self.latitude)}

    @classmethod
    def from_dict(cls, data: Dict) -> "CycloneTransform":
        return cls(
            log_pressure=Standardization(**data["log_pressure"]),
            latitude=Standardization(**data["latitude"]),
        )

    def to_records(self) -> Dict[str, StandardizationRecord]:
        return {
            LOG_PRESSURE: self.log_pressure.to_record(LOG_PRESSURE),
            MEAN_LATITUDE: self.latitude.to_record(MEAN_LATITUDE),
        }

    @classmethod
    def from_records(cls, records: Mapping[str, StandardizationRecord]) -> Optional["CycloneTransform"]:
        """数据集中记录的标准化参数; 缺少任一变量时返回 None"""
        if LOG_PRESSURE not in records or MEAN_LATITUDE not in records:
            return None
        return cls(
            log_pressure=Standardization.from_record(records[LOG_PRESSURE]),
            latitude=Standardization.from_record(records[MEAN_LATITUDE]),
        )


def build_cyclone_observations(
    storms: Sequence[StormRecord],
    start_season: Optional[int] = None,
    end_season: Optional[int] = None,
    transform: Optional[CycloneTransform] = None,
) -> Tuple[List[CycloneObservation], CycloneTransform]:
    """
    只保留训练窗口内有损失且有最低气压的风暴; 未给出 transform 时标准化参数由这些风暴估计
    """
    start_season = settings.START_SEASON if start_season is None else start_season
    window = [
        s for s in storms
        if s.season >= start_season and (end_season is None or s.season <= end_season) and s.is_damaging
    ]
    kept = [s for s in window if s.min_central_pressure is not None]
    if len(kept) < len(window):
        logger.warning(f"{len(window) - len(kept)} 个致损风暴缺少最低气压, 已从气旋模型中排除")
    if transform is None:
        if len(kept) < 2:
            raise InsufficientDataError(f"可用于标准化的致损风暴不足: {len(kept)}")
        transform = CycloneTransform(
            log_pressure=Standardization.fit(np.log([s.min_central_pressure for s in kept])),
            latitude=Standardization.fit([s.mean_latitude for s in kept]),
        )
    return [transform.observation(s) for s in kept], transform


@dataclass
class ObservationArrays:
    z1: np.ndarray
    z2: np.ndarray
    x1: np.ndarray
    x2: np.ndarray

    @classmethod
    def from_observations(cls, obs: Sequence[CycloneObservation]) -> "ObservationArrays":
        incomplete = [o.storm_id for o in obs if not o.complete]
        if incomplete:
            raise IncompleteObservationError(f"观测不完整 (缺 z1 或 x2): {incomplete[:10]}")
        return cls(
            z1=np.array([o.z1 for o in obs], dtype=float),
            z2=np.array([o.z2 for o in obs], dtype=float),
            x1=np.array([o.x1 for o in obs], dtype=float),
            x2=np.array([o.x2 for o in obs], dtype=float),
        )

    def __len__(self) -> int:
        return len(self.z1)


def _loglik_vector(theta: np.ndarray, data: ObservationArrays) -> float:
    (a0, a1, s_z1, xi_z1, b0, b1, b2, s_x1, xi_x1, g0, g1, g2, g3, s_x2, xi_x2) = theta
    total = (
        np.sum(gev_logpdf_raw(data.z1, a0 + a1 * data.z2, s_z1, xi_z1))
        + np.sum(gev_logpdf_raw(data.x1, b0 + b1 * data.z1 + b2 * data.z2, s_x1, xi_x1))
        + np.sum(gev_logpdf_raw(data.x2, g0 + g1 * data.x1 + g2 * data.z1 + g3 * data.z2, s_x2, xi_x2))
    )
    return float(total) if np.isfinite(total) else -np.inf


def joint_loglik(params: CycloneModelParams, obs: Sequence[CycloneObservation]) -> float:
    """三个条件 GEV 对数密度之和; 任一点在支撑集外时为 -inf"""
    return _loglik_vector(params.to_vector(), ObservationArrays.from_observations(obs))


def parameter_specs(
    initial: Optional[Dict[str, float]] = None,
    steps: Optional[Dict[str, float]] = None,
) -> List[ParameterSpec]:
    initial = initial or {}
    steps = steps or {}
    specs = []
    for name in PARAMETER_NAMES:
        if name in SCALE_NAMES:
            spec = ParameterSpec(name=name, support=Support.POSITIVE, initial=initial.get(name, 1.0),
                                 step=steps.get(name, 0.1))
        elif name in SHAPE_BOUNDS:
            lo, hi = SHAPE_BOUNDS[name]
            spec = ParameterSpec(name=name, support=Support.BOUNDED, lower=lo, upper=hi,
                                 initial=initial.get(name, 0.0), step=steps.get(name, 0.1))
        else:
            spec = ParameterSpec(name=name, initial=initial.get(name, 0.0), step=steps.get(name, 0.1))
        specs.append(spec)
    return specs


def _gumbel_regression(y: np.ndarray, predictors: Sequence[np.ndarray]) -> Tuple[np.ndarray, float]:
    """最小二乘加 Gumbel 矩估计: sigma = sd sqrt(6)/pi, 截距减去 0.5772 sigma"""
    design = np.column_stack([np.ones_like(y)] + list(predictors))
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    sigma = max(float(np.std(resid, ddof=design.shape[1]) if len(y) > design.shape[1] else np.std(resid)), 1e-3)
    sigma = sigma * np.sqrt(6.0) / np.pi
    coef[0] -= EULER_GAMMA * sigma
    return coef, sigma


def moment_initializer(data: ObservationArrays) -> CycloneModelParams:
    alpha, s_z1 = _gumbel_regression(data.z1, [data.z2])
    beta, s_x1 = _gumbel_regression(data.x1, [data.z1, data.z2])
    gamma, s_x2 = _gumbel_regression(data.x2, [data.x1, data.z1, data.z2])
    return CycloneModelParams(
        alpha0=alpha[0], alpha1=alpha[1], sigma_z1=s_z1, xi_z1=0.0,
        beta0=beta[0], beta1=beta[1], beta2=beta[2], sigma_x1=s_x1, xi_x1=0.0,
        gamma0=gamma[0], gamma1=gamma[1], gamma2=gamma[2], gamma3=gamma[3], sigma_x2=s_x2, xi_x2=0.0,
    )


@dataclass
class MLEConfig:
    n_starts: int = field(default_factory=lambda: settings.MLE_STARTS)
    jitter: float = field(default_factory=lambda: settings.MLE_JITTER)
    seed: int = 0
    max_iter: int = 20_000
    gradient_tolerance: float = 1e-4


@dataclass
class MLEResult:
    params: CycloneModelParams
    standard_errors: Dict[str, float]
    loglik: float
    n_obs: int
    hessian_singular: bool
    gradient_norm: float
    report: List[Dict]
    unconstrained_se: Dict[str, float] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return any(r["converged"] for r in self.report)

    def to_dict(self) -> Dict:
        return {
            "params": self.params.as_dict(),
            "standard_errors": self.standard_errors,
            "loglik": self.loglik,
            "n_obs": self.n_obs,
            "hessian_singular": self.hessian_singular,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
            "report": self.report,
        }


# 支撑集外的惩罚值; 有限值可让拟牛顿线搜索回退
_PENALTY = 1e12


def gradient_check(params: CycloneModelParams, obs: Sequence[CycloneObservation]) -> Dict:
    """无约束尺度上, 平均对数似然的有限差分梯度范数"""
    data = ObservationArrays.from_observations(obs)
    transform = ParameterTransform(parameter_specs())
    y = transform.to_unconstrained(params.to_vector())

    def mean_loglik(u):
        value = _loglik_vector(transform.to_constrained(u), data)
        return value / len(data) if np.isfinite(value) else -_PENALTY

    gradient = nd.Gradient(mean_loglik)(y)
    norm = float(np.linalg.norm(gradient))
    return {"gradient": dict(zip(PARAMETER_NAMES, gradient.tolist())), "norm": norm}


def fit_mle(obs: Sequence[CycloneObservation], config: Optional[MLEConfig] = None) -> MLEResult:
    """
    多起点: 先 Nelder-Mead, 再 BFGS 精修; 标准误来自 numdifftools Hessian 的逆, 经 delta 方法换回原尺度
    """
    config = config or MLEConfig()
    if len(obs) < MIN_OBSERVATIONS:
        raise InsufficientDataError(f"MLE 至少需要 {MIN_OBSERVATIONS} 个完整观测, 实际 {len(obs)}")
    data = ObservationArrays.from_observations(obs)
    n = len(data)
    transform = ParameterTransform(parameter_specs())

    def objective(u):
        value = _loglik_vector(transform.to_constrained(u), data)
        return -value / n if np.isfinite(value) else _PENALTY

    base = transform.to_unconstrained(moment_initializer(data).to_vector())
    rng = np.random.default_rng(config.seed)
    starts = [base] + [
        base + config.jitter * rng.uniform(-1.0, 1.0, size=base.size) * np.maximum(np.abs(base), 1.0)
        for _ in range(max(config.n_starts, 1) - 1)
    ]

    report, candidates = [], []
    for i, start in enumerate(starts):
        nm = optimize.minimize(objective, start, method="Nelder-Mead",
                               options={"maxiter": config.max_iter, "maxfev": config.max_iter,
                                        "xatol": 1e-8, "fatol": 1e-10})
        polished = optimize.minimize(objective, nm.x, method="BFGS", options={"gtol": 1e-7})
        best = polished if polished.fun <= nm.fun else nm
        loglik = -best.fun * n if best.fun < _PENALTY else -np.inf
        converged = bool(np.isfinite(loglik) and (polished.success or nm.success))
        report.append({
            "start": i,
            "loglik": float(loglik),
            "nelder_mead": bool(nm.success),
            "bfgs": bool(polished.success),
            "converged": converged,
            "message": str(polished.message),
        })
        if np.isfinite(loglik):
            candidates.append((loglik, best.x))
        logger.debug(f"MLE 起点 {i}: loglik={loglik:.4f}, 收敛={converged}")

    if not candidates:
        raise ConvergenceError("所有起点的 MLE 都失败", {"starts": report})

    # 对数似然最高者优先, 其次参数范数最小
    candidates.sort(key=lambda c: (-round(c[0], 8), float(np.linalg.norm(transform.to_constrained(c[1])))))
    loglik, y_hat = candidates[0]
    theta_hat = transform.to_constrained(y_hat)
    params = CycloneModelParams.from_vector(theta_hat)

    singular = False
    se_natural = dict.fromkeys(PARAMETER_NAMES, float("nan"))
    se_unconstrained = dict.fromkeys(PARAMETER_NAMES, float("nan"))
    try:
        hessian = nd.Hessian(lambda u: objective(u) * n)(y_hat)
        cov_u = linalg.solve(hessian, np.identity(hessian.shape[0]), assume_a="sym")
        diag_u = np.diag(cov_u)
        if not np.all(np.isfinite(diag_u)) or np.any(diag_u <= 0):
            singular = True
        else:
            jac = transform.derivative(y_hat)
            cov_theta = cov_u * np.outer(jac, jac)
            se_unconstrained = dict(zip(PARAMETER_NAMES, np.sqrt(diag_u).tolist()))
            se_natural = dict(zip(PARAMETER_NAMES, np.sqrt(np.diag(cov_theta)).tolist()))
    except (linalg.LinAlgError, ValueError) as e:
        logger.warning(f"Hessian 求逆失败: {e}")
        singular = True
    if singular:
        logger.warning("Hessian 奇异或非正定, 标准误不可用")

    gradient = gradient_check(params, obs)
    if gradient["norm"] > config.gradient_tolerance:
        logger.warning(f"最优点梯度范数 {gradient['norm']:.2e} 超过 {config.gradient_tolerance:.0e}")

    logger.info(f"MLE 完成: {n} 个观测, loglik={loglik:.4f}, {sum(r['converged'] for r in report)}/{len(report)} 个起点收敛")
    return MLEResult(
        params=params,
        standard_errors=se_natural,
        loglik=float(loglik),
        n_obs=n,
        hessian_singular=singular,
        gradient_norm=gradient["norm"],
        report=report,
        unconstrained_se=se_unconstrained,
    )


def _prior_initial(prior: CyclonePrior) -> Tuple[Dict[str, float], Dict[str, float]]:
    initial, steps = {}, {}
    for name in PARAMETER_NAMES:
        if name in SCALE_NAMES:
            a, b = getattr(prior, name)
            initial[name] = b / (a + 1.0)
            steps[name] = 1.0
        elif name in SHAPE_BOUNDS:
            initial[name] = 0.0
            steps[name] = 1.0
        else:
            initial[name] = 0.0
            steps[name] = prior.location_sd(name)
    return initial, steps


def fit_bayes(
    obs: Sequence[CycloneObservation],
    prior: Optional[CyclonePrior],
    config: MCMCConfig,
    mle: Optional[MLEResult] = None,
) -> PosteriorChain:
    """按 alphas/betas/gammas/scales/shapes 分块的随机游走 MH; 从 MLE 出发, 步长取无约束尺度标准误"""
    prior = prior or CyclonePrior()
    obs = list(obs)
    if 0 < len(obs) < MIN_OBSERVATIONS:
        raise InsufficientDataError(f"气旋模型至少需要 {MIN_OBSERVATIONS} 个完整观测, 实际 {len(obs)}")

    if obs:
        data = ObservationArrays.from_observations(obs)
        mle = mle or fit_mle(obs, MLEConfig(seed=config.seed))
        initial = mle.params.as_dict()
        steps = {
            name: (se if np.isfinite(se) and se > 0 else 0.1)
            for name, se in mle.unconstrained_se.items()
        }
    else:
        logger.warning("没有观测数据, 只按先验采样")
        data = None
        initial, steps = _prior_initial(prior)

    def logpost(theta: np.ndarray) -> float:
        params = CycloneModelParams.from_vector(theta)
        lp = prior.log_prior(params)
        if data is None or not np.isfinite(lp):
            return lp
        return lp + _loglik_vector(theta, data)

    run_config = MCMCConfig(
        iterations=config.iterations,
        burn_in=config.burn_in,
        thin=config.thin,
        seed=config.seed,
        blocks=[Block(name=name, parameters=list(params)) for name, params in BLOCKS.items()],
        target_rate=config.target_rate,
        adapt_window=config.adapt_window,
    )
    logger.info(f"开始拟合气旋模型: {len(obs)} 个观测, {config.iterations} 次迭代")
    chain = run_metropolis_within_gibbs(logpost, parameter_specs(initial, steps), run_config)
    chain.metadata.update({"model": "cyclone", "n_obs": len(obs)})
    if mle is not None:
        chain.metadata["mle"] = mle.to_dict()
    try:
        chain.metadata["diagnostics"] = diagnostics(chain).reset_index().to_dict(orient="records")
    except TooShortChainError as e:
        logger.warning(f"跳过诊断: {e}")
    return chain


@dataclass
class CyclonePredictive:
    """单个风暴的后验预测抽样 (变换尺度, 可选自然单位)"""

    z1: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    z2: float
    rejected: Dict[str, int] = field(default_factory=dict)
    pressure: Optional[np.ndarray] = None

    @property
    def n_draws(self) -> int:
        return len(self.z1)

    @property
    def wind(self) -> np.ndarray:
        return np.exp(self.x1)

    @property
    def damage(self) -> np.ndarray:
        return np.exp(self.x2)

    def natural_units(self) -> Dict[str, np.ndarray]:
        if self.pressure is None:
            raise InvalidParamsError("没有气压标准化参数, 无法换算自然单位")
        return {"min_pressure": self.pressure, "max_wind": self.wind, "damage": self.damage}


def _chain_draws(chain: PosteriorChain, rows: np.ndarray) -> Dict[str, np.ndarray]:
    return {name: chain.column(name)[rows] for name in PARAMETER_NAMES}


def _draw_stage(
    rng: np.random.Generator,
    mu: np.ndarray,
    sigma: np.ndarray,
    xi: np.ndarray,
    max_attempts: int,
) -> np.ndarray:
    """逆 CDF 抽样; 非有限的抽样对该阶段重抽, 超过次数后保留 nan"""
    draws = gev_quantile_raw(rng.uniform(np.finfo(float).tiny, 1.0, size=mu.shape), mu, sigma, xi)
    for _ in range(max_attempts):
        bad = ~np.isfinite(draws)
        if not bad.any():
            break
        u = rng.uniform(np.finfo(float).tiny, 1.0, size=int(bad.sum()))
        draws[bad] = gev_quantile_raw(u, mu[bad], sigma[bad], xi[bad])
    return draws


def predict_cyclone(
    chain: PosteriorChain,
    z2: float,
    n_draws: int,
    rng: np.random.Generator,
    transform: Optional[CycloneTransform] = None,
    max_attempts: Optional[int] = None,
) -> CyclonePredictive:
    """依次抽 z1 | z2, x1 | z1, z2, x2 | x1, z1, z2"""
    max_attempts = settings.MAX_RESAMPLE_ATTEMPTS if max_attempts is None else max_attempts
    rows = rng.integers(0, chain.n_samples, size=n_draws)
    p = _chain_draws(chain, rows)
    z2_arr = np.full(n_draws, float(z2))

    z1 = _draw_stage(rng, p["alpha0"] + p["alpha1"] * z2_arr, p["sigma_z1"], p["xi_z1"], max_attempts)
    x1 = _draw_stage(rng, p["beta0"] + p["beta1"] * z1 + p["beta2"] * z2_arr, p["sigma_x1"], p["xi_x1"], max_attempts)
    x2 = _draw_stage(
        rng, p["gamma0"] + p["gamma1"] * x1 + p["gamma2"] * z1 + p["gamma3"] * z2_arr,
        p["sigma_x2"], p["xi_x2"], max_attempts,
    )
    with np.errstate(over="ignore"):
        valid = np.isfinite(z1) & np.isfinite(x1) & np.isfinite(x2) & np.isfinite(np.exp(x2))
    rejected = {
        "z1": int(np.sum(~np.isfinite(z1))),
        "x1": int(np.sum(np.isfinite(z1) & ~np.isfinite(x1))),
        "x2": int(np.sum(np.isfinite(z1) & np.isfinite(x1) & ~valid)),
    }
    if not valid.all():
        logger.warning(f"{int((~valid).sum())} 个预测抽样超过 {max_attempts} 次重抽仍无效, 已剔除: {rejected}")

    z1, x1, x2 = z1[valid], x1[valid], x2[valid]
    return CyclonePredictive(
        z1=z1, x1=x1, x2=x2, z2=float(z2), rejected=rejected,
        pressure=transform.pressure(z1) if transform is not None else None,
    )


def simulate_cyclones(
    params: CycloneModelParams,
    z2: Sequence[float],
    rng: np.random.Generator,
) -> List[CycloneObservation]:
    """按给定参数和纬度生成合成风暴"""
    z2 = np.asarray(z2, dtype=float)
    ones = np.ones_like(z2)
    z1 = gev_quantile_raw(rng.uniform(np.finfo(float).tiny, 1.0, size=z2.shape),
                          params.mu_z1(z2), params.sigma_z1 * ones, params.xi_z1 * ones)
    x1 = gev_quantile_raw(rng.uniform(np.finfo(float).tiny, 1.0, size=z2.shape),
                          params.mu_x1(z1, z2), params.sigma_x1 * ones, params.xi_x1 * ones)
    x2 = gev_quantile_raw(rng.uniform(np.finfo(float).tiny, 1.0, size=z2.shape),
                          params.mu_x2(x1, z1, z2), params.sigma_x2 * ones, params.xi_x2 * ones)
    return [
        CycloneObservation(storm_id=f"SIM{i:05d}", z1=float(z1[i]), z2=float(z2[i]), x1=float(x1[i]), x2=float(x2[i]))
        for i in range(len(z2))
    ]
