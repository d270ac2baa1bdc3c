"""
MCMC 引擎 - 自适应随机游走 Metropolis-within-Gibbs

参数按块更新: 随机游走块在无约束尺度上做高斯提议 (含 Jacobian 修正),
共轭块由模型提供精确抽样 (可带独立 MH 修正项)。步长只在 burn-in 期间自适应。
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..exceptions import DimensionMismatchError, InvalidParamsError, SamplerError

logger = logging.getLogger(__name__)

LogPosterior = Callable[[np.ndarray], float]


class Support(str, enum.Enum):
    REAL = "real"
    POSITIVE = "positive"
    BOUNDED = "bounded"


@dataclass(frozen=True)
class ParameterSpec:
    """单个参数的支撑集、初值和初始步长 (步长在无约束尺度上)"""

    name: str
    support: Support = Support.REAL
    initial: float = 0.0
    step: float = 0.1
    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        if self.support == Support.BOUNDED:
            if self.lower is None or self.upper is None or not self.lower < self.upper:
                raise InvalidParamsError(f"{self.name}: 有界参数需要 lower < upper")
        if self.step <= 0:
            raise InvalidParamsError(f"{self.name}: 步长必须为正")
        if not self.contains(self.initial):
            raise InvalidParamsError(f"{self.name}: 初值 {self.initial} 不在支撑集内")

    def contains(self, value: float) -> bool:
        if not np.isfinite(value):
            return False
        if self.support == Support.POSITIVE:
            return value > 0
        if self.support == Support.BOUNDED:
            return self.lower < value < self.upper
        return True


class ParameterTransform:
    """整条参数向量的约束/无约束变换"""

    def __init__(self, specs: Sequence[ParameterSpec]):
        self.positive = np.array([s.support == Support.POSITIVE for s in specs])
        self.bounded = np.array([s.support == Support.BOUNDED for s in specs])
        self.lower = np.array([s.lower if s.support == Support.BOUNDED else 0.0 for s in specs])
        self.width = np.array([
            (s.upper - s.lower) if s.support == Support.BOUNDED else 1.0 for s in specs
        ])

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        y = x.astype(float).copy()
        y[self.positive] = np.log(x[self.positive])
        u = (x[self.bounded] - self.lower[self.bounded]) / self.width[self.bounded]
        y[self.bounded] = np.log(u) - np.log1p(-u)
        return y

    def to_constrained(self, y: np.ndarray) -> np.ndarray:
        x = y.copy()
        x[self.positive] = np.exp(y[self.positive])
        yb = y[self.bounded]
        x[self.bounded] = self.lower[self.bounded] + self.width[self.bounded] / (1.0 + np.exp(-yb))
        return x

    def log_jacobian(self, y: np.ndarray) -> float:
        yb = y[self.bounded]
        # log sigmoid(y) + log(1 - sigmoid(y)) = -softplus(-y) - softplus(y)
        bounded = np.log(self.width[self.bounded]) - np.logaddexp(0.0, -yb) - np.logaddexp(0.0, yb)
        return float(np.sum(y[self.positive]) + np.sum(bounded))

    def derivative(self, y: np.ndarray) -> np.ndarray:
        """d x / d y (对角), 用于 delta 方法"""
        x = self.to_constrained(y)
        d = np.ones_like(y, dtype=float)
        d[self.positive] = x[self.positive]
        lo = self.lower[self.bounded]
        width = self.width[self.bounded]
        xb = x[self.bounded]
        d[self.bounded] = (xb - lo) * (lo + width - xb) / width
        return d


@dataclass
class Block:
    """
    参数块

    conjugate: 给定当前完整状态, 返回该块参数的新值 (自然尺度)。
    correction: 共轭部分之外的对数因子, 作为独立 MH 的接受率修正; 为 None 时是精确 Gibbs。
    """

    name: str
    parameters: Sequence[str]
    conjugate: Optional[Callable[[np.ndarray, np.random.Generator], np.ndarray]] = None
    correction: Optional[Callable[[np.ndarray], float]] = None


@dataclass
class MCMCConfig:
    iterations: int
    burn_in: int
    thin: int = 1
    seed: int = 0
    blocks: Optional[List[Block]] = None
    target_rate: float = 0.20
    adapt_window: int = 50

    def __post_init__(self):
        if self.iterations <= 0 or self.thin <= 0 or self.adapt_window <= 0:
            raise InvalidParamsError("iterations/thin/adapt_window 必须为正")
        if not 0 <= self.burn_in < self.iterations:
            raise InvalidParamsError(f"burn_in 必须在 [0, iterations) 内: {self.burn_in}")

    @classmethod
    def from_fraction(cls, iterations: int, burn_in_fraction: float = 0.2, **kwargs) -> "MCMCConfig":
        return cls(iterations=iterations, burn_in=int(iterations * burn_in_fraction), **kwargs)

    def describe(self) -> Dict:
        return {
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "seed": self.seed,
            "target_rate": self.target_rate,
            "adapt_window": self.adapt_window,
            "blocks": [
                {"name": b.name, "parameters": list(b.parameters), "conjugate": b.conjugate is not None}
                for b in (self.blocks or [])
            ],
        }


@dataclass
class PosteriorChain:
    """burn-in 之后 (经稀释) 的样本矩阵以及接受率记录"""

    names: List[str]
    samples: np.ndarray
    log_posterior: np.ndarray
    accepted: Dict[str, int]
    proposed: Dict[str, int]
    burn_in: int
    thin: int
    seed: int
    step_sizes: Dict[str, float] = field(default_factory=dict)
    config: Dict = field(default_factory=dict)
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.shape[1] != len(self.names):
            raise DimensionMismatchError(
                f"样本维度 {self.samples.shape[1]} 与参数个数 {len(self.names)} 不一致"
            )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, self.names.index(name)]

    def acceptance_rates(self) -> Dict[str, float]:
        """按计数重新计算 (burn-in 之后)"""
        return {
            block: (self.accepted[block] / self.proposed[block]) if self.proposed[block] else 0.0
            for block in self.proposed
        }

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.samples, columns=self.names)

    def mean(self) -> Dict[str, float]:
        return dict(zip(self.names, self.samples.mean(axis=0).tolist()))

    @classmethod
    def point_mass(cls, names: Sequence[str], values: Sequence[float], **metadata) -> "PosteriorChain":
        """单点链, 用于固定参数的模拟"""
        return cls(
            names=list(names),
            samples=np.asarray([values], dtype=float),
            log_posterior=np.zeros(1),
            accepted={},
            proposed={},
            burn_in=0,
            thin=1,
            seed=0,
            metadata=dict(metadata),
        )


def adapt_step_sizes(
    step_sizes: Dict[str, float],
    window_acceptance: Dict[str, float],
    target_rate: float = 0.20,
    adaptation_round: int = 1,
) -> Dict[str, float]:
    """
    Robbins-Monro 乘性更新: log s += (rate - target) / sqrt(round)
    接受率高于目标时步长增大, 低于目标时减小
    """
    gain = 1.0 / np.sqrt(max(adaptation_round, 1))
    return {
        block: float(scale * np.exp(gain * (window_acceptance[block] - target_rate)))
        if block in window_acceptance else scale
        for block, scale in step_sizes.items()
    }


class MetropolisWithinGibbs:
    """分块 Metropolis-within-Gibbs 采样器"""

    def __init__(self, logpost: LogPosterior, specs: Sequence[ParameterSpec], config: MCMCConfig):
        self.logpost = logpost
        self.specs = list(specs)
        self.config = config
        self.names = [s.name for s in self.specs]
        if len(set(self.names)) != len(self.names):
            raise DimensionMismatchError("参数名重复")

        blocks = config.blocks or [Block(name="all", parameters=self.names)]
        self.blocks = blocks
        self._block_index = {}
        covered = []
        for block in blocks:
            unknown = [p for p in block.parameters if p not in self.names]
            if unknown:
                raise DimensionMismatchError(f"块 {block.name} 含未知参数: {unknown}")
            self._block_index[block.name] = np.array([self.names.index(p) for p in block.parameters])
            covered.extend(block.parameters)
        missing = set(self.names) - set(covered)
        if missing:
            raise DimensionMismatchError(f"参数未分配到任何块: {sorted(missing)}")

        self._transform = ParameterTransform(self.specs)
        self._steps = np.array([s.step for s in self.specs])

    def _inside(self, x: np.ndarray, idx: np.ndarray) -> bool:
        return all(self.specs[i].contains(x[i]) for i in idx)

    def run(self) -> PosteriorChain:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)

        x = np.array([s.initial for s in self.specs], dtype=float)
        y = self._transform.to_unconstrained(x)
        lp = float(self.logpost(x))
        if not np.isfinite(lp):
            raise SamplerError(f"初始点的对数后验不是有限值: {lp}")
        lj = self._transform.log_jacobian(y)

        scales = {b.name: 1.0 for b in self.blocks if b.conjugate is None}
        accepted = {b.name: 0 for b in self.blocks}
        proposed = {b.name: 0 for b in self.blocks}
        window_accepts = {b.name: 0 for b in self.blocks}
        adaptation_round = 0

        n_keep = len(range(cfg.burn_in, cfg.iterations, cfg.thin))
        samples = np.empty((n_keep, len(self.specs)))
        lp_trace = np.empty(n_keep)
        kept = 0

        for it in range(cfg.iterations):
            post_burn = it >= cfg.burn_in
            for block in self.blocks:
                idx = self._block_index[block.name]
                if block.conjugate is not None:
                    x_new = x.copy()
                    x_new[idx] = block.conjugate(x, rng)
                    ok = self._inside(x_new, idx)
                    if ok and block.correction is not None:
                        log_ratio = block.correction(x_new) - block.correction(x)
                        ok = log_ratio >= 0 or np.log(rng.random()) < log_ratio
                    if ok:
                        lp_new = float(self.logpost(x_new))
                        ok = np.isfinite(lp_new)
                    if ok:
                        x, lp = x_new, lp_new
                        y = self._transform.to_unconstrained(x)
                        lj = self._transform.log_jacobian(y)
                else:
                    y_new = y.copy()
                    y_new[idx] += scales[block.name] * self._steps[idx] * rng.standard_normal(len(idx))
                    x_new = self._transform.to_constrained(y_new)
                    ok = False
                    if self._inside(x_new, idx):
                        lp_new = float(self.logpost(x_new))
                        if np.isfinite(lp_new):
                            lj_new = self._transform.log_jacobian(y_new)
                            log_ratio = lp_new + lj_new - lp - lj
                            ok = log_ratio >= 0 or np.log(rng.random()) < log_ratio
                    if ok:
                        x, y, lp, lj = x_new, y_new, lp_new, lj_new

                window_accepts[block.name] += int(ok)
                if post_burn:
                    proposed[block.name] += 1
                    accepted[block.name] += int(ok)

            if not post_burn and (it + 1) % cfg.adapt_window == 0:
                adaptation_round += 1
                rates = {name: window_accepts[name] / cfg.adapt_window for name in scales}
                scales = adapt_step_sizes(scales, rates, cfg.target_rate, adaptation_round)
                logger.debug(f"第 {adaptation_round} 轮步长调整: {scales}")
            if (it + 1) % cfg.adapt_window == 0:
                window_accepts = {name: 0 for name in window_accepts}

            if post_burn and (it - cfg.burn_in) % cfg.thin == 0:
                samples[kept] = x
                lp_trace[kept] = lp
                kept += 1

        chain = PosteriorChain(
            names=self.names,
            samples=samples,
            log_posterior=lp_trace,
            accepted=accepted,
            proposed=proposed,
            burn_in=cfg.burn_in,
            thin=cfg.thin,
            seed=cfg.seed,
            step_sizes={
                name: float(scales.get(name, 1.0)) for name in accepted
            },
            config=cfg.describe(),
        )
        rates = {k: round(v, 3) for k, v in chain.acceptance_rates().items()}
        logger.info(f"采样完成: {cfg.iterations} 次迭代, 保留 {chain.n_samples} 个样本, 接受率 {rates}")
        return chain


def run_metropolis_within_gibbs(
    logpost: LogPosterior,
    specs: Sequence[ParameterSpec],
    config: MCMCConfig,
) -> PosteriorChain:
    return MetropolisWithinGibbs(logpost, specs, config).run()


def run_chains(
    logpost: LogPosterior,
    specs: Sequence[ParameterSpec],
    config: MCMCConfig,
    n_chains: int = 4,
    max_workers: int = 1,
) -> List[PosteriorChain]:
    """独立种子的多条链 (用于 R-hat); 种子由 SeedSequence 派生"""
    children = np.random.SeedSequence(config.seed).spawn(n_chains)
    seeds = [int(child.generate_state(1)[0]) for child in children]
    configs = [
        MCMCConfig(
            iterations=config.iterations,
            burn_in=config.burn_in,
            thin=config.thin,
            seed=seed,
            blocks=config.blocks,
            target_rate=config.target_rate,
            adapt_window=config.adapt_window,
        )
        for seed in seeds
    ]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda cfg: run_metropolis_within_gibbs(logpost, specs, cfg), configs))
